use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use combustion1d_core::checks::{all_pass, evaluate_checks, CheckResult, CheckTolerances};
use combustion1d_core::config::{validate_config, Config, ValidatedConfig};
use combustion1d_core::diagnostics::DiagnosticsRecord;
use combustion1d_core::inequality::{run_battery, BatterySettings, CheckKind, Descriptor};
use combustion1d_core::io::{
    format_f64, load_run, read_diagnostics, write_atomic, write_diagnostics, write_json, write_summary, RunStatus,
    RunWriter, DIAGNOSTICS_FILE, SUMMARY_FILE,
};
use combustion1d_core::nodal::{classify_states, NodalSettings};
use combustion1d_core::solver::run_simulation;
use combustion1d_core::State;

use crate::{io_failure, CmdResult, Failure};

pub const REPLAY_DIAGNOSTICS_FILE: &str = "diagnostics_replay.csv";
pub const DIAGNOSE_SUMMARY_FILE: &str = "diagnose_summary.json";
pub const BATTERY_SUMMARY_FILE: &str = "battery_summary.json";
pub const BATTERY_TRIALS_FILE: &str = "battery_trials.csv";
pub const NODAL_REPORT_FILE: &str = "nodal_report.json";

pub(crate) fn print_checks(checks: &[CheckResult]) {
    for c in checks {
        println!(
            "{} {} value={:e} tolerance={:e}",
            if c.pass { "PASS" } else { "FAIL" },
            c.check_name,
            c.value,
            c.tolerance
        );
    }
}

pub(crate) fn verdict(checks: &[CheckResult]) -> CmdResult {
    if all_pass(checks) {
        Ok(())
    } else {
        let failing: Vec<&str> = checks.iter().filter(|c| !c.pass).map(|c| c.check_name.as_str()).collect();
        Err(Failure::check(format!("failing checks: {}", failing.join(", "))))
    }
}

/// What a simulation left on disk.
pub(crate) struct SimOutcome {
    pub checks: Vec<CheckResult>,
    pub records: Vec<DiagnosticsRecord>,
}

/// Runs `vc` into `dir` and writes the summary. Failures of the run itself
/// end up as a failing `run_completed` check.
pub(crate) fn simulate_into(vc: &ValidatedConfig, dir: &Path) -> Result<SimOutcome, Failure> {
    let mut writer = RunWriter::create(dir, &vc.config).map_err(|e| io_failure(dir, e))?;
    let (states, error): (Vec<State>, Option<String>) = match run_simulation(vc, Some(&mut writer)) {
        Ok(traj) => (traj.states().cloned().collect(), None),
        Err(aborted) => {
            eprintln!("error: {aborted}");
            (aborted.partial.states().cloned().collect(), Some(aborted.error.to_string()))
        }
    };
    let records = writer.records().to_vec();
    let aborted = error.is_some();
    writer.finish(error).map_err(|e| io_failure(dir, e))?;
    let (_, mut checks) = evaluate_checks(&states, &vc.config.physical, &CheckTolerances::default());
    checks.insert(0, CheckResult::at_least("run_completed", f64::from(u8::from(!aborted)), 1.0));
    write_summary(&dir.join(SUMMARY_FILE), &checks).map_err(|e| io_failure(dir, e))?;
    Ok(SimOutcome { checks, records })
}

pub fn cmd_simulate(cfg: &Config) -> CmdResult {
    let vc = validate_config(cfg).map_err(Failure::usage)?;
    for w in &vc.warnings {
        eprintln!("warning: {w}");
    }
    let outcome = simulate_into(&vc, &cfg.output_dir)?;
    print_checks(&outcome.checks);
    verdict(&outcome.checks)
}

fn max_record_difference(a: &[DiagnosticsRecord], b: &[DiagnosticsRecord]) -> f64 {
    if a.len() != b.len() {
        return f64::INFINITY;
    }
    a.iter()
        .zip(b)
        .flat_map(|(x, y)| x.to_row().into_iter().zip(y.to_row()))
        .map(|(x, y)| if x == y { 0.0 } else { (x - y).abs() })
        .fold(0.0, |m, d| if d.is_nan() { f64::INFINITY } else { m.max(d) })
}

pub fn cmd_diagnose(dir: &Path, out: Option<&Path>) -> CmdResult {
    let run = load_run(dir).map_err(|e| io_failure(dir, e))?;
    let out = out.unwrap_or(dir);
    fs::create_dir_all(out).map_err(|e| io_failure(out, e))?;
    let (records, mut checks) = evaluate_checks(&run.states, &run.config.physical, &CheckTolerances::default());
    checks.insert(
        0,
        CheckResult::at_least("run_completed", f64::from(u8::from(run.index.status == RunStatus::Complete)), 1.0),
    );
    let stored_path = dir.join(DIAGNOSTICS_FILE);
    if stored_path.is_file() {
        let stored = read_diagnostics(&stored_path).map_err(|e| io_failure(&stored_path, e))?;
        checks.push(CheckResult::at_most("inline_agreement", max_record_difference(&records, &stored), 0.0));
    }
    write_diagnostics(&out.join(REPLAY_DIAGNOSTICS_FILE), &records).map_err(|e| io_failure(out, e))?;
    write_summary(&out.join(DIAGNOSE_SUMMARY_FILE), &checks).map_err(|e| io_failure(out, e))?;
    print_checks(&checks);
    verdict(&checks)
}

#[derive(Debug, Clone)]
pub struct BatteryOptions {
    pub trials: u64,
    pub seed: u64,
    pub checks: Option<Vec<String>>,
    pub n_cells: usize,
    pub per_trial_csv: bool,
}

pub fn cmd_verify_inequalities(opts: &BatteryOptions, out: &Path) -> CmdResult {
    if opts.trials == 0 {
        return Err(Failure::usage("--trials must be at least 1"));
    }
    let checks: Vec<CheckKind> = match &opts.checks {
        Some(names) => names.iter().map(|n| n.trim().parse()).collect::<Result<_, _>>().map_err(Failure::usage)?,
        None => CheckKind::ALL.to_vec(),
    };
    let settings = BatterySettings { n_cells: opts.n_cells, ..Default::default() };
    let report = run_battery(opts.trials, opts.seed, &checks, &settings).map_err(Failure::check)?;
    fs::create_dir_all(out).map_err(|e| io_failure(out, e))?;
    write_json(&out.join(BATTERY_SUMMARY_FILE), &report.summaries).map_err(|e| io_failure(out, e))?;
    if opts.per_trial_csv {
        let mut csv = String::from(
            "trial,check,seed,n_modes,floor,lhs,rhs,ratio,constant,quadrature_error_estimate,pass,admissible\n",
        );
        for r in &report.records {
            let (seed, n_modes, floor) = match &r.descriptor {
                Descriptor::Random { seed, n_modes, floor, .. } => (seed.to_string(), n_modes.to_string(), format_f64(*floor)),
                Descriptor::Named { name } => (name.clone(), String::new(), String::new()),
            };
            let p = &r.report;
            let _ = writeln!(
                csv,
                "{},{},{seed},{n_modes},{floor},{},{},{},{},{},{},{}",
                r.trial,
                p.name,
                format_f64(p.lhs),
                format_f64(p.rhs),
                format_f64(p.ratio),
                format_f64(p.constant),
                format_f64(p.quadrature_error_estimate),
                p.pass,
                p.admissible
            );
        }
        write_atomic(&out.join(BATTERY_TRIALS_FILE), csv.as_bytes()).map_err(|e| io_failure(out, e))?;
    }
    for s in &report.summaries {
        println!(
            "{} {} passes={}/{} worst_ratio={:e} worst_seed={}",
            if s.passes == s.trials { "PASS" } else { "FAIL" },
            s.check,
            s.passes,
            s.trials,
            s.worst_ratio,
            s.worst_seed.map_or_else(|| "-".to_string(), |x| x.to_string())
        );
    }
    if report.all_pass() {
        Ok(())
    } else {
        let failing: Vec<String> =
            report.summaries.iter().filter(|s| s.passes < s.trials).map(|s| s.check.to_string()).collect();
        Err(Failure::check(format!("failing checks: {}", failing.join(", "))))
    }
}

pub fn cmd_analyze_nodal(dir: &Path, out: Option<&Path>, zero_threshold: f64, half_width: usize) -> CmdResult {
    if !(zero_threshold >= 0.0) || half_width <= 2 {
        return Err(Failure::usage("--zero-threshold must be non-negative and --half-width above 2"));
    }
    let run = load_run(dir).map_err(|e| io_failure(dir, e))?;
    let out = out.unwrap_or(dir);
    fs::create_dir_all(out).map_err(|e| io_failure(out, e))?;
    let settings = NodalSettings {
        zero_threshold,
        half_width,
        fisher_delta: run.config.physical.delta_shift,
        ..Default::default()
    };
    let states: Vec<&State> = run.states.iter().collect();
    let report = classify_states(&states, &settings);
    write_json(&out.join(NODAL_REPORT_FILE), &report.rows()).map_err(|e| io_failure(out, e))?;
    let flagged = report.high_confidence_inadmissible();
    let rows = report.rows();
    println!(
        "{} nodal snapshots={} candidates={} high_confidence_inadmissible={}",
        if report.pass { "PASS" } else { "FAIL" },
        report.snapshots.len(),
        rows.len(),
        flagged.len()
    );
    for r in &flagged {
        println!("  t={:e} y_star={:e} beta_hat={:.4} r2={:.4}", r.t, r.y_star, r.beta_hat, r.r2);
    }
    if report.pass {
        Ok(())
    } else {
        Err(Failure::check(format!("{} high-confidence inadmissible zeros", flagged.len())))
    }
}
