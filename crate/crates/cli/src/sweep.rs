use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

use combustion1d_core::checks::{all_pass, CheckResult};
use combustion1d_core::config::{validate_config, Config, ValidatedConfig};
use combustion1d_core::diagnostics::DiagnosticsRecord;
use combustion1d_core::io::{
    format_f64, read_diagnostics, read_json, read_summary, write_atomic, write_json, RunStatus, TrajectoryIndex,
    DIAGNOSTICS_FILE, INDEX_FILE, SUMMARY_FILE,
};

use crate::commands::simulate_into;
use crate::{io_failure, with_jobs, CmdResult, Failure};

pub const SWEEP_REPORT_JSON: &str = "sweep_report.json";
pub const SWEEP_REPORT_CSV: &str = "sweep_report.csv";

/// Every combination of the sweep values, first key varying slowest.
pub fn cartesian(sweep: &[(String, Vec<String>)]) -> Vec<Vec<(String, String)>> {
    sweep.iter().fold(vec![Vec::new()], |acc, (key, values)| {
        acc.iter()
            .flat_map(|prefix| {
                values.iter().map(move |v| {
                    let mut p = prefix.clone();
                    p.push((key.clone(), v.clone()));
                    p
                })
            })
            .collect()
    })
}

pub fn point_dir_name(idx: usize) -> String {
    format!("point_{idx:03}")
}

#[derive(Debug, Clone, Serialize)]
pub struct PointRow {
    pub point: usize,
    pub overrides: BTreeMap<String, String>,
    pub completed: bool,
    pub checks_pass: bool,
    /// `max_t F_δ` with the point's `physical.delta_shift`.
    pub max_fisher: f64,
    pub max_lipschitz_v: f64,
    pub max_kazhikhov_residual: f64,
    pub max_entropy_identity_residual: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepReport {
    pub points: Vec<PointRow>,
    /// `(max − min)/max` of `max_fisher` over completed points.
    pub fisher_spread: f64,
}

fn max_of(records: &[DiagnosticsRecord], f: impl Fn(&DiagnosticsRecord) -> f64) -> f64 {
    records.iter().map(|r| f(r).abs()).fold(0.0, f64::max)
}

fn row(point: usize, overrides: &[(String, String)], records: &[DiagnosticsRecord], checks: &[CheckResult]) -> PointRow {
    PointRow {
        point,
        overrides: overrides.iter().cloned().collect(),
        completed: checks.iter().any(|c| c.check_name == "run_completed" && c.pass),
        checks_pass: all_pass(checks),
        max_fisher: max_of(records, |r| r.fisher),
        max_lipschitz_v: max_of(records, |r| r.lipschitz_v),
        max_kazhikhov_residual: max_of(records, |r| r.kazhikhov_residual),
        max_entropy_identity_residual: max_of(records, |r| r.entropy_identity_residual),
    }
}

/// Reads a finished point directory; `None` if it is missing or incomplete.
fn finished_point(dir: &Path) -> Option<(Vec<DiagnosticsRecord>, Vec<CheckResult>)> {
    let index: TrajectoryIndex = read_json(&dir.join(INDEX_FILE)).ok()?;
    if index.status == RunStatus::Running {
        return None;
    }
    let records = read_diagnostics(&dir.join(DIAGNOSTICS_FILE)).ok()?;
    let checks = read_summary(&dir.join(SUMMARY_FILE)).ok()?;
    Some((records, checks))
}

fn run_point(vc: &ValidatedConfig, final_dir: &Path) -> Result<(Vec<DiagnosticsRecord>, Vec<CheckResult>, bool), Failure> {
    if let Some((records, checks)) = finished_point(final_dir) {
        return Ok((records, checks, true));
    }
    let tmp = final_dir.with_extension("partial");
    if tmp.exists() {
        fs::remove_dir_all(&tmp).map_err(|e| io_failure(&tmp, e))?;
    }
    let outcome = simulate_into(vc, &tmp)?;
    if final_dir.exists() {
        fs::remove_dir_all(final_dir).map_err(|e| io_failure(final_dir, e))?;
    }
    fs::rename(&tmp, final_dir).map_err(|e| io_failure(final_dir, e))?;
    Ok((outcome.records, outcome.checks, false))
}

pub fn cmd_sweep(cfg: &Config, jobs: Option<usize>) -> CmdResult {
    if cfg.sweep.is_empty() {
        return Err(Failure::usage("no sweep.* entries in the configuration"));
    }
    let out: PathBuf = cfg.output_dir.clone();
    let points = cartesian(&cfg.sweep);
    let prepared = points
        .iter()
        .enumerate()
        .map(|(idx, overrides)| {
            let mut c = cfg.clone();
            c.sweep.clear();
            for (k, v) in overrides {
                c.set(k, v).map_err(Failure::usage)?;
            }
            c.seed = cfg.seed.wrapping_add(idx as u64);
            c.output_dir = out.join(point_dir_name(idx));
            validate_config(&c).map_err(|e| Failure::usage(format!("sweep point {idx}: {e}")))
        })
        .collect::<Result<Vec<_>, _>>()?;
    fs::create_dir_all(&out).map_err(|e| io_failure(&out, e))?;

    let results: Vec<Result<_, Failure>> = with_jobs(jobs, || {
        prepared.par_iter().map(|vc| run_point(vc, &vc.config.output_dir)).collect()
    });
    let mut rows = Vec::with_capacity(points.len());
    for (idx, (res, overrides)) in results.into_iter().zip(&points).enumerate() {
        let (records, checks, resumed) = res?;
        if resumed {
            eprintln!("point {idx}: already complete, skipped");
        }
        rows.push(row(idx, overrides, &records, &checks));
    }
    let done: Vec<f64> = rows.iter().filter(|r| r.completed).map(|r| r.max_fisher).collect();
    let (lo, hi) = done.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), &x| (lo.min(x), hi.max(x)));
    let fisher_spread = if hi > 0.0 { (hi - lo) / hi } else { 0.0 };
    let report = SweepReport { points: rows, fisher_spread };
    write_json(&out.join(SWEEP_REPORT_JSON), &report).map_err(|e| io_failure(&out, e))?;

    let keys: Vec<&String> = cfg.sweep.iter().map(|(k, _)| k).collect();
    let mut csv = String::from("point");
    for k in &keys {
        csv.push(',');
        csv.push_str(k);
    }
    csv.push_str(",completed,checks_pass,max_fisher,max_lipschitz_v,max_kazhikhov_residual,max_entropy_identity_residual\n");
    for r in &report.points {
        let _ = write!(csv, "{}", r.point);
        for k in &keys {
            let _ = write!(csv, ",{}", r.overrides[*k]);
        }
        let _ = writeln!(
            csv,
            ",{},{},{},{},{},{}",
            r.completed,
            r.checks_pass,
            format_f64(r.max_fisher),
            format_f64(r.max_lipschitz_v),
            format_f64(r.max_kazhikhov_residual),
            format_f64(r.max_entropy_identity_residual)
        );
    }
    write_atomic(&out.join(SWEEP_REPORT_CSV), csv.as_bytes()).map_err(|e| io_failure(&out, e))?;
    print!("{csv}");
    println!("fisher_spread={fisher_spread:e}");

    let bad: Vec<String> =
        report.points.iter().filter(|r| !r.checks_pass).map(|r| point_dir_name(r.point)).collect();
    if bad.is_empty() {
        Ok(())
    } else {
        Err(Failure::check(format!("points with failing checks: {}", bad.join(", "))))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cartesian_order() {
        let sweep = vec![("a".to_string(), vec!["1".into(), "2".into()]), ("b".to_string(), vec!["x".into(), "y".into()])];
        let pts = cartesian(&sweep);
        let flat: Vec<String> = pts.iter().map(|p| format!("{}{}", p[0].1, p[1].1)).collect();
        assert_eq!(flat, ["1x", "1y", "2x", "2y"]);
    }
}
