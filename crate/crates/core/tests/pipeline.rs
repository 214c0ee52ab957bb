//! Solver output through the run directory, the checks and the nodal classifier.

use combustion1d_core::checks::{all_pass, evaluate_checks, CheckTolerances};
use combustion1d_core::config::{validate_config, Config};
use combustion1d_core::inequality::{
    check_logsobolev, random_neumann_function, run_battery, BatterySettings, CheckKind, Measure, TestFunction,
};
use combustion1d_core::io::{load_run, RunStatus, RunWriter};
use combustion1d_core::nodal::{classify_trajectory, NodalSettings};
use combustion1d_core::solver::run_simulation;
use combustion1d_core::{build_grid, DomainKind};

fn config(kv: &[(&str, &str)]) -> Config {
    let mut c = Config::default();
    for (k, v) in kv {
        c.set(k, v).unwrap();
    }
    c
}

#[test]
fn stored_run_reproduces_the_checks() {
    let dir = tempfile::tempdir().unwrap();
    let c = config(&[("preset.name", "harmonic"), ("grid.n_cells", "80"), ("solver.t_end", "0.3")]);
    let vc = validate_config(&c).unwrap();
    let mut writer = RunWriter::create(dir.path(), &vc.config).unwrap();
    let traj = run_simulation(&vc, Some(&mut writer)).unwrap();
    writer.finish(None).unwrap();

    let run = load_run(dir.path()).unwrap();
    assert_eq!(run.index.status, RunStatus::Complete);
    assert_eq!(run.states.len(), traj.len());
    let states: Vec<_> = traj.states().cloned().collect();
    let (fresh, fresh_checks) = evaluate_checks(&states, &vc.config.physical, &CheckTolerances::default());
    let (stored, stored_checks) = evaluate_checks(&run.states, &run.config.physical, &CheckTolerances::default());
    assert!(all_pass(&fresh_checks), "{fresh_checks:?}");
    assert_eq!(fresh_checks, stored_checks);
    for (a, b) in fresh.iter().zip(&stored) {
        assert_eq!(a.to_row(), b.to_row());
    }
}

#[test]
fn solver_trajectories_have_no_inadmissible_zeros() {
    for preset in ["smooth-bump", "lipschitz-v", "harmonic", "uniform-reaction"] {
        let c = config(&[("preset.name", preset), ("grid.n_cells", "200"), ("solver.t_end", "0.5")]);
        let traj = run_simulation(&validate_config(&c).unwrap(), None).unwrap();
        let report = classify_trajectory(&traj, &NodalSettings::default());
        assert!(report.pass, "{preset}: {:?}", report.high_confidence_inadmissible());
    }
}

#[test]
fn battery_forward_checks_hold_on_a_small_sample() {
    let checks = [CheckKind::FisherHessian, CheckKind::Bernis, CheckKind::LogSobolev];
    let settings = BatterySettings { n_cells: 256, ..Default::default() };
    let report = run_battery(200, 11, &checks, &settings).unwrap();
    assert!(report.all_pass(), "{:?}", report.summaries);
    assert_eq!(report.records.len(), 600);
    let fh = &report.summaries[0];
    assert!(fh.worst_ratio <= 0.25 + 1e-6 && !fh.any_ratio_above_half);
}

#[test]
fn reverse_check_fails_on_non_constant_data() {
    let grid = build_grid(DomainKind::UnitInterval, 512).unwrap();
    let tf = random_neumann_function(3, 3, 0.1, &grid).unwrap();
    let r = CheckKind::Reverse.run(&tf).unwrap();
    assert!(r.ratio > 4.0 && !r.pass, "{r:?}");
    let flat = TestFunction::constant(grid, 2.0).unwrap();
    assert!(CheckKind::Reverse.run(&flat).unwrap().pass);
}

#[test]
fn gaussian_log_sobolev_on_random_line_profiles() {
    let grid = build_grid(DomainKind::TruncatedLine(8.0), 1600).unwrap();
    for seed in 0..20 {
        let tf = random_neumann_function(seed, 4, 0.05, &grid).unwrap();
        let r = check_logsobolev(&tf, Measure::Gaussian).unwrap();
        assert!(r.pass && r.ratio <= 0.5, "seed {seed}: {r:?}");
    }
}
