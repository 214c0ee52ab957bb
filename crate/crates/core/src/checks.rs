//! Pass/fail verdicts over a stored or freshly computed run.
//!
//! The checks read the states directly, so a corrupted snapshot yields a
//! named failing check rather than an error.

use serde::{Deserialize, Serialize};

use crate::diagnostics::{
    bounds_report, mass_integral, reactant_integral, total_energy, DiagnosticsRecord, TrajectoryMonitor, THETA_FLOOR,
    V_FLOOR,
};
use crate::params::PhysicalParams;
use crate::state::{State, Z_SLACK};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub check_name: String,
    pub value: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl CheckResult {
    /// Passes when `value ≤ tolerance`.
    pub fn at_most(name: &str, value: f64, tolerance: f64) -> Self {
        Self { check_name: name.to_string(), value, tolerance, pass: value <= tolerance }
    }

    /// Passes when `value ≥ tolerance`.
    pub fn at_least(name: &str, value: f64, tolerance: f64) -> Self {
        Self { check_name: name.to_string(), value, tolerance, pass: value >= tolerance }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CheckTolerances {
    /// Relative to the initial mass.
    pub mass_drift: f64,
    /// Relative to the initial total energy.
    pub energy_drift: f64,
    pub reactant_balance: f64,
    /// Largest increase of `∫Z` between consecutive snapshots.
    pub reactant_increase: f64,
    pub entropy_identity: f64,
    pub kazhikhov: f64,
    pub boundary_leakage: f64,
}

impl Default for CheckTolerances {
    fn default() -> Self {
        Self {
            mass_drift: 1e-10,
            energy_drift: 1e-4,
            reactant_balance: 1e-3,
            reactant_increase: 1e-12,
            entropy_identity: 1e-2,
            kazhikhov: 1e-3,
            boundary_leakage: 1e-6,
        }
    }
}

fn relative_drift(values: &[f64]) -> f64 {
    let v0 = values[0];
    let scale = v0.abs().max(f64::MIN_POSITIVE);
    values.iter().map(|v| (v - v0).abs() / scale).fold(0.0, f64::max)
}

fn max_abs(values: impl Iterator<Item = f64>) -> f64 {
    values.map(f64::abs).fold(0.0, |m, x| if x.is_nan() { f64::NAN } else { m.max(x) })
}

/// Recomputes the diagnostics of `states` and evaluates every check.
///
/// Returns the replayed records (empty if the replay failed) and the verdicts.
pub fn evaluate_checks(
    states: &[State],
    params: &PhysicalParams,
    tol: &CheckTolerances,
) -> (Vec<DiagnosticsRecord>, Vec<CheckResult>) {
    let mut out = Vec::new();
    if states.is_empty() {
        out.push(CheckResult::at_least("snapshots", 0.0, 1.0));
        return (Vec::new(), out);
    }
    let bounds: Vec<_> = states.iter().map(bounds_report).collect();
    let min_v = bounds.iter().map(|b| b.min_v).fold(f64::INFINITY, f64::min);
    let min_theta = bounds.iter().map(|b| b.min_theta).fold(f64::INFINITY, f64::min);
    let z_excess = bounds
        .iter()
        .map(|b| (-b.min_z).max(b.max_z - 1.0).max(0.0))
        .fold(0.0, f64::max);
    out.push(CheckResult::at_least("min_v", min_v, V_FLOOR));
    out.push(CheckResult::at_least("min_theta", min_theta, THETA_FLOOR));
    out.push(CheckResult::at_most("z_range_excess", z_excess, Z_SLACK));

    let mass: Vec<f64> = states.iter().map(mass_integral).collect();
    out.push(CheckResult::at_most("mass_drift", relative_drift(&mass), tol.mass_drift));
    let energy: Vec<f64> = states.iter().map(|s| total_energy(s, params)).collect();
    out.push(CheckResult::at_most("energy_drift", relative_drift(&energy), tol.energy_drift));
    let reactant: Vec<f64> = states.iter().map(reactant_integral).collect();
    let increase = reactant.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max);
    out.push(CheckResult::at_most("reactant_increase", increase, tol.reactant_increase));

    let mut monitor = TrajectoryMonitor::new(*params, states[0].grid());
    let replayed: Result<Vec<DiagnosticsRecord>, _> = states.iter().map(|s| monitor.push(s)).collect();
    let records = match replayed {
        Ok(r) => r,
        Err(e) => {
            out.push(CheckResult { check_name: format!("diagnostics_replay: {e}"), value: 1.0, tolerance: 0.0, pass: false });
            return (Vec::new(), out);
        }
    };
    let finite = records.iter().all(DiagnosticsRecord::is_finite);
    out.push(CheckResult::at_least("finite_diagnostics", f64::from(u8::from(finite)), 1.0));
    out.push(CheckResult::at_most(
        "reactant_balance",
        max_abs(records.iter().map(|r| r.reactant_balance_residual)),
        tol.reactant_balance,
    ));
    out.push(CheckResult::at_most(
        "entropy_identity",
        max_abs(records.iter().map(|r| r.entropy_identity_residual)),
        tol.entropy_identity,
    ));
    if states[0].grid().domain().is_unit() {
        out.push(CheckResult::at_most(
            "kazhikhov_residual",
            max_abs(records.iter().map(|r| r.kazhikhov_residual)),
            tol.kazhikhov,
        ));
    } else {
        out.push(CheckResult::at_most(
            "boundary_leakage",
            max_abs(records.iter().map(|r| r.boundary_leakage)),
            tol.boundary_leakage,
        ));
    }
    (records, out)
}

pub fn all_pass(checks: &[CheckResult]) -> bool {
    checks.iter().all(|c| c.pass)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{validate_config, Config};
    use crate::grid::Field;
    use crate::solver::run_simulation;

    fn run(kv: &[(&str, &str)]) -> (Vec<State>, PhysicalParams) {
        let mut c = Config::default();
        for (k, v) in kv {
            c.set(k, v).unwrap();
        }
        let vc = validate_config(&c).unwrap();
        let traj = run_simulation(&vc, None).unwrap();
        (traj.states().cloned().collect(), vc.config.physical)
    }

    #[test]
    fn stationary_passes_everything() {
        let (states, p) = run(&[("preset.name", "stationary"), ("solver.t_end", "0.1"), ("grid.n_cells", "50")]);
        let (records, checks) = evaluate_checks(&states, &p, &CheckTolerances::default());
        assert_eq!(records.len(), states.len());
        assert!(all_pass(&checks), "{checks:?}");
    }

    #[test]
    fn zeroed_volume_is_named() {
        let (mut states, p) = run(&[("preset.name", "smooth-bump"), ("solver.t_end", "0.05"), ("grid.n_cells", "50")]);
        let last = states.last_mut().unwrap();
        last.v = Field::constant(last.v.grid().clone(), 0.0).unwrap();
        let (_, checks) = evaluate_checks(&states, &p, &CheckTolerances::default());
        let failing: Vec<&str> = checks.iter().filter(|c| !c.pass).map(|c| c.check_name.as_str()).collect();
        assert!(failing.contains(&"min_v"), "{failing:?}");
    }

    #[test]
    fn empty_run_fails() {
        let (_, checks) = evaluate_checks(&[], &PhysicalParams::default(), &CheckTolerances::default());
        assert!(!all_pass(&checks));
    }
}
