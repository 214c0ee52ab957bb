//! Closed-form and randomized checks of the functional inequalities that
//! control the Fisher information, independent of the solver.
//!
//! Every check evaluates both sides with second-order differences and the
//! trapezoid rule on the test function's grid and again on the doubled grid.
//! The difference of the two values is the quadrature error estimate that is
//! added to the right-hand side of the verdict.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::calculus::{d2dy2_slice, ddy_slice, trapezoid, BoundaryRule};
use crate::diagnostics::{entropy_of, fisher_of, gaussian_fisher};
use crate::error::{Error, Result};
use crate::grid::{build_grid, Field, Grid};

pub const FISHER_HESSIAN_CONSTANT: f64 = 13.0 / 8.0;
pub const REVERSE_CONSTANT: f64 = 4.0;
/// `(2 + √N)²` with `N = 1`.
pub const BERNIS_CONSTANT: f64 = 9.0;
/// Sharp log-Sobolev constant of the standard Gaussian.
pub const GAUSSIAN_LSI_CONSTANT: f64 = 0.5;
/// Largest end slope accepted as a vanishing Neumann derivative.
pub const END_SLOPE_TOL: f64 = 1e-10;

type Profile = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Where a test function came from, enough to rebuild it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Descriptor {
    Random { seed: u64, n_modes: usize, floor: f64, coeffs: Vec<f64> },
    Named { name: String },
}

/// A profile `Ψ` known in closed form together with its samples on a grid.
#[derive(Clone)]
pub struct TestFunction {
    values: Field,
    descriptor: Descriptor,
    psi: Profile,
    slope: Profile,
}

impl fmt::Debug for TestFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TestFunction")
            .field("descriptor", &self.descriptor)
            .field("n_cells", &self.values.grid().n_cells())
            .finish()
    }
}

impl TestFunction {
    /// Samples `psi` on `grid`; `slope` is its exact derivative, used for the
    /// end-slope admissibility test.
    pub fn new(
        grid: Arc<Grid>,
        descriptor: Descriptor,
        psi: impl Fn(f64) -> f64 + Send + Sync + 'static,
        slope: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Result<Self> {
        let psi: Profile = Arc::new(psi);
        let values = Field::from_fn(grid, |y| psi(y))?;
        Ok(Self { values, descriptor, psi, slope: Arc::new(slope) })
    }

    pub fn constant(grid: Arc<Grid>, c: f64) -> Result<Self> {
        Self::new(grid, Descriptor::Named { name: format!("constant {c}") }, move |_| c, |_| 0.0)
    }

    /// `e^{-x²}`.
    pub fn gaussian(grid: Arc<Grid>) -> Result<Self> {
        Self::new(
            grid,
            Descriptor::Named { name: "gaussian".into() },
            |x| (-x * x).exp(),
            |x| -2.0 * x * (-x * x).exp(),
        )
    }

    pub fn values(&self) -> &Field {
        &self.values
    }

    pub fn grid(&self) -> &Arc<Grid> {
        self.values.grid()
    }

    pub fn descriptor(&self) -> &Descriptor {
        &self.descriptor
    }

    pub fn end_slopes(&self) -> (f64, f64) {
        let (a, b) = self.grid().domain().bounds();
        ((self.slope)(a), (self.slope)(b))
    }

    /// Vanishing end slopes within [`END_SLOPE_TOL`].
    pub fn is_admissible(&self) -> bool {
        let (sa, sb) = self.end_slopes();
        sa.abs() <= END_SLOPE_TOL && sb.abs() <= END_SLOPE_TOL
    }

    /// The same profile sampled with `n_cells` cells.
    pub fn resample(&self, n_cells: usize) -> Result<Self> {
        let grid = build_grid(self.grid().domain(), n_cells)?;
        let psi = Arc::clone(&self.psi);
        let values = Field::from_fn(grid, |y| psi(y))?;
        Ok(Self { values, descriptor: self.descriptor.clone(), psi, slope: Arc::clone(&self.slope) })
    }

    fn refined(&self) -> Result<Self> {
        self.resample(2 * self.grid().n_cells())
    }

    fn positive_values(&self) -> Result<&[f64]> {
        let vals = self.values.values();
        match vals.iter().position(|&p| !(p > 0.0)) {
            Some(node) => Err(Error::PositivityViolated { node, value: vals[node] }),
            None => Ok(vals),
        }
    }
}

/// `Ψ(y) = floor + Σ_k c_k (1 + cos(kπ(y − a)/(b − a)))` with `c_k` uniform in
/// `[0, 1)` drawn from a ChaCha8 stream seeded with `seed`. `n_modes = 0` gives
/// the constant `floor`.
pub fn random_neumann_function(seed: u64, n_modes: usize, floor: f64, grid: &Arc<Grid>) -> Result<TestFunction> {
    if !(floor > 0.0 && floor.is_finite()) {
        return Err(Error::InvalidParameter(format!("floor {floor} must be positive")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let coeffs: Vec<f64> = (0..n_modes).map(|_| rng.gen::<f64>()).collect();
    let (a, b) = grid.domain().bounds();
    let len = b - a;
    let c_psi = coeffs.clone();
    let c_slope = coeffs.clone();
    TestFunction::new(
        Arc::clone(grid),
        Descriptor::Random { seed, n_modes, floor, coeffs },
        move |y| {
            let s = std::f64::consts::PI * (y - a) / len;
            floor + c_psi.iter().enumerate().map(|(k, c)| c * (1.0 + ((k + 1) as f64 * s).cos())).sum::<f64>()
        },
        move |y| {
            let s = std::f64::consts::PI * (y - a) / len;
            -c_slope
                .iter()
                .enumerate()
                .map(|(k, c)| {
                    let w = (k + 1) as f64 * std::f64::consts::PI / len;
                    c * w * ((k + 1) as f64 * s).sin()
                })
                .sum::<f64>()
        },
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InequalityReport {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    /// `lhs/rhs`, with `0/0` reported as 0.
    pub ratio: f64,
    /// Infinite when only the ratio is recorded.
    pub constant: f64,
    /// `lhs ≤ constant·rhs + quadrature_error_estimate`.
    pub pass: bool,
    pub quadrature_error_estimate: f64,
    /// End slopes vanish within [`END_SLOPE_TOL`].
    pub admissible: bool,
}

fn ratio(lhs: f64, rhs: f64) -> f64 {
    if lhs == 0.0 && rhs == 0.0 {
        0.0
    } else {
        lhs / rhs
    }
}

fn verdict(lhs: f64, rhs: f64, constant: f64, est: f64) -> bool {
    if constant.is_infinite() {
        return true;
    }
    lhs <= constant * rhs + est
}

fn report(name: &str, coarse: (f64, f64), fine: (f64, f64), constant: f64, admissible: bool) -> InequalityReport {
    let weight = if constant.is_finite() { constant } else { 1.0 };
    let est = (coarse.0 - fine.0).abs() + weight * (coarse.1 - fine.1).abs();
    let (lhs, rhs) = coarse;
    InequalityReport {
        name: name.to_string(),
        lhs,
        rhs,
        ratio: ratio(lhs, rhs),
        constant,
        pass: verdict(lhs, rhs, constant, est),
        quadrature_error_estimate: est,
        admissible,
    }
}

/// Nodal values of `(Ψ^{1/2})_xx`, `Ψ[(log Ψ)_xx]²` and `Ψ_x⁴/Ψ³`.
struct Integrands {
    sqrt_xx_sq: Vec<f64>,
    log_hessian: Vec<f64>,
    quartic: Vec<f64>,
}

fn integrands(psi: &[f64], h: f64) -> Integrands {
    let root: Vec<f64> = psi.iter().map(|p| p.sqrt()).collect();
    let log: Vec<f64> = psi.iter().map(|p| p.ln()).collect();
    let root_xx = d2dy2_slice(&root, h, BoundaryRule::OneSided);
    let log_xx = d2dy2_slice(&log, h, BoundaryRule::OneSided);
    let psi_x = ddy_slice(psi, h);
    Integrands {
        sqrt_xx_sq: root_xx.iter().map(|r| r * r).collect(),
        log_hessian: psi.iter().zip(&log_xx).map(|(p, l)| p * l * l).collect(),
        quartic: psi.iter().zip(&psi_x).map(|(p, d)| d.powi(4) / p.powi(3)).collect(),
    }
}

fn sides(tf: &TestFunction, pick: fn(&Integrands) -> (&[f64], &[f64])) -> Result<(f64, f64)> {
    let h = tf.grid().h();
    let ints = integrands(tf.positive_values()?, h);
    let (l, r) = pick(&ints);
    Ok((trapezoid(l, h), trapezoid(r, h)))
}

fn two_level(
    tf: &TestFunction,
    name: &str,
    constant: f64,
    pick: fn(&Integrands) -> (&[f64], &[f64]),
) -> Result<InequalityReport> {
    let coarse = sides(tf, pick)?;
    let fine = sides(&tf.refined()?, pick)?;
    Ok(report(name, coarse, fine, constant, tf.is_admissible()))
}

/// `∫[(Ψ^{1/2})_xx]² ≤ 13/8 ∫Ψ[(log Ψ)_xx]²`.
pub fn check_fisher_hessian_ineq(tf: &TestFunction) -> Result<InequalityReport> {
    two_level(tf, "fisher-hessian", FISHER_HESSIAN_CONSTANT, |i| (&i.sqrt_xx_sq, &i.log_hessian))
}

/// `∫Ψ[(log Ψ)_xx]² ≤ 4 ∫[(Ψ^{1/2})_xx]²`.
///
/// For admissible `Ψ` one has the exact identity
/// `∫Ψ[(log Ψ)_xx]² = 4∫[(Ψ^{1/2})_xx]² + (1/12)∫Ψ_x⁴/Ψ³`,
/// so this check fails for every non-constant admissible profile.
pub fn check_reverse_ineq(tf: &TestFunction) -> Result<InequalityReport> {
    two_level(tf, "reverse", REVERSE_CONSTANT, |i| (&i.log_hessian, &i.sqrt_xx_sq))
}

/// `∫φ_x⁴/φ³ ≤ 9 ∫φ[(log φ)_xx]²`, the one-dimensional case with `h = Id`.
pub fn check_bernis(tf: &TestFunction) -> Result<InequalityReport> {
    two_level(tf, "bernis", BERNIS_CONSTANT, |i| (&i.quartic, &i.log_hessian))
}

/// Largest interior residual of
/// `(Ψ^{1/2})_xx − ½Ψ^{1/2}(log Ψ)_xx − ¼Ψ_x²/Ψ^{3/2}` with central differences.
pub fn check_pointwise_identity(tf: &TestFunction) -> Result<f64> {
    let psi = tf.positive_values()?;
    let h = tf.grid().h();
    let n = psi.len();
    let root: Vec<f64> = psi.iter().map(|p| p.sqrt()).collect();
    let log: Vec<f64> = psi.iter().map(|p| p.ln()).collect();
    let ih2 = 1.0 / (h * h);
    let d2 = |f: &[f64], i: usize| (f[i + 1] - 2.0 * f[i] + f[i - 1]) * ih2;
    Ok((1..n - 1)
        .map(|i| {
            let psi_x = (psi[i + 1] - psi[i - 1]) / (2.0 * h);
            let lhs = d2(&root, i) - 0.5 * root[i] * d2(&log, i);
            let rhs = 0.25 * psi_x * psi_x / psi[i].powf(1.5);
            (lhs - rhs).abs()
        })
        .fold(0.0, f64::max))
}

/// Ratio of the pointwise-identity residual on the grid to the residual on
/// the doubled grid; close to 4 for smooth profiles.
pub fn pointwise_identity_order(tf: &TestFunction) -> Result<f64> {
    Ok(check_pointwise_identity(tf)? / check_pointwise_identity(&tf.refined()?)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Measure {
    /// Lebesgue measure on `[0, 1]`; only the ratio is recorded.
    LebesgueUnit,
    /// Standard Gaussian on the truncated line.
    Gaussian,
}

fn entropy_fisher(z: &Field, measure: Measure) -> (f64, f64) {
    let ent = entropy_of(z);
    match measure {
        Measure::LebesgueUnit => (ent.lebesgue, fisher_of(z, 0.0)),
        Measure::Gaussian => (ent.gaussian.unwrap_or(f64::NAN), gaussian_fisher(z)),
    }
}

/// Entropy against Fisher information of `Z` for the chosen measure.
pub fn check_logsobolev(tf: &TestFunction, measure: Measure) -> Result<InequalityReport> {
    let domain = tf.grid().domain();
    match measure {
        Measure::LebesgueUnit if !domain.is_unit() => {
            return Err(Error::InvalidParameter("Lebesgue log-Sobolev check needs the unit interval".into()))
        }
        Measure::Gaussian if domain.is_unit() => {
            return Err(Error::InvalidParameter("Gaussian log-Sobolev check needs the truncated line".into()))
        }
        _ => {}
    }
    if let Some(node) = tf.values().values().iter().position(|&z| z < 0.0) {
        return Err(Error::PositivityViolated { node, value: tf.values()[node] });
    }
    let constant = match measure {
        Measure::LebesgueUnit => f64::INFINITY,
        Measure::Gaussian => GAUSSIAN_LSI_CONSTANT,
    };
    let name = match measure {
        Measure::LebesgueUnit => "log-sobolev",
        Measure::Gaussian => "log-sobolev-gaussian",
    };
    let coarse = entropy_fisher(tf.values(), measure);
    let fine = entropy_fisher(tf.refined()?.values(), measure);
    Ok(report(name, coarse, fine, constant, tf.is_admissible()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CheckKind {
    FisherHessian,
    Reverse,
    Bernis,
    LogSobolev,
}

impl CheckKind {
    pub const ALL: [CheckKind; 4] = [CheckKind::FisherHessian, CheckKind::Reverse, CheckKind::Bernis, CheckKind::LogSobolev];

    pub fn name(self) -> &'static str {
        match self {
            CheckKind::FisherHessian => "fisher-hessian",
            CheckKind::Reverse => "reverse",
            CheckKind::Bernis => "bernis",
            CheckKind::LogSobolev => "log-sobolev",
        }
    }

    pub fn run(self, tf: &TestFunction) -> Result<InequalityReport> {
        match self {
            CheckKind::FisherHessian => check_fisher_hessian_ineq(tf),
            CheckKind::Reverse => check_reverse_ineq(tf),
            CheckKind::Bernis => check_bernis(tf),
            CheckKind::LogSobolev => check_logsobolev(tf, Measure::LebesgueUnit),
        }
    }
}

impl fmt::Display for CheckKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CheckKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        CheckKind::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown check `{s}`")))
    }
}

/// Distribution of the random battery functions on the unit interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BatterySettings {
    pub n_cells: usize,
    pub max_modes: usize,
    /// The floor is log-uniform in `[floor_min, floor_max]`.
    pub floor_min: f64,
    pub floor_max: f64,
}

impl Default for BatterySettings {
    fn default() -> Self {
        Self { n_cells: 1024, max_modes: 5, floor_min: 1e-2, floor_max: 1.0 }
    }
}

/// The test function of trial `trial` in the battery with `seed`.
///
/// Each trial draws from its own ChaCha8 stream, so trials can run in any
/// order and on any number of threads.
pub fn battery_function(seed: u64, trial: u64, settings: &BatterySettings, grid: &Arc<Grid>) -> Result<TestFunction> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    let trial_seed: u64 = rng.gen();
    let n_modes = rng.gen_range(1..=settings.max_modes.max(1));
    let (lo, hi) = (settings.floor_min.ln(), settings.floor_max.ln());
    let floor = if hi > lo { rng.gen_range(lo..hi).exp() } else { settings.floor_min };
    random_neumann_function(trial_seed, n_modes, floor, grid)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: u64,
    pub descriptor: Descriptor,
    pub report: InequalityReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckSummary {
    pub check: CheckKind,
    pub trials: usize,
    pub passes: usize,
    pub worst_ratio: f64,
    /// Seed of the worst trial's function; `None` for injected functions.
    pub worst_seed: Option<u64>,
    pub worst_trial: u64,
    /// Whether any trial had a ratio above 1/2.
    pub any_ratio_above_half: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BatteryReport {
    pub summaries: Vec<CheckSummary>,
    pub records: Vec<TrialRecord>,
}

impl BatteryReport {
    pub fn all_pass(&self) -> bool {
        self.summaries.iter().all(|s| s.passes == s.trials)
    }
}

/// Runs `checks` on `n_trials` functions from the seeded generator.
pub fn run_battery(n_trials: u64, seed: u64, checks: &[CheckKind], settings: &BatterySettings) -> Result<BatteryReport> {
    let grid = build_grid(crate::grid::DomainKind::UnitInterval, settings.n_cells)?;
    run_battery_with(n_trials, checks, |trial| battery_function(seed, trial, settings, &grid))
}

/// Runs `checks` on the functions `make(0), ..., make(n_trials - 1)`.
pub fn run_battery_with(
    n_trials: u64,
    checks: &[CheckKind],
    make: impl Fn(u64) -> Result<TestFunction> + Sync,
) -> Result<BatteryReport> {
    if n_trials == 0 {
        return Err(Error::InvalidParameter("battery needs at least one trial".into()));
    }
    let per_trial: Vec<Vec<TrialRecord>> = (0..n_trials)
        .into_par_iter()
        .map(|trial| {
            let tf = make(trial)?;
            checks
                .iter()
                .map(|c| Ok(TrialRecord { trial, descriptor: tf.descriptor().clone(), report: c.run(&tf)? }))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    let records: Vec<TrialRecord> = per_trial.into_iter().flatten().collect();
    let summaries = checks
        .iter()
        .map(|&check| {
            let mine = records.iter().filter(|r| r.report.name == check.name());
            let mut summary = CheckSummary {
                check,
                trials: 0,
                passes: 0,
                worst_ratio: f64::NEG_INFINITY,
                worst_seed: None,
                worst_trial: 0,
                any_ratio_above_half: false,
            };
            for r in mine {
                summary.trials += 1;
                summary.passes += usize::from(r.report.pass);
                summary.any_ratio_above_half |= r.report.ratio > 0.5;
                if r.report.ratio > summary.worst_ratio || summary.trials == 1 {
                    summary.worst_ratio = r.report.ratio;
                    summary.worst_trial = r.trial;
                    summary.worst_seed = match &r.descriptor {
                        Descriptor::Random { seed, .. } => Some(*seed),
                        Descriptor::Named { .. } => None,
                    };
                }
            }
            summary
        })
        .collect();
    Ok(BatteryReport { summaries, records })
}
