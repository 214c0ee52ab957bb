//! IMEX time stepping of the Lagrangian system.
//!
//! All unknowns live at nodes. Fluxes live on cells, with cell coefficients
//! taken from the average of the two nodal values of `v`. Node balances use
//! trapezoid weights (`h/2` at the ends), which makes the boundary rows of the
//! Neumann problems identical to ghost-node mirroring.
//!
//! One step advances, in order:
//! 1. `Z`: implicit diffusion and implicit decay with the rate frozen at `θ^n`;
//! 2. `u`: implicit viscosity, explicit pressure;
//! 3. `θ`: implicit conduction, heating and compression work from `u^{n+1}`,
//!    heat release from `Z^{n+1}`;
//! 4. `v`: `v^{n+1} = v^n + dt·Du^{n+1}`, where `Du` is a second-order
//!    approximation of `u_y` built from the momentum cell stresses and
//!    shifted by the constant that makes its trapezoid integral vanish.
//!
//! The volume update conserves `∫v` to round-off, and the split of the cell work
//! terms between momentum and temperature makes the discrete total energy
//! change only by `−½ Σ w (u^{n+1} − u^n)²` per step.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::calculus::ddy_slice;
use crate::config::ValidatedConfig;
use crate::diagnostics::{DiagnosticsRecord, TrajectoryMonitor};
use crate::error::{Error, Result};
use crate::grid::{Field, Grid};
use crate::params::PhysicalParams;
use crate::reaction::RateSpec;
use crate::state::State;
use crate::tridiag::Tridiagonal;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverSettings {
    pub dt: f64,
    pub t_end: f64,
    /// Fraction of the acoustic step limit used by [`adapt_dt`].
    pub cfl_safety: f64,
    /// Picard passes per step; 1 means coefficients frozen at the old level.
    pub max_iters: usize,
    /// Relative pivot threshold of the tridiagonal solves and Picard stopping tolerance.
    pub linear_tol: f64,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self { dt: 1e-3, t_end: 1.0, cfl_safety: 0.5, max_iters: 1, linear_tol: 1e-12 }
    }
}

impl SolverSettings {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::Config(format!("solver.dt = {} must be positive", self.dt)));
        }
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return Err(Error::Config(format!("solver.t_end = {} must be positive", self.t_end)));
        }
        if !(self.cfl_safety > 0.0 && self.cfl_safety <= 1.0) {
            return Err(Error::Config(format!(
                "solver.cfl_safety = {} must lie in (0, 1]",
                self.cfl_safety
            )));
        }
        if self.max_iters < 1 {
            return Err(Error::Config("solver.max_iters must be at least 1".into()));
        }
        if !(self.linear_tol > 0.0 && self.linear_tol < 1.0) {
            return Err(Error::Config(format!(
                "solver.linear_tol = {} must lie in (0, 1)",
                self.linear_tol
            )));
        }
        Ok(())
    }
}

/// Largest admissible step: `min(dt, cfl·h / (max|u| + √(a·θ_max)/v_min))`.
///
/// `√(aθ)/v` is the Lagrangian sound speed; with `v ≡ 1` it reduces to `√(aθ)`.
pub fn adapt_dt(state: &State, params: &PhysicalParams, settings: &SolverSettings) -> f64 {
    let h = state.grid().h();
    let speed = state.u.max_abs() + (params.a * state.theta.max()).sqrt() / state.v.min();
    if speed > 0.0 {
        settings.dt.min(settings.cfl_safety * h / speed)
    } else {
        settings.dt
    }
}

/// One step of size `settings.dt`.
pub fn step_imex(state: &State, params: &PhysicalParams, settings: &SolverSettings) -> Result<State> {
    let rate = params.rate_spec()?;
    step_with(state, params, &rate, settings, settings.dt)
}

struct Coefficients {
    /// `μ / v_c` per cell.
    visc: Vec<f64>,
    /// `ν / v_c` per cell.
    cond: Vec<f64>,
    /// `D / v_c²` per cell.
    diff: Vec<f64>,
    /// Cell pressure, average of nodal `aθ/v`.
    pressure: Vec<f64>,
    /// `K Φ_ε(θ)` per node.
    decay: Vec<f64>,
}

impl Coefficients {
    fn at(v: &[f64], theta: &[f64], params: &PhysicalParams, rate: &RateSpec) -> Self {
        let cells = v.len() - 1;
        let mut c = Coefficients {
            visc: Vec::with_capacity(cells),
            cond: Vec::with_capacity(cells),
            diff: Vec::with_capacity(cells),
            pressure: Vec::with_capacity(cells),
            decay: theta.iter().map(|&th| params.k_rate * rate.phi_eps(th)).collect(),
        };
        for i in 0..cells {
            let vc = 0.5 * (v[i] + v[i + 1]);
            c.visc.push(params.mu / vc);
            c.cond.push(params.nu / vc);
            c.diff.push(params.diffusivity / (vc * vc));
            c.pressure.push(0.5 * params.a * (theta[i] / v[i] + theta[i + 1] / v[i + 1]));
        }
        c
    }
}

/// Matrix of `I − dt·(∂_y κ ∂_y)` on node balances with zero-flux ends,
/// plus `dt·decay` on the diagonal.
fn neumann_operator(kappa: &[f64], decay: Option<&[f64]>, dt: f64, h: f64) -> Tridiagonal {
    let n = kappa.len();
    let mut m = Tridiagonal::zeros(n + 1);
    let s = dt / (h * h);
    for i in 0..=n {
        let left = if i > 0 { kappa[i - 1] } else { 0.0 };
        let right = if i < n { kappa[i] } else { 0.0 };
        // Half-weight end nodes double the single adjacent flux.
        let scale = if i == 0 || i == n { 2.0 } else { 1.0 };
        m.lower[i] = -scale * s * left;
        m.upper[i] = -scale * s * right;
        m.diag[i] = 1.0 + scale * s * (left + right) + decay.map_or(0.0, |d| dt * d[i]);
    }
    m
}

/// `dt·(∂_y κ ∂_y f)` on node balances with zero-flux ends, in flux form so
/// that constants map to exact zeros.
fn neumann_apply(kappa: &[f64], f: &[f64], dt: f64, h: f64) -> Vec<f64> {
    let n = kappa.len();
    let s = dt / (h * h);
    let flux: Vec<f64> = (0..n).map(|c| kappa[c] * (f[c + 1] - f[c])).collect();
    (0..=n)
        .map(|i| match i {
            0 => 2.0 * s * flux[0],
            _ if i == n => -2.0 * s * flux[n - 1],
            _ => s * (flux[i] - flux[i - 1]),
        })
        .collect()
}

// The u and θ solves are written for the increment, so that steady states
// are reproduced without round-off drift.
fn momentum_update(u: &[f64], c: &Coefficients, dt: f64, h: f64, tol: f64) -> Result<Vec<f64>> {
    let n = u.len() - 1;
    let s = dt / (h * h);
    let mut m = Tridiagonal::zeros(n + 1);
    let mut rhs = vec![0.0; n + 1];
    m.diag[0] = 1.0;
    m.diag[n] = 1.0;
    for i in 1..n {
        m.lower[i] = -s * c.visc[i - 1];
        m.upper[i] = -s * c.visc[i];
        m.diag[i] = 1.0 + s * (c.visc[i - 1] + c.visc[i]);
        let visc = c.visc[i] * (u[i + 1] - u[i]) - c.visc[i - 1] * (u[i] - u[i - 1]);
        rhs[i] = s * visc - dt / h * (c.pressure[i] - c.pressure[i - 1]);
    }
    // Row 1 and row n-1 couple to the pinned ends, whose increments are zero.
    m.lower[1] = 0.0;
    m.upper[n - 1] = 0.0;
    let du = m.solve(&rhs, tol)?;
    Ok(u.iter().zip(du).map(|(a, d)| a + d).collect())
}

#[allow(clippy::too_many_arguments)]
fn temperature_update(
    theta: &[f64],
    u_new: &[f64],
    z_new: &[f64],
    c: &Coefficients,
    params: &PhysicalParams,
    dt: f64,
    h: f64,
    tol: f64,
) -> Result<Vec<f64>> {
    let n = theta.len() - 1;
    let m = neumann_operator(&c.cond, None, dt, h);
    // Cell work: viscous heating minus compression work.
    let work: Vec<f64> = (0..n)
        .map(|i| {
            let gu = (u_new[i + 1] - u_new[i]) / h;
            c.visc[i] * gu * gu - c.pressure[i] * gu
        })
        .collect();
    let conduction = neumann_apply(&c.cond, theta, dt, h);
    let rhs: Vec<f64> = (0..=n)
        .map(|i| {
            let w = match i {
                0 => work[0],
                _ if i == n => work[n - 1],
                _ => 0.5 * (work[i - 1] + work[i]),
            };
            conduction[i] + dt * w + dt * params.q * c.decay[i] * z_new[i]
        })
        .collect();
    let dtheta = m.solve(&rhs, tol)?;
    Ok(theta.iter().zip(dtheta).map(|(a, d)| a + d).collect())
}

/// Volume rate at the nodes.
///
/// Inside, `μ (log v)_t` is set to the node average of the cell stresses plus
/// the nodal pressure, the same relation the momentum balance integrates, so
/// that the volume representation in terms of `∫θ/v dτ` holds node by node
/// even where `v` has kinks. The ends use the one-sided second-order stencil.
fn volume_rate(v: &[f64], theta: &[f64], u_new: &[f64], c: &Coefficients, params: &PhysicalParams, h: f64) -> Vec<f64> {
    let n = v.len() - 1;
    let stress: Vec<f64> =
        (0..n).map(|i| c.visc[i] * (u_new[i + 1] - u_new[i]) / h - c.pressure[i]).collect();
    let ends = ddy_slice(u_new, h);
    (0..=n)
        .map(|i| {
            if i == 0 || i == n {
                ends[i]
            } else {
                v[i] / params.mu * (0.5 * (stress[i - 1] + stress[i]) + params.a * theta[i] / v[i])
            }
        })
        .collect()
}

fn volume_update(v: &[f64], rate: &[f64], w: &[f64], dt: f64) -> Vec<f64> {
    // Removing the weighted mean of the rate, an O(h²) defect, makes Σ w·v exact.
    let defect: f64 = rate.iter().zip(w).map(|(d, w)| d * w).sum::<f64>() / w.iter().sum::<f64>();
    v.iter().zip(rate).map(|(v, d)| v + dt * (d - defect)).collect()
}

fn max_change(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs() / (1.0 + y.abs())))
}

pub(crate) fn step_with(
    state: &State,
    params: &PhysicalParams,
    rate: &RateSpec,
    settings: &SolverSettings,
    dt: f64,
) -> Result<State> {
    let grid = Arc::clone(state.grid());
    let h = grid.h();
    let tol = settings.linear_tol;
    let weights: Vec<f64> = (0..grid.n_nodes()).map(|i| grid.weight(i)).collect();
    let (v0, u0, th0, z0) =
        (state.v.values(), state.u.values(), state.theta.values(), state.z.values());

    let mut coeff = Coefficients::at(v0, th0, params, rate);
    let mut iterate: Option<[Vec<f64>; 4]> = None;
    for _ in 0..settings.max_iters {
        let zm = neumann_operator(&coeff.diff, Some(&coeff.decay), dt, h);
        let z = zm.solve(z0, tol)?;
        let u = momentum_update(u0, &coeff, dt, h, tol)?;
        let theta = temperature_update(th0, &u, &z, &coeff, params, dt, h, tol)?;
        let v = volume_update(v0, &volume_rate(v0, th0, &u, &coeff, params, h), &weights, dt);
        let converged = iterate.as_ref().is_some_and(|prev| {
            [&v, &u, &theta, &z]
                .iter()
                .zip(prev.iter())
                .all(|(new, old)| max_change(new, old) <= tol)
        });
        let done = converged || settings.max_iters == 1;
        if !done && v.iter().all(|&x| x > 0.0) && theta.iter().all(|&x| x > 0.0) {
            coeff = Coefficients::at(&v, &theta, params, rate);
        }
        iterate = Some([v, u, theta, z]);
        if done {
            break;
        }
    }
    let [v, u, theta, z] = iterate.expect("at least one pass");
    let next = State {
        t: state.t + dt,
        v: Field::new_unchecked(Arc::clone(&grid), v),
        u: Field::new_unchecked(Arc::clone(&grid), u),
        theta: Field::new_unchecked(Arc::clone(&grid), theta),
        z: Field::new_unchecked(grid, z),
    };
    next.check_invariants()?;
    Ok(next)
}

/// States and diagnostics at output cadence.
#[derive(Debug, Clone, Default)]
pub struct Trajectory {
    pub entries: Vec<(State, DiagnosticsRecord)>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn states(&self) -> impl Iterator<Item = &State> {
        self.entries.iter().map(|(s, _)| s)
    }

    pub fn records(&self) -> impl Iterator<Item = &DiagnosticsRecord> {
        self.entries.iter().map(|(_, r)| r)
    }

    pub fn times(&self) -> Vec<f64> {
        self.states().map(|s| s.t).collect()
    }

    pub fn initial(&self) -> Option<&State> {
        self.entries.first().map(|(s, _)| s)
    }

    pub fn terminal(&self) -> Option<&State> {
        self.entries.last().map(|(s, _)| s)
    }

    pub fn grid(&self) -> Option<&Arc<Grid>> {
        self.initial().map(|s| s.grid())
    }
}

/// Receives every output snapshot as it is produced.
pub trait SnapshotSink {
    fn record(&mut self, state: &State, diagnostics: &DiagnosticsRecord) -> Result<()>;
}

/// A run stopped by a numerical or I/O failure; `partial` ends at the last good state.
#[derive(Debug)]
pub struct AbortedRun {
    pub error: Error,
    pub partial: Trajectory,
}

impl std::fmt::Display for AbortedRun {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let t = self.partial.terminal().map_or(0.0, |s| s.t);
        write!(f, "run aborted after t = {t}: {}", self.error)
    }
}

impl std::error::Error for AbortedRun {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        Some(&self.error)
    }
}

/// Runs a validated configuration to `solver.t_end`.
pub fn run_simulation(
    config: &ValidatedConfig,
    sink: Option<&mut dyn SnapshotSink>,
) -> std::result::Result<Trajectory, AbortedRun> {
    let c = &config.config;
    integrate_from(config.initial.clone(), &c.physical, &c.solver, c.every_n_steps, sink)
}

/// Steps `initial` to `settings.t_end`, recording every `every_n_steps` steps
/// and at the final time.
pub fn integrate_from(
    initial: State,
    params: &PhysicalParams,
    settings: &SolverSettings,
    every_n_steps: usize,
    mut sink: Option<&mut dyn SnapshotSink>,
) -> std::result::Result<Trajectory, AbortedRun> {
    let mut traj = Trajectory::default();
    let abort = |error: Error, partial: Trajectory| AbortedRun { error, partial };
    let rate = match params.rate_spec().and_then(|r| settings.validate().map(|_| r)) {
        Ok(r) => r,
        Err(e) => return Err(abort(e, traj)),
    };
    if let Err(e) = initial.check_invariants() {
        return Err(abort(e, traj));
    }
    let mut monitor = TrajectoryMonitor::new(*params, initial.grid());
    let every = every_n_steps.max(1);

    let mut emit = |traj: &mut Trajectory, state: &State, sink: &mut Option<&mut dyn SnapshotSink>| {
        let rec = monitor.push(state)?;
        if let Some(s) = sink.as_deref_mut() {
            s.record(state, &rec)?;
        }
        traj.entries.push((state.clone(), rec));
        Ok::<(), Error>(())
    };

    if let Err(e) = emit(&mut traj, &initial, &mut sink) {
        return Err(abort(e, traj));
    }
    let t_end = settings.t_end;
    let mut state = initial;
    let mut steps = 0usize;
    let mut recorded_at = 0usize;
    while t_end - state.t > 1e-9 * settings.dt {
        let mut dt = adapt_dt(&state, params, settings);
        let last = state.t + dt >= t_end - 1e-9 * settings.dt;
        if last {
            dt = t_end - state.t;
        }
        match step_with(&state, params, &rate, settings, dt) {
            Ok(mut next) => {
                if last {
                    next.t = t_end;
                }
                state = next;
                steps += 1;
            }
            Err(e) => {
                if recorded_at != steps {
                    // Persist the last good state before giving up.
                    let _ = emit(&mut traj, &state, &mut sink);
                }
                return Err(abort(e, traj));
            }
        }
        if steps.is_multiple_of(every) || last {
            if let Err(e) = emit(&mut traj, &state, &mut sink) {
                return Err(abort(e, traj));
            }
            recorded_at = steps;
        }
    }
    Ok(traj)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calculus::integrate;
    use crate::grid::{build_grid, DomainKind};
    use crate::presets::{make_preset_initial_data, PresetParams};

    fn unit_state(name: &str, n: usize, p: PresetParams) -> State {
        let g = build_grid(DomainKind::UnitInterval, n).unwrap();
        make_preset_initial_data(name, &p, &g).unwrap()
    }

    #[test]
    fn stationary_is_fixed_point() {
        let s0 = unit_state("stationary", 50, PresetParams { theta_c: 2.0, ..Default::default() });
        let params = PhysicalParams::default();
        let settings = SolverSettings { dt: 1e-3, ..Default::default() };
        let s1 = step_imex(&s0, &params, &settings).unwrap();
        for (a, b) in [(&s0.v, &s1.v), (&s0.u, &s1.u), (&s0.theta, &s1.theta), (&s0.z, &s1.z)] {
            assert_eq!(a, b);
        }
    }

    #[test]
    fn adapt_dt_examples() {
        let g = build_grid(DomainKind::UnitInterval, 100).unwrap();
        let s = make_preset_initial_data("stationary", &PresetParams { theta_c: 1.0, ..Default::default() }, &g)
            .unwrap();
        let params = PhysicalParams::default();
        let set = SolverSettings { dt: 1.0, cfl_safety: 0.5, ..Default::default() };
        assert!((adapt_dt(&s, &params, &set) - 0.005).abs() < 1e-15);
        let small = SolverSettings { dt: 1e-4, ..set };
        assert_eq!(adapt_dt(&s, &params, &small), 1e-4);

        let mut hot = s.clone();
        hot.theta = Field::constant(Arc::clone(&g), 1e4).unwrap();
        let ratio = adapt_dt(&s, &params, &set) / adapt_dt(&hot, &params, &set);
        assert!((ratio - 100.0).abs() < 1e-9);

        let mut moving = s.clone();
        moving.u = Field::from_fn(Arc::clone(&g), |y| (std::f64::consts::PI * y).sin()).unwrap();
        let mut faster = moving.clone();
        faster.u = moving.u.map(|x| 2.0 * x);
        assert!(adapt_dt(&faster, &params, &set) <= adapt_dt(&moving, &params, &set));
    }

    #[test]
    fn conserves_mass_and_bounds_z() {
        let s0 = unit_state("harmonic", 64, PresetParams::default());
        let params = PhysicalParams::default();
        let settings = SolverSettings { dt: 2e-3, ..Default::default() };
        let m0 = integrate(&s0.v);
        let mut s = s0.clone();
        for _ in 0..200 {
            let zmax = s.z.max();
            s = step_imex(&s, &params, &settings).unwrap();
            assert!(s.z.min() >= 0.0);
            assert!(s.z.max() <= zmax + 1e-15);
        }
        assert!((integrate(&s.v) - m0).abs() <= 1e-13);
    }

    #[test]
    fn energy_changes_by_velocity_increment_only() {
        let s0 = unit_state("harmonic", 64, PresetParams::default());
        let params = PhysicalParams::default();
        let settings = SolverSettings { dt: 1e-3, ..Default::default() };
        let energy = |s: &State| {
            let f = Field::new_unchecked(
                Arc::clone(s.grid()),
                (0..s.v.len())
                    .map(|i| s.theta[i] + 0.5 * s.u[i] * s.u[i] + params.q * s.z[i])
                    .collect(),
            );
            integrate(&f)
        };
        let mut s = s0;
        for _ in 0..50 {
            let next = step_imex(&s, &params, &settings).unwrap();
            let du: Vec<f64> =
                next.u.values().iter().zip(s.u.values()).map(|(a, b)| (a - b) * (a - b)).collect();
            let kick = 0.5 * integrate(&Field::new_unchecked(Arc::clone(s.grid()), du));
            assert!((energy(&next) - energy(&s) + kick).abs() < 1e-13);
            s = next;
        }
    }

    #[test]
    fn picard_passes_keep_conservation() {
        let s0 = unit_state("harmonic", 32, PresetParams::default());
        let params = PhysicalParams::default();
        let settings = SolverSettings { dt: 5e-3, max_iters: 4, ..Default::default() };
        let s1 = step_imex(&s0, &params, &settings).unwrap();
        assert!((integrate(&s1.v) - integrate(&s0.v)).abs() < 1e-14);
    }

    #[test]
    fn trajectory_cadence_and_final_time() {
        let s0 = unit_state("smooth-bump", 32, PresetParams::default());
        let params = PhysicalParams::default();
        let settings = SolverSettings { dt: 1e-2, t_end: 0.105, ..Default::default() };
        let traj = integrate_from(s0.clone(), &params, &settings, 3, None).unwrap();
        let times = traj.times();
        assert_eq!(times[0], 0.0);
        assert_eq!(*times.last().unwrap(), 0.105);
        assert!(times.windows(2).all(|w| w[1] > w[0]));
        assert_eq!(traj.initial().unwrap(), &s0);
        // Steps 3, 6, 9 and the final partial step 11.
        assert_eq!(times.len(), 5);
    }
}
