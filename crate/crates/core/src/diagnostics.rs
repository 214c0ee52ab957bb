//! Functionals, identities and residuals evaluated on states and trajectories.
//!
//! [`TrajectoryMonitor`] is the single implementation of the running time
//! integrals. The solver feeds it at output cadence, and the trajectory-level
//! functions below replay it over stored snapshots, so both routes agree.

use std::f64::consts::PI;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::calculus::{cumulative_trapezoid, d2dy2_slice, ddy, integrate, trapezoid, BoundaryRule};
use crate::error::{Error, Result};
use crate::grid::{Field, Grid};
use crate::params::PhysicalParams;
use crate::reaction::RateSpec;
use crate::solver::Trajectory;
use crate::state::{State, Z_SLACK};

/// Clamp applied to denominators built from `Z`.
pub const QUOTIENT_FLOOR: f64 = 1e-30;
/// Default floors used by [`bounds_report`].
pub const V_FLOOR: f64 = 1e-3;
pub const THETA_FLOOR: f64 = 1e-3;
/// Relative slack on `[α0, β0]` when choosing the Kazhikhov reference node.
pub const ADMISSIBLE_SLACK: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundsReport {
    pub min_v: f64,
    pub max_v: f64,
    pub min_theta: f64,
    pub max_theta: f64,
    pub min_z: f64,
    pub max_z: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsRecord {
    pub t: f64,
    pub mass: f64,
    pub reactant: f64,
    pub total_energy: f64,
    /// Signed running residual of the entropy identity.
    pub entropy_identity_residual: f64,
    /// Signed running residual of the reactant balance.
    pub reactant_balance_residual: f64,
    pub fisher: f64,
    pub dissipation: f64,
    pub entropy_z: f64,
    pub lipschitz_v: f64,
    pub bounds: BoundsReport,
    /// Zero on the truncated line, where the representation is not evaluated.
    pub kazhikhov_residual: f64,
    /// Zero on the unit interval.
    pub boundary_leakage: f64,
}

/// Column order of the diagnostics CSV.
pub const DIAGNOSTICS_COLUMNS: [&str; 18] = [
    "t",
    "mass",
    "reactant",
    "total_energy",
    "entropy_identity_residual",
    "reactant_balance_residual",
    "fisher",
    "dissipation",
    "entropy_Z",
    "lipschitz_v",
    "min_v",
    "max_v",
    "min_theta",
    "max_theta",
    "min_Z",
    "max_Z",
    "kazhikhov_residual",
    "boundary_leakage",
];

impl DiagnosticsRecord {
    pub fn to_row(&self) -> [f64; 18] {
        let b = &self.bounds;
        [
            self.t,
            self.mass,
            self.reactant,
            self.total_energy,
            self.entropy_identity_residual,
            self.reactant_balance_residual,
            self.fisher,
            self.dissipation,
            self.entropy_z,
            self.lipschitz_v,
            b.min_v,
            b.max_v,
            b.min_theta,
            b.max_theta,
            b.min_z,
            b.max_z,
            self.kazhikhov_residual,
            self.boundary_leakage,
        ]
    }

    pub fn from_row(r: &[f64; 18]) -> Self {
        let mut bounds = BoundsReport {
            min_v: r[10],
            max_v: r[11],
            min_theta: r[12],
            max_theta: r[13],
            min_z: r[14],
            max_z: r[15],
            pass: false,
        };
        bounds.pass = bounds_pass(&bounds, V_FLOOR, THETA_FLOOR);
        Self {
            t: r[0],
            mass: r[1],
            reactant: r[2],
            total_energy: r[3],
            entropy_identity_residual: r[4],
            reactant_balance_residual: r[5],
            fisher: r[6],
            dissipation: r[7],
            entropy_z: r[8],
            lipschitz_v: r[9],
            bounds,
            kazhikhov_residual: r[16],
            boundary_leakage: r[17],
        }
    }

    pub fn is_finite(&self) -> bool {
        self.to_row().iter().all(|x| x.is_finite())
    }
}

fn field_like(f: &Field, values: Vec<f64>) -> Field {
    Field::new_unchecked(Arc::clone(f.grid()), values)
}

pub fn mass_integral(state: &State) -> f64 {
    integrate(&state.v)
}

pub fn reactant_integral(state: &State) -> f64 {
    integrate(&state.z)
}

/// `∫(θ + u²/2 + qZ)`.
pub fn total_energy(state: &State, params: &PhysicalParams) -> f64 {
    let vals = (0..state.v.len())
        .map(|i| state.theta[i] + 0.5 * state.u[i] * state.u[i] + params.q * state.z[i])
        .collect();
    integrate(&field_like(&state.v, vals))
}

/// `∫[a(v − 1 − log v) + u²/2 + (θ − 1 − log θ)]`.
pub fn entropy_functional(state: &State, params: &PhysicalParams) -> f64 {
    let vals = (0..state.v.len())
        .map(|i| {
            let (v, u, th) = (state.v[i], state.u[i], state.theta[i]);
            params.a * (v - 1.0 - v.ln()) + 0.5 * u * u + (th - 1.0 - th.ln())
        })
        .collect();
    integrate(&field_like(&state.v, vals))
}

/// `∫[μu_y²/(vθ) + νθ_y²/(vθ²) − q(θ−1)/θ · KΦ_ε(θ)Z]`.
pub fn entropy_production(state: &State, params: &PhysicalParams, rate: &RateSpec) -> f64 {
    let uy = ddy(&state.u);
    let ty = ddy(&state.theta);
    let vals = (0..state.v.len())
        .map(|i| {
            let (v, th, z) = (state.v[i], state.theta[i], state.z[i]);
            params.mu * uy[i] * uy[i] / (v * th) + params.nu * ty[i] * ty[i] / (v * th * th)
                - params.q * (th - 1.0) / th * params.k_rate * rate.phi_eps(th) * z
        })
        .collect();
    integrate(&field_like(&state.v, vals))
}

/// `∫KΦ_ε(θ)Z`.
pub fn reaction_sink(state: &State, params: &PhysicalParams, rate: &RateSpec) -> f64 {
    let vals = (0..state.v.len())
        .map(|i| params.k_rate * rate.phi_eps(state.theta[i]) * state.z[i])
        .collect();
    integrate(&field_like(&state.v, vals))
}

/// `∫Z_y²/(Z + δ)` of a profile.
pub fn fisher_of(z: &Field, delta: f64) -> f64 {
    let zy = ddy(z);
    let vals = (0..z.len())
        .map(|i| zy[i] * zy[i] / (z[i] + delta).max(QUOTIENT_FLOOR))
        .collect();
    integrate(&field_like(z, vals))
}

pub fn fisher_functional(state: &State, delta: f64) -> f64 {
    fisher_of(&state.z, delta)
}

/// `∫(D/v²)·X·[(log X)_yy]²` with `X = Z + δ`.
///
/// The second derivative uses one-sided end stencils so that profiles which
/// are not Neumann-compatible are not penalized at the boundary.
pub fn dissipation_functional(state: &State, params: &PhysicalParams, delta: f64) -> f64 {
    let x: Vec<f64> = state.z.values().iter().map(|&z| (z + delta).max(QUOTIENT_FLOOR)).collect();
    let log_x: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let lxx = d2dy2_slice(&log_x, state.grid().h(), BoundaryRule::OneSided);
    let vals = (0..x.len())
        .map(|i| {
            let v = state.v[i];
            params.diffusivity / (v * v) * x[i] * lxx[i] * lxx[i]
        })
        .collect();
    integrate(&field_like(&state.v, vals))
}

fn xlogx(z: f64) -> f64 {
    if z > 0.0 {
        z * z.ln()
    } else {
        0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EntropyReport {
    /// Entropy with respect to Lebesgue measure on `[0, 1]`, or the normalized
    /// Lebesgue measure `dy/(2L)` on the truncated line.
    pub lebesgue: f64,
    /// Entropy with respect to the standard Gaussian, truncated line only.
    pub gaussian: Option<f64>,
}

/// Standard Gaussian density renormalized to unit trapezoid mass on the grid.
pub fn gaussian_weights(grid: &Grid) -> Vec<f64> {
    let raw: Vec<f64> = grid.nodes().iter().map(|&y| (-0.5 * y * y).exp() / (2.0 * PI).sqrt()).collect();
    let mass = trapezoid(&raw, grid.h());
    raw.into_iter().map(|w| w / mass).collect()
}

fn weighted_entropy(z: &[f64], density: &[f64], h: f64) -> f64 {
    if z.iter().all(|&x| x == z[0]) {
        return 0.0;
    }
    let zd: Vec<f64> = z.iter().zip(density).map(|(z, d)| z * d).collect();
    let zlz: Vec<f64> = z.iter().zip(density).map(|(&z, d)| xlogx(z) * d).collect();
    trapezoid(&zlz, h) - xlogx(trapezoid(&zd, h))
}

pub fn entropy_of(z: &Field) -> EntropyReport {
    let grid = z.grid();
    let uniform = vec![1.0 / grid.length(); z.len()];
    let lebesgue = weighted_entropy(z.values(), &uniform, grid.h());
    let gaussian = if grid.domain().is_unit() {
        None
    } else {
        Some(weighted_entropy(z.values(), &gaussian_weights(grid), grid.h()))
    };
    EntropyReport { lebesgue, gaussian }
}

/// Entropy of `Z` with the `0 log 0 = 0` convention.
pub fn entropy_z(state: &State) -> EntropyReport {
    entropy_of(&state.z)
}

/// `∫Z_y²/Z dγ` for the normalized Gaussian weights, with the usual floor.
pub fn gaussian_fisher(z: &Field) -> f64 {
    let w = gaussian_weights(z.grid());
    let zy = ddy(z);
    let vals: Vec<f64> =
        (0..z.len()).map(|i| zy[i] * zy[i] / z[i].max(QUOTIENT_FLOOR) * w[i]).collect();
    trapezoid(&vals, z.grid().h())
}

pub fn lipschitz_norm_v(state: &State) -> f64 {
    ddy(&state.v).max_abs()
}

/// Roots `α0 ≤ 1 ≤ β0` of `y − 1 − log y = e1`.
pub fn transcendental_roots(e1: f64) -> Result<(f64, f64)> {
    if !(e1 >= 0.0 && e1.is_finite()) {
        return Err(Error::InvalidParameter(format!("E1 = {e1} must be non-negative")));
    }
    if e1 == 0.0 {
        return Ok((1.0, 1.0));
    }
    let f = |y: f64| y - 1.0 - y.ln() - e1;
    // f > 0 at e^{-1-e1} since y - 1 - log y >= -1 - log y there.
    let alpha = bisect(&f, (-1.0 - e1).exp(), 1.0);
    let mut hi = 2.0 + e1;
    while f(hi) <= 0.0 {
        hi *= 2.0;
    }
    let beta = bisect(&f, 1.0, hi);
    Ok((alpha, beta))
}

fn bisect(f: &impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let f_lo = f(lo);
    while hi - lo > 1e-13 * hi.max(1.0) {
        let mid = 0.5 * (lo + hi);
        if (f(mid) > 0.0) == (f_lo > 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn bounds_pass(b: &BoundsReport, v_floor: f64, theta_floor: f64) -> bool {
    b.min_v >= v_floor
        && b.min_theta >= theta_floor
        && b.min_z >= -Z_SLACK
        && b.max_z <= 1.0 + Z_SLACK
        && [b.min_v, b.max_v, b.min_theta, b.max_theta, b.min_z, b.max_z].iter().all(|x| x.is_finite())
}

pub fn bounds_report_with(state: &State, v_floor: f64, theta_floor: f64) -> BoundsReport {
    let mut b = BoundsReport {
        min_v: state.v.min(),
        max_v: state.v.max(),
        min_theta: state.theta.min(),
        max_theta: state.theta.max(),
        min_z: state.z.min(),
        max_z: state.z.max(),
        pass: false,
    };
    b.pass = bounds_pass(&b, v_floor, theta_floor);
    b
}

/// Extremes of `v, θ, Z` checked against `v, θ >= 1e-3` and `Z ∈ [0, 1]` up to slack.
pub fn bounds_report(state: &State) -> BoundsReport {
    bounds_report_with(state, V_FLOOR, THETA_FLOOR)
}

/// Largest end-node deviation from `(1, 0, 1, 0)`; zero on the unit interval.
pub fn boundary_leakage(state: &State) -> f64 {
    if state.grid().domain().is_unit() {
        0.0
    } else {
        crate::presets::far_field_deviation(state)
    }
}

/// `∫_t0^t1 g` for `g` positive and log-linear between the samples.
fn loglinear_step(g0: f64, g1: f64, dt: f64) -> f64 {
    let r = g1 / g0;
    let x = r - 1.0;
    if x.abs() < 1e-4 {
        dt * g0 * (1.0 + x / 2.0 - x * x / 12.0)
    } else {
        dt * (g1 - g0) / r.ln()
    }
}

struct InitialData {
    e0: f64,
    reactant0: f64,
    v0: Vec<f64>,
    u0: Vec<f64>,
    alpha0: f64,
    beta0: f64,
}

struct Previous {
    t: f64,
    production: f64,
    sink: f64,
    theta_over_v: Vec<f64>,
    kernel: Vec<f64>,
}

/// Running evaluation of all diagnostics over a sequence of states.
pub struct TrajectoryMonitor {
    params: PhysicalParams,
    rate: Option<RateSpec>,
    unit: bool,
    init: Option<InitialData>,
    prev: Option<Previous>,
    production_integral: f64,
    sink_integral: f64,
    /// `∫θ/v dτ` per node.
    time_theta_over_v: Vec<f64>,
    /// `∫θAB dτ` per node.
    time_kernel: Vec<f64>,
}

impl TrajectoryMonitor {
    pub fn new(params: PhysicalParams, grid: &Arc<Grid>) -> Self {
        let n = grid.n_nodes();
        Self {
            params,
            rate: params.rate_spec().ok(),
            unit: grid.domain().is_unit(),
            init: None,
            prev: None,
            production_integral: 0.0,
            sink_integral: 0.0,
            time_theta_over_v: vec![0.0; n],
            time_kernel: vec![0.0; n],
        }
    }

    /// `ℰ0` of the first state pushed.
    pub fn initial_entropy(&self) -> Option<f64> {
        self.init.as_ref().map(|i| i.e0)
    }

    /// `(α0, β0)` of the first state pushed.
    pub fn roots(&self) -> Option<(f64, f64)> {
        self.init.as_ref().map(|i| (i.alpha0, i.beta0))
    }

    pub fn push(&mut self, state: &State) -> Result<DiagnosticsRecord> {
        let p = self.params;
        let rate = self.rate.ok_or_else(|| Error::InvalidParameter("invalid rate parameters".into()))?;
        let production = entropy_production(state, &p, &rate);
        let sink = reaction_sink(state, &p, &rate);
        let entropy = entropy_functional(state, &p);
        let reactant = reactant_integral(state);
        let theta_over_v: Vec<f64> =
            state.theta.values().iter().zip(state.v.values()).map(|(th, v)| th / v).collect();

        if self.init.is_none() {
            let e1 = (entropy + p.q * reactant) / p.a.min(1.0);
            let (alpha0, beta0) = transcendental_roots(e1.max(0.0))?;
            self.init = Some(InitialData {
                e0: entropy,
                reactant0: reactant,
                v0: state.v.values().to_vec(),
                u0: state.u.values().to_vec(),
                alpha0,
                beta0,
            });
        }
        let dt = match &self.prev {
            Some(prev) => {
                let dt = state.t - prev.t;
                if !(dt > 0.0) {
                    return Err(Error::Format {
                        file: "trajectory".into(),
                        msg: format!("times must increase, got {} after {}", state.t, prev.t),
                    });
                }
                self.production_integral += 0.5 * dt * (prev.production + production);
                self.sink_integral += 0.5 * dt * (prev.sink + sink);
                for (acc, (a, b)) in
                    self.time_theta_over_v.iter_mut().zip(prev.theta_over_v.iter().zip(&theta_over_v))
                {
                    *acc += 0.5 * dt * (a + b);
                }
                Some(dt)
            }
            None => None,
        };
        let (e0, reactant0) = self.init.as_ref().map(|i| (i.e0, i.reactant0)).expect("initialized above");

        let (kazhikhov_residual, kernel) = if self.unit {
            self.kazhikhov(state, dt)?
        } else {
            (0.0, Vec::new())
        };

        let record = DiagnosticsRecord {
            t: state.t,
            mass: mass_integral(state),
            reactant,
            total_energy: total_energy(state, &p),
            entropy_identity_residual: entropy + self.production_integral - e0,
            reactant_balance_residual: reactant + self.sink_integral - reactant0,
            fisher: fisher_functional(state, p.delta_shift),
            dissipation: dissipation_functional(state, &p, p.delta_shift),
            entropy_z: entropy_z(state).lebesgue,
            lipschitz_v: lipschitz_norm_v(state),
            bounds: bounds_report(state),
            kazhikhov_residual,
            boundary_leakage: boundary_leakage(state),
        };
        self.prev = Some(Previous { t: state.t, production, sink, theta_over_v, kernel });
        Ok(record)
    }

    fn kazhikhov(&mut self, state: &State, dt: Option<f64>) -> Result<(f64, Vec<f64>)> {
        let init = self.init.as_ref().expect("initialized");
        let p = &self.params;
        let (lo, hi) = (init.alpha0 * (1.0 - ADMISSIBLE_SLACK), init.beta0 * (1.0 + ADMISSIBLE_SLACK));
        let v = state.v.values();
        let theta = state.theta.values();
        let star = (0..v.len())
            .find(|&i| (lo..=hi).contains(&v[i]) && (lo..=hi).contains(&theta[i]))
            .ok_or(Error::NoAdmissiblePoint { t: state.t, alpha0: init.alpha0, beta0: init.beta0 })?;
        let a_t = init.v0[star] * (p.a / p.mu * self.time_theta_over_v[star]).exp();
        let drift: Vec<f64> = init.u0.iter().zip(state.u.values()).map(|(u0, u)| u0 - u).collect();
        let cum = cumulative_trapezoid(&drift, state.grid().h());
        let b: Vec<f64> = (0..v.len())
            .map(|i| ((cum[i] - cum[star]) / p.mu).exp() / (init.v0[i] * v[star]))
            .collect();
        let kernel: Vec<f64> = (0..v.len()).map(|i| theta[i] * a_t * b[i]).collect();
        if let (Some(dt), Some(prev)) = (dt, &self.prev) {
            for (i, acc) in self.time_kernel.iter_mut().enumerate() {
                *acc += loglinear_step(prev.kernel[i], kernel[i], dt);
            }
        }
        let residual = (0..v.len())
            .map(|i| (a_t * v[i] * b[i] - 1.0 - p.a / p.mu * self.time_kernel[i]).abs())
            .fold(0.0f64, f64::max);
        Ok((residual, kernel))
    }
}

/// Replays the monitor over a stored trajectory.
pub fn replay(traj: &Trajectory, params: &PhysicalParams) -> Result<Vec<DiagnosticsRecord>> {
    let grid = traj.grid().ok_or(Error::TooFewSnapshots { needed: 1, have: 0 })?;
    let mut monitor = TrajectoryMonitor::new(*params, grid);
    traj.states().map(|s| monitor.push(s)).collect()
}

fn require(traj: &Trajectory, needed: usize) -> Result<()> {
    if traj.len() < needed {
        Err(Error::TooFewSnapshots { needed, have: traj.len() })
    } else {
        Ok(())
    }
}

fn max_abs(records: &[DiagnosticsRecord], f: impl Fn(&DiagnosticsRecord) -> f64) -> f64 {
    records.iter().map(|r| f(r).abs()).fold(0.0, f64::max)
}

/// `max_t |∫Z(t) + ∫∫KΦ_ε(θ)Z − ∫Z0|`, time integral by trapezoid over snapshots.
pub fn reactant_balance_residual(traj: &Trajectory, params: &PhysicalParams) -> Result<f64> {
    require(traj, 2)?;
    Ok(max_abs(&replay(traj, params)?, |r| r.reactant_balance_residual))
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct EntropyIdentityReport {
    /// Largest absolute residual over the snapshots.
    pub residual: f64,
    /// Signed residual at the final snapshot.
    pub terminal_residual: f64,
    pub e0: f64,
}

pub fn entropy_identity_residual(traj: &Trajectory, params: &PhysicalParams) -> Result<EntropyIdentityReport> {
    require(traj, 2)?;
    let records = replay(traj, params)?;
    let e0 = entropy_functional(traj.initial().expect("non-empty"), params);
    Ok(EntropyIdentityReport {
        residual: max_abs(&records, |r| r.entropy_identity_residual),
        terminal_residual: records.last().expect("non-empty").entropy_identity_residual,
        e0,
    })
}

/// `max_{t,y} |A v B − 1 − (a/μ)∫θAB dτ|` on the unit interval.
pub fn kazhikhov_residual(traj: &Trajectory, params: &PhysicalParams) -> Result<f64> {
    require(traj, 1)?;
    let grid = traj.grid().expect("non-empty");
    if !grid.domain().is_unit() {
        return Err(Error::InvalidParameter(
            "the volume representation is evaluated on the unit interval only".into(),
        ));
    }
    Ok(max_abs(&replay(traj, params)?, |r| r.kazhikhov_residual))
}

#[derive(Debug, Clone, Serialize)]
pub struct GronwallReport {
    pub delta: f64,
    pub times: Vec<f64>,
    pub fisher: Vec<f64>,
    pub dissipation: Vec<f64>,
    pub fisher_rate: Vec<f64>,
    /// `(dF/dt + G)/(1 + F)`.
    pub growth: Vec<f64>,
    pub max_growth: f64,
    pub max_fisher: f64,
}

/// Finite-difference derivative on a possibly nonuniform time mesh.
fn time_derivative(t: &[f64], f: &[f64]) -> Vec<f64> {
    let n = t.len();
    (0..n)
        .map(|i| {
            if i == 0 {
                (f[1] - f[0]) / (t[1] - t[0])
            } else if i == n - 1 {
                (f[n - 1] - f[n - 2]) / (t[n - 1] - t[n - 2])
            } else {
                let (h0, h1) = (t[i] - t[i - 1], t[i + 1] - t[i]);
                (h0 * h0 * f[i + 1] - h1 * h1 * f[i - 1] + (h1 * h1 - h0 * h0) * f[i])
                    / (h0 * h1 * (h0 + h1))
            }
        })
        .collect()
}

pub fn gronwall_monitor(traj: &Trajectory, params: &PhysicalParams, delta: f64) -> Result<GronwallReport> {
    require(traj, 3)?;
    if !(delta > 0.0) {
        return Err(Error::InvalidParameter(format!("delta = {delta} must be positive")));
    }
    let times = traj.times();
    let fisher: Vec<f64> = traj.states().map(|s| fisher_functional(s, delta)).collect();
    let dissipation: Vec<f64> = traj.states().map(|s| dissipation_functional(s, params, delta)).collect();
    let fisher_rate = time_derivative(&times, &fisher);
    let growth: Vec<f64> = (0..times.len())
        .map(|i| (fisher_rate[i] + dissipation[i]) / (1.0 + fisher[i]))
        .collect();
    Ok(GronwallReport {
        delta,
        max_growth: growth.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        max_fisher: fisher.iter().copied().fold(0.0, f64::max),
        times,
        fisher,
        dissipation,
        fisher_rate,
        growth,
    })
}

/// Two positive values agree within a factor of two; values near zero must be close.
pub fn within_factor_two(a: f64, b: f64) -> bool {
    if a > 0.0 && b > 0.0 {
        let r = a / b;
        (0.5..=2.0).contains(&r)
    } else {
        (a - b).abs() <= 1e-12 + 0.5 * a.abs().max(b.abs())
    }
}

/// `max S` of the coarse and fine runs agree within a factor of two.
pub fn gronwall_refinement_verdict(coarse: &GronwallReport, fine: &GronwallReport) -> bool {
    within_factor_two(coarse.max_growth, fine.max_growth)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AsymptoticStates {
    pub theta_inf: f64,
    pub z_inf: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AsymptoticSettings {
    pub energy_tol: f64,
    pub reaction_tol: f64,
}

impl Default for AsymptoticSettings {
    fn default() -> Self {
        Self { energy_tol: 1e-3, reaction_tol: 1e-3 }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct AsymptoticReport {
    pub states: AsymptoticStates,
    /// `∫(θ0 + qZ0 + u0²/2)`.
    pub energy_integral: f64,
    /// `|θ̄ + qZ̄ − energy_integral|`.
    pub energy_gap: f64,
    /// `φ(θ̄)·Z̄`.
    pub reaction_product: f64,
    /// `max|θ − θ̄|` at the start and end of the last tenth of the run.
    pub deviation_start: f64,
    pub deviation_end: f64,
    pub deviation_decreasing: bool,
    pub pass: bool,
}

pub fn asymptotic_state_check(
    traj: &Trajectory,
    params: &PhysicalParams,
    settings: &AsymptoticSettings,
) -> Result<AsymptoticReport> {
    require(traj, 2)?;
    let rate = params.rate_spec()?;
    let first = traj.initial().expect("non-empty");
    let last = traj.terminal().expect("non-empty");
    let len = last.grid().length();
    let theta_inf = integrate(&last.theta) / len;
    let z_inf = integrate(&last.z) / len;
    let energy_integral = total_energy(first, params) / len;
    let energy_gap = (theta_inf + params.q * z_inf - energy_integral).abs();
    let reaction_product = rate.phi(theta_inf) * z_inf;

    let t_split = last.t - 0.1 * (last.t - first.t);
    let start = traj.states().find(|s| s.t >= t_split).unwrap_or(last);
    let dev = |s: &State| s.theta.values().iter().map(|th| (th - theta_inf).abs()).fold(0.0, f64::max);
    let deviation_start = dev(start);
    let deviation_end = dev(last);
    Ok(AsymptoticReport {
        states: AsymptoticStates { theta_inf, z_inf },
        energy_integral,
        energy_gap,
        reaction_product,
        deviation_start,
        deviation_end,
        deviation_decreasing: deviation_end <= deviation_start,
        pass: energy_gap <= settings.energy_tol && reaction_product <= settings.reaction_tol,
    })
}
