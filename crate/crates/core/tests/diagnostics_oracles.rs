use combustion1d_core::config::{validate_config, Config};
use combustion1d_core::diagnostics::{
    entropy_identity_residual, gronwall_monitor, kazhikhov_residual, reactant_balance_residual, replay,
    transcendental_roots,
};
use combustion1d_core::presets::{make_preset_initial_data, PresetParams};
use combustion1d_core::solver::{integrate_from, run_simulation, SolverSettings, Trajectory};
use combustion1d_core::{build_grid, DomainKind, PhysicalParams};

fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(lo) * f(mid) <= 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

fn run(kv: &[(&str, &str)]) -> (Trajectory, PhysicalParams) {
    let mut c = Config::default();
    for (k, v) in kv {
        c.set(k, v).unwrap();
    }
    let vc = validate_config(&c).unwrap();
    (run_simulation(&vc, None).unwrap(), vc.config.physical)
}

#[test]
fn roots_match_independent_bisection() {
    for e1 in [0.1, 0.5, 1.0, 3.0, 10.0] {
        let f = |y: f64| y - 1.0 - y.ln() - e1;
        let lo = bisect(f, 1e-300, 1.0);
        let hi = bisect(f, 1.0, 1e3);
        let (a, b) = transcendental_roots(e1).unwrap();
        assert!((a - lo).abs() < 1e-10 && (b - hi).abs() < 1e-10, "e1={e1}: ({a}, {b}) vs ({lo}, {hi})");
    }
    let (a, b) = transcendental_roots(1.0).unwrap();
    assert!((a - 0.15859).abs() < 1e-4 && (b - 3.14619).abs() < 1e-4);
    assert_eq!(transcendental_roots(0.0).unwrap(), (1.0, 1.0));
}

/// With `q = 0` and `θ` far above ignition, `Z` solves `Z' = −Kφ(θ)Z` uniformly.
#[test]
fn uniform_reaction_follows_the_scalar_ode() {
    let grid = build_grid(DomainKind::UnitInterval, 20).unwrap();
    let preset = PresetParams { theta_c: 2.0, z_c: 1.0, ..PresetParams::default() };
    let s0 = make_preset_initial_data("uniform-reaction", &preset, &grid).unwrap();
    let p = PhysicalParams { q: 0.0, theta_ignite: 1.0, alpha_exp: 1.0, activation: 1.0, k_rate: 1.0, ..Default::default() };
    let errors: Vec<f64> = [1e-3, 5e-4]
        .iter()
        .map(|&dt| {
            let settings = SolverSettings { dt, t_end: 1.0, ..SolverSettings::default() };
            let last = integrate_from(s0.clone(), &p, &settings, 100, None).unwrap().terminal().unwrap().clone();
            let exact = (-2.0 * (-0.5f64).exp() * last.t).exp();
            last.z.values().iter().map(|z| (z - exact).abs()).fold(0.0, f64::max)
        })
        .collect();
    assert!(errors[1] < 1e-3, "{errors:?}");
    let ratio = errors[0] / errors[1];
    assert!((1.8..=2.2).contains(&ratio), "{errors:?}");
}

#[test]
fn kazhikhov_is_exact_at_the_initial_time() {
    for preset in ["lipschitz-v", "harmonic", "smooth-bump"] {
        let (traj, p) = run(&[("preset.name", preset), ("solver.t_end", "0.01"), ("grid.n_cells", "100")]);
        let records = replay(&traj, &p).unwrap();
        assert!(records[0].kazhikhov_residual.abs() <= 1e-12, "{preset}: {:e}", records[0].kazhikhov_residual);
        assert!(kazhikhov_residual(&traj, &p).unwrap() < 1e-3);
    }
}

#[test]
fn kazhikhov_is_refused_on_the_line() {
    let (traj, p) = run(&[("grid.domain", "line"), ("grid.n_cells", "64"), ("solver.t_end", "0.01")]);
    assert!(kazhikhov_residual(&traj, &p).is_err());
}

#[test]
fn replay_matches_inline_records() {
    let (traj, p) = run(&[("preset.name", "harmonic"), ("solver.t_end", "0.2"), ("grid.n_cells", "60")]);
    let replayed = replay(&traj, &p).unwrap();
    for (a, b) in traj.records().zip(&replayed) {
        assert_eq!(a.to_row(), b.to_row());
    }
}

#[test]
fn stationary_residuals_vanish() {
    let (traj, p) = run(&[("preset.name", "stationary"), ("solver.t_end", "0.2"), ("grid.n_cells", "50")]);
    assert_eq!(reactant_balance_residual(&traj, &p).unwrap(), 0.0);
    assert!(entropy_identity_residual(&traj, &p).unwrap().residual < 1e-14);
    let g = gronwall_monitor(&traj, &p, 1e-4).unwrap();
    assert!(g.fisher.iter().all(|&f| f == 0.0));
    assert!(g.max_growth.abs() < 1e-14);
}

#[test]
fn reactant_balance_halves_with_dt() {
    let residual = |dt: &str| {
        let (traj, p) = run(&[("preset.name", "smooth-bump"), ("solver.dt", dt), ("solver.t_end", "0.5")]);
        reactant_balance_residual(&traj, &p).unwrap()
    };
    let (a, b) = (residual("2e-3"), residual("1e-3"));
    assert!((1.7..=2.3).contains(&(a / b)), "{a:e} {b:e}");
}

#[test]
fn gronwall_growth_is_bounded_on_smooth_bump() {
    let (traj, p) = run(&[("preset.name", "smooth-bump"), ("grid.n_cells", "100"), ("solver.t_end", "0.5")]);
    let g = gronwall_monitor(&traj, &p, 1e-4).unwrap();
    assert!(g.max_fisher.is_finite() && g.max_fisher > 0.0);
    assert!(g.max_growth.is_finite());
    assert!(g.dissipation.iter().all(|&d| d >= 0.0));
    assert!(gronwall_monitor(&traj, &p, 0.0).is_err());
}
