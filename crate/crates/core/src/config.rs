//! Flat `key = value` run configuration and its validation.
//!
//! Keys are namespaced (`physical.*`, `grid.*`, `preset.*`, `solver.*`,
//! `output.*`, `rng.*`). A key `sweep.<key>` carries a comma-separated list of
//! values for parameter sweeps. Unknown keys are errors; `#` starts a comment.

use std::path::PathBuf;
use std::sync::Arc;

use serde::Serialize;

use crate::calculus::{ddy, integrate};
use crate::error::{Error, Result};
use crate::grid::{build_grid, DomainKind, Field, Grid};
use crate::params::PhysicalParams;
use crate::presets::{far_field_deviation, make_preset_initial_data, PresetParams, PRESET_NAMES};
use crate::solver::SolverSettings;
use crate::state::State;

/// Tolerance on `∫v0 = 1` for the unit interval.
pub const NORMALIZATION_TOL: f64 = 1e-8;
/// Compatibility residuals above this are reported as warnings.
pub const COMPATIBILITY_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub physical: PhysicalParams,
    pub domain: DomainKind,
    /// Half-length used when `grid.domain = line`.
    pub line_length: f64,
    pub n_cells: usize,
    pub preset_name: String,
    pub preset: PresetParams,
    pub solver: SolverSettings,
    pub output_dir: PathBuf,
    pub every_n_steps: usize,
    pub seed: u64,
    /// `(key, values)` pairs from `sweep.*` entries, in file order.
    pub sweep: Vec<(String, Vec<String>)>,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            physical: PhysicalParams::default(),
            domain: DomainKind::UnitInterval,
            line_length: 8.0,
            n_cells: 200,
            preset_name: "smooth-bump".into(),
            preset: PresetParams::default(),
            solver: SolverSettings::default(),
            output_dir: PathBuf::from("out"),
            every_n_steps: 10,
            seed: 0,
            sweep: Vec::new(),
        }
    }
}

/// Every settable key, in serialization order.
pub const KEYS: [&str; 30] = [
    "physical.a",
    "physical.q",
    "physical.mu",
    "physical.nu",
    "physical.D",
    "physical.K",
    "physical.A",
    "physical.alpha",
    "physical.theta_ignite",
    "physical.eps_reg",
    "physical.delta_shift",
    "grid.domain",
    "grid.L",
    "grid.n_cells",
    "preset.name",
    "preset.theta_c",
    "preset.z_c",
    "preset.z_amp",
    "preset.center",
    "preset.width",
    "preset.lip",
    "preset.theta_amp",
    "preset.v_amp",
    "solver.dt",
    "solver.t_end",
    "solver.cfl_safety",
    "solver.max_iters",
    "solver.linear_tol",
    "output.dir",
    "output.every_n_steps",
];

fn parse_f64(key: &str, value: &str) -> Result<f64> {
    value
        .parse::<f64>()
        .map_err(|_| Error::Config(format!("{key}: `{value}` is not a number")))
}

fn parse_usize(key: &str, value: &str) -> Result<usize> {
    value
        .parse::<usize>()
        .map_err(|_| Error::Config(format!("{key}: `{value}` is not a non-negative integer")))
}

impl Config {
    /// Parses `key = value` lines on top of the defaults.
    pub fn from_kv_text(text: &str) -> Result<Self> {
        let mut cfg = Config::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!("line {}: expected `key = value`", lineno + 1))
            })?;
            cfg.set(key.trim(), value.trim())?;
        }
        Ok(cfg)
    }

    pub fn from_file(path: &std::path::Path) -> Result<Self> {
        Self::from_kv_text(&std::fs::read_to_string(path)?)
    }

    /// Sets one key. Accepts `rng.seed` and `sweep.<key>` in addition to [`KEYS`].
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        if let Some(target) = key.strip_prefix("sweep.") {
            if !KEYS.contains(&target) && target != "rng.seed" {
                return Err(Error::UnknownKey(key.to_string()));
            }
            let values: Vec<String> = value
                .split(',')
                .map(|s| s.trim().to_string())
                .filter(|s| !s.is_empty())
                .collect();
            if values.is_empty() {
                return Err(Error::Config(format!("{key}: empty value list")));
            }
            // Check each value parses for the target key.
            for v in &values {
                Config::default().set(target, v)?;
            }
            self.sweep.retain(|(k, _)| k != target);
            self.sweep.push((target.to_string(), values));
            return Ok(());
        }
        let p = &mut self.physical;
        let pr = &mut self.preset;
        match key {
            "physical.a" => p.a = parse_f64(key, value)?,
            "physical.q" => p.q = parse_f64(key, value)?,
            "physical.mu" => p.mu = parse_f64(key, value)?,
            "physical.nu" => p.nu = parse_f64(key, value)?,
            "physical.D" => p.diffusivity = parse_f64(key, value)?,
            "physical.K" => p.k_rate = parse_f64(key, value)?,
            "physical.A" => p.activation = parse_f64(key, value)?,
            "physical.alpha" => p.alpha_exp = parse_f64(key, value)?,
            "physical.theta_ignite" => p.theta_ignite = parse_f64(key, value)?,
            "physical.eps_reg" => p.eps_reg = parse_f64(key, value)?,
            "physical.delta_shift" => p.delta_shift = parse_f64(key, value)?,
            "grid.domain" => {
                self.domain = match value {
                    "unit" => DomainKind::UnitInterval,
                    "line" => DomainKind::TruncatedLine(self.line_length),
                    other => {
                        return Err(Error::Config(format!(
                            "grid.domain: `{other}` is not `unit` or `line`"
                        )))
                    }
                }
            }
            "grid.L" => {
                self.line_length = parse_f64(key, value)?;
                if let DomainKind::TruncatedLine(_) = self.domain {
                    self.domain = DomainKind::TruncatedLine(self.line_length);
                }
            }
            "grid.n_cells" => self.n_cells = parse_usize(key, value)?,
            "preset.name" => self.preset_name = value.to_string(),
            "preset.theta_c" => pr.theta_c = parse_f64(key, value)?,
            "preset.z_c" => pr.z_c = parse_f64(key, value)?,
            "preset.z_amp" => pr.z_amp = parse_f64(key, value)?,
            "preset.center" => pr.center = parse_f64(key, value)?,
            "preset.width" => pr.width = parse_f64(key, value)?,
            "preset.lip" => pr.lip = parse_f64(key, value)?,
            "preset.theta_amp" => pr.theta_amp = parse_f64(key, value)?,
            "preset.v_amp" => pr.v_amp = parse_f64(key, value)?,
            "solver.dt" => self.solver.dt = parse_f64(key, value)?,
            "solver.t_end" => self.solver.t_end = parse_f64(key, value)?,
            "solver.cfl_safety" => self.solver.cfl_safety = parse_f64(key, value)?,
            "solver.max_iters" => self.solver.max_iters = parse_usize(key, value)?,
            "solver.linear_tol" => self.solver.linear_tol = parse_f64(key, value)?,
            "output.dir" => self.output_dir = PathBuf::from(value),
            "output.every_n_steps" => self.every_n_steps = parse_usize(key, value)?,
            "rng.seed" => {
                self.seed = value
                    .parse::<u64>()
                    .map_err(|_| Error::Config(format!("rng.seed: `{value}` is not a u64")))?
            }
            other => return Err(Error::UnknownKey(other.to_string())),
        }
        Ok(())
    }

    /// Value of one key, formatted so that [`Config::set`] reproduces it exactly.
    pub fn get(&self, key: &str) -> Option<String> {
        let p = &self.physical;
        let pr = &self.preset;
        let f = |x: f64| format!("{x:?}");
        Some(match key {
            "physical.a" => f(p.a),
            "physical.q" => f(p.q),
            "physical.mu" => f(p.mu),
            "physical.nu" => f(p.nu),
            "physical.D" => f(p.diffusivity),
            "physical.K" => f(p.k_rate),
            "physical.A" => f(p.activation),
            "physical.alpha" => f(p.alpha_exp),
            "physical.theta_ignite" => f(p.theta_ignite),
            "physical.eps_reg" => f(p.eps_reg),
            "physical.delta_shift" => f(p.delta_shift),
            "grid.domain" => match self.domain {
                DomainKind::UnitInterval => "unit".into(),
                DomainKind::TruncatedLine(_) => "line".into(),
            },
            "grid.L" => f(self.line_length),
            "grid.n_cells" => self.n_cells.to_string(),
            "preset.name" => self.preset_name.clone(),
            "preset.theta_c" => f(pr.theta_c),
            "preset.z_c" => f(pr.z_c),
            "preset.z_amp" => f(pr.z_amp),
            "preset.center" => f(pr.center),
            "preset.width" => f(pr.width),
            "preset.lip" => f(pr.lip),
            "preset.theta_amp" => f(pr.theta_amp),
            "preset.v_amp" => f(pr.v_amp),
            "solver.dt" => f(self.solver.dt),
            "solver.t_end" => f(self.solver.t_end),
            "solver.cfl_safety" => f(self.solver.cfl_safety),
            "solver.max_iters" => self.solver.max_iters.to_string(),
            "solver.linear_tol" => f(self.solver.linear_tol),
            "output.dir" => self.output_dir.display().to_string(),
            "output.every_n_steps" => self.every_n_steps.to_string(),
            "rng.seed" => self.seed.to_string(),
            _ => return None,
        })
    }

    /// All keys and values (excluding sweeps), in a fixed order.
    pub fn entries(&self) -> Vec<(String, String)> {
        KEYS.iter()
            .chain(std::iter::once(&"rng.seed"))
            .map(|k| (k.to_string(), self.get(k).expect("known key")))
            .collect()
    }

    /// Serializes to the `key = value` format read by [`Config::from_kv_text`].
    pub fn to_kv_text(&self) -> String {
        let mut out = String::new();
        for (k, v) in self.entries() {
            out.push_str(&format!("{k} = {v}\n"));
        }
        for (k, vs) in &self.sweep {
            out.push_str(&format!("sweep.{k} = {}\n", vs.join(", ")));
        }
        out
    }
}

/// Boundary residuals of the compatibility conditions, at `(left, right)`.
#[derive(Debug, Clone, Serialize)]
pub struct CompatibilityReport {
    pub u0: [f64; 2],
    pub theta0_y: [f64; 2],
    pub z0_y: [f64; 2],
    /// `aθ0/v0 − (μ u0_y / v0)_y` at the ends.
    pub stress: [f64; 2],
}

impl CompatibilityReport {
    pub fn evaluate(state: &State, params: &PhysicalParams) -> Self {
        let ends = |f: &Field| [f.first(), f.last()];
        let dtheta = ddy(&state.theta);
        let dz = ddy(&state.z);
        let du = ddy(&state.u);
        let visc = du.zip_map(&state.v, |d, v| params.mu * d / v);
        let dvisc = ddy(&visc);
        let stress = state
            .theta
            .zip_map(&state.v, |th, v| params.a * th / v)
            .zip_map(&dvisc, |p, d| p - d);
        Self { u0: ends(&state.u), theta0_y: ends(&dtheta), z0_y: ends(&dz), stress: ends(&stress) }
    }

    pub fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        for (name, vals) in [
            ("u0", self.u0),
            ("(theta0)_y", self.theta0_y),
            ("(Z0)_y", self.z0_y),
            ("a*theta0/v0 - (mu*(u0)_y/v0)_y", self.stress),
        ] {
            let r = vals[0].abs().max(vals[1].abs());
            if r > COMPATIBILITY_TOL {
                out.push(format!("compatibility residual {name} = {r:e} at the boundary"));
            }
        }
        out
    }
}

#[derive(Debug, Clone)]
pub struct ValidatedConfig {
    pub config: Config,
    pub grid: Arc<Grid>,
    pub initial: State,
    pub compatibility: CompatibilityReport,
    pub warnings: Vec<String>,
}

impl ValidatedConfig {
    pub fn params(&self) -> &PhysicalParams {
        &self.config.physical
    }
}

/// Checks parameters, builds the grid and the initial state, and evaluates
/// bounds, normalization and compatibility.
pub fn validate_config(config: &Config) -> Result<ValidatedConfig> {
    let config = config.clone();
    config.physical.validate()?;
    config.solver.validate()?;
    if config.every_n_steps < 1 {
        return Err(Error::Config("output.every_n_steps must be at least 1".into()));
    }
    if !PRESET_NAMES.contains(&config.preset_name.as_str()) {
        return Err(Error::UnknownPreset(config.preset_name.clone()));
    }
    let grid = build_grid(config.domain, config.n_cells)?;
    let initial = make_preset_initial_data(&config.preset_name, &config.preset, &grid)?;

    if initial.v.min() <= 0.0 {
        return Err(Error::BoundViolation(format!("inf v0 = {} <= 0", initial.v.min())));
    }
    if initial.theta.min() <= 0.0 {
        return Err(Error::BoundViolation(format!("inf theta0 = {} <= 0", initial.theta.min())));
    }
    if initial.z.min() < 0.0 || initial.z.max() > 1.0 {
        return Err(Error::BoundViolation(format!(
            "Z0 ranges over [{}, {}], outside [0, 1]",
            initial.z.min(),
            initial.z.max()
        )));
    }
    if grid.domain().is_unit() {
        let mass = integrate(&initial.v);
        if (mass - 1.0).abs() > NORMALIZATION_TOL {
            return Err(Error::NormalizationError(mass));
        }
    }

    let compatibility = CompatibilityReport::evaluate(&initial, &config.physical);
    let mut warnings = compatibility.warnings();
    if !grid.domain().is_unit() {
        let dev = far_field_deviation(&initial);
        if dev > COMPATIBILITY_TOL {
            warnings.push(format!("initial data deviate from the far-field state by {dev:e} at ±L"));
        }
    }
    if !config.sweep.is_empty() {
        warnings.push("sweep.* entries are ignored outside the sweep command".into());
    }
    Ok(ValidatedConfig { config, grid, initial, compatibility, warnings })
}
