//! Named initial data.
//!
//! On the truncated line every preset except `stationary`, `uniform-reaction`
//! and `harmonic` relaxes to the far-field state `(v, u, θ, Z) = (1, 0, 1, 0)`
//! away from the support of its bumps.

use std::f64::consts::PI;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{DomainKind, Field, Grid};
use crate::state::State;

pub const PRESET_NAMES: [&str; 5] =
    ["stationary", "uniform-reaction", "smooth-bump", "lipschitz-v", "harmonic"];

/// Shape parameters shared by the presets; each preset reads the ones it needs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PresetParams {
    /// Background temperature on the unit interval.
    pub theta_c: f64,
    /// Uniform reactant fraction for `uniform-reaction`.
    pub z_c: f64,
    /// Peak reactant fraction of the bumps and of `harmonic`.
    pub z_amp: f64,
    pub center: f64,
    pub width: f64,
    /// Lipschitz constant of the specific-volume tent in `lipschitz-v`.
    pub lip: f64,
    /// Temperature bump height on the truncated line.
    pub theta_amp: f64,
    /// Amplitude of the sine perturbation of `v` in `harmonic`.
    pub v_amp: f64,
}

impl Default for PresetParams {
    fn default() -> Self {
        Self {
            theta_c: 1.5,
            z_c: 1.0,
            z_amp: 0.9,
            center: 0.5,
            width: 0.25,
            lip: 1.0,
            theta_amp: 0.5,
            v_amp: 0.3,
        }
    }
}

/// `[(1 + cos πs)/2]²` on `|s| < 1`, zero outside. C³ with flat contact at `|s| = 1`.
pub fn cosine_bump(s: f64) -> f64 {
    if s.abs() >= 1.0 {
        0.0
    } else {
        let b = 0.5 * (1.0 + (PI * s).cos());
        b * b
    }
}

pub fn make_preset_initial_data(name: &str, p: &PresetParams, grid: &Arc<Grid>) -> Result<State> {
    let unit = grid.domain().is_unit();
    let g = || Arc::clone(grid);
    let bump = |y: f64| cosine_bump((y - p.center) / p.width);
    let (v, u, theta, z) = match name {
        "stationary" => (
            Field::constant(g(), 1.0)?,
            Field::constant(g(), 0.0)?,
            Field::constant(g(), p.theta_c)?,
            Field::constant(g(), 0.0)?,
        ),
        "uniform-reaction" => (
            Field::constant(g(), 1.0)?,
            Field::constant(g(), 0.0)?,
            Field::constant(g(), p.theta_c)?,
            Field::constant(g(), p.z_c)?,
        ),
        "smooth-bump" => {
            let theta = if unit {
                Field::constant(g(), p.theta_c)?
            } else {
                Field::from_fn(g(), |y| 1.0 + p.theta_amp * bump(y))?
            };
            (
                Field::constant(g(), 1.0)?,
                Field::constant(g(), 0.0)?,
                theta,
                Field::from_fn(g(), |y| p.z_amp * bump(y))?,
            )
        }
        "lipschitz-v" => {
            let (v, theta) = if unit {
                // Zero-mean tent, so that ∫v0 = 1 and |v0_y| = lip away from the kink.
                (
                    Field::from_fn(g(), |y| 1.0 + p.lip * (0.25 - (y - 0.5).abs()))?,
                    Field::constant(g(), p.theta_c)?,
                )
            } else {
                (
                    Field::from_fn(g(), |y| 1.0 + p.lip * (p.width - (y - p.center).abs()).max(0.0))?,
                    Field::from_fn(g(), |y| 1.0 + p.theta_amp * bump(y))?,
                )
            };
            (v, Field::constant(g(), 0.0)?, theta, Field::from_fn(g(), |y| p.z_amp * bump(y))?)
        }
        "harmonic" => (
            Field::from_fn(g(), |y| 1.0 + p.v_amp * (2.0 * PI * y).sin())?,
            Field::constant(g(), 0.0)?,
            Field::constant(g(), p.theta_c)?,
            Field::from_fn(g(), |y| 0.5 * p.z_amp * (1.0 + (2.0 * PI * y).cos()))?,
        ),
        other => return Err(Error::UnknownPreset(other.to_string())),
    };
    Ok(State { t: 0.0, v, u, theta, z })
}

/// Largest deviation of the end values from the far-field state `(1, 0, 1, 0)`.
pub fn far_field_deviation(state: &State) -> f64 {
    let mut dev: f64 = 0.0;
    for idx in [0, state.v.len() - 1] {
        dev = dev
            .max((state.v[idx] - 1.0).abs())
            .max(state.u[idx].abs())
            .max((state.theta[idx] - 1.0).abs())
            .max(state.z[idx].abs());
    }
    dev
}

pub fn is_truncated_line(grid: &Grid) -> bool {
    matches!(grid.domain(), DomainKind::TruncatedLine(_))
}
