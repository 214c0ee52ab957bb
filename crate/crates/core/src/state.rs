use std::sync::Arc;

use crate::error::{Error, Result};
use crate::grid::{Field, Grid};

/// Slack allowed on `0 <= Z <= 1`.
pub const Z_SLACK: f64 = 1e-12;

/// Specific volume, velocity, temperature and reactant fraction at one instant.
#[derive(Debug, Clone, PartialEq)]
pub struct State {
    pub t: f64,
    pub v: Field,
    pub u: Field,
    pub theta: Field,
    pub z: Field,
}

impl State {
    pub fn grid(&self) -> &Arc<Grid> {
        self.v.grid()
    }

    /// Checks `v > 0`, `θ > 0`, `-1e-12 <= Z <= 1 + 1e-12` and finiteness.
    pub fn check_invariants(&self) -> Result<()> {
        let fail = |what: String| Err(Error::StateInvariantViolation { t: self.t, what });
        for (name, f) in [("v", &self.v), ("u", &self.u), ("theta", &self.theta), ("Z", &self.z)] {
            if let Some(i) = f.values().iter().position(|x| !x.is_finite()) {
                return fail(format!("{name} is not finite at node {i}"));
            }
        }
        if let Some(i) = self.v.values().iter().position(|&x| x <= 0.0) {
            return fail(format!("v = {:e} <= 0 at node {i}", self.v[i]));
        }
        if let Some(i) = self.theta.values().iter().position(|&x| x <= 0.0) {
            return fail(format!("theta = {:e} <= 0 at node {i}", self.theta[i]));
        }
        if let Some(i) = self
            .z
            .values()
            .iter()
            .position(|&x| !(-Z_SLACK..=1.0 + Z_SLACK).contains(&x))
        {
            return fail(format!("Z = {:e} outside [0, 1] at node {i}", self.z[i]));
        }
        Ok(())
    }
}
