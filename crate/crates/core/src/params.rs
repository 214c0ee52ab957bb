use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::reaction::RateSpec;

/// Upper limit on the shift `δ` in `X = Z + δ`.
pub const DELTA_SHIFT_MAX: f64 = 1e-2;

/// Physical and model constants of the reacting gas.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalParams {
    /// Gas constant times molecular weight.
    pub a: f64,
    /// Heat release per unit reactant.
    pub q: f64,
    /// Viscosity.
    pub mu: f64,
    /// Heat conductivity.
    pub nu: f64,
    /// Species diffusivity.
    pub diffusivity: f64,
    /// Reaction rate constant.
    pub k_rate: f64,
    /// Activation energy.
    pub activation: f64,
    /// Arrhenius temperature exponent.
    pub alpha_exp: f64,
    pub theta_ignite: f64,
    /// Half-width of the mollified ignition zone.
    pub eps_reg: f64,
    /// Shift used by the Fisher-type functionals.
    pub delta_shift: f64,
}

impl Default for PhysicalParams {
    fn default() -> Self {
        Self {
            a: 1.0,
            q: 1.0,
            mu: 1.0,
            nu: 1.0,
            diffusivity: 0.05,
            k_rate: 1.0,
            activation: 1.0,
            alpha_exp: 1.0,
            theta_ignite: 1.0,
            eps_reg: 0.05,
            delta_shift: 1e-4,
        }
    }
}

impl PhysicalParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("a", self.a),
            ("q", self.q),
            ("mu", self.mu),
            ("nu", self.nu),
            ("D", self.diffusivity),
            ("K", self.k_rate),
            ("A", self.activation),
            ("theta_ignite", self.theta_ignite),
            ("eps_reg", self.eps_reg),
        ];
        for (name, value) in positive {
            if !(value > 0.0 && value.is_finite()) {
                return Err(Error::InvalidParameter(format!("{name} = {value} must be positive")));
            }
        }
        if !(self.alpha_exp >= 0.0 && self.alpha_exp.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "alpha = {} must be non-negative",
                self.alpha_exp
            )));
        }
        if !(self.delta_shift >= 0.0 && self.delta_shift < DELTA_SHIFT_MAX) {
            return Err(Error::InvalidParameter(format!(
                "delta_shift = {} must lie in [0, {DELTA_SHIFT_MAX})",
                self.delta_shift
            )));
        }
        self.rate_spec().map(|_| ())
    }

    pub fn rate_spec(&self) -> Result<RateSpec> {
        RateSpec::new(self.alpha_exp, self.activation, self.theta_ignite, self.eps_reg)
    }
}
