//! Discontinuous Arrhenius rate and its C¹ monotone regularization.
//!
//! The regularized rate is zero below `θ_ignite − ε`, equal to the Arrhenius
//! law above `θ_ignite + ε`, and a cubic Hermite blend on the ignition zone
//! with slope 0 at the lower junction and the Arrhenius slope at the upper one.

use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateSpec {
    alpha_exp: f64,
    activation: f64,
    theta_ignite: f64,
    eps_reg: f64,
    // Hermite data at the upper junction.
    jump: f64,
    slope_hi: f64,
}

impl RateSpec {
    pub fn new(alpha_exp: f64, activation: f64, theta_ignite: f64, eps_reg: f64) -> Result<Self> {
        if !(alpha_exp >= 0.0) || !(activation >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "Arrhenius exponent {alpha_exp} and activation {activation} must be non-negative"
            )));
        }
        if !(theta_ignite > 0.0) || !(eps_reg > 0.0) {
            return Err(Error::InvalidParameter(
                "theta_ignite and eps_reg must be positive".into(),
            ));
        }
        if eps_reg >= theta_ignite {
            return Err(Error::InvalidParameter(format!(
                "eps_reg = {eps_reg} must be smaller than theta_ignite = {theta_ignite}"
            )));
        }
        let hi = theta_ignite + eps_reg;
        let jump = closed_form(hi, alpha_exp, activation);
        let slope_hi = closed_form_slope(hi, alpha_exp, activation);
        // A cubic with end slopes (0, m) stays monotone iff m <= 3 * secant.
        let secant = jump / (2.0 * eps_reg);
        if slope_hi > 3.0 * secant {
            return Err(Error::InvalidParameter(format!(
                "eps_reg = {eps_reg} too wide: Arrhenius slope {slope_hi:.4} exceeds 3x the blend secant {secant:.4}"
            )));
        }
        Ok(Self { alpha_exp, activation, theta_ignite, eps_reg, jump, slope_hi })
    }

    pub fn theta_ignite(&self) -> f64 {
        self.theta_ignite
    }

    pub fn eps_reg(&self) -> f64 {
        self.eps_reg
    }

    /// Value of the Arrhenius law just above ignition, i.e. the size of the jump.
    pub fn jump(&self) -> f64 {
        self.jump
    }

    /// `φ(θ)`; the ignition point itself takes the upper value.
    pub fn phi(&self, theta: f64) -> f64 {
        if theta >= self.theta_ignite {
            closed_form(theta, self.alpha_exp, self.activation)
        } else {
            0.0
        }
    }

    /// `Φ_ε(θ)`; returns 0 for non-positive θ instead of failing.
    pub fn phi_eps(&self, theta: f64) -> f64 {
        let lo = self.theta_ignite - self.eps_reg;
        let hi = self.theta_ignite + self.eps_reg;
        if theta <= lo {
            0.0
        } else if theta >= hi {
            closed_form(theta, self.alpha_exp, self.activation)
        } else {
            let w = hi - lo;
            let s = (theta - lo) / w;
            let s2 = s * s;
            let s3 = s2 * s;
            self.jump * (3.0 * s2 - 2.0 * s3) + self.slope_hi * w * (s3 - s2)
        }
    }

    /// Exact derivative of `Φ_ε`.
    pub fn phi_eps_slope(&self, theta: f64) -> f64 {
        let lo = self.theta_ignite - self.eps_reg;
        let hi = self.theta_ignite + self.eps_reg;
        if theta <= lo {
            0.0
        } else if theta >= hi {
            closed_form_slope(theta, self.alpha_exp, self.activation)
        } else {
            let w = hi - lo;
            let s = (theta - lo) / w;
            self.jump * 6.0 * (s - s * s) / w + self.slope_hi * (3.0 * s * s - 2.0 * s)
        }
    }
}

fn closed_form(theta: f64, alpha: f64, activation: f64) -> f64 {
    theta.powf(alpha) * (-activation / theta).exp()
}

fn closed_form_slope(theta: f64, alpha: f64, activation: f64) -> f64 {
    (-activation / theta).exp()
        * (alpha * theta.powf(alpha - 1.0) + activation * theta.powf(alpha - 2.0))
}

fn check_theta(theta: f64) -> Result<()> {
    if theta > 0.0 && theta.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("temperature {theta} must be positive")))
    }
}

/// Discontinuous Arrhenius rate `φ(θ)`.
pub fn arrhenius_rate(theta: f64, spec: &RateSpec) -> Result<f64> {
    check_theta(theta)?;
    Ok(spec.phi(theta))
}

/// Regularized rate `Φ_ε(θ)`.
pub fn regularized_rate(theta: f64, spec: &RateSpec) -> Result<f64> {
    check_theta(theta)?;
    Ok(spec.phi_eps(theta))
}

#[derive(Debug, Clone, Serialize)]
pub struct C1BoundReport {
    pub sup_value: f64,
    pub sup_slope: f64,
    pub c1_norm: f64,
    pub bound: f64,
    pub bound_holds: bool,
    pub monotonicity_violations: usize,
    /// Closed-form maximum slope of the blend with zero end slopes, `3·jump/(4ε)`.
    pub hermite_slope_estimate: f64,
}

/// Samples `Φ_ε` on `(0, theta_max]` and compares `sup|Φ_ε| + sup|Φ_ε'|` with `1/ε`.
/// The slope is a centered difference on the sampling mesh.
pub fn rate_c1_bound_check(spec: &RateSpec, n_samples: usize, theta_max: f64) -> Result<C1BoundReport> {
    if n_samples < 1000 {
        return Err(Error::InvalidParameter(format!("n_samples = {n_samples} < 1000")));
    }
    check_theta(theta_max)?;
    let dtheta = theta_max / n_samples as f64;
    let samples: Vec<(f64, f64)> = (1..=n_samples)
        .map(|i| {
            let th = i as f64 * dtheta;
            (th, spec.phi_eps(th))
        })
        .collect();
    let sup_value = samples.iter().fold(0.0f64, |m, &(_, p)| m.max(p.abs()));
    let sup_slope = samples
        .windows(3)
        .map(|w| ((w[2].1 - w[0].1) / (w[2].0 - w[0].0)).abs())
        .fold(0.0f64, f64::max);
    let lo = spec.theta_ignite - spec.eps_reg;
    let hi = spec.theta_ignite + spec.eps_reg;
    let monotonicity_violations = samples
        .windows(2)
        .filter(|w| w[0].0 >= lo && w[1].0 <= hi)
        .filter(|w| w[1].1 < w[0].1 - 1e-15 * w[0].1.abs())
        .count();
    let bound = 1.0 / spec.eps_reg;
    let c1_norm = sup_value + sup_slope;
    Ok(C1BoundReport {
        sup_value,
        sup_slope,
        c1_norm,
        bound,
        bound_holds: c1_norm <= bound,
        monotonicity_violations,
        hermite_slope_estimate: 3.0 * spec.jump / (4.0 * spec.eps_reg),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn spec(eps: f64) -> RateSpec {
        RateSpec::new(1.0, 1.0, 1.0, eps).unwrap()
    }

    #[test]
    fn arrhenius_values() {
        let s = spec(0.1);
        assert_eq!(arrhenius_rate(0.5, &s).unwrap(), 0.0);
        let v = arrhenius_rate(2.0, &s).unwrap();
        assert!((v - 1.213_061_319_425_267).abs() < 1e-12);
        let flat = RateSpec::new(0.0, 1e-14, 1.0, 0.1).unwrap();
        assert!((arrhenius_rate(1.5, &flat).unwrap() - 1.0).abs() < 1e-12);
        assert!(arrhenius_rate(0.0, &s).is_err());
        assert!(arrhenius_rate(-1.0, &s).is_err());
        // Upper value at the jump.
        assert_eq!(s.phi(1.0), (-1.0f64).exp());
    }

    #[test]
    fn regularized_junctions() {
        let s = spec(0.1);
        assert_eq!(regularized_rate(0.9, &s).unwrap(), 0.0);
        let up = regularized_rate(1.1, &s).unwrap();
        assert!((up - arrhenius_rate(1.1, &s).unwrap()).abs() < 1e-15);
        let mid = regularized_rate(1.0, &s).unwrap();
        assert!(mid > 0.0 && mid < 1.1 * (-1.0f64 / 1.1).exp());
    }

    #[test]
    fn regularized_is_c1_at_junctions() {
        let s = spec(0.1);
        let h = 1e-7;
        for th in [0.9, 1.1] {
            let left = (s.phi_eps(th) - s.phi_eps(th - h)) / h;
            let right = (s.phi_eps(th + h) - s.phi_eps(th)) / h;
            assert!((left - right).abs() < 1e-5, "kink at {th}: {left} vs {right}");
        }
    }

    #[test]
    fn c1_bound_examples() {
        let r = rate_c1_bound_check(&spec(0.1), 20_000, 2.0).unwrap();
        assert!(r.bound_holds, "{r:?}");
        assert_eq!(r.monotonicity_violations, 0);

        let r = rate_c1_bound_check(&spec(1e-3), 200_000, 2.0).unwrap();
        assert!(r.bound_holds, "{r:?}");
        assert_eq!(r.monotonicity_violations, 0);

        let flat = RateSpec::new(0.0, 1e-14, 1.0, 0.05).unwrap();
        let r = rate_c1_bound_check(&flat, 200_000, 2.0).unwrap();
        assert!((r.sup_slope - 0.75 / 0.05).abs() < 0.01 * 15.0, "{r:?}");
        assert!(r.bound_holds);
        assert!((r.hermite_slope_estimate - 15.0).abs() < 1e-9);

        assert!(rate_c1_bound_check(&flat, 10, 2.0).is_err());
    }

    #[test]
    fn rejects_wide_mollifier() {
        assert!(RateSpec::new(1.0, 1.0, 1.0, 1.0).is_err());
        assert!(RateSpec::new(1.0, 1.0, 1.0, 1.5).is_err());
    }

    proptest! {
        #[test]
        fn agrees_with_arrhenius_outside_zone(th in 0.01f64..5.0, eps in 0.001f64..0.3) {
            let s = spec(eps);
            if (th - 1.0).abs() >= eps {
                prop_assert!((s.phi_eps(th) - s.phi(th)).abs() <= 1e-14);
            }
            prop_assert!(s.phi_eps(th) >= 0.0);
        }

        #[test]
        fn monotone_in_zone(a in 0.0f64..1.0, b in 0.0f64..1.0, eps in 0.001f64..0.3) {
            let s = spec(eps);
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            let t0 = 1.0 - eps + 2.0 * eps * lo;
            let t1 = 1.0 - eps + 2.0 * eps * hi;
            prop_assert!(s.phi_eps(t0) <= s.phi_eps(t1) + 1e-15);
            prop_assert!(s.phi_eps_slope(t0) >= -1e-12);
        }

        #[test]
        fn converges_pointwise(th in 0.05f64..4.0) {
            prop_assume!((th - 1.0).abs() > 1e-3);
            let s = spec(1e-3 * 0.5);
            prop_assert!((s.phi_eps(th) - s.phi(th)).abs() < 1e-14);
        }

        #[test]
        fn bounded_by_sup_below(th in 0.05f64..3.0, eps in 0.001f64..0.3) {
            let s = spec(eps);
            // The closed form is increasing here, so its value at th bounds Φ_ε below th.
            let sup = th.max(1.0 + eps) * (-1.0 / th.max(1.0 + eps)).exp();
            prop_assert!(s.phi_eps(th) <= sup + 1e-14);
        }
    }
}
