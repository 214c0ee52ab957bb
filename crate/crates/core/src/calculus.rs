//! Second-order finite differences and trapezoid quadrature on uniform grids.

use crate::grid::Field;

/// Boundary closure for [`d2dy2`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundaryRule {
    /// Ghost node mirrored across the end, so the discrete normal derivative vanishes.
    NeumannZero,
    /// Second-order one-sided four-point stencil.
    OneSided,
}

/// First derivative: central differences inside, second-order one-sided at the ends.
pub fn ddy(f: &Field) -> Field {
    let h = f.grid().h();
    Field::new_unchecked(f.grid().clone(), ddy_slice(f.values(), h))
}

pub(crate) fn ddy_slice(f: &[f64], h: f64) -> Vec<f64> {
    let n = f.len();
    let mut out = vec![0.0; n];
    let inv2h = 0.5 / h;
    // Written in differences so that constants map to exact zeros.
    out[0] = (4.0 * (f[1] - f[0]) - (f[2] - f[0])) * inv2h;
    out[n - 1] = (4.0 * (f[n - 1] - f[n - 2]) - (f[n - 1] - f[n - 3])) * inv2h;
    for i in 1..n - 1 {
        out[i] = (f[i + 1] - f[i - 1]) * inv2h;
    }
    out
}

/// Second derivative with the three-point stencil and the chosen boundary closure.
pub fn d2dy2(f: &Field, bc: BoundaryRule) -> Field {
    let h = f.grid().h();
    Field::new_unchecked(f.grid().clone(), d2dy2_slice(f.values(), h, bc))
}

pub(crate) fn d2dy2_slice(f: &[f64], h: f64, bc: BoundaryRule) -> Vec<f64> {
    let n = f.len();
    let mut out = vec![0.0; n];
    let ih2 = 1.0 / (h * h);
    for i in 1..n - 1 {
        out[i] = (f[i + 1] - 2.0 * f[i] + f[i - 1]) * ih2;
    }
    match bc {
        BoundaryRule::NeumannZero => {
            out[0] = 2.0 * (f[1] - f[0]) * ih2;
            out[n - 1] = 2.0 * (f[n - 2] - f[n - 1]) * ih2;
        }
        BoundaryRule::OneSided => {
            let one_sided = |a: f64, b: f64, c: f64, d: f64| {
                (-5.0 * (b - a) + 4.0 * (c - a) - (d - a)) * ih2
            };
            out[0] = one_sided(f[0], f[1], f[2], f[3]);
            out[n - 1] = one_sided(f[n - 1], f[n - 2], f[n - 3], f[n - 4]);
        }
    }
    out
}

/// Composite trapezoid rule over the whole grid.
pub fn integrate(f: &Field) -> f64 {
    trapezoid(f.values(), f.grid().h())
}

pub(crate) fn trapezoid(f: &[f64], h: f64) -> f64 {
    let n = f.len();
    let inner: f64 = f[1..n - 1].iter().sum();
    h * (inner + 0.5 * (f[0] + f[n - 1]))
}

/// Running trapezoid integral from the left end: `out[i] = ∫_{y_0}^{y_i} f`.
pub(crate) fn cumulative_trapezoid(f: &[f64], h: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(f.len());
    let mut acc = 0.0;
    out.push(0.0);
    for w in f.windows(2) {
        acc += 0.5 * h * (w[0] + w[1]);
        out.push(acc);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{build_grid, DomainKind};
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn field(n: usize, f: impl Fn(f64) -> f64) -> Field {
        let g = build_grid(DomainKind::UnitInterval, n).unwrap();
        Field::from_fn(g, f).unwrap()
    }

    #[test]
    fn ddy_exact_for_affine() {
        let f = field(10, |y| 3.0 * y + 1.0);
        for &d in ddy(&f).values() {
            assert!((d - 3.0).abs() < 1e-12);
        }
        assert!(ddy(&field(10, |_| 4.2)).max_abs() == 0.0);
    }

    #[test]
    fn ddy_second_order_on_sine() {
        let err = |n: usize| {
            let f = field(n, |y| (2.0 * PI * y).sin());
            let d = ddy(&f);
            f.grid()
                .nodes()
                .iter()
                .zip(d.values())
                .map(|(&y, &dv)| (dv - 2.0 * PI * (2.0 * PI * y).cos()).abs())
                .fold(0.0, f64::max)
        };
        let ratio = err(200) / err(400);
        assert!((ratio - 4.0).abs() < 0.8, "ratio {ratio}");
    }

    #[test]
    fn d2dy2_quadratic_and_constant() {
        let f = field(16, |y| y * y);
        let d = d2dy2(&f, BoundaryRule::OneSided);
        for &x in d.values() {
            assert!((x - 2.0).abs() < 1e-9);
        }
        let d = d2dy2(&f, BoundaryRule::NeumannZero);
        for &x in &d.values()[1..16] {
            assert!((x - 2.0).abs() < 1e-9);
        }
        assert_eq!(d2dy2(&field(16, |_| 0.7), BoundaryRule::NeumannZero).max_abs(), 0.0);
    }

    #[test]
    fn d2dy2_neumann_cosine_converges() {
        let err = |n: usize| {
            let f = field(n, |y| (PI * y).cos());
            let d = d2dy2(&f, BoundaryRule::NeumannZero);
            f.grid()
                .nodes()
                .iter()
                .zip(d.values())
                .map(|(&y, &dv)| (dv + PI * PI * (PI * y).cos()).abs())
                .fold(0.0, f64::max)
        };
        let ratio = err(100) / err(200);
        assert!((ratio - 4.0).abs() < 0.8, "ratio {ratio}");
    }

    #[test]
    fn trapezoid_examples() {
        assert_eq!(integrate(&field(10, |_| 1.0)), 1.0);
        assert!((integrate(&field(10, |y| 2.0 * y)) - 1.0).abs() < 1e-15);
        let f = field(100, |y| 1.0 + 0.5 * (2.0 * PI * y).sin());
        assert!((integrate(&f) - 1.0).abs() < 1e-6);
    }

    #[test]
    fn fundamental_theorem_discrete() {
        let err = |n| {
            let f = field(n, |y| (3.0 * y).exp());
            (integrate(&ddy(&f)) - (3f64.exp() - 1.0)).abs()
        };
        let (e1, e2) = (err(200), err(400));
        assert!(e1 < 1e-2);
        assert!((e1 / e2 - 4.0).abs() < 0.8, "ratio {}", e1 / e2);
    }

    #[test]
    fn cumulative_matches_total() {
        let f = field(50, |y| y.sin());
        let c = cumulative_trapezoid(f.values(), f.grid().h());
        assert!((c[50] - integrate(&f)).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn operators_are_linear(a in -3.0f64..3.0, b in -3.0f64..3.0, k in 1.0f64..6.0) {
            let f = field(32, |y| (k * y).sin());
            let g = field(32, |y| y * y * k);
            let comb = f.zip_map(&g, |x, z| a * x + b * z);
            let lhs = ddy(&comb);
            let rhs = ddy(&f).zip_map(&ddy(&g), |x, z| a * x + b * z);
            for (l, r) in lhs.values().iter().zip(rhs.values()) {
                prop_assert!((l - r).abs() <= 1e-9 * (1.0 + r.abs()));
            }
            for bc in [BoundaryRule::NeumannZero, BoundaryRule::OneSided] {
                let lhs = d2dy2(&comb, bc);
                let rhs = d2dy2(&f, bc).zip_map(&d2dy2(&g, bc), |x, z| a * x + b * z);
                for (l, r) in lhs.values().iter().zip(rhs.values()) {
                    prop_assert!((l - r).abs() <= 1e-7 * (1.0 + r.abs()));
                }
            }
        }
    }
}
