//! Thomas algorithm for tridiagonal systems.

use crate::error::{Error, Result};

/// Tridiagonal matrix stored by diagonals; `lower[0]` and `upper[n-1]` are unused.
#[derive(Debug, Clone)]
pub struct Tridiagonal {
    pub lower: Vec<f64>,
    pub diag: Vec<f64>,
    pub upper: Vec<f64>,
}

impl Tridiagonal {
    pub fn zeros(n: usize) -> Self {
        Self { lower: vec![0.0; n], diag: vec![0.0; n], upper: vec![0.0; n] }
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    /// `A x`.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let n = self.len();
        (0..n)
            .map(|i| {
                let mut s = self.diag[i] * x[i];
                if i > 0 {
                    s += self.lower[i] * x[i - 1];
                }
                if i + 1 < n {
                    s += self.upper[i] * x[i + 1];
                }
                s
            })
            .collect()
    }

    /// Solves `A x = rhs` without pivoting. Pivots with magnitude below
    /// `pivot_tol` times the row scale are reported as failures.
    pub fn solve(&self, rhs: &[f64], pivot_tol: f64) -> Result<Vec<f64>> {
        let n = self.len();
        assert_eq!(rhs.len(), n, "right-hand side length");
        let mut c_star = vec![0.0; n];
        let mut d_star = vec![0.0; n];
        let mut denom = self.diag[0];
        for i in 0..n {
            if i > 0 {
                denom = self.diag[i] - self.lower[i] * c_star[i - 1];
            }
            let scale = self.diag[i].abs() + self.lower[i].abs() + self.upper[i].abs();
            if !denom.is_finite() || denom.abs() <= pivot_tol * scale.max(f64::MIN_POSITIVE) {
                return Err(Error::LinearSolveFailure { row: i, pivot: denom });
            }
            c_star[i] = if i + 1 < n { self.upper[i] / denom } else { 0.0 };
            let carry = if i > 0 { self.lower[i] * d_star[i - 1] } else { 0.0 };
            d_star[i] = (rhs[i] - carry) / denom;
        }
        let mut x = d_star;
        for i in (0..n.saturating_sub(1)).rev() {
            x[i] -= c_star[i] * x[i + 1];
        }
        Ok(x)
    }
}
