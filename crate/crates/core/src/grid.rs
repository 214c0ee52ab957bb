//! Uniform Lagrangian meshes and nodal fields.

use std::ops::Index;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Smallest admissible number of cells.
pub const MIN_CELLS: usize = 8;

/// Spatial domain of the mass coordinate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum DomainKind {
    /// The unit interval `[0, 1]`.
    UnitInterval,
    /// The real line truncated to `[-L, L]`.
    TruncatedLine(f64),
}

impl DomainKind {
    pub fn bounds(&self) -> (f64, f64) {
        match *self {
            DomainKind::UnitInterval => (0.0, 1.0),
            DomainKind::TruncatedLine(l) => (-l, l),
        }
    }

    pub fn length(&self) -> f64 {
        let (a, b) = self.bounds();
        b - a
    }

    pub fn is_unit(&self) -> bool {
        matches!(self, DomainKind::UnitInterval)
    }
}

/// Uniform mesh `y_0 < y_1 < ... < y_N` including both endpoints.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    domain: DomainKind,
    n_cells: usize,
    h: f64,
    nodes: Vec<f64>,
}

impl Grid {
    pub fn domain(&self) -> DomainKind {
        self.domain
    }

    pub fn n_cells(&self) -> usize {
        self.n_cells
    }

    pub fn n_nodes(&self) -> usize {
        self.n_cells + 1
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn length(&self) -> f64 {
        self.domain.length()
    }

    /// Trapezoid weight of node `i`: `h/2` at the ends, `h` elsewhere.
    pub fn weight(&self, i: usize) -> f64 {
        if i == 0 || i == self.n_cells {
            0.5 * self.h
        } else {
            self.h
        }
    }
}

/// Builds a uniform grid on `[0,1]` or `[-L,L]` with `n_cells` cells.
pub fn build_grid(domain: DomainKind, n_cells: usize) -> Result<Arc<Grid>> {
    if n_cells < MIN_CELLS {
        return Err(Error::InvalidGrid(format!(
            "n_cells = {n_cells} is below the minimum of {MIN_CELLS}"
        )));
    }
    if let DomainKind::TruncatedLine(l) = domain {
        if !(l > 0.0 && l.is_finite()) {
            return Err(Error::InvalidGrid(format!("half-length L = {l} must be positive")));
        }
    }
    let (a, b) = domain.bounds();
    let h = (b - a) / n_cells as f64;
    let mut nodes: Vec<f64> = (0..=n_cells).map(|i| a + i as f64 * h).collect();
    nodes[n_cells] = b;
    Ok(Arc::new(Grid { domain, n_cells, h, nodes }))
}

/// Real-valued nodal function on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    grid: Arc<Grid>,
    values: Vec<f64>,
}

impl Field {
    /// Wraps `values`, checking length and finiteness.
    pub fn new(grid: Arc<Grid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.n_nodes() {
            return Err(Error::FieldLength { expected: grid.n_nodes(), got: values.len() });
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        Ok(Self { grid, values })
    }

    /// Wraps `values` without the finiteness check. Used when re-reading
    /// possibly corrupted snapshots so that diagnostics can flag them.
    pub fn new_unchecked(grid: Arc<Grid>, values: Vec<f64>) -> Self {
        assert_eq!(values.len(), grid.n_nodes(), "field length mismatch");
        Self { grid, values }
    }

    pub fn from_fn(grid: Arc<Grid>, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values = grid.nodes().iter().map(|&y| f(y)).collect();
        Self::new(grid, values)
    }

    pub fn constant(grid: Arc<Grid>, c: f64) -> Result<Self> {
        Self::from_fn(grid, |_| c)
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Pointwise map onto a new field on the same grid.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Field {
        Field {
            grid: Arc::clone(&self.grid),
            values: self.values.iter().map(|&x| f(x)).collect(),
        }
    }

    /// Pointwise combination of two fields on the same grid.
    pub fn zip_map(&self, other: &Field, f: impl Fn(f64, f64) -> f64) -> Field {
        debug_assert_eq!(self.len(), other.len());
        Field {
            grid: Arc::clone(&self.grid),
            values: self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect(),
        }
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn first(&self) -> f64 {
        self.values[0]
    }

    pub fn last(&self) -> f64 {
        self.values[self.values.len() - 1]
    }
}

impl Index<usize> for Field {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.values[i]
    }
}
