//! Simulation and verification library for one-dimensional reacting
//! compressible flow in Lagrangian coordinates.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod calculus;
pub mod checks;
pub mod config;
pub mod diagnostics;
pub mod error;
pub mod grid;
pub mod inequality;
pub mod io;
pub mod nodal;
pub mod params;
pub mod presets;
pub mod reaction;
pub mod solver;
pub mod state;
pub mod tridiag;

pub use error::{Error, Result};
pub use grid::{build_grid, DomainKind, Field, Grid};
pub use params::PhysicalParams;
pub use state::State;
