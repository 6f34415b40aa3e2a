//! Deterministic simulator and diagnostics for the space-homogeneous Landau
//! equation with soft potentials.

pub mod coefficients;
pub mod convolution;
pub mod error;
pub mod experiments;
pub mod functionals;
pub mod grid;
pub mod io;
pub mod linalg;
pub mod solver;
pub mod stencil;

pub use error::{Error, Result};
pub use grid::{GridSpec, ScalarField, SymMatrixField, VectorField};
