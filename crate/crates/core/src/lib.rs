//! Biharmonic almost complex structures on the flat 4-torus.
//!
//! Compatible almost complex structures are stored as fields of 4x4
//! matrices on a periodic grid. The crate evaluates the energy
//! `E₂(J) = ∫ |ΔJ|² dv`, its constrained gradient and Euler–Lagrange
//! residuals, minimizes it by retraction-based gradient descent, splices
//! structures across an annulus, and tracks first Chern class periods.

pub mod acs;
pub mod cli;
pub mod config;
pub mod energy;
pub mod error;
pub mod field;
pub mod geometry;
pub mod glue;
pub mod grid;
pub mod linalg;
pub mod metric;
pub mod minimize;
pub mod snapshot;
pub mod topology;

pub use error::{Error, Result};
pub use field::{EndoField, ScalarField, TwoFormField};
pub use grid::Grid;
pub use linalg::Mat4;
pub use metric::MetricField;
