//! Grid fields, plane-wave superpositions, finite-difference residuals, and the reduction
//! ansatz as an executable map between 5-D and 4-D grids.

mod grid;
mod reduce;
mod stencil;

use thiserror::Error;

pub use crate::ansatz::ReductionAnsatz;
pub use grid::{synthesize, GridField, GridSpec, PlaneWaveSum};
pub use reduce::{apply_ansatz, default_direction_extent, discrete_reduced_operator, full_spec, reduce_field, ReducedField};
pub use stencil::{
    apply_operator_grid, check_grid, observed_orders, residual, spectral_residual, spectral_residual_op, Norms,
    ResidualReport, StencilOperator,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FieldError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("axis {0} has an invalid extent or fewer than 2 points")]
    BadAxis(usize),
    #[error("grid too small: axis {axis} has {points} points, stencils need at least 4")]
    GridTooSmall { axis: usize, points: usize },
    #[error("axis mismatch: {0}")]
    AxisMismatch(String),
    #[error("profile underflows at direction coordinate {coordinate}")]
    ZeroProfile { coordinate: f64 },
    #[error("fields live on different grids")]
    SpecMismatch,
    #[error("field contains non-finite values")]
    NonFinite,
    #[error("a plane-wave sum needs at least one mode")]
    NoModes,
}
