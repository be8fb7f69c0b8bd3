//! Verification engine for covariant dimensional reductions of the wave equation.
//!
//! The exact layer ([`geometry`], [`oracle`], [`symbol`]) certifies reduction identities in
//! Gaussian-rational arithmetic. The numerical layer ([`fields`], [`solver`], [`dedonder`],
//! [`dirac`]) checks the same identities on structured grids.

pub mod ansatz;
pub mod fields;
pub mod dedonder;
pub mod dirac;
pub mod geometry;
pub mod matrix;
pub mod oracle;
pub mod scalar;
pub mod solver;
pub mod symbol;

pub use ansatz::{Orientation, ReductionAnsatz, ReductionKind};
pub use geometry::{Chart, ChartMap, LightconeConvention, Metric};
pub use matrix::{GqMatrix, Matrix, RatMatrix};
pub use oracle::{ExpPolyField, IdentityCertificate};
pub use scalar::{Gq, Rational};
