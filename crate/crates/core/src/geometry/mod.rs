//! Convex geometry: bodies with exact or iterative projections, support
//! functions, planar/generic convex hulls and point-to-hull distances.
//!
//! Every type here is immutable after construction and `Send + Sync`.

mod body;
mod hull;
mod min_norm;

pub use body::{AxisBox, Ball, ConvexBody, Interval, Polytope};
pub use hull::{convex_hull, distance_to_hull, Hull};
pub use min_norm::{min_norm_point, MinNormPoint};

use thiserror::Error;

/// A point of R^m.
pub type Point = nalgebra::DVector<f64>;

/// Default tolerance for membership and variational checks.
pub const GEOMETRIC_TOL: f64 = 1e-9;
/// Default absolute accuracy of point-to-hull distances.
pub const HULL_DISTANCE_TOL: f64 = 1e-7;
/// Iteration cap of the min-norm-point solver.
pub const MIN_NORM_MAX_ITERATIONS: usize = 100_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("invalid convex body: {0}")]
    InvalidBody(String),
    #[error("polytope projection did not converge after {cycles} cycles (residual {residual:e})")]
    ProjectionDidNotConverge { cycles: usize, residual: f64 },
    #[error("support direction must be nonzero")]
    ZeroDirection,
    #[error("point lies outside the body by {distance:e}")]
    OutsideBody { distance: f64 },
    #[error("convex hull of an empty point set")]
    EmptyPointSet,
    #[error("tolerance must be positive, got {0}")]
    NonPositiveTolerance(f64),
    #[error("min-norm-point solver stopped after {iterations} iterations with duality gap {gap:e}")]
    SolverDidNotConverge { iterations: usize, gap: f64 },
}

pub(crate) fn check_dim(expected: usize, x: &Point) -> Result<(), GeometryError> {
    if x.len() == expected {
        Ok(())
    } else {
        Err(GeometryError::DimensionMismatch {
            expected,
            found: x.len(),
        })
    }
}
