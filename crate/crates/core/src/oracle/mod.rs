//! Brute-force references and proof-constant calculators for tests and
//! diagnostics.

mod brute;
mod constants;
mod step1;

pub use brute::{brute_force_hull_distance, brute_force_projection, empirical_cdf, EmpiricalCdf};
pub use constants::{constants_c1_c2, constants_c1_c2_with_points, StepConstants};
pub use step1::{
    hit_frequency, step1_bound_check, step1_bound_check_with_constants, HitReport, ViolationReport, STEP1_PROBE_COUNT,
};

use thiserror::Error;

use crate::dynamics::DynamicsError;
use crate::geometry::GeometryError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("oracle does not support dimension {0}")]
    UnsupportedDimension(usize),
    #[error("no feasible grid point at resolution {resolution}")]
    NoFeasiblePoint { resolution: f64 },
    #[error("grid refinement did not reach resolution {resolution}")]
    Unresolved { resolution: f64 },
    #[error("ensemble was simulated without pre-projection points")]
    MissingPreProjection,
    #[error("probe {probe} lies outside C(t_{step})")]
    ProbeOutside { probe: usize, step: usize },
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}
