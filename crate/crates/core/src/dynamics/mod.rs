//! The projected Euler scheme
//! `X_{j+1} = P_{C(t_{j+1})}(X_j + b(X_j) delta + sigma(X_j) Z_{j+1})`
//! and ensembles of independent copies.
//!
//! Every copy draws its increments from its own ChaCha stream keyed by
//! `(seed, copy index)`, so ensembles do not depend on scheduling and the
//! first `N'` copies of an `N`-copy ensemble equal the `N'`-copy ensemble.

mod model;
mod multifunction;
mod rng;
mod simulate;

pub use model::{is_singular, DiffusionFn, DriftFn, ModelSpec, SdeModel, SINGULAR_DET};
pub use multifunction::{BodyFn, Multifunction};
pub use rng::{copy_stream, gaussian_increments};
pub use simulate::{
    euler_step, simulate_ensemble, simulate_ensemble_on, simulate_path, Path, PathEnsemble, TimeGrid,
};

use thiserror::Error;

use crate::geometry::GeometryError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DynamicsError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("diffusion matrix is singular at {at:?}")]
    SingularDiffusion { at: Vec<f64> },
    #[error("declared Lipschitz constant of the {map} exceeded by factor {ratio}")]
    LipschitzViolated { map: String, ratio: f64 },
    #[error("multifunction is not decreasing: C({t}) not inside C({s})")]
    NotDecreasing { s: f64, t: f64 },
    #[error("initial point lies {distance:e} outside C(0)")]
    InitialPointOutside { distance: f64 },
    #[error("step {step}: {source}")]
    Step { step: usize, source: Box<DynamicsError> },
    #[error("copy {copy}: {source}")]
    Copy { copy: usize, source: Box<DynamicsError> },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}
