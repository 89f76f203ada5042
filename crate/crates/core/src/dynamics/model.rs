use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{rng::copy_stream, DynamicsError};
use crate::geometry::Point;

pub type DriftFn = Arc<dyn Fn(&Point) -> Point + Send + Sync>;
pub type DiffusionFn = Arc<dyn Fn(&Point) -> DMatrix<f64> + Send + Sync>;

/// Threshold on `|det(sigma / max|sigma_ik|)|` below which sigma counts as singular.
pub const SINGULAR_DET: f64 = 1e-12;

/// Drift `b`, diffusion `sigma`, start `x0` and declared Lipschitz constants
/// (`sigma` in operator norm).
#[derive(Clone)]
pub struct SdeModel {
    dim: usize,
    drift: DriftFn,
    diffusion: DiffusionFn,
    x0: Point,
    lip_b: f64,
    lip_sigma: f64,
}

impl fmt::Debug for SdeModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SdeModel")
            .field("dim", &self.dim)
            .field("x0", &self.x0.as_slice())
            .field("lip_b", &self.lip_b)
            .field("lip_sigma", &self.lip_sigma)
            .finish_non_exhaustive()
    }
}

impl SdeModel {
    pub fn new(
        drift: DriftFn,
        diffusion: DiffusionFn,
        x0: Point,
        lip_b: f64,
        lip_sigma: f64,
    ) -> Result<Self, DynamicsError> {
        if x0.is_empty() || !x0.iter().all(|v| v.is_finite()) {
            return Err(DynamicsError::InvalidParameter("x0 must be a finite nonempty vector".into()));
        }
        for (name, value) in [("lip_b", lip_b), ("lip_sigma", lip_sigma)] {
            if !(value.is_finite() && value >= 0.0) {
                return Err(DynamicsError::InvalidParameter(format!("{name} must be finite and >= 0, got {value}")));
            }
        }
        let model = Self {
            dim: x0.len(),
            drift,
            diffusion,
            x0,
            lip_b,
            lip_sigma,
        };
        let b = (model.drift)(&model.x0);
        if b.len() != model.dim {
            return Err(DynamicsError::InvalidParameter(format!(
                "drift returns dimension {}, expected {}",
                b.len(),
                model.dim
            )));
        }
        model.sigma(&model.x0)?;
        Ok(model)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn x0(&self) -> &Point {
        &self.x0
    }

    pub fn lip_b(&self) -> f64 {
        self.lip_b
    }

    pub fn lip_sigma(&self) -> f64 {
        self.lip_sigma
    }

    pub fn drift(&self, x: &Point) -> Point {
        (self.drift)(x)
    }

    /// `sigma(x)`, checked for shape and invertibility.
    pub fn sigma(&self, x: &Point) -> Result<DMatrix<f64>, DynamicsError> {
        let s = (self.diffusion)(x);
        if s.nrows() != self.dim || s.ncols() != self.dim {
            return Err(DynamicsError::InvalidParameter(format!(
                "diffusion returns a {}x{} matrix, expected {}x{}",
                s.nrows(),
                s.ncols(),
                self.dim,
                self.dim
            )));
        }
        if is_singular(&s) {
            return Err(DynamicsError::SingularDiffusion { at: x.as_slice().to_vec() });
        }
        Ok(s)
    }

    /// Worst observed ratio of `|f(u) - f(v)|` to the declared bound over
    /// `pairs` random pairs in `[-half_width, half_width]^m`, for `b` and
    /// `sigma` respectively. Values above `1 + 1e-6` falsify the declaration.
    pub fn lipschitz_ratios(&self, pairs: usize, half_width: f64, seed: u64) -> (f64, f64) {
        let mut rng = copy_stream(seed, u64::MAX);
        let mut worst = (0.0f64, 0.0f64);
        for _ in 0..pairs {
            let u = Point::from_fn(self.dim, |_, _| rng.random_range(-half_width..=half_width));
            let v = Point::from_fn(self.dim, |_, _| rng.random_range(-half_width..=half_width));
            let gap = (&u - &v).norm();
            if gap == 0.0 {
                continue;
            }
            let db = (self.drift(&u) - self.drift(&v)).norm();
            let ds = ((self.diffusion)(&u) - (self.diffusion)(&v)).svd(false, false).singular_values.max();
            worst.0 = worst.0.max(ratio(db, self.lip_b * gap));
            worst.1 = worst.1.max(ratio(ds, self.lip_sigma * gap));
        }
        worst
    }

    /// Checks the declared Lipschitz constants empirically.
    pub fn check_lipschitz(&self, pairs: usize, half_width: f64, seed: u64) -> Result<(), DynamicsError> {
        let (rb, rs) = self.lipschitz_ratios(pairs, half_width, seed);
        for (name, r) in [("drift", rb), ("diffusion", rs)] {
            if r > 1.0 + 1e-6 {
                return Err(DynamicsError::LipschitzViolated { map: name.into(), ratio: r });
            }
        }
        Ok(())
    }
}

fn ratio(observed: f64, bound: f64) -> f64 {
    if observed <= 1e-15 {
        0.0
    } else if bound == 0.0 {
        f64::INFINITY
    } else {
        observed / bound
    }
}

/// Scale-invariant singularity test: `sigma` is rescaled by its largest
/// entry before the determinant is compared with [`SINGULAR_DET`].
pub fn is_singular(s: &DMatrix<f64>) -> bool {
    let scale = s.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    if !(scale.is_finite() && scale > 0.0) || !s.iter().all(|v| v.is_finite()) {
        return true;
    }
    (s / scale).determinant().abs() <= SINGULAR_DET
}

/// The shipped model registry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelSpec {
    /// `b(x) = -theta x`, `sigma = s I`.
    Ou { theta: f64, sigma: f64 },
    /// `b = 0`, `sigma = s I`.
    Brownian { sigma: f64 },
    /// `b(x) = -tanh(x)` coordinatewise, `sigma = s I`.
    TanhDrift { sigma: f64 },
    /// `b = 0`, `sigma(x) = diag(base + amplitude tanh(x_k))`.
    TanhDiffusion { base: f64, amplitude: f64 },
}

impl ModelSpec {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Ou { .. } => "ou",
            Self::Brownian { .. } => "brownian",
            Self::TanhDrift { .. } => "tanh_drift",
            Self::TanhDiffusion { .. } => "tanh_diffusion",
        }
    }

    /// Whether `sigma` does not depend on the state.
    pub fn constant_sigma(&self) -> bool {
        !matches!(self, Self::TanhDiffusion { .. })
    }

    pub fn build(&self, x0: Point) -> Result<SdeModel, DynamicsError> {
        let m = x0.len();
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(v)
            } else {
                Err(DynamicsError::InvalidParameter(format!("{name} must be positive, got {v}")))
            }
        };
        let scalar_sigma = |s: f64| -> DiffusionFn { Arc::new(move |_: &Point| DMatrix::identity(m, m) * s) };
        match *self {
            Self::Ou { theta, sigma } => {
                if !(theta.is_finite() && theta >= 0.0) {
                    return Err(DynamicsError::InvalidParameter(format!("theta must be >= 0, got {theta}")));
                }
                let s = positive("sigma", sigma)?;
                SdeModel::new(Arc::new(move |x: &Point| x * -theta), scalar_sigma(s), x0, theta, 0.0)
            }
            Self::Brownian { sigma } => {
                let s = positive("sigma", sigma)?;
                SdeModel::new(Arc::new(move |_: &Point| Point::zeros(m)), scalar_sigma(s), x0, 0.0, 0.0)
            }
            Self::TanhDrift { sigma } => {
                let s = positive("sigma", sigma)?;
                SdeModel::new(Arc::new(|x: &Point| x.map(|v| -v.tanh())), scalar_sigma(s), x0, 1.0, 0.0)
            }
            Self::TanhDiffusion { base, amplitude } => {
                if !(amplitude.is_finite() && amplitude >= 0.0 && base.is_finite() && base > amplitude) {
                    return Err(DynamicsError::InvalidParameter(format!(
                        "tanh diffusion needs base > amplitude >= 0, got base {base}, amplitude {amplitude}"
                    )));
                }
                SdeModel::new(
                    Arc::new(move |_: &Point| Point::zeros(m)),
                    Arc::new(move |x: &Point| DMatrix::from_diagonal(&x.map(|v| base + amplitude * v.tanh()))),
                    x0,
                    0.0,
                    amplitude,
                )
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(v: &[f64]) -> Point {
        Point::from_column_slice(v)
    }

    #[test]
    fn registry_models_respect_declared_constants() {
        let specs = [
            ModelSpec::Ou { theta: 1.5, sigma: 0.5 },
            ModelSpec::Brownian { sigma: 1.0 },
            ModelSpec::TanhDrift { sigma: 0.3 },
            ModelSpec::TanhDiffusion { base: 0.3, amplitude: 0.1 },
        ];
        for spec in &specs {
            for x0 in [p(&[0.1]), p(&[0.1, -0.2])] {
                let model = spec.build(x0).unwrap();
                model.check_lipschitz(1000, 2.0, 11).unwrap();
            }
        }
    }

    #[test]
    fn understated_constant_is_caught() {
        let model = SdeModel::new(
            Arc::new(|x: &Point| x * -2.0),
            Arc::new(|_: &Point| DMatrix::identity(1, 1)),
            p(&[0.0]),
            1.0,
            0.0,
        )
        .unwrap();
        assert!(matches!(
            model.check_lipschitz(100, 1.0, 0),
            Err(DynamicsError::LipschitzViolated { .. })
        ));
    }

    #[test]
    fn singular_sigma_is_rejected_but_tiny_scalar_sigma_is_not() {
        let singular = SdeModel::new(
            Arc::new(|_: &Point| Point::zeros(2)),
            Arc::new(|_: &Point| DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 4.0])),
            p(&[0.0, 0.0]),
            0.0,
            0.0,
        );
        assert!(matches!(singular, Err(DynamicsError::SingularDiffusion { .. })));
        assert!(ModelSpec::Brownian { sigma: 1e-12 }.build(p(&[0.0, 0.0])).is_ok());
        assert!(is_singular(&DMatrix::zeros(1, 1)));
    }

    #[test]
    fn invalid_parameters() {
        assert!(ModelSpec::Ou { theta: -1.0, sigma: 1.0 }.build(p(&[0.0])).is_err());
        assert!(ModelSpec::Brownian { sigma: 0.0 }.build(p(&[0.0])).is_err());
        assert!(ModelSpec::TanhDiffusion { base: 0.1, amplitude: 0.2 }.build(p(&[0.0])).is_err());
    }

    #[test]
    fn spec_round_trips_through_json() {
        let spec = ModelSpec::TanhDiffusion { base: 0.3, amplitude: 0.1 };
        let text = serde_json::to_string(&spec).unwrap();
        assert!(text.contains("\"kind\":\"tanh_diffusion\""));
        assert_eq!(serde_json::from_str::<ModelSpec>(&text).unwrap(), spec);
    }
}
