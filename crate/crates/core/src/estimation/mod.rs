//! The hull estimator `conv{X_j^1, ..., X_j^N}` and its error functionals.

mod cdf;

pub use cdf::{projected_cdf, GaussianCdf, ScalarCdf};

use thiserror::Error;

use crate::dynamics::PathEnsemble;
use crate::geometry::{convex_hull, ConvexBody, GeometryError, Hull, Point, GEOMETRIC_TOL};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EstimationError {
    #[error("time index {j} outside 1..={n}")]
    InvalidTimeIndex { j: usize, n: usize },
    #[error("prefix of {requested} copies requested from an ensemble of {available}")]
    InvalidPrefix { requested: usize, available: usize },
    #[error("operation requires dimension 1, got {0}")]
    NotOneDimensional(usize),
    #[error("truth must be an interval")]
    NotAnInterval,
    #[error("estimate point {value} outside the true interval [{lower}, {upper}]")]
    ContainmentViolated { value: f64, lower: f64, upper: f64 },
    #[error("lower bound {lower} must be below upper bound {upper}")]
    InvalidBounds { lower: f64, upper: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// `conv{X_j^1, ..., X_j^N}` together with, for `m = 1`, its endpoints.
#[derive(Debug, Clone, PartialEq)]
pub struct HullEstimate {
    time_index: usize,
    n_copies: usize,
    hull: Hull,
    bounds: Option<(f64, f64)>,
}

impl HullEstimate {
    /// Estimate from the states at time index `j >= 1`.
    pub fn from_points(j: usize, points: &[Point]) -> Result<Self, EstimationError> {
        if j == 0 {
            return Err(EstimationError::InvalidTimeIndex { j, n: usize::MAX });
        }
        let hull = convex_hull(points)?;
        let bounds = (hull.dim() == 1).then(|| {
            let v = hull.vertices();
            (v[0][0], v[v.len() - 1][0])
        });
        Ok(Self {
            time_index: j,
            n_copies: points.len(),
            hull,
            bounds,
        })
    }

    pub fn time_index(&self) -> usize {
        self.time_index
    }

    pub fn n_copies(&self) -> usize {
        self.n_copies
    }

    pub fn hull(&self) -> &Hull {
        &self.hull
    }

    /// `min_i X_j^i` for `m = 1`.
    pub fn i_hat(&self) -> Option<f64> {
        self.bounds.map(|b| b.0)
    }

    /// `max_i X_j^i` for `m = 1`.
    pub fn s_hat(&self) -> Option<f64> {
        self.bounds.map(|b| b.1)
    }

    /// Whether every generator lies in `truth` within `tol`.
    pub fn contained_in(&self, truth: &ConvexBody, tol: f64) -> bool {
        self.hull.points().iter().all(|p| truth.is_member(p, tol))
    }
}

pub fn hull_estimate(ensemble: &PathEnsemble, j: usize) -> Result<HullEstimate, EstimationError> {
    hull_estimate_prefix(ensemble, j, ensemble.copies())
}

/// Estimate from the first `copies` copies only.
pub fn hull_estimate_prefix(ensemble: &PathEnsemble, j: usize, copies: usize) -> Result<HullEstimate, EstimationError> {
    let n = ensemble.grid().steps();
    if j == 0 || j > n {
        return Err(EstimationError::InvalidTimeIndex { j, n });
    }
    if copies == 0 || copies > ensemble.copies() {
        return Err(EstimationError::InvalidPrefix {
            requested: copies,
            available: ensemble.copies(),
        });
    }
    let points: Vec<Point> = (0..copies).map(|i| ensemble.state(i, j)).collect();
    HullEstimate::from_points(j, &points)
}

/// `max{S - S_hat, I_hat - I}` for `truth = [I, S]`.
pub fn hausdorff_error_1d(estimate: &HullEstimate, truth: &ConvexBody) -> Result<f64, EstimationError> {
    let (i_hat, s_hat) = estimate
        .bounds
        .ok_or(EstimationError::NotOneDimensional(estimate.hull.dim()))?;
    let ConvexBody::Interval(interval) = truth else {
        return Err(EstimationError::NotAnInterval);
    };
    let (lower, upper) = (interval.lo(), interval.hi());
    for value in [i_hat, s_hat] {
        if value < lower - GEOMETRIC_TOL || value > upper + GEOMETRIC_TOL {
            return Err(EstimationError::ContainmentViolated { value, lower, upper });
        }
    }
    Ok((upper - s_hat).max(i_hat - lower))
}

/// `d(x, conv{X_j^i})` to absolute accuracy `tol`.
pub fn pointwise_error(estimate: &HullEstimate, x: &Point, tol: f64) -> Result<f64, EstimationError> {
    Ok(estimate.hull.distance(x, tol)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{simulate_ensemble, ModelSpec, Multifunction, TimeGrid};
    use crate::geometry::HULL_DISTANCE_TOL;

    fn p(v: &[f64]) -> Point {
        Point::from_column_slice(v)
    }

    fn line(values: &[f64]) -> Vec<Point> {
        values.iter().map(|&v| p(&[v])).collect()
    }

    #[test]
    fn one_dimensional_endpoints() {
        let est = HullEstimate::from_points(1, &line(&[0.3, -0.7, 0.1])).unwrap();
        assert_eq!((est.i_hat(), est.s_hat()), (Some(-0.7), Some(0.3)));
        assert!(HullEstimate::from_points(0, &line(&[0.0])).is_err());
    }

    #[test]
    fn hausdorff_examples() {
        let truth = ConvexBody::interval(-1.0, 1.0).unwrap();
        let err = |v: &[f64]| hausdorff_error_1d(&HullEstimate::from_points(1, &line(v)).unwrap(), &truth);
        assert!((err(&[-0.9, 0.8]).unwrap() - 0.2).abs() < 1e-15);
        assert_eq!(err(&[-1.0, 1.0]).unwrap(), 0.0);
        assert_eq!(err(&[-1.0, 0.5]).unwrap(), 0.5);
        assert!(matches!(err(&[-1.0, 1.1]), Err(EstimationError::ContainmentViolated { .. })));
        assert_eq!(err(&[-1.0, 1.0 + 1e-10]).unwrap(), 0.0f64.max(-1e-10));
    }

    #[test]
    fn pointwise_examples() {
        let single = HullEstimate::from_points(2, &[p(&[1.0, 2.0])]).unwrap();
        assert!((pointwise_error(&single, &p(&[4.0, 6.0]), HULL_DISTANCE_TOL).unwrap() - 5.0).abs() < 1e-12);
        let tri = HullEstimate::from_points(2, &[p(&[0.0, 0.0]), p(&[1.0, 0.0]), p(&[0.0, 1.0]), p(&[0.1, 0.1])]).unwrap();
        assert_eq!(tri.hull().vertices().len(), 3);
        assert_eq!(pointwise_error(&tri, &p(&[1.0, 0.0]), HULL_DISTANCE_TOL).unwrap(), 0.0);
        let d = pointwise_error(&tri, &p(&[1.0, 1.0]), HULL_DISTANCE_TOL).unwrap();
        assert!((d - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
        assert!(hausdorff_error_1d(&tri, &ConvexBody::interval(-1.0, 1.0).unwrap()).is_err());
    }

    #[test]
    fn estimates_are_contained_and_monotone_in_n() {
        let grid = TimeGrid::new(1.0, 20).unwrap();
        let truth = ConvexBody::interval(-1.0, 1.0).unwrap();
        let mf = Multifunction::Constant(truth.clone());
        let model = ModelSpec::Ou { theta: 1.0, sigma: 0.8 }.build(p(&[0.0])).unwrap();
        let ens = simulate_ensemble(&model, &mf, &grid, 400, 3, false).unwrap();
        for j in [1, 10, 20] {
            let full = hull_estimate(&ens, j).unwrap();
            assert!(full.contained_in(&truth, GEOMETRIC_TOL));
            let mut prev = f64::INFINITY;
            for n in [1, 10, 100, 400] {
                let e = hausdorff_error_1d(&hull_estimate_prefix(&ens, j, n).unwrap(), &truth).unwrap();
                assert!(e <= prev);
                prev = e;
            }
        }
        assert!(hull_estimate(&ens, 0).is_err());
        assert!(hull_estimate(&ens, 21).is_err());
        assert!(hull_estimate_prefix(&ens, 1, 401).is_err());
    }
}
