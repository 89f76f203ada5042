use std::fmt;
use std::sync::Arc;

use rand::Rng;

use super::{rng::copy_stream, DynamicsError, TimeGrid};
use crate::geometry::{ConvexBody, Point, GEOMETRIC_TOL};

pub type BodyFn = Arc<dyn Fn(f64) -> Result<ConvexBody, DynamicsError> + Send + Sync>;

/// A time-indexed family `t -> C(t)` of convex bodies.
#[derive(Clone)]
pub enum Multifunction {
    Constant(ConvexBody),
    /// Ball of radius `r0 - rate * t` about a fixed center.
    ShrinkingBall { center: Point, r0: f64, rate: f64, horizon: f64 },
    /// Box `[lo + rate t, hi - rate t]`.
    ShrinkingBox { lo: Point, hi: Point, rate: f64, horizon: f64 },
    /// `C(t)` is the body of the last piece starting at or before `t`.
    PiecewiseConstant { pieces: Vec<(f64, ConvexBody)>, decreasing: bool },
    Custom { body: BodyFn, decreasing: bool },
}

impl fmt::Debug for Multifunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Constant(b) => f.debug_tuple("Constant").field(b).finish(),
            Self::ShrinkingBall { center, r0, rate, horizon } => f
                .debug_struct("ShrinkingBall")
                .field("center", &center.as_slice())
                .field("r0", r0)
                .field("rate", rate)
                .field("horizon", horizon)
                .finish(),
            Self::ShrinkingBox { lo, hi, rate, horizon } => f
                .debug_struct("ShrinkingBox")
                .field("lo", &lo.as_slice())
                .field("hi", &hi.as_slice())
                .field("rate", rate)
                .field("horizon", horizon)
                .finish(),
            Self::PiecewiseConstant { pieces, decreasing } => f
                .debug_struct("PiecewiseConstant")
                .field("pieces", pieces)
                .field("decreasing", decreasing)
                .finish(),
            Self::Custom { decreasing, .. } => f
                .debug_struct("Custom")
                .field("decreasing", decreasing)
                .finish_non_exhaustive(),
        }
    }
}

impl Multifunction {
    pub fn shrinking_ball(center: Point, r0: f64, rate: f64, horizon: f64) -> Result<Self, DynamicsError> {
        if !(rate.is_finite() && rate >= 0.0 && horizon.is_finite() && horizon > 0.0) {
            return Err(DynamicsError::InvalidParameter(format!(
                "shrinking ball needs rate >= 0 and horizon > 0, got {rate}, {horizon}"
            )));
        }
        if !(r0 - rate * horizon > 0.0) {
            return Err(DynamicsError::InvalidParameter(format!(
                "radius {r0} - {rate} * {horizon} must stay positive"
            )));
        }
        ConvexBody::ball(center.clone(), r0)?;
        Ok(Self::ShrinkingBall { center, r0, rate, horizon })
    }

    pub fn shrinking_box(lo: Point, hi: Point, rate: f64, horizon: f64) -> Result<Self, DynamicsError> {
        if !(rate.is_finite() && rate >= 0.0 && horizon.is_finite() && horizon > 0.0) {
            return Err(DynamicsError::InvalidParameter(format!(
                "shrinking box needs rate >= 0 and horizon > 0, got {rate}, {horizon}"
            )));
        }
        ConvexBody::axis_box(lo.add_scalar(rate * horizon), hi.add_scalar(-rate * horizon))?;
        Ok(Self::ShrinkingBox { lo, hi, rate, horizon })
    }

    /// Pieces must start at time 0 and be strictly increasing in time.
    pub fn piecewise_constant(pieces: Vec<(f64, ConvexBody)>, decreasing: bool) -> Result<Self, DynamicsError> {
        let first = pieces
            .first()
            .ok_or_else(|| DynamicsError::InvalidParameter("piecewise multifunction without pieces".into()))?;
        if first.0 != 0.0 {
            return Err(DynamicsError::InvalidParameter("first piece must start at t = 0".into()));
        }
        if pieces.windows(2).any(|w| !(w[0].0 < w[1].0)) {
            return Err(DynamicsError::InvalidParameter("piece times must be strictly increasing".into()));
        }
        let dim = first.1.dim();
        if pieces.iter().any(|p| p.1.dim() != dim) {
            return Err(DynamicsError::InvalidParameter("pieces must share one dimension".into()));
        }
        Ok(Self::PiecewiseConstant { pieces, decreasing })
    }

    pub fn custom(body: BodyFn, decreasing: bool) -> Self {
        Self::Custom { body, decreasing }
    }

    /// Declared monotone-decreasing contract `C(t) ⊆ C(s)` for `s < t`.
    pub fn decreasing(&self) -> bool {
        match self {
            Self::Constant(_) | Self::ShrinkingBall { .. } | Self::ShrinkingBox { .. } => true,
            Self::PiecewiseConstant { decreasing, .. } | Self::Custom { decreasing, .. } => *decreasing,
        }
    }

    pub fn at(&self, t: f64) -> Result<ConvexBody, DynamicsError> {
        if !(t.is_finite() && t >= 0.0) {
            return Err(DynamicsError::InvalidParameter(format!("time must be >= 0, got {t}")));
        }
        match self {
            Self::Constant(b) => Ok(b.clone()),
            Self::ShrinkingBall { center, r0, rate, horizon } => {
                check_horizon(t, *horizon)?;
                Ok(ConvexBody::ball(center.clone(), r0 - rate * t)?)
            }
            Self::ShrinkingBox { lo, hi, rate, horizon } => {
                check_horizon(t, *horizon)?;
                Ok(ConvexBody::axis_box(lo.add_scalar(rate * t), hi.add_scalar(-rate * t))?)
            }
            Self::PiecewiseConstant { pieces, .. } => {
                let k = pieces.partition_point(|p| p.0 <= t);
                Ok(pieces[k - 1].1.clone())
            }
            Self::Custom { body, .. } => body(t),
        }
    }

    /// `C(t_0), ..., C(t_n)`.
    pub fn bodies_on(&self, grid: &TimeGrid) -> Result<Vec<ConvexBody>, DynamicsError> {
        let bodies = (0..=grid.steps()).map(|j| self.at(grid.node(j))).collect::<Result<Vec<_>, _>>()?;
        let dim = bodies[0].dim();
        if bodies.iter().any(|b| b.dim() != dim) {
            return Err(DynamicsError::InvalidParameter("multifunction changes dimension over time".into()));
        }
        Ok(bodies)
    }

    /// `m_C = max_j sup_{y in C(t_j)} |y|`.
    pub fn norm_bound(&self, grid: &TimeGrid) -> Result<f64, DynamicsError> {
        Ok(self.bodies_on(grid)?.iter().map(ConvexBody::norm_bound).fold(0.0, f64::max))
    }

    /// Samples `pairs` time pairs `s < t` in `[0, horizon]` and checks that every
    /// boundary sample of `C(t)` lies in `C(s)` within [`GEOMETRIC_TOL`].
    /// Returns the first offending pair.
    pub fn check_decreasing(&self, horizon: f64, pairs: usize, seed: u64) -> Result<(), DynamicsError> {
        let mut rng = copy_stream(seed, u64::MAX - 1);
        for _ in 0..pairs {
            let a = rng.random_range(0.0..=horizon);
            let b = rng.random_range(0.0..=horizon);
            let (s, t) = if a <= b { (a, b) } else { (b, a) };
            let outer = self.at(s)?;
            let inner = self.at(t)?;
            if inner.boundary_samples(64).iter().any(|y| !outer.is_member(y, GEOMETRIC_TOL)) {
                return Err(DynamicsError::NotDecreasing { s, t });
            }
        }
        Ok(())
    }
}

fn check_horizon(t: f64, horizon: f64) -> Result<(), DynamicsError> {
    if t > horizon * (1.0 + 1e-12) {
        Err(DynamicsError::InvalidParameter(format!("time {t} beyond horizon {horizon}")))
    } else {
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(v: &[f64]) -> Point {
        Point::from_column_slice(v)
    }

    #[test]
    fn builtins_are_decreasing() {
        let mfs = [
            Multifunction::Constant(ConvexBody::interval(-1.0, 1.0).unwrap()),
            Multifunction::shrinking_ball(p(&[0.0, 0.0]), 1.2, 0.2, 1.0).unwrap(),
            Multifunction::shrinking_box(p(&[-1.0, -1.0]), p(&[1.0, 2.0]), 0.3, 1.0).unwrap(),
        ];
        for mf in &mfs {
            assert!(mf.decreasing());
            mf.check_decreasing(1.0, 100, 5).unwrap();
        }
    }

    #[test]
    fn growing_piecewise_family_is_caught() {
        let mf = Multifunction::piecewise_constant(
            vec![
                (0.0, ConvexBody::interval(-1.0, 1.0).unwrap()),
                (0.5, ConvexBody::interval(-2.0, 2.0).unwrap()),
            ],
            true,
        )
        .unwrap();
        assert!(matches!(mf.check_decreasing(1.0, 100, 0), Err(DynamicsError::NotDecreasing { .. })));
        assert_eq!(mf.at(0.49).unwrap(), ConvexBody::interval(-1.0, 1.0).unwrap());
        assert_eq!(mf.at(0.5).unwrap(), ConvexBody::interval(-2.0, 2.0).unwrap());
    }

    #[test]
    fn shrinking_ball_radius_and_bound() {
        let grid = TimeGrid::new(1.0, 20).unwrap();
        let mf = Multifunction::shrinking_ball(p(&[0.0, 0.0]), 1.2, 0.2, 1.0).unwrap();
        let bodies = mf.bodies_on(&grid).unwrap();
        assert_eq!(bodies.len(), 21);
        assert!((bodies[20].inradius() - 1.0).abs() < 1e-15);
        assert_eq!(mf.norm_bound(&grid).unwrap(), 1.2);
        assert!(Multifunction::shrinking_ball(p(&[0.0]), 1.0, 1.0, 1.0).is_err());
        assert!(mf.at(2.0).is_err());
    }

    #[test]
    fn piecewise_validation() {
        let body = ConvexBody::interval(-1.0, 1.0).unwrap();
        assert!(Multifunction::piecewise_constant(vec![], true).is_err());
        assert!(Multifunction::piecewise_constant(vec![(0.1, body.clone())], true).is_err());
        assert!(Multifunction::piecewise_constant(vec![(0.0, body.clone()), (0.0, body)], true).is_err());
    }
}
