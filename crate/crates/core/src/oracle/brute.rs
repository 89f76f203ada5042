use super::OracleError;
use crate::geometry::{ConvexBody, Point};

/// Cap on grid points per axis in one refinement window.
const MAX_POINTS_PER_AXIS: usize = 1024;
const MAX_LEVELS: usize = 40;

/// Nearest feasible point of a grid search, using only the body's membership
/// predicate. The first level is the grid of spacing `resolution` over the
/// bounding box. Its argmin drifts along a curved or slanted boundary by
/// about `(h^2 d)^(1/3)` for spacing `h` and distance `d`, far more than `h`,
/// so the search is repeated on finer grids around the incumbent until twice
/// that drift is below `resolution * sqrt(m)`.
pub fn brute_force_projection(body: &ConvexBody, x: &Point, resolution: f64) -> Result<Point, OracleError> {
    let m = body.dim();
    if m > 2 {
        return Err(OracleError::UnsupportedDimension(m));
    }
    if x.len() != m {
        return Err(OracleError::InvalidParameter(format!("query of dimension {}, body of dimension {m}", x.len())));
    }
    if !(resolution.is_finite() && resolution > 0.0) {
        return Err(OracleError::InvalidParameter(format!("resolution must be positive, got {resolution}")));
    }
    let (lo, hi) = body.bounding_box();
    let target = resolution * (m as f64).sqrt();
    let mut best = grid_argmin(body, x, &lo, &hi, resolution)?.ok_or(OracleError::NoFeasiblePoint { resolution })?;
    let mut h = resolution;
    for _ in 0..MAX_LEVELS {
        let d_hat = (x - &best).norm().max(h);
        let drift = |h: f64| 2.0 * (h * h * d_hat).cbrt();
        if drift(h) <= target {
            return Ok(best);
        }
        let half = drift(h) + h;
        let h_target = ((target / 4.0).powi(3) / d_hat).sqrt();
        h = h_target.max(2.0 * half / MAX_POINTS_PER_AXIS as f64).min(h / 2.0);
        let wlo = best.add_scalar(-half);
        let whi = best.add_scalar(half);
        if let Some(p) = grid_argmin(body, x, &wlo, &whi, h)? {
            if (x - &p).norm() < (x - &best).norm() {
                best = p;
            }
        }
    }
    Err(OracleError::Unresolved { resolution })
}

fn grid_argmin(body: &ConvexBody, x: &Point, lo: &Point, hi: &Point, h: f64) -> Result<Option<Point>, OracleError> {
    let m = lo.len();
    let counts: Vec<usize> = (0..m).map(|k| ((hi[k] - lo[k]) / h).floor() as usize + 1).collect();
    if counts.iter().product::<usize>() > 64 * MAX_POINTS_PER_AXIS * MAX_POINTS_PER_AXIS {
        return Err(OracleError::InvalidParameter(format!("grid of spacing {h} is too large")));
    }
    let mut best: Option<(f64, Point)> = None;
    let mut y = lo.clone();
    let total: usize = counts.iter().product();
    for flat in 0..total {
        let mut rest = flat;
        for k in 0..m {
            y[k] = lo[k] + (rest % counts[k]) as f64 * h;
            rest /= counts[k];
        }
        if body.is_member(&y, 0.0) {
            let d = (x - &y).norm_squared();
            if best.as_ref().is_none_or(|b| d < b.0) {
                best = Some((d, y.clone()));
            }
        }
    }
    Ok(best.map(|b| b.1))
}

fn cross(o: &Point, a: &Point, b: &Point) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

fn segment_distance(a: &Point, b: &Point, x: &Point) -> f64 {
    let ab = b - a;
    let len_sq = ab.norm_squared();
    let t = if len_sq > 0.0 { ((x - a).dot(&ab) / len_sq).clamp(0.0, 1.0) } else { 0.0 };
    (x - (a + ab * t)).norm()
}

/// Distance from `x` to `conv(points)` for planar clouds of at most 12 points,
/// without building a hull: zero if `x` lies in a triangle of cloud points,
/// otherwise the smallest distance to a segment between two cloud points.
/// `grid_per_axis` is reserved for a sampling oracle in higher dimension.
pub fn brute_force_hull_distance(points: &[Point], x: &Point, _grid_per_axis: usize) -> Result<f64, OracleError> {
    if points.is_empty() {
        return Err(OracleError::InvalidParameter("empty cloud".into()));
    }
    if x.len() != 2 || points.iter().any(|p| p.len() != 2) {
        return Err(OracleError::UnsupportedDimension(x.len()));
    }
    if points.len() > 12 {
        return Err(OracleError::InvalidParameter(format!("at most 12 points, got {}", points.len())));
    }
    let k = points.len();
    for a in 0..k {
        for b in a + 1..k {
            for c in b + 1..k {
                let (pa, pb, pc) = (&points[a], &points[b], &points[c]);
                let s = [cross(pa, pb, x), cross(pb, pc, x), cross(pc, pa, x)];
                let nondegenerate = cross(pa, pb, pc) != 0.0;
                if nondegenerate && (s.iter().all(|&v| v >= 0.0) || s.iter().all(|&v| v <= 0.0)) {
                    return Ok(0.0);
                }
            }
        }
    }
    let mut best = points.iter().map(|p| (x - p).norm()).fold(f64::INFINITY, f64::min);
    for a in 0..k {
        for b in a + 1..k {
            best = best.min(segment_distance(&points[a], &points[b], x));
        }
    }
    Ok(best)
}

/// Fraction of `samples` at or below `x`.
pub fn empirical_cdf(samples: &[f64], x: f64) -> Result<f64, OracleError> {
    if samples.is_empty() {
        return Err(OracleError::InvalidParameter("empirical cdf of no samples".into()));
    }
    Ok(samples.iter().filter(|&&s| s <= x).count() as f64 / samples.len() as f64)
}

/// Empirical distribution function over a sorted copy of the samples, for
/// repeated evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalCdf {
    sorted: Vec<f64>,
}

impl EmpiricalCdf {
    pub fn new(samples: &[f64]) -> Result<Self, OracleError> {
        if samples.is_empty() || samples.iter().any(|s| s.is_nan()) {
            return Err(OracleError::InvalidParameter("samples must be nonempty and not NaN".into()));
        }
        let mut sorted = samples.to_vec();
        sorted.sort_by(f64::total_cmp);
        Ok(Self { sorted })
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.sorted.partition_point(|&s| s <= x) as f64 / self.sorted.len() as f64
    }

    pub fn samples(&self) -> &[f64] {
        &self.sorted
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{DMatrix, DVector};

    fn p(v: &[f64]) -> Point {
        Point::from_column_slice(v)
    }

    #[test]
    fn projection_oracle_examples() {
        let square = ConvexBody::cube_polytope(2, 0.0, 1.0).unwrap();
        let q = brute_force_projection(&square, &p(&[2.0, 0.5]), 1e-3).unwrap();
        assert!((q - p(&[1.0, 0.5])).norm() <= 2e-3);
        let inside = p(&[0.3337, 0.6123]);
        let q = brute_force_projection(&square, &inside, 1e-3).unwrap();
        assert!((q - &inside).norm() <= 1e-3 * 2f64.sqrt());
        let ball = ConvexBody::ball(p(&[0.0, 0.0]), 1.0).unwrap();
        let q = brute_force_projection(&ball, &p(&[3.0, 4.0]), 1e-3).unwrap();
        assert!((q - p(&[0.6, 0.8])).norm() <= 2e-3);
        let interval = ConvexBody::interval(-1.0, 1.0).unwrap();
        let q = brute_force_projection(&interval, &p(&[2.0]), 1e-3).unwrap();
        assert!((q[0] - 1.0).abs() <= 1e-3);
    }

    #[test]
    fn tilted_edge_is_resolved() {
        // triangle with a slanted hypotenuse: a single grid argmin drifts along it
        let normals = DMatrix::from_row_slice(3, 2, &[-1.0, 0.0, 0.0, -1.0, 1.0, 0.37]);
        let offsets = DVector::from_vec(vec![0.0, 0.0, 1.0]);
        let tri = ConvexBody::hpolytope(&normals, &offsets).unwrap();
        let x = p(&[1.5, 1.5]);
        let exact = tri.project(&x).unwrap();
        let q = brute_force_projection(&tri, &x, 5e-3).unwrap();
        assert!((q - exact).norm() <= 5e-3 * 2f64.sqrt());
    }

    #[test]
    fn oracle_errors() {
        let cube = ConvexBody::cube_polytope(3, 0.0, 1.0).unwrap();
        assert!(matches!(
            brute_force_projection(&cube, &p(&[0.0, 0.0, 0.0]), 0.1),
            Err(OracleError::UnsupportedDimension(3))
        ));
        let interval = ConvexBody::interval(0.0, 1.0).unwrap();
        assert!(brute_force_projection(&interval, &p(&[0.5]), 0.0).is_err());
        assert!(matches!(
            brute_force_projection(&ConvexBody::ball(p(&[0.0, 0.0]), 1.0).unwrap(), &p(&[0.5, 0.0]), 2.5),
            Err(OracleError::NoFeasiblePoint { .. })
        ));
    }

    #[test]
    fn hull_distance_oracle_examples() {
        let tri = [p(&[0.0, 0.0]), p(&[1.0, 0.0]), p(&[0.0, 1.0])];
        let d = brute_force_hull_distance(&tri, &p(&[1.0, 1.0]), 0).unwrap();
        assert!((d - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15);
        assert_eq!(brute_force_hull_distance(&tri, &p(&[0.2, 0.2]), 0).unwrap(), 0.0);
        let line = [p(&[0.0, 0.0]), p(&[1.0, 0.0]), p(&[2.0, 0.0])];
        assert_eq!(brute_force_hull_distance(&line, &p(&[1.0, 1.0]), 0).unwrap(), 1.0);
        assert!(brute_force_hull_distance(&[p(&[0.0])], &p(&[0.0]), 0).is_err());
    }

    #[test]
    fn empirical_cdf_examples() {
        let s = [1.0, 2.0, 3.0];
        assert!((empirical_cdf(&s, 2.0).unwrap() - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(empirical_cdf(&s, 0.0).unwrap(), 0.0);
        assert_eq!(empirical_cdf(&s, 4.0).unwrap(), 1.0);
        let e = EmpiricalCdf::new(&[3.0, 1.0, 2.0, 2.0]).unwrap();
        assert_eq!(e.eval(2.0), 0.75);
        assert_eq!(e.eval(1.9), 0.25);
        assert!(empirical_cdf(&[], 0.0).is_err());
    }
}
