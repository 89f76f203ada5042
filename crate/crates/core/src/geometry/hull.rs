use std::cmp::Ordering;

use super::{check_dim, min_norm_point, GeometryError, Point, MIN_NORM_MAX_ITERATIONS};

/// Convex hull of a finite cloud.
///
/// `vertices` are the extreme points for `m = 1` (min and max) and `m = 2`
/// (counterclockwise from the lexicographically smallest point, collinear
/// boundary points dropped). For `m >= 3` every input point is kept as a
/// generator and nothing is claimed about extremality.
#[derive(Debug, Clone, PartialEq)]
pub struct Hull {
    dim: usize,
    points: Vec<Point>,
    vertices: Vec<Point>,
}

impl Hull {
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// The generating cloud.
    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn distance(&self, x: &Point, tol: f64) -> Result<f64, GeometryError> {
        distance_to_hull(self, x, tol)
    }
}

pub fn convex_hull(points: &[Point]) -> Result<Hull, GeometryError> {
    let dim = points.first().ok_or(GeometryError::EmptyPointSet)?.len();
    if dim == 0 {
        return Err(GeometryError::InvalidBody("points of dimension 0".into()));
    }
    for p in points {
        check_dim(dim, p)?;
    }
    let vertices = match dim {
        1 => {
            let lo = points.iter().map(|p| p[0]).fold(f64::INFINITY, f64::min);
            let hi = points.iter().map(|p| p[0]).fold(f64::NEG_INFINITY, f64::max);
            if lo == hi {
                vec![Point::from_element(1, lo)]
            } else {
                vec![Point::from_element(1, lo), Point::from_element(1, hi)]
            }
        }
        2 => monotone_chain(points)
            .into_iter()
            .map(|[x, y]| Point::from_vec(vec![x, y]))
            .collect(),
        _ => points.to_vec(),
    };
    Ok(Hull {
        dim,
        points: points.to_vec(),
        vertices,
    })
}

/// Distance from `x` to the hull: exact for `m <= 2`, otherwise the
/// min-norm-point solver run to absolute accuracy `tol`.
pub fn distance_to_hull(hull: &Hull, x: &Point, tol: f64) -> Result<f64, GeometryError> {
    if !(tol > 0.0) {
        return Err(GeometryError::NonPositiveTolerance(tol));
    }
    check_dim(hull.dim, x)?;
    Ok(match hull.dim {
        1 => {
            let lo = hull.vertices[0][0];
            let hi = hull.vertices[hull.vertices.len() - 1][0];
            (lo - x[0]).max(x[0] - hi).max(0.0)
        }
        2 => polygon_distance(&hull.vertices, [x[0], x[1]]),
        _ => min_norm_point(&hull.vertices, x, tol, MIN_NORM_MAX_ITERATIONS)?.distance,
    })
}

fn cross(o: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

fn monotone_chain(points: &[Point]) -> Vec<[f64; 2]> {
    let mut pts: Vec<[f64; 2]> = points.iter().map(|p| [p[0], p[1]]).collect();
    pts.sort_by(|a, b| match a[0].total_cmp(&b[0]) {
        Ordering::Equal => a[1].total_cmp(&b[1]),
        o => o,
    });
    pts.dedup();
    if pts.len() <= 2 {
        return pts;
    }
    let mut lower: Vec<[f64; 2]> = Vec::with_capacity(pts.len());
    for &p in &pts {
        while lower.len() >= 2 && cross(lower[lower.len() - 2], lower[lower.len() - 1], p) <= 0.0 {
            lower.pop();
        }
        lower.push(p);
    }
    let mut upper: Vec<[f64; 2]> = Vec::with_capacity(pts.len());
    for &p in pts.iter().rev() {
        while upper.len() >= 2 && cross(upper[upper.len() - 2], upper[upper.len() - 1], p) <= 0.0 {
            upper.pop();
        }
        upper.push(p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

fn segment_distance(a: [f64; 2], b: [f64; 2], x: [f64; 2]) -> f64 {
    let ab = [b[0] - a[0], b[1] - a[1]];
    let ax = [x[0] - a[0], x[1] - a[1]];
    let len_sq = ab[0] * ab[0] + ab[1] * ab[1];
    let t = if len_sq > 0.0 {
        ((ax[0] * ab[0] + ax[1] * ab[1]) / len_sq).clamp(0.0, 1.0)
    } else {
        0.0
    };
    (ax[0] - t * ab[0]).hypot(ax[1] - t * ab[1])
}

/// Distance to a convex polygon given counterclockwise (1 or 2 vertices
/// degenerate to a point or a segment).
fn polygon_distance(vertices: &[Point], x: [f64; 2]) -> f64 {
    let v: Vec<[f64; 2]> = vertices.iter().map(|p| [p[0], p[1]]).collect();
    match v.len() {
        1 => (x[0] - v[0][0]).hypot(x[1] - v[0][1]),
        2 => segment_distance(v[0], v[1], x),
        k => {
            let inside = (0..k).all(|i| cross(v[i], v[(i + 1) % k], x) >= 0.0);
            if inside {
                0.0
            } else {
                (0..k)
                    .map(|i| segment_distance(v[i], v[(i + 1) % k], x))
                    .fold(f64::INFINITY, f64::min)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn pts(raw: &[[f64; 2]]) -> Vec<Point> {
        raw.iter().map(|p| Point::from_vec(p.to_vec())).collect()
    }

    #[test]
    fn one_dimensional_hull_is_min_max() {
        let cloud: Vec<Point> = [0.3, -0.7, 0.1].iter().map(|&v| Point::from_element(1, v)).collect();
        let hull = convex_hull(&cloud).unwrap();
        assert_eq!(hull.vertices(), &[Point::from_element(1, -0.7), Point::from_element(1, 0.3)]);
        assert_eq!(hull.distance(&Point::from_element(1, 0.0), 1e-7).unwrap(), 0.0);
        assert_abs_diff_eq!(hull.distance(&Point::from_element(1, 1.0), 1e-7).unwrap(), 0.7);
    }

    #[test]
    fn interior_point_is_dropped() {
        let hull = convex_hull(&pts(&[[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [0.2, 0.2]])).unwrap();
        assert_eq!(hull.vertices(), pts(&[[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]).as_slice());
    }

    #[test]
    fn circle_points_are_all_extreme() {
        let raw: Vec<[f64; 2]> = (0..8)
            .map(|k| {
                let a = k as f64 * std::f64::consts::FRAC_PI_4;
                [a.cos(), a.sin()]
            })
            .collect();
        assert_eq!(convex_hull(&pts(&raw)).unwrap().vertices().len(), 8);
    }

    #[test]
    fn collinear_and_duplicate_points() {
        let hull = convex_hull(&pts(&[[2.0, 0.0], [0.0, 0.0], [1.0, 0.0], [1.0, 0.0]])).unwrap();
        assert_eq!(hull.vertices(), pts(&[[0.0, 0.0], [2.0, 0.0]]).as_slice());
        assert_abs_diff_eq!(hull.distance(&Point::from_vec(vec![1.0, 1.0]), 1e-7).unwrap(), 1.0);
        let single = convex_hull(&pts(&[[0.5, 0.5], [0.5, 0.5]])).unwrap();
        assert_eq!(single.vertices().len(), 1);
        // collinear boundary point on a square edge is dropped
        let sq = convex_hull(&pts(&[[0.0, 0.0], [0.5, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])).unwrap();
        assert_eq!(sq.vertices().len(), 4);
    }

    #[test]
    fn triangle_distance() {
        let hull = convex_hull(&pts(&[[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])).unwrap();
        let d = hull.distance(&Point::from_vec(vec![1.0, 1.0]), 1e-7).unwrap();
        assert_abs_diff_eq!(d, std::f64::consts::FRAC_1_SQRT_2, epsilon = 1e-15);
        let sq = convex_hull(&pts(&[[1.0, 1.0], [-1.0, 1.0], [-1.0, -1.0], [1.0, -1.0]])).unwrap();
        assert_eq!(sq.distance(&Point::zeros(2), 1e-7).unwrap(), 0.0);
    }

    #[test]
    fn errors() {
        assert_eq!(convex_hull(&[]), Err(GeometryError::EmptyPointSet));
        let mixed = vec![Point::zeros(2), Point::zeros(3)];
        assert!(matches!(convex_hull(&mixed), Err(GeometryError::DimensionMismatch { .. })));
        let hull = convex_hull(&pts(&[[0.0, 0.0]])).unwrap();
        assert!(hull.distance(&Point::zeros(2), 0.0).is_err());
    }

    #[test]
    fn high_dimensional_hull_keeps_generators() {
        let cube: Vec<Point> = (0..8)
            .map(|mask: u32| Point::from_fn(3, |k, _| f64::from(mask >> k & 1)))
            .collect();
        let hull = convex_hull(&cube).unwrap();
        assert_eq!(hull.vertices().len(), 8);
        let d = hull.distance(&Point::from_vec(vec![2.0, 2.0, 0.5]), 1e-7).unwrap();
        assert_abs_diff_eq!(d, 2f64.sqrt(), epsilon = 1e-6);
        assert!(hull.distance(&Point::from_element(3, 0.5), 1e-7).unwrap() <= 1e-6);
    }
}
