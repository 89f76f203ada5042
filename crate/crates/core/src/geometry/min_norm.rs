use super::{check_dim, GeometryError, Point};

/// Closest point of `conv(generators)` to a query, with its convex weights.
#[derive(Debug, Clone, PartialEq)]
pub struct MinNormPoint {
    pub point: Point,
    /// `(generator index, weight)` for every generator with positive weight.
    pub weights: Vec<(usize, f64)>,
    pub distance: f64,
    /// Frank-Wolfe duality gap at termination.
    pub gap: f64,
    pub iterations: usize,
}

/// Minimizes `|x - sum_i w_i v_i|^2 / 2` over the simplex by Frank-Wolfe with
/// away steps and exact line search. Stops once the duality gap is at most
/// `tol^2`, which bounds the distance error by roughly `tol`.
pub fn min_norm_point(
    generators: &[Point],
    x: &Point,
    tol: f64,
    max_iterations: usize,
) -> Result<MinNormPoint, GeometryError> {
    if !(tol > 0.0) {
        return Err(GeometryError::NonPositiveTolerance(tol));
    }
    let first = generators.first().ok_or(GeometryError::EmptyPointSet)?;
    let dim = first.len();
    check_dim(dim, x)?;
    for g in generators {
        check_dim(dim, g)?;
    }
    let target_gap = tol * tol;

    let start = generators
        .iter()
        .enumerate()
        .map(|(i, g)| (i, (g - x).norm_squared()))
        .fold((0, f64::INFINITY), |acc, c| if c.1 < acc.1 { c } else { acc })
        .0;
    let mut weights = vec![0.0; generators.len()];
    weights[start] = 1.0;
    let mut active = vec![start];
    let mut point = generators[start].clone();
    let mut gap = f64::INFINITY;

    for iteration in 0..max_iterations {
        if iteration % 64 == 63 {
            point = active
                .iter()
                .fold(Point::zeros(dim), |acc, &i| acc + &generators[i] * weights[i]);
        }
        let grad = &point - x;
        let grad_at_point = grad.dot(&point);
        let (fw, fw_value) = generators
            .iter()
            .enumerate()
            .map(|(i, g)| (i, grad.dot(g)))
            .fold((0, f64::INFINITY), |acc, c| if c.1 < acc.1 { c } else { acc });
        gap = grad_at_point - fw_value;
        if gap <= target_gap {
            return Ok(finish(point, x, &weights, &active, gap, iteration));
        }
        let (away, away_value) = active
            .iter()
            .map(|&i| (i, grad.dot(&generators[i])))
            .fold((0, f64::NEG_INFINITY), |acc, c| if c.1 > acc.1 { c } else { acc });
        let away_gap = away_value - grad_at_point;

        let (direction, max_step, toward) = if gap >= away_gap || active.len() == 1 {
            (&generators[fw] - &point, 1.0, true)
        } else {
            let w = weights[away];
            (&point - &generators[away], w / (1.0 - w), false)
        };
        let curvature = direction.norm_squared();
        if curvature == 0.0 {
            return Ok(finish(point, x, &weights, &active, gap, iteration));
        }
        let step = (-grad.dot(&direction) / curvature).clamp(0.0, max_step);
        point.axpy(step, &direction, 1.0);
        if toward {
            for &i in &active {
                weights[i] *= 1.0 - step;
            }
            if weights[fw] == 0.0 && !active.contains(&fw) {
                active.push(fw);
            }
            weights[fw] += step;
            if step >= 1.0 {
                for &i in &active {
                    weights[i] = 0.0;
                }
                weights[fw] = 1.0;
                active = vec![fw];
            }
        } else {
            for &i in &active {
                weights[i] *= 1.0 + step;
            }
            weights[away] -= step;
            if step >= max_step {
                weights[away] = 0.0;
            }
        }
        active.retain(|&i| weights[i] > 0.0);
    }
    Err(GeometryError::SolverDidNotConverge {
        iterations: max_iterations,
        gap,
    })
}

fn finish(
    point: Point,
    x: &Point,
    weights: &[f64],
    active: &[usize],
    gap: f64,
    iterations: usize,
) -> MinNormPoint {
    let mut pairs: Vec<(usize, f64)> = active.iter().map(|&i| (i, weights[i])).collect();
    pairs.sort_by_key(|&(i, _)| i);
    MinNormPoint {
        distance: (x - &point).norm(),
        point,
        weights: pairs,
        gap: gap.max(0.0),
        iterations,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn pts(raw: &[&[f64]]) -> Vec<Point> {
        raw.iter().map(|p| Point::from_column_slice(p)).collect()
    }

    #[test]
    fn triangle_edge_projection() {
        let gens = pts(&[&[0.0, 0.0], &[1.0, 0.0], &[0.0, 1.0]]);
        let res = min_norm_point(&gens, &Point::from_vec(vec![1.0, 1.0]), 1e-7, 10_000).unwrap();
        assert_abs_diff_eq!(res.distance, std::f64::consts::FRAC_1_SQRT_2, epsilon = 1e-7);
        assert_abs_diff_eq!(res.point[0], 0.5, epsilon = 1e-6);
        let total: f64 = res.weights.iter().map(|w| w.1).sum();
        assert_abs_diff_eq!(total, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn interior_query_reaches_zero() {
        let gens = pts(&[&[-1.0, -1.0], &[1.0, -1.0], &[1.0, 1.0], &[-1.0, 1.0]]);
        let res = min_norm_point(&gens, &Point::from_vec(vec![0.3, -0.2]), 1e-7, 100_000).unwrap();
        assert!(res.distance <= 2e-7, "distance {}", res.distance);
    }

    #[test]
    fn singleton_and_vertex_queries() {
        let gens = pts(&[&[2.0, 3.0]]);
        let res = min_norm_point(&gens, &Point::from_vec(vec![5.0, 7.0]), 1e-7, 10).unwrap();
        assert_abs_diff_eq!(res.distance, 5.0);
        let gens = pts(&[&[0.0, 0.0, 0.0], &[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0], &[0.0, 0.0, 1.0]]);
        let res = min_norm_point(&gens, &Point::from_vec(vec![0.0, 1.0, 0.0]), 1e-7, 10_000).unwrap();
        assert!(res.distance <= 1e-7);
    }

    #[test]
    fn iteration_cap_reports_gap() {
        let gens = pts(&[&[-1.0, -1.0], &[1.0, -1.0], &[1.0, 1.0], &[-1.0, 1.0]]);
        let err = min_norm_point(&gens, &Point::from_vec(vec![0.1, 0.05]), 1e-9, 1).unwrap_err();
        assert!(matches!(err, GeometryError::SolverDidNotConverge { iterations: 1, .. }));
    }
}
