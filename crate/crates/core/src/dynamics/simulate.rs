use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{gaussian_increments, DynamicsError, Multifunction, SdeModel};
use crate::geometry::{ConvexBody, Point, GEOMETRIC_TOL};

/// Equally spaced nodes `t_j = j T / n`, `j = 0..=n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    horizon: f64,
    steps: usize,
}

impl TimeGrid {
    pub fn new(horizon: f64, steps: usize) -> Result<Self, DynamicsError> {
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(DynamicsError::InvalidParameter(format!("horizon must be positive, got {horizon}")));
        }
        if steps == 0 {
            return Err(DynamicsError::InvalidParameter("the grid needs at least one step".into()));
        }
        Ok(Self { horizon, steps })
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn delta(&self) -> f64 {
        self.horizon / self.steps as f64
    }

    pub fn node(&self, j: usize) -> f64 {
        j as f64 * self.horizon / self.steps as f64
    }
}

/// One projected Euler step: `h = x + b(x) delta + sigma(x) z` and
/// `x_next = P_{body_next}(h)`.
pub fn euler_step(
    model: &SdeModel,
    body_next: &ConvexBody,
    x: &Point,
    z: &Point,
    delta: f64,
) -> Result<(Point, Point), DynamicsError> {
    let sigma = model.sigma(x)?;
    let mut h = sigma * z;
    h.axpy(delta, &model.drift(x), 1.0);
    h += x;
    let x_next = body_next.project(&h)?;
    Ok((h, x_next))
}

/// A single trajectory. `h[0]` repeats `x0`; `h[j]` for `j >= 1` is the
/// pre-projection point of step `j`.
#[derive(Debug, Clone, PartialEq)]
pub struct Path {
    pub states: Vec<Point>,
    pub h: Option<Vec<Point>>,
}

pub fn simulate_path(
    model: &SdeModel,
    mf: &Multifunction,
    grid: &TimeGrid,
    seed: u64,
    copy_index: u64,
    keep_h: bool,
) -> Result<Path, DynamicsError> {
    let bodies = mf.bodies_on(grid)?;
    check_start(model, &bodies)?;
    run_path(model, &bodies, grid, seed, copy_index, keep_h)
}

fn check_start(model: &SdeModel, bodies: &[ConvexBody]) -> Result<(), DynamicsError> {
    if bodies[0].dim() != model.dim() {
        return Err(DynamicsError::InvalidParameter(format!(
            "model dimension {} but multifunction dimension {}",
            model.dim(),
            bodies[0].dim()
        )));
    }
    let distance = bodies[0].distance(model.x0())?;
    if distance > GEOMETRIC_TOL {
        return Err(DynamicsError::InitialPointOutside { distance });
    }
    Ok(())
}

fn run_path(
    model: &SdeModel,
    bodies: &[ConvexBody],
    grid: &TimeGrid,
    seed: u64,
    copy_index: u64,
    keep_h: bool,
) -> Result<Path, DynamicsError> {
    let n = grid.steps();
    let m = model.dim();
    let delta = grid.delta();
    let z = gaussian_increments(seed, copy_index, n, m, delta)?;
    let mut states = Vec::with_capacity(n + 1);
    let mut hs = keep_h.then(|| {
        let mut v = Vec::with_capacity(n + 1);
        v.push(model.x0().clone());
        v
    });
    states.push(model.x0().clone());
    for j in 0..n {
        let zj = Point::from_fn(m, |k, _| z[(j, k)]);
        let (h, next) = euler_step(model, &bodies[j + 1], &states[j], &zj, delta).map_err(|e| {
            DynamicsError::Step {
                step: j,
                source: Box::new(e),
            }
        })?;
        if let Some(hs) = hs.as_mut() {
            hs.push(h);
        }
        states.push(next);
    }
    Ok(Path { states, h: hs })
}

/// `N` independent copies; copy `i` (0-based) draws from stream `(seed, i)`.
/// States are stored flat as `[copy][j][coordinate]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PathEnsemble {
    grid: TimeGrid,
    dim: usize,
    copies: usize,
    seed: u64,
    states: Vec<f64>,
    h: Option<Vec<f64>>,
}

impl PathEnsemble {
    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn copies(&self) -> usize {
        self.copies
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn has_h(&self) -> bool {
        self.h.is_some()
    }

    fn offset(&self, copy: usize, j: usize) -> usize {
        assert!(copy < self.copies && j <= self.grid.steps(), "ensemble index ({copy}, {j}) out of range");
        (copy * (self.grid.steps() + 1) + j) * self.dim
    }

    pub fn state(&self, copy: usize, j: usize) -> Point {
        let o = self.offset(copy, j);
        Point::from_column_slice(&self.states[o..o + self.dim])
    }

    /// Pre-projection point `H_j` of copy `copy`, if stored.
    pub fn h(&self, copy: usize, j: usize) -> Option<Point> {
        let o = self.offset(copy, j);
        self.h.as_ref().map(|h| Point::from_column_slice(&h[o..o + self.dim]))
    }

    /// `X_j^1, ..., X_j^N`.
    pub fn states_at(&self, j: usize) -> Vec<Point> {
        (0..self.copies).map(|i| self.state(i, j)).collect()
    }

    pub fn h_at(&self, j: usize) -> Option<Vec<Point>> {
        self.h.as_ref()?;
        Some((0..self.copies).map(|i| self.h(i, j).unwrap()).collect())
    }

    /// Brownian increments of copy `copy`, regenerated from its stream.
    pub fn increments(&self, copy: usize) -> DMatrix<f64> {
        gaussian_increments(self.seed, copy as u64, self.grid.steps(), self.dim, self.grid.delta())
            .expect("grid parameters were validated")
    }
}

pub fn simulate_ensemble(
    model: &SdeModel,
    mf: &Multifunction,
    grid: &TimeGrid,
    copies: usize,
    seed: u64,
    keep_h: bool,
) -> Result<PathEnsemble, DynamicsError> {
    let bodies = mf.bodies_on(grid)?;
    simulate_ensemble_on(model, &bodies, grid, copies, seed, keep_h)
}

/// As [`simulate_ensemble`] with `C(t_0), ..., C(t_n)` already evaluated.
pub fn simulate_ensemble_on(
    model: &SdeModel,
    bodies: &[ConvexBody],
    grid: &TimeGrid,
    copies: usize,
    seed: u64,
    keep_h: bool,
) -> Result<PathEnsemble, DynamicsError> {
    if copies == 0 {
        return Err(DynamicsError::InvalidParameter("an ensemble needs at least one copy".into()));
    }
    if bodies.len() != grid.steps() + 1 {
        return Err(DynamicsError::InvalidParameter(format!(
            "{} bodies for {} grid nodes",
            bodies.len(),
            grid.steps() + 1
        )));
    }
    check_start(model, bodies)?;
    let paths: Vec<Result<Path, DynamicsError>> = (0..copies)
        .into_par_iter()
        .map(|i| run_path(model, bodies, grid, seed, i as u64, keep_h))
        .collect();
    let m = model.dim();
    let len = copies * (grid.steps() + 1) * m;
    let mut states = Vec::with_capacity(len);
    let mut h = keep_h.then(|| Vec::with_capacity(len));
    for (i, path) in paths.into_iter().enumerate() {
        let path = path.map_err(|e| DynamicsError::Copy {
            copy: i,
            source: Box::new(e),
        })?;
        for x in &path.states {
            states.extend_from_slice(x.as_slice());
        }
        if let (Some(h), Some(ph)) = (h.as_mut(), path.h.as_ref()) {
            for x in ph {
                h.extend_from_slice(x.as_slice());
            }
        }
    }
    Ok(PathEnsemble {
        grid: *grid,
        dim: m,
        copies,
        seed,
        states,
        h,
    })
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::dynamics::ModelSpec;

    fn p(v: &[f64]) -> Point {
        Point::from_column_slice(v)
    }

    fn unit_model(x0: f64) -> SdeModel {
        ModelSpec::Brownian { sigma: 1.0 }.build(p(&[x0])).unwrap()
    }

    #[test]
    fn grid_nodes_are_exact() {
        let g = TimeGrid::new(1.0, 3).unwrap();
        assert_eq!(g.node(3), 1.0);
        assert_eq!(g.node(1), 1.0 / 3.0);
        assert!(TimeGrid::new(0.0, 3).is_err());
        assert!(TimeGrid::new(1.0, 0).is_err());
    }

    #[test]
    fn euler_step_examples() {
        let interval = ConvexBody::interval(-1.0, 1.0).unwrap();
        let (h, x) = euler_step(&unit_model(0.0), &interval, &p(&[0.0]), &p(&[0.3]), 0.01).unwrap();
        assert_eq!((h[0], x[0]), (0.3, 0.3));
        let (h, x) = euler_step(&unit_model(0.0), &interval, &p(&[0.9]), &p(&[0.5]), 0.01).unwrap();
        assert!((h[0] - 1.4).abs() < 1e-15);
        assert_eq!(x[0], 1.0);

        let ou = ModelSpec::Ou { theta: 1.0, sigma: 1.0 }.build(p(&[1.0, 0.0])).unwrap();
        let ball = ConvexBody::ball(p(&[0.0, 0.0]), 1.0).unwrap();
        let (h, x) = euler_step(&ou, &ball, &p(&[1.0, 0.0]), &p(&[0.0, 0.0]), 0.1).unwrap();
        assert_eq!(h, p(&[0.9, 0.0]));
        assert_eq!(x, p(&[0.9, 0.0]));
    }

    #[test]
    fn single_step_path_unrolls() {
        let grid = TimeGrid::new(0.25, 1).unwrap();
        let mf = Multifunction::Constant(ConvexBody::interval(-0.2, 0.2).unwrap());
        let path = simulate_path(&unit_model(0.1), &mf, &grid, 9, 4, true).unwrap();
        let z = gaussian_increments(9, 4, 1, 1, 0.25).unwrap();
        assert_eq!(path.h.as_ref().unwrap()[1][0], 0.1 + z[(0, 0)]);
        assert_eq!(path.states[1][0], (0.1 + z[(0, 0)]).clamp(-0.2, 0.2));
    }

    #[test]
    fn frozen_dynamics_stay_put() {
        let model = ModelSpec::Brownian { sigma: 1e-12 }.build(p(&[0.3, -0.4])).unwrap();
        let grid = TimeGrid::new(1.0, 20).unwrap();
        let mf = Multifunction::Constant(ConvexBody::ball(p(&[0.0, 0.0]), 1.0).unwrap());
        let path = simulate_path(&model, &mf, &grid, 1, 0, false).unwrap();
        assert!(path.states.iter().all(|x| (x - model.x0()).norm() <= 1e-9));
        assert!(path.h.is_none());
    }

    #[test]
    fn x0_outside_is_rejected() {
        let grid = TimeGrid::new(1.0, 5).unwrap();
        let mf = Multifunction::Constant(ConvexBody::interval(-1.0, 1.0).unwrap());
        let err = simulate_ensemble(&unit_model(2.0), &mf, &grid, 3, 0, false).unwrap_err();
        assert!(matches!(err, DynamicsError::InitialPointOutside { .. }));
    }

    #[test]
    fn ensembles_are_prefix_stable_and_contained() {
        let grid = TimeGrid::new(1.0, 20).unwrap();
        let mf = Multifunction::Constant(ConvexBody::interval(-1.0, 1.0).unwrap());
        let model = ModelSpec::Ou { theta: 1.0, sigma: 2.0 }.build(p(&[0.0])).unwrap();
        let small = simulate_ensemble(&model, &mf, &grid, 3, 42, false).unwrap();
        let large = simulate_ensemble(&model, &mf, &grid, 5, 42, true).unwrap();
        for i in 0..3 {
            for j in 0..=20 {
                assert_eq!(small.state(i, j), large.state(i, j));
            }
        }
        for i in 0..5 {
            assert_eq!(large.state(i, 0), p(&[0.0]));
            for j in 0..=20 {
                assert!(large.state(i, j)[0].abs() <= 1.0);
            }
        }
        assert!(large.h(4, 20).is_some() && small.h(0, 1).is_none());
    }

    #[test]
    fn step_errors_carry_indices() {
        let model = SdeModel::new(
            Arc::new(|_: &Point| Point::zeros(1)),
            Arc::new(|x: &Point| nalgebra::DMatrix::from_element(1, 1, if x[0] > 0.0 { 1.0 } else { 0.5 })),
            p(&[0.0]),
            0.0,
            0.0,
        )
        .unwrap();
        let bad = SdeModel::new(
            Arc::new(|_: &Point| Point::zeros(1)),
            Arc::new(|x: &Point| nalgebra::DMatrix::from_element(1, 1, if x[0] == 0.0 { 1.0 } else { 0.0 })),
            p(&[0.0]),
            0.0,
            0.0,
        )
        .unwrap();
        let grid = TimeGrid::new(1.0, 4).unwrap();
        let mf = Multifunction::Constant(ConvexBody::interval(-1.0, 1.0).unwrap());
        assert!(simulate_ensemble(&model, &mf, &grid, 2, 0, false).is_ok());
        match simulate_ensemble(&bad, &mf, &grid, 2, 0, false).unwrap_err() {
            DynamicsError::Copy { copy: 0, source } => {
                assert!(matches!(*source, DynamicsError::Step { step: 1, .. }))
            }
            other => panic!("unexpected {other:?}"),
        }
    }
}
