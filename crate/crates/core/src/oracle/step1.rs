use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{constants_c1_c2_with_points, OracleError, StepConstants};
use crate::dynamics::{Multifunction, PathEnsemble, SdeModel};
use crate::geometry::{ConvexBody, Point, GEOMETRIC_TOL};

/// Sample size for the suprema in the step constants.
pub const STEP1_PROBE_COUNT: usize = 4096;

/// Outcome of a one-step bound check over every copy, step and probe.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViolationReport {
    pub constants: StepConstants,
    pub slack: f64,
    pub checked: usize,
    pub violations: usize,
    /// Largest `lhs - rhs` observed (negative when the bound always holds).
    pub worst_margin: Option<f64>,
    /// `(copy, step j, probe index)` of the worst margin.
    pub worst_at: Option<(usize, usize, usize)>,
}

/// Checks `|H_{j+1} - x| <= c1 |X_j - x| + c2 |sigma(x) Z_{j+1} + b(x) delta| + slack`
/// for every copy, every step `j = 0..n-1` and every probe `x`. The constants
/// are sampled over the `m_C` ball with the probes added to the sample.
pub fn step1_bound_check(
    model: &SdeModel,
    ensemble: &PathEnsemble,
    mf: &Multifunction,
    probes: &[Point],
    slack: f64,
) -> Result<ViolationReport, OracleError> {
    let grid = ensemble.grid();
    let m_c = mf.norm_bound(grid)?;
    let constants = constants_c1_c2_with_points(model, m_c, grid.delta(), STEP1_PROBE_COUNT, probes)?;
    step1_bound_check_with_constants(model, ensemble, mf, probes, slack, &constants)
}

/// Violations, worst margin and its `(copy, step, probe)` for one copy.
type CopyTally = (usize, f64, Option<(usize, usize, usize)>);

/// [`step1_bound_check`] with caller-supplied constants.
pub fn step1_bound_check_with_constants(
    model: &SdeModel,
    ensemble: &PathEnsemble,
    mf: &Multifunction,
    probes: &[Point],
    slack: f64,
    constants: &StepConstants,
) -> Result<ViolationReport, OracleError> {
    if !ensemble.has_h() {
        return Err(OracleError::MissingPreProjection);
    }
    if !(slack >= 0.0) {
        return Err(OracleError::InvalidParameter(format!("slack must be >= 0, got {slack}")));
    }
    let grid = ensemble.grid();
    let bodies = mf.bodies_on(grid)?;
    for (j, body) in bodies.iter().enumerate().skip(1) {
        for (k, x) in probes.iter().enumerate() {
            if !body.contains(x, GEOMETRIC_TOL)? {
                return Err(OracleError::ProbeOutside { probe: k, step: j });
            }
        }
    }
    let delta = grid.delta();
    let n = grid.steps();
    let m = ensemble.dim();
    let frozen: Vec<(nalgebra::DMatrix<f64>, Point)> = probes
        .iter()
        .map(|x| Ok((model.sigma(x)?, model.drift(x) * delta)))
        .collect::<Result<_, OracleError>>()?;

    let per_copy: Vec<CopyTally> = (0..ensemble.copies())
        .into_par_iter()
        .map(|i| {
            let z = ensemble.increments(i);
            let mut violations = 0;
            let mut worst = (f64::NEG_INFINITY, None);
            for j in 0..n {
                let zj = Point::from_fn(m, |k, _| z[(j, k)]);
                let xj = ensemble.state(i, j);
                let hj = ensemble.h(i, j + 1).expect("checked above");
                for (k, x) in probes.iter().enumerate() {
                    let (sigma_x, b_dt) = &frozen[k];
                    let r = (sigma_x * &zj + b_dt).norm();
                    let lhs = (&hj - x).norm();
                    let rhs = constants.c1 * (&xj - x).norm() + constants.c2 * r;
                    let margin = lhs - rhs;
                    if margin > slack {
                        violations += 1;
                    }
                    if margin > worst.0 {
                        worst = (margin, Some((i, j, k)));
                    }
                }
            }
            (violations, worst.0, worst.1)
        })
        .collect();

    let mut report = ViolationReport {
        constants: *constants,
        slack,
        checked: ensemble.copies() * n * probes.len(),
        violations: 0,
        worst_margin: None,
        worst_at: None,
    };
    for (violations, margin, at) in per_copy {
        report.violations += violations;
        if at.is_some() && report.worst_margin.is_none_or(|w| margin > w) {
            report.worst_margin = Some(margin);
            report.worst_at = at;
        }
    }
    Ok(report)
}

/// Empirical frequency of `H_j` falling in `closed ball(x, eps) ∩ int C(t_j)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HitReport {
    pub hits: usize,
    pub copies: usize,
    pub frequency: f64,
}

pub fn hit_frequency(
    ensemble: &PathEnsemble,
    body: &ConvexBody,
    j: usize,
    x: &Point,
    eps: f64,
) -> Result<HitReport, OracleError> {
    if j == 0 || j > ensemble.grid().steps() {
        return Err(OracleError::InvalidParameter(format!("time index {j} outside 1..={}", ensemble.grid().steps())));
    }
    if !(eps > 0.0) {
        return Err(OracleError::InvalidParameter(format!("radius must be positive, got {eps}")));
    }
    let hs = ensemble.h_at(j).ok_or(OracleError::MissingPreProjection)?;
    let hits = hs
        .iter()
        .filter(|h| (*h - x).norm() <= eps && body.is_interior(h))
        .count();
    Ok(HitReport {
        hits,
        copies: ensemble.copies(),
        frequency: hits as f64 / ensemble.copies() as f64,
    })
}
