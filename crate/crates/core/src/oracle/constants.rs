use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::OracleError;
use crate::dynamics::{copy_stream, DynamicsError, SdeModel};
use crate::geometry::Point;

/// Seed of the sampling stream used for the suprema.
const SAMPLING_SEED: u64 = 0x5eed_c0de;

/// Constants of the one-step bound
/// `|H_{j+1} - x| <= c1 |X_j - x| + c2 |sigma(x) Z_{j+1} + b(x) delta|`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepConstants {
    pub c1: f64,
    pub c2: f64,
    pub m_c: f64,
    /// Sampled `sup |sigma(v)^-1|`.
    pub sup_inv_norm: f64,
    /// Sampled `sup |sigma(v)^-1| |b(v)|`.
    pub sup_inv_b: f64,
}

/// `c1 = 1 + (Lip(b) + Lip(sigma) sup |sigma^-1| |b|) delta` and
/// `c2 = 1 + 2 m_C Lip(sigma) sup |sigma^-1|`, suprema over `|v| <= m_C`
/// taken as sample maxima over `probe_count` uniform points plus `0` and
/// `+-m_C e_k`. Sample maxima can only undershoot the true suprema.
pub fn constants_c1_c2(model: &SdeModel, m_c: f64, delta: f64, probe_count: usize) -> Result<StepConstants, OracleError> {
    constants_c1_c2_with_points(model, m_c, delta, probe_count, &[])
}

/// As [`constants_c1_c2`], with `extra` points added to the sample.
pub fn constants_c1_c2_with_points(
    model: &SdeModel,
    m_c: f64,
    delta: f64,
    probe_count: usize,
    extra: &[Point],
) -> Result<StepConstants, OracleError> {
    if !(m_c.is_finite() && m_c > 0.0) {
        return Err(OracleError::InvalidParameter(format!("m_C must be positive, got {m_c}")));
    }
    if !(delta.is_finite() && delta > 0.0) {
        return Err(OracleError::InvalidParameter(format!("delta must be positive, got {delta}")));
    }
    if probe_count < 1000 {
        return Err(OracleError::InvalidParameter(format!("probe_count must be >= 1000, got {probe_count}")));
    }
    let m = model.dim();
    let mut samples: Vec<Point> = Vec::with_capacity(probe_count + 2 * m + 1 + extra.len());
    samples.push(Point::zeros(m));
    for k in 0..m {
        for s in [-1.0, 1.0] {
            let mut e = Point::zeros(m);
            e[k] = s * m_c;
            samples.push(e);
        }
    }
    samples.extend(extra.iter().cloned());
    let mut rng = copy_stream(SAMPLING_SEED, m as u64);
    for _ in 0..probe_count {
        let dir = loop {
            let g = Point::from_fn(m, |_, _| rng.sample::<f64, _>(StandardNormal));
            let norm = g.norm();
            if norm > 0.0 {
                break g / norm;
            }
        };
        let u: f64 = rng.random();
        samples.push(dir * (m_c * u.powf(1.0 / m as f64)));
    }

    let mut sup_inv_norm = 0.0f64;
    let mut sup_inv_b = 0.0f64;
    for v in &samples {
        let sigma = model.sigma(v)?;
        let smallest = sigma.singular_values().min();
        if !(smallest > 0.0) {
            return Err(DynamicsError::SingularDiffusion { at: v.as_slice().to_vec() }.into());
        }
        let inv = 1.0 / smallest;
        sup_inv_norm = sup_inv_norm.max(inv);
        sup_inv_b = sup_inv_b.max(inv * model.drift(v).norm());
    }
    let c1 = 1.0 + (model.lip_b() + model.lip_sigma() * sup_inv_b) * delta;
    let c2 = 1.0 + 2.0 * m_c * model.lip_sigma() * sup_inv_norm;
    Ok(StepConstants {
        c1,
        c2,
        m_c,
        sup_inv_norm,
        sup_inv_b,
    })
}
