use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::DynamicsError;

/// The deterministic stream of copy `copy_index` under `seed`.
pub fn copy_stream(seed: u64, copy_index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(copy_index);
    rng
}

/// `n x m` matrix of i.i.d. `N(0, delta)` Brownian increments; row `j` is the
/// increment over `[t_j, t_{j+1}]`.
pub fn gaussian_increments(
    seed: u64,
    copy_index: u64,
    n: usize,
    m: usize,
    delta: f64,
) -> Result<DMatrix<f64>, DynamicsError> {
    if n == 0 || m == 0 {
        return Err(DynamicsError::InvalidParameter(format!(
            "increment matrix must be at least 1x1, got {n}x{m}"
        )));
    }
    if !(delta.is_finite() && delta > 0.0) {
        return Err(DynamicsError::InvalidParameter(format!("delta must be positive, got {delta}")));
    }
    let scale = delta.sqrt();
    let mut rng = copy_stream(seed, copy_index);
    let mut out = DMatrix::zeros(n, m);
    for j in 0..n {
        for k in 0..m {
            let z: f64 = rng.sample(StandardNormal);
            out[(j, k)] = scale * z;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn moments_of_a_large_sample() {
        let delta = 0.01;
        let z = gaussian_increments(7, 3, 1000, 1000, delta).unwrap();
        let n = z.len() as f64;
        let mean = z.sum() / n;
        let var = z.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
        assert!(mean.abs() < 4e-4, "mean {mean}");
        assert!((var / delta - 1.0).abs() < 0.01, "variance {var}");
    }

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let a = gaussian_increments(1, 2, 20, 2, 0.05).unwrap();
        assert_eq!(a, gaussian_increments(1, 2, 20, 2, 0.05).unwrap());
        assert_ne!(a, gaussian_increments(1, 3, 20, 2, 0.05).unwrap());
        assert_ne!(a, gaussian_increments(2, 2, 20, 2, 0.05).unwrap());
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(gaussian_increments(0, 0, 0, 1, 0.1).is_err());
        assert!(gaussian_increments(0, 0, 1, 0, 0.1).is_err());
        assert!(gaussian_increments(0, 0, 1, 1, 0.0).is_err());
    }
}
