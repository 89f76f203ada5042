use libm::erfc;

use super::EstimationError;

/// A distribution function on the real line.
pub trait ScalarCdf {
    fn cdf(&self, x: f64) -> f64;
}

impl<F: Fn(f64) -> f64> ScalarCdf for F {
    fn cdf(&self, x: f64) -> f64 {
        self(x)
    }
}

/// Normal distribution function, via the complementary error function.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianCdf {
    mean: f64,
    sd: f64,
}

impl GaussianCdf {
    pub fn new(mean: f64, sd: f64) -> Result<Self, EstimationError> {
        if !(mean.is_finite() && sd.is_finite() && sd > 0.0) {
            return Err(EstimationError::InvalidParameter(format!(
                "gaussian needs a finite mean and sd > 0, got {mean}, {sd}"
            )));
        }
        Ok(Self { mean, sd })
    }

    pub fn standard() -> Self {
        Self { mean: 0.0, sd: 1.0 }
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn sd(&self) -> f64 {
        self.sd
    }
}

impl ScalarCdf for GaussianCdf {
    fn cdf(&self, x: f64) -> f64 {
        0.5 * erfc(-(x - self.mean) / (self.sd * std::f64::consts::SQRT_2))
    }
}

/// Distribution function of `P_{[lower, upper]}(H)` when `H` has distribution
/// function `phi`: `phi(x) 1{lower <= x < upper} + 1{x >= upper}`.
pub fn projected_cdf<C: ScalarCdf + ?Sized>(phi: &C, lower: f64, upper: f64, x: f64) -> Result<f64, EstimationError> {
    if !(lower < upper) {
        return Err(EstimationError::InvalidBounds { lower, upper });
    }
    Ok(if x >= upper {
        1.0
    } else if x >= lower {
        phi.cdf(x)
    } else {
        0.0
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Independent erfc: Taylor series of erf for |z| < 3, Lentz continued
    /// fraction beyond.
    fn erfc_oracle(z: f64) -> f64 {
        if z < 0.0 {
            return 2.0 - erfc_oracle(-z);
        }
        if z < 3.0 {
            let mut term = z;
            let mut sum = z;
            let mut k = 0.0;
            loop {
                k += 1.0;
                term *= -z * z / k;
                let add = term / (2.0 * k + 1.0);
                sum += add;
                if add.abs() <= 1e-17 * sum.abs() {
                    break;
                }
            }
            1.0 - 2.0 / std::f64::consts::PI.sqrt() * sum
        } else {
            // erfc(z) = exp(-z^2)/sqrt(pi) * 1/(z + (1/2)/(z + 1/(z + (3/2)/(z + ...))))
            let tiny = 1e-300;
            let mut f = z;
            let mut c = z;
            let mut d = 0.0;
            for k in 1..200 {
                let a = k as f64 / 2.0;
                d = z + a * d;
                d = if d.abs() < tiny { tiny } else { d };
                c = z + a / c;
                c = if c.abs() < tiny { tiny } else { c };
                d = 1.0 / d;
                let delta = c * d;
                f *= delta;
                if (delta - 1.0).abs() < 1e-16 {
                    break;
                }
            }
            (-z * z).exp() / std::f64::consts::PI.sqrt() / f
        }
    }

    #[test]
    fn gaussian_cdf_matches_independent_erfc() {
        let phi = GaussianCdf::standard();
        for k in -80..=80 {
            let x = k as f64 * 0.1;
            let expected = 0.5 * erfc_oracle(-x / std::f64::consts::SQRT_2);
            assert!((phi.cdf(x) - expected).abs() <= 1e-12, "x = {x}");
        }
        assert!((phi.cdf(-1.0) - 0.158_655_253_931_457).abs() < 1e-12);
    }

    #[test]
    fn projected_cdf_examples() {
        let phi = GaussianCdf::standard();
        assert_eq!(projected_cdf(&phi, -1.0, 1.0, 1.0).unwrap(), 1.0);
        assert!((projected_cdf(&phi, -1.0, 1.0, 0.0).unwrap() - 0.5).abs() < 1e-15);
        assert!((projected_cdf(&phi, -1.0, 1.0, -1.0).unwrap() - 0.158_655_253_931_457).abs() < 1e-12);
        assert_eq!(projected_cdf(&phi, -1.0, 1.0, -1.0 - 1e-12).unwrap(), 0.0);
        assert!(projected_cdf(&phi, 1.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn projected_cdf_is_a_distribution_function() {
        let phi = GaussianCdf::new(0.3, 0.7).unwrap();
        let mut prev = 0.0;
        for k in -400..=400 {
            let v = projected_cdf(&phi, -1.0, 1.0, k as f64 * 0.01).unwrap();
            assert!(v >= prev && (0.0..=1.0).contains(&v));
            prev = v;
        }
        assert_eq!(projected_cdf(&phi, -1.0, 1.0, -1e9).unwrap(), 0.0);
        assert_eq!(projected_cdf(&phi, -1.0, 1.0, 1e9).unwrap(), 1.0);
        assert_eq!(projected_cdf(&phi, -1.0, 1.0, -1.0).unwrap(), phi.cdf(-1.0));
        assert!(GaussianCdf::new(0.0, 0.0).is_err());
    }
}
