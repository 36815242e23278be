// SPDX-License-Identifier: Apache-2.0

use rand::distributions::Open01;
use rand::Rng;

use super::{LdpError, PrivacyBudget};

/// One draw of zero-mean Laplace noise with the given scale, by inverting
/// the CDF at a single uniform draw on the open interval (0, 1).
pub fn laplace_noise(scale: f64, rng: &mut impl Rng) -> f64 {
    let u: f64 = rng.sample::<f64, _>(Open01) - 0.5;
    -scale * u.signum() * (1.0 - 2.0 * u.abs()).ln()
}

/// `value + Laplace(sensitivity / epsilon)`.
pub fn laplace_perturb(
    value: f64,
    sensitivity: f64,
    budget: PrivacyBudget,
    rng: &mut impl Rng,
) -> Result<f64, LdpError> {
    if !(sensitivity.is_finite() && sensitivity > 0.0) {
        return Err(LdpError::InvalidSensitivity(sensitivity));
    }
    Ok(value + laplace_noise(sensitivity / budget.epsilon(), rng))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::SeedRng;
    use rand::SeedableRng;

    fn moments(xs: &[f64]) -> (f64, f64) {
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = xs.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
        (mean, var)
    }

    #[test]
    fn zero_mean_and_laplace_variance() {
        let mut rng = SeedRng::seed_from_u64(11);
        for (value, sens, eps) in [(0.0, 1.0, 1.0), (3.5, 2.0, 0.5), (-7.0, 0.1, 4.0)] {
            let b = PrivacyBudget::new(eps).unwrap();
            let xs: Vec<f64> = (0..1_000_000)
                .map(|_| laplace_perturb(value, sens, b, &mut rng).unwrap())
                .collect();
            let (mean, var) = moments(&xs);
            let expected = 2.0 * (sens / eps).powi(2);
            assert!((mean - value).abs() < 3.0 * (var / xs.len() as f64).sqrt());
            assert!((var / expected - 1.0).abs() < 0.05, "{var} vs {expected}");
        }
    }

    #[test]
    fn huge_budget_means_tiny_noise() {
        let mut rng = SeedRng::seed_from_u64(12);
        let b = PrivacyBudget::new(1e6).unwrap();
        for _ in 0..10_000 {
            let v = laplace_perturb(1.0, 1.0, b, &mut rng).unwrap();
            assert!((v - 1.0).abs() < 1e-4);
        }
    }

    #[test]
    fn sensitivity_must_be_positive() {
        let mut rng = SeedRng::seed_from_u64(0);
        let b = PrivacyBudget::new(1.0).unwrap();
        assert!(laplace_perturb(0.0, 0.0, b, &mut rng).is_err());
        assert!(laplace_perturb(0.0, -1.0, b, &mut rng).is_err());
    }
}
