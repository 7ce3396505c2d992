//! Normal-Inverse-Gamma conjugate model for a Gaussian likelihood with
//! unknown mean and variance.

use rand::Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use serde::{Deserialize, Serialize};

/// Prior hyperparameters plus running sufficient statistics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalInverseGamma {
    pub mu0: f64,
    pub lambda0: f64,
    pub alpha0: f64,
    pub beta0: f64,
    n: u64,
    mean: f64,
    /// Sum of squared deviations from the running mean.
    m2: f64,
}

/// Posterior hyperparameters `(mu_n, lambda_n, alpha_n, beta_n)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NigPosterior {
    pub mu: f64,
    pub lambda: f64,
    pub alpha: f64,
    pub beta: f64,
}

impl Default for NormalInverseGamma {
    /// `mu0 = 1, lambda0 = 1, alpha0 = 1, beta0 = 0`, used for both the
    /// reward model and the log-cost model.
    fn default() -> Self {
        Self::new(1.0, 1.0, 1.0, 0.0)
    }
}

impl NormalInverseGamma {
    /// # Panics
    /// If `lambda0 <= 0`, `alpha0 <= 0` or `beta0 < 0`.
    pub fn new(mu0: f64, lambda0: f64, alpha0: f64, beta0: f64) -> Self {
        assert!(lambda0 > 0.0 && alpha0 > 0.0 && beta0 >= 0.0, "invalid NIG prior");
        Self {
            mu0,
            lambda0,
            alpha0,
            beta0,
            n: 0,
            mean: 0.0,
            m2: 0.0,
        }
    }

    pub fn count(&self) -> u64 {
        self.n
    }

    pub fn sample_mean(&self) -> f64 {
        self.mean
    }

    pub fn sum_sq_dev(&self) -> f64 {
        self.m2
    }

    /// Returns the state after observing `y`.
    pub fn updated(mut self, y: f64) -> Self {
        self.observe(y);
        self
    }

    pub fn observe(&mut self, y: f64) {
        self.n += 1;
        let delta = y - self.mean;
        self.mean += delta / self.n as f64;
        self.m2 += delta * (y - self.mean);
    }

    pub fn posterior(&self) -> NigPosterior {
        let n = self.n as f64;
        let lambda = self.lambda0 + n;
        if self.n == 0 {
            return NigPosterior {
                mu: self.mu0,
                lambda,
                alpha: self.alpha0,
                beta: self.beta0,
            };
        }
        let dm = self.mean - self.mu0;
        NigPosterior {
            mu: (self.lambda0 * self.mu0 + n * self.mean) / lambda,
            lambda,
            alpha: self.alpha0 + n / 2.0,
            beta: self.beta0 + 0.5 * self.m2 + self.lambda0 * n * dm * dm / (2.0 * lambda),
        }
    }

    /// Draws `(theta, sigma2)`: `sigma2 ~ InvGamma(alpha_n, beta_n)` (a point
    /// mass at 0 when `beta_n = 0`), then `theta ~ N(mu_n, sigma2 / lambda_n)`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> (f64, f64) {
        let p = self.posterior();
        let sigma2 = if p.beta > 0.0 {
            let g = Gamma::new(p.alpha, 1.0).expect("alpha_n > 0").sample(rng);
            p.beta / g
        } else {
            0.0
        };
        let z: f64 = rng.sample(StandardNormal);
        (p.mu + (sigma2 / p.lambda).sqrt() * z, sigma2)
    }
}

/// Free-function form of a single conjugate update.
pub fn nig_update(state: &NormalInverseGamma, y: f64) -> NormalInverseGamma {
    state.updated(y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seeding::rng_from_seed;

    #[test]
    fn two_ones_from_default_prior() {
        let s = NormalInverseGamma::default().updated(1.0).updated(1.0);
        let p = s.posterior();
        assert_eq!((p.mu, p.lambda, p.alpha, p.beta), (1.0, 3.0, 2.0, 0.0));
    }

    #[test]
    fn no_observations_is_identity() {
        let p = NormalInverseGamma::default().posterior();
        assert_eq!((p.mu, p.lambda, p.alpha, p.beta), (1.0, 1.0, 1.0, 0.0));
    }

    #[test]
    fn single_zero_observation() {
        let p = nig_update(&NormalInverseGamma::default(), 0.0).posterior();
        assert_eq!((p.mu, p.lambda, p.alpha, p.beta), (0.5, 2.0, 1.5, 0.25));
    }

    #[test]
    fn zero_beta_is_degenerate() {
        let s = NormalInverseGamma::default().updated(1.0);
        let mut rng = rng_from_seed(0);
        for _ in 0..10 {
            assert_eq!(s.sample(&mut rng), (1.0, 0.0));
        }
    }

    #[test]
    fn theta_concentrates_on_data_mean() {
        let mut rng = rng_from_seed(21);
        let mut s = NormalInverseGamma::default();
        for _ in 0..50 {
            let z: f64 = rng.sample(StandardNormal);
            s.observe(0.6 + 0.05 * z);
        }
        let n = 100_000;
        let mean_theta = (0..n).map(|_| s.sample(&mut rng).0).sum::<f64>() / n as f64;
        // posterior mean is pulled slightly toward mu0=1 by one pseudo-observation
        let p = s.posterior();
        assert!((mean_theta - p.mu).abs() < 1e-3);
        assert!((mean_theta - 0.6).abs() < 0.01, "{mean_theta}");
    }

    #[test]
    fn theta_variance_shrinks_with_lambda() {
        let mut rng = rng_from_seed(22);
        let var_of = |lambda0: f64, rng: &mut crate::seeding::SimRng| {
            let s = NormalInverseGamma::new(0.5, lambda0, 3.0, 0.2);
            let xs: Vec<f64> = (0..20_000).map(|_| s.sample(rng).0).collect();
            let m = xs.iter().sum::<f64>() / xs.len() as f64;
            xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / xs.len() as f64
        };
        let wide = var_of(1.0, &mut rng);
        let narrow = var_of(1e6, &mut rng);
        assert!(narrow < wide * 1e-4);
        assert!(narrow < 1e-6);
    }
}
