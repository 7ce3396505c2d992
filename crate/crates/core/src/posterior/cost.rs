//! Log-normal cost model with a Normal-Inverse-Gamma prior on log-cost,
//! truncated to `[0.1, B/10]` seconds.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::nig::NormalInverseGamma;
use crate::error::{Error, Result};

pub const MIN_COST: f64 = 0.1;

/// Proposals drawn before a sample is clamped into the truncation interval.
/// Only reached when the posterior is (nearly) degenerate outside the interval.
const MAX_PROPOSALS: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostModel {
    pub log_cost: NormalInverseGamma,
    pub lo: f64,
    pub hi: f64,
}

impl CostModel {
    pub fn new(budget: f64) -> Result<Self> {
        Self::with_prior(budget, NormalInverseGamma::default())
    }

    pub fn with_prior(budget: f64, prior: NormalInverseGamma) -> Result<Self> {
        let hi = budget / 10.0;
        if !(hi > MIN_COST) {
            return Err(Error::BudgetTooSmall(budget));
        }
        Ok(Self {
            log_cost: prior,
            lo: MIN_COST,
            hi,
        })
    }

    pub fn observe(&mut self, cost: f64) -> Result<()> {
        if !(cost > 0.0) {
            return Err(Error::NonPositiveCost(cost));
        }
        self.log_cost.observe(cost.ln());
        Ok(())
    }

    pub fn updated(mut self, cost: f64) -> Result<Self> {
        self.observe(cost)?;
        Ok(self)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let mut last = f64::NAN;
        for _ in 0..MAX_PROPOSALS {
            let (theta, sigma2) = self.log_cost.sample(rng);
            let z: f64 = rng.sample(StandardNormal);
            last = (theta + sigma2.sqrt() * z).exp();
            if (self.lo..=self.hi).contains(&last) {
                return last;
            }
        }
        last.clamp(self.lo, self.hi)
    }
}
