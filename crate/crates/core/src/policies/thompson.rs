//! Gaussian posterior sampling: PS-Max and classical Thompson sampling.

use serde::{Deserialize, Serialize};

use super::{argmax_random_tie, Policy, PolicyState, TimeFunction, TimeFunctionSpec};
use crate::error::Result;
use crate::posterior::{gaussian_max_sample, NormalInverseGamma};
use crate::seeding::SimRng;

/// Draws `(theta, sigma^2)` from the posterior, then the maximum of `f`
/// draws from `N(theta, sigma^2)`.
pub fn ps_max_score(model: &NormalInverseGamma, f: f64, rng: &mut SimRng) -> f64 {
    let (theta, sigma2) = model.sample(rng);
    gaussian_max_sample(theta, sigma2.sqrt(), f, rng)
}

/// Posterior sampling for the maximum under a Gaussian reward model.
#[derive(Debug, Clone)]
pub struct PsMax {
    name: String,
    models: Vec<NormalInverseGamma>,
    time: TimeFunction,
}

impl PsMax {
    pub fn new(name: impl Into<String>, arms: usize, time: TimeFunction) -> Self {
        Self {
            name: name.into(),
            models: vec![NormalInverseGamma::default(); arms],
            time,
        }
    }

    pub fn time_function(&self) -> TimeFunctionSpec {
        self.time.spec()
    }
}

impl Policy for PsMax {
    fn name(&self) -> &str {
        &self.name
    }

    fn select(&mut self, state: &PolicyState, rng: &mut SimRng) -> Result<usize> {
        let mut scores = vec![f64::NEG_INFINITY; state.arm_count()];
        for (i, score) in scores.iter_mut().enumerate() {
            if state.available[i] {
                let f = self.time.evaluate(state, i, rng)?;
                *score = ps_max_score(&self.models[i], f, rng);
            }
        }
        Ok(argmax_random_tie(&scores, &state.available, rng).unwrap_or(0))
    }

    fn observe(&mut self, _state: &PolicyState, arm: usize, reward: f64, cost: f64) -> Result<()> {
        self.models[arm].observe(reward);
        self.time.observe_cost(arm, cost)
    }
}

/// What a Thompson-sampling draw targets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ThompsonTarget {
    /// The posterior mean parameter `theta`.
    #[default]
    Mean,
    /// A posterior-predictive reward, i.e. PS-Max with `f = 1`.
    Predictive,
}

#[derive(Debug, Clone)]
pub struct ThompsonSampling {
    name: String,
    models: Vec<NormalInverseGamma>,
    target: ThompsonTarget,
}

impl ThompsonSampling {
    pub fn new(name: impl Into<String>, arms: usize, target: ThompsonTarget) -> Self {
        Self {
            name: name.into(),
            models: vec![NormalInverseGamma::default(); arms],
            target,
        }
    }
}

impl Policy for ThompsonSampling {
    fn name(&self) -> &str {
        &self.name
    }

    fn select(&mut self, state: &PolicyState, rng: &mut SimRng) -> Result<usize> {
        let mut scores = vec![f64::NEG_INFINITY; state.arm_count()];
        for (i, score) in scores.iter_mut().enumerate() {
            if state.available[i] {
                *score = match self.target {
                    ThompsonTarget::Mean => self.models[i].sample(rng).0,
                    ThompsonTarget::Predictive => ps_max_score(&self.models[i], 1.0, rng),
                };
            }
        }
        Ok(argmax_random_tie(&scores, &state.available, rng).unwrap_or(0))
    }

    fn observe(&mut self, _state: &PolicyState, arm: usize, reward: f64, _cost: f64) -> Result<()> {
        self.models[arm].observe(reward);
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seeding::rng_from_seed;
    use crate::types::Budget;

    fn ps_max(arms: usize) -> PsMax {
        let tf = TimeFunction::new(TimeFunctionSpec::Step, arms, Budget::Steps(100), None).unwrap();
        PsMax::new("ps-max", arms, tf)
    }

    fn feed(policy: &mut dyn Policy, state: &mut PolicyState, arm: usize, reward: f64) {
        state.observe(arm, reward, 1.0).unwrap();
        policy.observe(state, arm, reward, 1.0).unwrap();
    }

    #[test]
    fn single_arm_always_selected() {
        let mut state = PolicyState::new(&["only"], Budget::Steps(100));
        let mut p = ps_max(1);
        let mut ts = ThompsonSampling::new("ts", 1, ThompsonTarget::Mean);
        let mut rng = rng_from_seed(1);
        for _ in 0..20 {
            assert_eq!(p.select(&state, &mut rng).unwrap(), 0);
            assert_eq!(ts.select(&state, &mut rng).unwrap(), 0);
            feed(&mut p, &mut state, 0, 0.4);
            ts.observe(&state, 0, 0.4, 1.0).unwrap();
        }
    }

    #[test]
    fn dominated_arm_never_chosen() {
        let mut state = PolicyState::new(&["a", "b"], Budget::Steps(1000));
        let mut p = ps_max(2);
        let mut ts = ThompsonSampling::new("ts", 2, ThompsonTarget::Mean);
        // many identical observations make both posteriors nearly degenerate
        for _ in 0..200 {
            feed(&mut p, &mut state, 0, 0.9);
            ts.observe(&state, 0, 0.9, 1.0).unwrap();
            feed(&mut p, &mut state, 1, 0.1);
            ts.observe(&state, 1, 0.1, 1.0).unwrap();
        }
        let mut rng = rng_from_seed(2);
        for _ in 0..500 {
            assert_eq!(p.select(&state, &mut rng).unwrap(), 0);
            assert_eq!(ts.select(&state, &mut rng).unwrap(), 0);
        }
    }

    #[test]
    fn exhausted_arms_are_masked() {
        let mut state = PolicyState::new(&["a", "b"], Budget::Steps(100));
        let mut p = ps_max(2);
        feed(&mut p, &mut state, 0, 0.9);
        feed(&mut p, &mut state, 1, 0.1);
        state.mark_exhausted(0);
        let mut rng = rng_from_seed(5);
        for _ in 0..50 {
            assert_eq!(p.select(&state, &mut rng).unwrap(), 1);
        }
    }

    #[test]
    fn predictive_ts_matches_ps_max_at_one() {
        let mut model = NormalInverseGamma::default();
        for y in [0.3, 0.5, 0.45, 0.6] {
            model.observe(y);
        }
        let mut a = rng_from_seed(9);
        let mut b = rng_from_seed(9);
        for _ in 0..1000 {
            let via_ps = ps_max_score(&model, 1.0, &mut a);
            let (theta, sigma2) = model.sample(&mut b);
            let u: f64 = rand::Rng::sample(&mut b, rand::distr::Open01);
            let direct = theta + sigma2.sqrt() * crate::posterior::standard_normal_quantile(u);
            assert!((via_ps - direct).abs() < 1e-12);
        }
    }
}
