//! Posterior sampling from the running-max PPD of a trajectory prior.
//!
//! Each arm is tied to one prior. PS-PPD uses one prior for every arm,
//! PS-PPDs a per-arm assignment. The PPD is estimated by kernel-weighting a
//! bank of prior trajectories against the arm's observed running maxima.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{argmax_random_tie, Policy, PolicyState, TimeFunction};
use crate::error::{Error, Result};
use crate::posterior::{abc_from_bank, ContextWeights, DiscreteDistribution, ParticleBank, DEFAULT_BINS};
use crate::priors::PriorConfig;
use crate::seeding::SimRng;

/// Estimator settings for PPD queries.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PpdSettings {
    /// Prior trajectories per bank (`M`).
    pub particles: usize,
    /// Kernel bandwidth (`h`).
    pub bandwidth: f64,
    pub bins: usize,
}

impl Default for PpdSettings {
    fn default() -> Self {
        Self {
            particles: 2000,
            bandwidth: 0.02,
            bins: DEFAULT_BINS,
        }
    }
}

impl PpdSettings {
    pub fn validate(&self) -> Result<()> {
        if self.particles < crate::posterior::ppd::MIN_PARTICLES {
            return Err(Error::Config(format!(
                "ppd particles must be at least {}",
                crate::posterior::ppd::MIN_PARTICLES
            )));
        }
        if !(self.bandwidth > 0.0) || !self.bandwidth.is_finite() {
            return Err(Error::Config("ppd bandwidth must be positive".into()));
        }
        if self.bins == 0 {
            return Err(Error::Config("ppd bins must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
struct ArmContext {
    prior: usize,
    weights: Option<ContextWeights>,
    cached: Option<(usize, DiscreteDistribution)>,
}

#[derive(Debug, Clone)]
pub struct PsPpd {
    name: String,
    arm_ids: Vec<String>,
    priors: Vec<PriorConfig>,
    banks: Vec<Option<Arc<ParticleBank>>>,
    arms: Vec<ArmContext>,
    time: TimeFunction,
    settings: PpdSettings,
}

impl PsPpd {
    /// `assignment[i]` indexes into `priors` for arm `i`.
    pub fn new(
        name: impl Into<String>,
        arm_ids: Vec<String>,
        priors: Vec<PriorConfig>,
        assignment: Vec<usize>,
        time: TimeFunction,
        settings: PpdSettings,
    ) -> Result<Self> {
        settings.validate()?;
        if assignment.len() != arm_ids.len() || assignment.iter().any(|&p| p >= priors.len()) {
            return Err(Error::Config("every arm needs exactly one known prior".into()));
        }
        for p in &priors {
            p.validate()?;
        }
        let arms = assignment
            .into_iter()
            .map(|prior| ArmContext {
                prior,
                weights: None,
                cached: None,
            })
            .collect();
        Ok(Self {
            name: name.into(),
            arm_ids,
            banks: vec![None; priors.len()],
            priors,
            arms,
            time,
            settings,
        })
    }

    /// Supplies precomputed banks, one per prior, instead of drawing them
    /// from the policy stream on first use.
    pub fn with_banks(mut self, banks: Vec<Arc<ParticleBank>>) -> Result<Self> {
        if banks.len() != self.priors.len() {
            return Err(Error::Config("one particle bank per prior required".into()));
        }
        self.banks = banks.into_iter().map(Some).collect();
        Ok(self)
    }

    /// Smallest prior horizon, the cap on query steps.
    pub fn horizon(priors: &[PriorConfig]) -> usize {
        priors.iter().map(|p| p.horizon).min().unwrap_or(0)
    }

    fn ensure_banks(&mut self, state: &PolicyState, rng: &mut SimRng) -> Result<()> {
        for (slot, prior) in self.banks.iter_mut().zip(&self.priors) {
            if slot.is_none() {
                *slot = Some(Arc::new(ParticleBank::generate(prior, self.settings.particles, rng)?));
            }
        }
        for (i, ctx) in self.arms.iter_mut().enumerate() {
            if ctx.weights.is_none() {
                let bank = self.banks[ctx.prior].as_ref().expect("bank generated above");
                ctx.weights = Some(ContextWeights::from_context(bank, &state.arms[i].running_max));
            }
        }
        Ok(())
    }

    fn sample_arm(&mut self, state: &PolicyState, i: usize, rng: &mut SimRng) -> Result<f64> {
        let obs = &state.arms[i];
        let n = obs.pull_count();
        let f = self.time.evaluate(state, i, rng)?;
        let ctx = &mut self.arms[i];
        let bank = self.banks[ctx.prior].as_ref().expect("banks ready");
        let horizon = bank.horizon();
        if n >= horizon {
            let best = obs.best().unwrap_or(0.0);
            return Ok(DiscreteDistribution::point_mass(self.settings.bins, best).sample(rng));
        }
        let target = (f.floor() as usize).clamp(n + 1, horizon);
        if !matches!(&ctx.cached, Some((t, _)) if *t == target) {
            let weights = ctx.weights.as_ref().expect("weights ready");
            let estimate = abc_from_bank(bank, weights, target, self.settings.bandwidth, self.settings.bins)?;
            ctx.cached = Some((target, estimate.distribution));
        }
        let (_, dist) = ctx.cached.as_ref().expect("cached above");
        Ok(dist.sample(rng))
    }
}

impl Policy for PsPpd {
    fn name(&self) -> &str {
        &self.name
    }

    fn select(&mut self, state: &PolicyState, rng: &mut SimRng) -> Result<usize> {
        self.ensure_banks(state, rng)?;
        let mut scores = vec![f64::NEG_INFINITY; state.arm_count()];
        for i in 0..state.arm_count() {
            if state.available[i] {
                scores[i] = self.sample_arm(state, i, rng).map_err(|e| Error::Ppd {
                    arm: self.arm_ids[i].clone(),
                    source: Box::new(e),
                })?;
            }
        }
        Ok(argmax_random_tie(&scores, &state.available, rng).unwrap_or(0))
    }

    fn observe(&mut self, state: &PolicyState, arm: usize, _reward: f64, cost: f64) -> Result<()> {
        let ctx = self.arms.get_mut(arm).ok_or(Error::UnknownArm(arm))?;
        ctx.cached = None;
        if let (Some(weights), Some(bank)) = (ctx.weights.as_mut(), self.banks[ctx.prior].as_ref()) {
            if let Some(&y) = state.arms[arm].running_max.last() {
                weights.push(bank, y);
            }
        }
        self.time.observe_cost(arm, cost)
    }
}
