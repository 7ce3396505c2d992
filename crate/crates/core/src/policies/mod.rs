//! Arm-selection rules behind a common select/observe interface.
//!
//! Posterior-sampling policies (PS-Max, PS-PPD, PS-PPDs, Thompson sampling)
//! draw one value per arm and pick the argmax; cost-awareness is added by
//! switching their time function to the budget-corrected variant. Naive and
//! literature baselines (round-robin, random, MaxUCB, Rising Bandits) share
//! the same interface so the harness can treat every policy uniformly.

mod baselines;
mod ps_ppd;
mod spec;
mod thompson;
mod time_fn;

pub use baselines::{MaxUcb, RandomPolicy, RisingBandits, RoundRobin};
pub use ps_ppd::{PpdSettings, PsPpd};
pub use spec::{benchmark_prior_map, PolicyKind, PolicySpec, POLICY_NAMES};
pub use thompson::{PsMax, ThompsonSampling, ThompsonTarget};
pub use time_fn::{TimeFunction, TimeFunctionSpec};

use rand::Rng;

use crate::error::{Error, Result};
use crate::seeding::SimRng;
use crate::types::{ArmObservations, Budget};

/// Observations and budget accounting shared by every policy.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyState {
    pub arms: Vec<ArmObservations>,
    pub budget: Budget,
    /// Total cost of all pulls so far.
    pub spent: f64,
    /// False for arms whose data ran out; masked out of every argmax.
    pub available: Vec<bool>,
}

impl PolicyState {
    pub fn new<S: AsRef<str>>(arm_ids: &[S], budget: Budget) -> Self {
        Self {
            arms: arm_ids.iter().map(|id| ArmObservations::new(id.as_ref())).collect(),
            budget,
            spent: 0.0,
            available: vec![true; arm_ids.len()],
        }
    }

    pub fn arm_count(&self) -> usize {
        self.arms.len()
    }

    /// Number of pulls so far, `sum_i n_i`.
    pub fn pulls(&self) -> usize {
        self.arms.iter().map(|a| a.pull_count()).sum()
    }

    /// 1-based index of the upcoming step.
    pub fn next_step(&self) -> usize {
        self.pulls() + 1
    }

    pub fn pull_count(&self, arm: usize) -> usize {
        self.arms[arm].pull_count()
    }

    pub fn observe(&mut self, arm: usize, reward: f64, cost: f64) -> Result<()> {
        let obs = self.arms.get_mut(arm).ok_or(Error::UnknownArm(arm))?;
        obs.push(reward, cost)?;
        self.spent += cost;
        Ok(())
    }

    pub fn mark_exhausted(&mut self, arm: usize) {
        if let Some(a) = self.available.get_mut(arm) {
            *a = false;
        }
    }

    pub fn any_available(&self) -> bool {
        self.available.iter().any(|a| *a)
    }

    /// An available arm that has not been pulled yet, lowest index first.
    pub fn unpulled_arm(&self) -> Option<usize> {
        (0..self.arm_count()).find(|&i| self.available[i] && self.arms[i].pull_count() == 0)
    }

    pub fn incumbent(&self) -> Option<f64> {
        self.arms.iter().filter_map(|a| a.best()).reduce(f64::max)
    }
}

/// A bandit decision rule.
pub trait Policy: Send {
    fn name(&self) -> &str;

    /// Chooses the next arm among `state.available`.
    fn select(&mut self, state: &PolicyState, rng: &mut SimRng) -> Result<usize>;

    /// Called after `state` has recorded the pull of `arm`.
    fn observe(&mut self, state: &PolicyState, arm: usize, reward: f64, cost: f64) -> Result<()>;
}

/// Index of the largest score among available arms; exact ties are broken
/// uniformly at random. Returns `None` when no arm is available.
pub fn argmax_random_tie<R: Rng + ?Sized>(scores: &[f64], available: &[bool], rng: &mut R) -> Option<usize> {
    let mut best = f64::NEG_INFINITY;
    let mut ties: Vec<usize> = Vec::new();
    for (i, &s) in scores.iter().enumerate() {
        if !available.get(i).copied().unwrap_or(false) || s.is_nan() {
            continue;
        }
        if s > best || ties.is_empty() {
            best = s;
            ties.clear();
            ties.push(i);
        } else if s == best {
            ties.push(i);
        }
    }
    match ties.len() {
        0 => None,
        1 => Some(ties[0]),
        n => Some(ties[rng.random_range(0..n)]),
    }
}
