//! Baselines: round-robin, uniform random, MaxUCB and Rising Bandits.

use rand::Rng;

use super::{argmax_random_tie, Policy, PolicyState};
use crate::error::Result;
use crate::seeding::SimRng;
use crate::types::Budget;

/// Available arm with the fewest pulls, lowest index first.
fn least_pulled(state: &PolicyState, candidates: impl Iterator<Item = usize>) -> usize {
    candidates
        .filter(|&i| state.available[i])
        .min_by_key(|&i| (state.pull_count(i), i))
        .unwrap_or(0)
}

#[derive(Debug, Clone)]
pub struct RoundRobin {
    name: String,
}

impl RoundRobin {
    pub fn new(name: impl Into<String>) -> Self {
        Self { name: name.into() }
    }
}

impl Policy for RoundRobin {
    fn name(&self) -> &str {
        &self.name
    }

    fn select(&mut self, state: &PolicyState, _rng: &mut SimRng) -> Result<usize> {
        Ok(least_pulled(state, 0..state.arm_count()))
    }

    fn observe(&mut self, _: &PolicyState, _: usize, _: f64, _: f64) -> Result<()> {
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct RandomPolicy {
    name: String,
}

impl RandomPolicy {
    pub fn new(name: impl Into<String>) -> Self {
        Self { name: name.into() }
    }
}

impl Policy for RandomPolicy {
    fn name(&self) -> &str {
        &self.name
    }

    fn select(&mut self, state: &PolicyState, rng: &mut SimRng) -> Result<usize> {
        let open: Vec<usize> = (0..state.arm_count()).filter(|&i| state.available[i]).collect();
        Ok(if open.is_empty() {
            0
        } else {
            open[rng.random_range(0..open.len())]
        })
    }

    fn observe(&mut self, _: &PolicyState, _: usize, _: f64, _: f64) -> Result<()> {
        Ok(())
    }
}

/// Upper confidence bound on the arm maximum:
/// `max_k r_{i,k} + sqrt(alpha * ln(t) / n_i)`.
#[derive(Debug, Clone)]
pub struct MaxUcb {
    name: String,
    alpha: f64,
}

impl MaxUcb {
    pub const DEFAULT_ALPHA: f64 = 0.5;

    pub fn new(name: impl Into<String>, alpha: f64) -> Self {
        Self {
            name: name.into(),
            alpha,
        }
    }

    pub fn index(&self, best: f64, pulls: usize, t: usize) -> f64 {
        if pulls == 0 {
            return f64::INFINITY;
        }
        best + (self.alpha * (t as f64).ln() / pulls as f64).sqrt()
    }
}

impl Policy for MaxUcb {
    fn name(&self) -> &str {
        &self.name
    }

    fn select(&mut self, state: &PolicyState, rng: &mut SimRng) -> Result<usize> {
        let t = state.next_step();
        let scores: Vec<f64> = state
            .arms
            .iter()
            .map(|a| self.index(a.best().unwrap_or(0.0), a.pull_count(), t))
            .collect();
        Ok(argmax_random_tie(&scores, &state.available, rng).unwrap_or(0))
    }

    fn observe(&mut self, _: &PolicyState, _: usize, _: f64, _: f64) -> Result<()> {
        Ok(())
    }
}

/// Successive elimination on extrapolated incumbent curves.
///
/// Each arm's incumbent is bounded below by its current value and above by
/// a linear extrapolation of the slope over the last `window` pulls to the
/// end of the budget. Arms whose upper bound falls below another arm's
/// lower bound are eliminated; surviving arms are pulled in turn. The
/// cost-aware variant measures the remaining budget in expected pulls
/// `(B - b) / mean cost` of the arm.
#[derive(Debug, Clone)]
pub struct RisingBandits {
    name: String,
    window: usize,
    cost_aware: bool,
    active: Vec<bool>,
}

impl RisingBandits {
    pub const DEFAULT_WINDOW: usize = 5;

    pub fn new(name: impl Into<String>, arms: usize, window: usize, cost_aware: bool) -> Self {
        Self {
            name: name.into(),
            window: window.max(1),
            cost_aware,
            active: vec![true; arms],
        }
    }

    pub fn active(&self) -> &[bool] {
        &self.active
    }

    fn remaining_pulls(&self, state: &PolicyState, arm: usize) -> f64 {
        match state.budget {
            Budget::Steps(t) => t.saturating_sub(state.pulls()) as f64,
            Budget::Seconds(b) => {
                let left = (b - state.spent).max(0.0);
                let obs = &state.arms[arm];
                if self.cost_aware && obs.pull_count() > 0 {
                    left / (obs.total_cost() / obs.pull_count() as f64)
                } else {
                    let mean = state.spent / state.pulls().max(1) as f64;
                    if mean > 0.0 {
                        left / mean
                    } else {
                        0.0
                    }
                }
            }
        }
    }

    /// `(lower, upper)` bounds on the arm's final incumbent.
    fn bounds(&self, state: &PolicyState, arm: usize) -> (f64, f64) {
        let maxes = &state.arms[arm].running_max;
        let Some(&now) = maxes.last() else {
            return (f64::NEG_INFINITY, f64::INFINITY);
        };
        if maxes.len() <= self.window {
            return (now, f64::INFINITY);
        }
        let slope = (now - maxes[maxes.len() - 1 - self.window]) / self.window as f64;
        (now, now + slope * self.remaining_pulls(state, arm))
    }
}

impl Policy for RisingBandits {
    fn name(&self) -> &str {
        &self.name
    }

    fn select(&mut self, state: &PolicyState, _rng: &mut SimRng) -> Result<usize> {
        let candidates: Vec<usize> = (0..state.arm_count())
            .filter(|&i| self.active[i] && state.available[i])
            .collect();
        if candidates.is_empty() {
            return Ok(least_pulled(state, 0..state.arm_count()));
        }
        Ok(least_pulled(state, candidates.into_iter()))
    }

    fn observe(&mut self, state: &PolicyState, _: usize, _: f64, _: f64) -> Result<()> {
        let bounds: Vec<(f64, f64)> = (0..state.arm_count()).map(|i| self.bounds(state, i)).collect();
        let best_lower = (0..state.arm_count())
            .filter(|&i| self.active[i])
            .map(|i| bounds[i].0)
            .fold(f64::NEG_INFINITY, f64::max);
        for (i, (_, upper)) in bounds.iter().enumerate() {
            if self.active[i] && *upper < best_lower {
                self.active[i] = false;
            }
        }
        Ok(())
    }
}
