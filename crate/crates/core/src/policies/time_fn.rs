//! The future step `f_i(t)` at which an arm's max-posterior is queried.

use serde::{Deserialize, Serialize};

use super::PolicyState;
use crate::error::{Error, Result};
use crate::posterior::CostModel;
use crate::seeding::SimRng;
use crate::types::Budget;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TimeFunctionSpec {
    /// `f(t) = t`, the anytime choice.
    Step,
    /// `f(t) = T`.
    Horizon,
    /// `f(t) = n_i + T - t`.
    Remaining,
    /// `f(t) = n_i + (B - b) / c` with `c` drawn from the arm's cost posterior.
    BudgetAware,
    /// `f(t) = b / c`.
    Budgetless,
}

impl TimeFunctionSpec {
    pub const NAMES: [&'static str; 5] = ["step", "horizon", "remaining", "budget-aware", "budgetless"];

    pub fn as_str(&self) -> &'static str {
        match self {
            TimeFunctionSpec::Step => "step",
            TimeFunctionSpec::Horizon => "horizon",
            TimeFunctionSpec::Remaining => "remaining",
            TimeFunctionSpec::BudgetAware => "budget-aware",
            TimeFunctionSpec::Budgetless => "budgetless",
        }
    }

    pub fn uses_costs(&self) -> bool {
        matches!(self, TimeFunctionSpec::BudgetAware | TimeFunctionSpec::Budgetless)
    }
}

impl std::str::FromStr for TimeFunctionSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.replace('_', "-").as_str() {
            "step" => Ok(TimeFunctionSpec::Step),
            "horizon" => Ok(TimeFunctionSpec::Horizon),
            "remaining" => Ok(TimeFunctionSpec::Remaining),
            "budget-aware" => Ok(TimeFunctionSpec::BudgetAware),
            "budgetless" | "budgetless-cost-scaled" => Ok(TimeFunctionSpec::Budgetless),
            other => Err(Error::Config(format!(
                "unknown time function {other:?} (expected one of: {})",
                Self::NAMES.join(", ")
            ))),
        }
    }
}

impl std::fmt::Display for TimeFunctionSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A time function bound to an episode, with per-arm cost posteriors for
/// the budget variants.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeFunction {
    spec: TimeFunctionSpec,
    cap: Option<f64>,
    costs: Vec<CostModel>,
}

impl TimeFunction {
    /// `cap` is the largest step the reward model can answer for, if any.
    pub fn new(spec: TimeFunctionSpec, arms: usize, budget: Budget, cap: Option<usize>) -> Result<Self> {
        let costs = match (spec.uses_costs(), budget) {
            (true, Budget::Seconds(b)) => vec![CostModel::new(b)?; arms],
            (false, _) | (true, Budget::Steps(_)) => Vec::new(),
        };
        Ok(Self {
            spec,
            cap: cap.map(|m| m as f64),
            costs,
        })
    }

    pub fn spec(&self) -> TimeFunctionSpec {
        self.spec
    }

    pub fn observe_cost(&mut self, arm: usize, cost: f64) -> Result<()> {
        match self.costs.get_mut(arm) {
            Some(model) => model.observe(cost),
            None => Ok(()),
        }
    }

    /// `f_i(t)` with the cost drawn from the arm's posterior. Under a step
    /// budget every pull costs one unit.
    pub fn evaluate(&self, state: &PolicyState, arm: usize, rng: &mut SimRng) -> Result<f64> {
        let cost = match self.costs.get(arm) {
            Some(model) if self.spec.uses_costs() => model.sample(rng),
            _ => 1.0,
        };
        self.evaluate_with_cost(state, arm, cost)
    }

    /// `f_i(t)` for a given per-pull cost `c`.
    pub fn evaluate_with_cost(&self, state: &PolicyState, arm: usize, cost: f64) -> Result<f64> {
        let n = state.pull_count(arm) as f64;
        let t = state.next_step() as f64;
        let (total, spent) = match state.budget {
            Budget::Steps(steps) => (steps as f64, state.pulls() as f64),
            Budget::Seconds(b) => (b, state.spent),
        };
        let raw = match self.spec {
            TimeFunctionSpec::Step => t,
            TimeFunctionSpec::Horizon => horizon_steps(state.budget)?,
            TimeFunctionSpec::Remaining => n + horizon_steps(state.budget)? - t,
            TimeFunctionSpec::BudgetAware => {
                let left = total - spent;
                if left <= 0.0 {
                    return Ok(n.max(1.0));
                }
                n + left / cost
            }
            TimeFunctionSpec::Budgetless => spent / cost,
        };
        Ok(self.clamp(raw, n))
    }

    fn clamp(&self, raw: f64, n: f64) -> f64 {
        let lo = n + 1.0;
        match self.cap {
            Some(cap) => raw.max(lo).min(cap.max(lo)),
            None => raw.max(lo),
        }
    }
}

fn horizon_steps(budget: Budget) -> Result<f64> {
    budget
        .steps()
        .map(|s| s as f64)
        .ok_or_else(|| Error::Config("horizon-based time functions need a step budget".into()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn state_with(pulls: &[(usize, f64)], arms: usize, budget: Budget) -> PolicyState {
        let ids: Vec<String> = (0..arms).map(|i| format!("a{i}")).collect();
        let mut s = PolicyState::new(&ids, budget);
        for &(arm, cost) in pulls {
            s.observe(arm, 0.5, cost).unwrap();
        }
        s
    }

    #[test]
    fn step_variant_returns_t() {
        let pulls: Vec<(usize, f64)> = (0..16).map(|i| (i % 2, 1.0)).collect();
        let s = state_with(&pulls, 2, Budget::Steps(100));
        let tf = TimeFunction::new(TimeFunctionSpec::Step, 2, s.budget, None).unwrap();
        assert_eq!(tf.evaluate_with_cost(&s, 0, 1.0).unwrap(), 17.0);
    }

    #[test]
    fn budget_aware_arithmetic() {
        // arm 0 pulled five times, 60 seconds spent of 100
        let pulls = vec![(0, 12.0); 5];
        let s = state_with(&pulls, 2, Budget::Seconds(100.0));
        let tf = TimeFunction::new(TimeFunctionSpec::BudgetAware, 2, s.budget, Some(200)).unwrap();
        assert_eq!(tf.evaluate_with_cost(&s, 0, 10.0).unwrap(), 9.0);
        // nothing spent on arm 1 yet: n_i + B/c, with b = 60 global
        assert_eq!(tf.evaluate_with_cost(&s, 1, 10.0).unwrap(), 4.0);
    }

    #[test]
    fn budget_aware_at_start() {
        let s = state_with(&[], 2, Budget::Seconds(100.0));
        let tf = TimeFunction::new(TimeFunctionSpec::BudgetAware, 2, s.budget, None).unwrap();
        assert_eq!(tf.evaluate_with_cost(&s, 0, 4.0).unwrap(), 25.0);
    }

    #[test]
    fn exhausted_budget_returns_pull_count() {
        let s = state_with(&[(0, 60.0), (0, 50.0)], 1, Budget::Seconds(100.0));
        let tf = TimeFunction::new(TimeFunctionSpec::BudgetAware, 1, s.budget, None).unwrap();
        assert_eq!(tf.evaluate_with_cost(&s, 0, 1.0).unwrap(), 2.0);
    }

    #[test]
    fn horizon_and_remaining() {
        let pulls = vec![(0, 1.0), (1, 1.0), (0, 1.0)];
        let s = state_with(&pulls, 2, Budget::Steps(50));
        let h = TimeFunction::new(TimeFunctionSpec::Horizon, 2, s.budget, None).unwrap();
        assert_eq!(h.evaluate_with_cost(&s, 0, 1.0).unwrap(), 50.0);
        let r = TimeFunction::new(TimeFunctionSpec::Remaining, 2, s.budget, None).unwrap();
        assert_eq!(r.evaluate_with_cost(&s, 0, 1.0).unwrap(), 2.0 + 50.0 - 4.0);
        let secs = state_with(&pulls, 2, Budget::Seconds(50.0));
        assert!(h.evaluate_with_cost(&secs, 0, 1.0).is_err());
    }

    #[test]
    fn clamped_to_cap_and_next_pull() {
        let pulls = vec![(0, 1.0); 3];
        let s = state_with(&pulls, 1, Budget::Steps(1000));
        let capped = TimeFunction::new(TimeFunctionSpec::Horizon, 1, s.budget, Some(200)).unwrap();
        assert_eq!(capped.evaluate_with_cost(&s, 0, 1.0).unwrap(), 200.0);
        let less = TimeFunction::new(TimeFunctionSpec::Budgetless, 1, Budget::Seconds(1000.0), None).unwrap();
        let cheap = state_with(&pulls, 1, Budget::Seconds(1000.0));
        // b / c = 3 / 10 is below n_i + 1
        assert_eq!(less.evaluate_with_cost(&cheap, 0, 10.0).unwrap(), 4.0);
    }

    #[test]
    fn names_round_trip() {
        for name in TimeFunctionSpec::NAMES {
            let spec: TimeFunctionSpec = name.parse().unwrap();
            assert_eq!(spec.as_str(), name);
        }
        assert_eq!("budget_aware".parse::<TimeFunctionSpec>().unwrap(), TimeFunctionSpec::BudgetAware);
        assert!("sometimes".parse::<TimeFunctionSpec>().is_err());
    }
}
