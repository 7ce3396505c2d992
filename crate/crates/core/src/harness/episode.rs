//! The episode loop: initialization round, then select / pull / observe
//! until the budget is spent or every arm is exhausted.

use crate::envs::Environment;
use crate::error::{Error, Result};
use crate::policies::{Policy, PolicyState};
use crate::seeding::SimRng;
use crate::types::{Budget, Checkpoint, RunRecord, StepRecord};

/// Budget fractions 1/3, 2/3 and 1.
pub const DEFAULT_CHECKPOINTS: [f64; 3] = [1.0 / 3.0, 2.0 / 3.0, 1.0];

/// Identifies the episode in its record.
#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeLabel {
    pub task_id: String,
    pub seed: u64,
    pub repetition: Option<u32>,
}

pub fn validate_checkpoints(checkpoints: &[f64]) -> Result<()> {
    if checkpoints.is_empty() {
        return Err(Error::Config("at least one checkpoint required".into()));
    }
    if checkpoints.iter().any(|c| !(*c > 0.0 && *c <= 1.0)) {
        return Err(Error::Config(format!("checkpoints must lie in (0, 1]: {checkpoints:?}")));
    }
    if !checkpoints.windows(2).all(|w| w[0] < w[1]) {
        return Err(Error::Config(format!("checkpoints must be strictly increasing: {checkpoints:?}")));
    }
    Ok(())
}

/// Whether one more pull is allowed before looking at its cost.
fn has_room(budget: Budget, state: &PolicyState) -> bool {
    match budget {
        Budget::Steps(t) => state.pulls() < t,
        Budget::Seconds(b) => state.spent < b,
    }
}

fn fits(budget: Budget, spent: f64, cost: f64) -> bool {
    match budget {
        Budget::Steps(_) => true,
        Budget::Seconds(b) => spent + cost <= b,
    }
}

/// Runs one episode. A pull whose cost would overrun a seconds budget is
/// discarded and ends the episode.
pub fn run_episode(
    policy: &mut dyn Policy,
    env: &mut dyn Environment,
    budget: Budget,
    checkpoints: &[f64],
    label: EpisodeLabel,
    rng: &mut SimRng,
) -> Result<RunRecord> {
    validate_checkpoints(checkpoints)?;
    let arm_ids = env.arm_ids().to_vec();
    if arm_ids.is_empty() {
        return Err(Error::Config("environment has no arms".into()));
    }
    if let Budget::Steps(t) = budget {
        if t < arm_ids.len() {
            return Err(Error::InitializationInfeasible(format!(
                "{t} steps cannot pull each of {} arms once",
                arm_ids.len()
            )));
        }
    }
    let mut state = PolicyState::new(&arm_ids, budget);
    let mut steps = Vec::new();
    let mut ended_early = false;

    let mut record = |state: &mut PolicyState, policy: &mut dyn Policy, arm: usize, reward: f64, cost: f64| {
        state.observe(arm, reward, cost)?;
        policy.observe(state, arm, reward, cost)?;
        steps.push(StepRecord {
            step: state.pulls(),
            arm,
            arm_id: arm_ids[arm].clone(),
            reward,
            cost,
            spent: state.spent,
            incumbent: state.incumbent().expect("at least one pull"),
        });
        Ok::<(), Error>(())
    };

    for arm in 0..arm_ids.len() {
        let (reward, cost) = env.pull(arm)?;
        if !fits(budget, state.spent, cost) {
            return Err(Error::InitializationInfeasible(format!(
                "budget {} exhausted before arm {} was pulled once",
                budget.value(),
                arm_ids[arm]
            )));
        }
        record(&mut state, policy, arm, reward, cost)?;
    }

    while has_room(budget, &state) {
        if !state.any_available() {
            ended_early = true;
            break;
        }
        let arm = policy.select(&state, rng)?;
        if !state.available.get(arm).copied().unwrap_or(false) {
            return Err(Error::UnknownArm(arm));
        }
        match env.pull(arm) {
            Ok((reward, cost)) => {
                if !fits(budget, state.spent, cost) {
                    break;
                }
                record(&mut state, policy, arm, reward, cost)?;
            }
            Err(Error::ArmExhausted(_)) => state.mark_exhausted(arm),
            Err(e) => return Err(e),
        }
    }

    let checkpoints = checkpoint_incumbents(&steps, budget, checkpoints);
    Ok(RunRecord {
        policy_name: policy.name().to_string(),
        task_id: label.task_id,
        seed: label.seed,
        repetition: label.repetition,
        final_incumbent: steps.last().map_or(0.0, |s| s.incumbent),
        steps,
        checkpoints,
        ended_early,
    })
}

/// Index of the last step within `limit` (steps or seconds), falling back
/// to the first step.
pub fn last_step_within(steps: &[StepRecord], budget: Budget, limit: f64) -> Option<&StepRecord> {
    let within = |s: &StepRecord| match budget {
        Budget::Steps(_) => s.step as f64 <= limit,
        Budget::Seconds(_) => s.spent <= limit,
    };
    let n = steps.partition_point(within);
    steps.get(n.saturating_sub(1))
}

/// Incumbent at each budget fraction: the last step whose step index
/// (`ceil(fraction * T)`) or spend (`fraction * B`) is within the fraction.
pub fn checkpoint_incumbents(steps: &[StepRecord], budget: Budget, fractions: &[f64]) -> Vec<Checkpoint> {
    fractions
        .iter()
        .filter_map(|&fraction| {
            let limit = match budget {
                Budget::Steps(t) => (fraction * t as f64 - 1e-9).ceil(),
                Budget::Seconds(b) => fraction * b,
            };
            last_step_within(steps, budget, limit).map(|s| Checkpoint {
                fraction,
                incumbent: s.incumbent,
                pulls: s.step,
                spent: s.spent,
            })
        })
        .collect()
}
