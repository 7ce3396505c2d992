//! Domain values shared by every module: trajectories, per-arm
//! observation sets, run records, and the two elementary reward transforms.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Running maximum of a reward sequence.
pub fn running_max(rewards: &[f64]) -> Result<Vec<f64>> {
    if rewards.is_empty() {
        return Err(Error::EmptySequence);
    }
    let mut best = f64::NEG_INFINITY;
    Ok(rewards
        .iter()
        .map(|&r| {
            best = best.max(r);
            best
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Maximize,
    Minimize,
}

impl std::str::FromStr for Direction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "max" | "maximize" => Ok(Direction::Maximize),
            "min" | "minimize" => Ok(Direction::Minimize),
            other => Err(Error::Config(format!("unknown direction {other:?}"))),
        }
    }
}

/// Affine map from a raw metric range onto the [0, 1] reward scale.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Normalization {
    pub lo: f64,
    pub hi: f64,
    pub direction: Direction,
}

impl Normalization {
    pub fn new(lo: f64, hi: f64, direction: Direction) -> Result<Self> {
        // NaN bounds fail here as well
        if !(hi > lo) {
            return Err(Error::DegenerateRange { lo, hi });
        }
        Ok(Self { lo, hi, direction })
    }

    pub fn apply(&self, x: f64) -> f64 {
        let span = self.hi - self.lo;
        let v = match self.direction {
            Direction::Maximize => (x - self.lo) / span,
            Direction::Minimize => (self.hi - x) / span,
        };
        v.clamp(0.0, 1.0)
    }
}

impl std::str::FromStr for Normalization {
    type Err = Error;

    /// Parses `lo:hi:direction`, e.g. `0:1:minimize`.
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 3 {
            return Err(Error::Config(format!(
                "normalization must be lo:hi:direction, got {s:?}"
            )));
        }
        let lo: f64 = parts[0]
            .trim()
            .parse()
            .map_err(|_| Error::Config(format!("bad lower bound {:?}", parts[0])))?;
        let hi: f64 = parts[1]
            .trim()
            .parse()
            .map_err(|_| Error::Config(format!("bad upper bound {:?}", parts[1])))?;
        Normalization::new(lo, hi, parts[2].parse()?)
    }
}

/// Maps raw metrics onto [0, 1]; `maximize` keeps orientation, `minimize`
/// reflects it. Out-of-range values are clamped.
pub fn normalize_rewards(raw: &[f64], direction: Direction, lo: f64, hi: f64) -> Result<Vec<f64>> {
    let norm = Normalization::new(lo, hi, direction)?;
    Ok(raw.iter().map(|&x| norm.apply(x)).collect())
}

/// Rewards and costs of one (task, arm, repetition) optimization run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub task_id: String,
    pub arm_id: String,
    pub repetition: u32,
    pub rewards: Vec<f64>,
    pub costs: Vec<f64>,
}

impl Trajectory {
    pub fn new(
        task_id: impl Into<String>,
        arm_id: impl Into<String>,
        repetition: u32,
        rewards: Vec<f64>,
        costs: Vec<f64>,
    ) -> Result<Self> {
        if rewards.is_empty() {
            return Err(Error::EmptySequence);
        }
        if rewards.len() != costs.len() {
            return Err(Error::InvalidParameter(format!(
                "{} rewards but {} costs",
                rewards.len(),
                costs.len()
            )));
        }
        if let Some(&r) = rewards.iter().find(|r| !(0.0..=1.0).contains(*r)) {
            return Err(Error::RewardOutOfRange(r));
        }
        if let Some(&c) = costs.iter().find(|c| !(**c > 0.0)) {
            return Err(Error::NonPositiveCost(c));
        }
        Ok(Self {
            task_id: task_id.into(),
            arm_id: arm_id.into(),
            repetition,
            rewards,
            costs,
        })
    }

    pub fn len(&self) -> usize {
        self.rewards.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rewards.is_empty()
    }

    pub fn mean_cost(&self) -> f64 {
        self.costs.iter().sum::<f64>() / self.costs.len() as f64
    }
}

/// The observed data of one arm: rewards, their running max, and costs.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ArmObservations {
    pub arm_id: String,
    pub rewards: Vec<f64>,
    pub running_max: Vec<f64>,
    pub costs: Vec<f64>,
}

impl ArmObservations {
    pub fn new(arm_id: impl Into<String>) -> Self {
        Self {
            arm_id: arm_id.into(),
            ..Default::default()
        }
    }

    /// Builds observations from a reward sequence with unit costs.
    pub fn from_rewards(arm_id: impl Into<String>, rewards: &[f64]) -> Result<Self> {
        let mut obs = Self::new(arm_id);
        for &r in rewards {
            obs.push(r, 1.0)?;
        }
        Ok(obs)
    }

    pub fn push(&mut self, reward: f64, cost: f64) -> Result<()> {
        if !(0.0..=1.0).contains(&reward) {
            return Err(Error::RewardOutOfRange(reward));
        }
        if !(cost > 0.0) {
            return Err(Error::NonPositiveCost(cost));
        }
        let best = self.best().map_or(reward, |b| b.max(reward));
        self.rewards.push(reward);
        self.running_max.push(best);
        self.costs.push(cost);
        Ok(())
    }

    pub fn pull_count(&self) -> usize {
        self.rewards.len()
    }

    pub fn best(&self) -> Option<f64> {
        self.running_max.last().copied()
    }

    pub fn total_cost(&self) -> f64 {
        self.costs.iter().sum()
    }
}

/// Episode limit: a number of pulls or a total cost in seconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", content = "value", rename_all = "lowercase")]
pub enum Budget {
    Steps(usize),
    Seconds(f64),
}

impl Budget {
    pub fn seconds(&self) -> Option<f64> {
        match self {
            Budget::Seconds(b) => Some(*b),
            Budget::Steps(_) => None,
        }
    }

    pub fn steps(&self) -> Option<usize> {
        match self {
            Budget::Steps(t) => Some(*t),
            Budget::Seconds(_) => None,
        }
    }

    /// The budget as a plain number (pulls or seconds).
    pub fn value(&self) -> f64 {
        match self {
            Budget::Steps(t) => *t as f64,
            Budget::Seconds(b) => *b,
        }
    }
}

/// One step of a bandit episode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub step: usize,
    pub arm: usize,
    pub arm_id: String,
    pub reward: f64,
    pub cost: f64,
    /// Cumulative budget spent after this step.
    pub spent: f64,
    /// Best reward observed so far, across all arms.
    pub incumbent: f64,
}

/// Incumbent at a budget fraction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub fraction: f64,
    pub incumbent: f64,
    pub pulls: usize,
    pub spent: f64,
}

/// Audit trail of one bandit episode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub policy_name: String,
    pub task_id: String,
    pub seed: u64,
    pub repetition: Option<u32>,
    pub steps: Vec<StepRecord>,
    pub checkpoints: Vec<Checkpoint>,
    pub final_incumbent: f64,
    /// Set when the episode ended because every arm ran out of data.
    pub ended_early: bool,
}

impl RunRecord {
    pub fn total_pulls(&self) -> usize {
        self.steps.len()
    }

    pub fn spent(&self) -> f64 {
        self.steps.last().map_or(0.0, |s| s.spent)
    }

    pub fn pulls_per_arm(&self, k: usize) -> Vec<usize> {
        let mut counts = vec![0; k];
        for s in &self.steps {
            counts[s.arm] += 1;
        }
        counts
    }
}
