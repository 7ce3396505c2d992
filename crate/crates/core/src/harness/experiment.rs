//! A full experiment: every (task, policy, seed) cell over one environment
//! source, with per-cell random streams derived from a root seed.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::episode::{run_episode, validate_checkpoints, EpisodeLabel};
use crate::envs::{oracle_max, SyntheticSpec, TrajectoryStore};
use crate::error::{Error, Result};
use crate::policies::PolicySpec;
use crate::seeding::{derive_rng, derive_seed};
use crate::types::{Budget, RunRecord};

#[derive(Debug, Clone)]
pub enum EnvironmentSource {
    Replay(Arc<TrajectoryStore>),
    /// Synthetic environments keyed by task id.
    Synthetic(BTreeMap<String, SyntheticSpec>),
}

impl EnvironmentSource {
    pub fn task_ids(&self) -> Vec<String> {
        match self {
            EnvironmentSource::Replay(store) => store.task_ids().cloned().collect(),
            EnvironmentSource::Synthetic(specs) => specs.keys().cloned().collect(),
        }
    }

    pub fn arm_ids(&self, task: &str) -> Result<Vec<String>> {
        match self {
            EnvironmentSource::Replay(store) => Ok(store.task(task)?.arms.clone()),
            EnvironmentSource::Synthetic(specs) => Ok(synthetic_task(specs, task)?.arm_ids()),
        }
    }
}

fn synthetic_task<'a>(specs: &'a BTreeMap<String, SyntheticSpec>, task: &str) -> Result<&'a SyntheticSpec> {
    specs
        .get(task)
        .ok_or_else(|| Error::Config(format!("unknown task {task:?}")))
}

/// Oracle and reward range of a task, used for regret and normalized loss.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskInfo {
    pub task: String,
    pub oracle_arm: String,
    pub oracle_value: f64,
    pub reward_min: f64,
    pub reward_max: f64,
}

/// One (task, policy, seed index) episode.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cell {
    pub task: String,
    pub policy: usize,
    pub seed: u64,
}

#[derive(Debug, Clone)]
pub struct Experiment {
    pub source: EnvironmentSource,
    pub tasks: Vec<String>,
    pub policies: Vec<PolicySpec>,
    pub budget: Budget,
    pub checkpoints: Vec<f64>,
    /// Seeds per (task, policy).
    pub seeds: u64,
    pub root_seed: u64,
    /// Monte Carlo samples for synthetic oracles.
    pub oracle_samples: usize,
}

impl Experiment {
    pub fn validate(&self) -> Result<()> {
        validate_checkpoints(&self.checkpoints)?;
        if self.policies.is_empty() {
            return Err(Error::Config("no policies configured".into()));
        }
        if self.seeds == 0 {
            return Err(Error::Config("seed count must be positive".into()));
        }
        if self.tasks.is_empty() {
            return Err(Error::Config("no tasks selected".into()));
        }
        match self.budget {
            Budget::Steps(0) => return Err(Error::Config("step budget must be positive".into())),
            Budget::Seconds(b) if !(b > 0.0) || !b.is_finite() => {
                return Err(Error::Config("seconds budget must be positive".into()))
            }
            _ => {}
        }
        let mut names = BTreeSet::new();
        for p in &self.policies {
            if !names.insert(p.name.as_str()) {
                return Err(Error::Config(format!("policy {} listed twice", p.name)));
            }
            p.validate(self.budget)?;
        }
        let known = self.source.task_ids();
        for task in &self.tasks {
            if !known.contains(task) {
                return Err(Error::Config(format!("unknown task {task:?}")));
            }
        }
        if let EnvironmentSource::Replay(store) = &self.source {
            let needs_costs = self.budget.seconds().is_some() || self.policies.iter().any(|p| p.cost_aware);
            if needs_costs {
                store.require_costs()?;
            }
        }
        Ok(())
    }

    /// Cells in canonical order: task, then policy, then seed.
    pub fn cells(&self) -> Vec<Cell> {
        let mut out = Vec::new();
        for task in &self.tasks {
            for policy in 0..self.policies.len() {
                for seed in 0..self.seeds {
                    out.push(Cell {
                        task: task.clone(),
                        policy,
                        seed,
                    });
                }
            }
        }
        out
    }

    /// Runs one cell. The environment stream depends on (task, seed) only,
    /// so every policy faces the same repetition or synthetic draw; the
    /// policy stream also includes the policy name.
    pub fn run_cell(&self, cell: &Cell) -> Result<RunRecord> {
        let spec = self.policies.get(cell.policy).ok_or(Error::UnknownArm(cell.policy))?;
        let arm_ids = self.source.arm_ids(&cell.task)?;
        let mut policy = spec.build(&arm_ids, self.budget)?;
        let mut rng = derive_rng(
            self.root_seed,
            &["policy".into(), (&cell.task).into(), (&spec.name).into(), cell.seed.into()],
        );
        match &self.source {
            EnvironmentSource::Replay(store) => {
                let reps = &store.task(&cell.task)?.repetitions;
                let repetition = reps[(cell.seed % reps.len() as u64) as usize];
                let mut env = store.environment(&cell.task, repetition)?;
                let label = EpisodeLabel {
                    task_id: cell.task.clone(),
                    seed: cell.seed,
                    repetition: Some(repetition),
                };
                run_episode(policy.as_mut(), &mut env, self.budget, &self.checkpoints, label, &mut rng)
            }
            EnvironmentSource::Synthetic(specs) => {
                let env_seed = derive_seed(self.root_seed, &["env".into(), (&cell.task).into(), cell.seed.into()]);
                let mut env = synthetic_task(specs, &cell.task)?.build(env_seed)?;
                let label = EpisodeLabel {
                    task_id: cell.task.clone(),
                    seed: cell.seed,
                    repetition: None,
                };
                run_episode(policy.as_mut(), &mut env, self.budget, &self.checkpoints, label, &mut rng)
            }
        }
    }

    pub fn task_info(&self, task: &str) -> Result<TaskInfo> {
        let ((oracle_arm, oracle_value), (reward_min, reward_max)) = match &self.source {
            EnvironmentSource::Replay(store) => (
                oracle_max(store, task, self.budget)?,
                store.task(task)?.reward_bounds(),
            ),
            EnvironmentSource::Synthetic(specs) => {
                let seed = derive_seed(self.root_seed, &["oracle".into(), task.into()]);
                (
                    synthetic_task(specs, task)?.oracle_max(self.budget, self.oracle_samples, seed)?,
                    (0.0, 1.0),
                )
            }
        };
        Ok(TaskInfo {
            task: task.to_string(),
            oracle_arm,
            oracle_value,
            reward_min,
            reward_max,
        })
    }

    /// Runs every cell in order on the calling thread.
    pub fn run_sequential(&self) -> Vec<(Cell, Result<RunRecord>)> {
        self.cells()
            .into_iter()
            .map(|c| {
                let r = self.run_cell(&c);
                (c, r)
            })
            .collect()
    }
}
