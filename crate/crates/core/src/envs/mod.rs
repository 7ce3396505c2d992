//! Environments that answer pulls: replay of stored trajectories and
//! synthetic generative arms.

mod replay;
mod synthetic;

pub use replay::{oracle_max, write_trajectories, LoadOptions, ReplayEnvironment, TaskData, TrajectoryStore, TRAJECTORY_HEADER};
pub use synthetic::{ArmGenerator, CostSpec, SyntheticArmSpec, SyntheticEnvironment, SyntheticSpec};

use crate::error::Result;

/// Source of `(reward, cost)` pairs for a fixed set of arms.
pub trait Environment {
    fn arm_ids(&self) -> &[String];

    /// Next reward and cost of `arm`; `Error::ArmExhausted` once its data
    /// has run out.
    fn pull(&mut self, arm: usize) -> Result<(f64, f64)>;
}
