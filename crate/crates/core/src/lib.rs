#[cfg(feature = "cli")]
pub mod cli;
pub mod envs;
pub mod error;
pub mod harness;
pub mod policies;
pub mod posterior;
pub mod priors;
pub mod seeding;
pub mod types;

pub use error::{Error, Result};
