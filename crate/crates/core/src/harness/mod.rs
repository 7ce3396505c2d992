//! Episode loop, experiment grid, statistics and run artifacts.

mod episode;
mod experiment;
mod report;
mod stats;

pub use episode::{
    checkpoint_incumbents, last_step_within, run_episode, validate_checkpoints, EpisodeLabel, DEFAULT_CHECKPOINTS,
};
pub use experiment::{Cell, EnvironmentSource, Experiment, TaskInfo};
pub use report::{
    read_run_artifacts, write_report, write_run_artifacts, CellFailure, Manifest, ReportOptions, RunData, RunStatus,
    MANIFEST_FILE, ORACLE_FILE, RUNS_FILE, SUMMARY_FILE,
};
pub use stats::{
    average_rank, binomial_upper_tail, multiple_comparison_adjust, normalized_loss, pull_count_gain, rank_with_ties,
    regret, sign_test, win_tie_loss, Correction, Decision, SignTestResult,
};
