//! The `maxarm` command line: `gen-prior`, `run` and `report`.
//!
//! Exit codes: 0 success, 1 usage, 2 data error, 3 runtime failure.

mod config;

use std::ffi::OsString;
use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;

pub use config::{EnvironmentConfig, ExperimentConfig, NormalizeConfig, PolicyEntry, PolicyOptions, SeedConfig, SyntheticTask};

use crate::error::{Error, Result};
use crate::harness::{
    read_run_artifacts, write_report, write_run_artifacts, CellFailure, Correction, Manifest, ReportOptions, RunStatus,
};
use crate::priors::{emit_corpus, CorpusSummary, PriorConfig, PriorKind};
use crate::types::{Budget, RunRecord};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;

pub const CORPUS_FILE: &str = "corpus.csv";
pub const PRIOR_MANIFEST_FILE: &str = "prior.json";

#[derive(Debug, Parser)]
#[command(name = "maxarm", version, about = "Posterior sampling for max-k-armed bandits")]
pub struct Cli {
    /// Root seed; overrides the configuration file.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads for independent episodes (default: all cores).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Output directory; overrides the configuration file.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample a running-maximum corpus from a synthetic trajectory prior.
    GenPrior(GenPriorArgs),
    /// Run every (task, policy, seed) episode of an experiment.
    Run(RunArgs),
    /// Compute ranks, sign tests and pull gains from a run directory.
    Report(ReportArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PresetArg {
    Flat,
    SemiFlat,
    Curved,
    Custom,
}

impl From<PresetArg> for PriorKind {
    fn from(p: PresetArg) -> Self {
        match p {
            PresetArg::Flat => PriorKind::Flat,
            PresetArg::SemiFlat => PriorKind::SemiFlat,
            PresetArg::Curved => PriorKind::Curved,
            PresetArg::Custom => PriorKind::Custom,
        }
    }
}

#[derive(Debug, clap::Args)]
pub struct GenPriorArgs {
    #[arg(long, value_enum)]
    pub preset: PresetArg,
    /// Number of sequences.
    #[arg(long, default_value_t = 1000)]
    pub count: u64,
    /// Sequence length.
    #[arg(long)]
    pub horizon: Option<usize>,
    /// Upper bound of the first factor's sd (custom preset only).
    #[arg(long)]
    pub sigma1_max: Option<f64>,
    /// Scale of the second factor's sd (custom preset only).
    #[arg(long)]
    pub sigma2_scale: Option<f64>,
}

#[derive(Debug, clap::Args)]
pub struct RunArgs {
    /// Experiment configuration (TOML).
    pub config: PathBuf,
    /// Seeds per (task, policy).
    #[arg(long)]
    pub seeds: Option<u64>,
    /// Budget value, keeping the configured mode.
    #[arg(long)]
    pub budget: Option<f64>,
    /// Comma-separated policy names replacing the configured list.
    #[arg(long, value_delimiter = ',')]
    pub policies: Option<Vec<String>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CorrectionArg {
    Bonferroni,
    Holm,
}

#[derive(Debug, clap::Args)]
pub struct ReportArgs {
    /// Directory written by `run`.
    pub run_dir: PathBuf,
    /// Test this policy against each other one instead of all pairs.
    #[arg(long)]
    pub baseline: Option<String>,
    /// Family-wise significance level.
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    #[arg(long, value_enum, default_value_t = CorrectionArg::Bonferroni)]
    pub correction: CorrectionArg,
    /// Also write per-position regret and loss curves.
    #[arg(long)]
    pub emit_plot_data: bool,
    /// Curve points under a seconds budget.
    #[arg(long, default_value_t = 100)]
    pub grid: usize,
}

/// Failure of a command, with the exit code it maps to.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = if e.is_data_error() { EXIT_DATA } else { EXIT_RUNTIME };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

fn usage(message: impl Into<String>) -> CliError {
    CliError {
        code: EXIT_USAGE,
        message: message.into(),
    }
}

/// Parses arguments, runs the command and returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match execute(&cli) {
        Ok(message) => {
            println!("{message}");
            EXIT_OK
        }
        Err(e) => {
            eprintln!("error: {}", e.message);
            e.code
        }
    }
}

pub fn execute(cli: &Cli) -> std::result::Result<String, CliError> {
    match &cli.command {
        Command::GenPrior(args) => gen_prior(cli, args),
        Command::Run(args) => run(cli, args),
        Command::Report(args) => report(cli, args),
    }
}

#[derive(Serialize)]
struct PriorManifest<'a> {
    prior: &'a PriorConfig,
    count: u64,
    seed: u64,
    summary: CorpusSummary,
}

fn gen_prior(cli: &Cli, args: &GenPriorArgs) -> std::result::Result<String, CliError> {
    let kind = PriorKind::from(args.preset);
    let mut prior = match (kind, args.sigma1_max, args.sigma2_scale) {
        (PriorKind::Custom, Some(s1), Some(s2)) => PriorConfig::custom(s1, s2),
        (PriorKind::Custom, _, _) => return Err(usage("--preset custom needs --sigma1-max and --sigma2-scale")),
        (_, None, None) => PriorConfig::preset(kind),
        _ => return Err(usage("--sigma1-max and --sigma2-scale apply only to --preset custom")),
    };
    if let Some(h) = args.horizon {
        prior = prior.with_horizon(h);
    }
    if args.count == 0 {
        return Err(usage("--count must be at least 1"));
    }
    let seed = cli.seed.unwrap_or(0);
    let dir = cli.out.clone().unwrap_or_else(|| PathBuf::from("."));
    std::fs::create_dir_all(&dir).map_err(Error::from)?;
    let path = dir.join(CORPUS_FILE);
    let mut sink = BufWriter::new(File::create(&path).map_err(Error::from)?);
    let summary = emit_corpus(&prior, args.count, seed, &mut sink)?;
    drop(sink);
    let manifest = PriorManifest {
        prior: &prior,
        count: args.count,
        seed,
        summary,
    };
    let mut json = serde_json::to_string_pretty(&manifest).map_err(Error::from)?;
    json.push('\n');
    std::fs::write(dir.join(PRIOR_MANIFEST_FILE), json).map_err(Error::from)?;
    Ok(format!(
        "wrote {} sequences ({} records) to {}",
        summary.sequences,
        summary.records,
        path.display()
    ))
}

fn apply_overrides(config: &mut ExperimentConfig, cli: &Cli, args: &RunArgs) -> std::result::Result<(), CliError> {
    if let Some(seed) = cli.seed {
        config.seeds.root = seed;
    }
    if let Some(n) = args.seeds {
        config.seeds.count = n;
    }
    if let Some(v) = args.budget {
        config.budget = match config.budget {
            Budget::Steps(_) if v >= 1.0 && v.fract() == 0.0 => Budget::Steps(v as usize),
            Budget::Steps(_) => return Err(usage("a step budget must be a positive integer")),
            Budget::Seconds(_) => Budget::Seconds(v),
        };
    }
    if let Some(names) = &args.policies {
        config.policies = names.iter().map(|n| PolicyEntry::Name(n.clone())).collect();
    }
    if let Some(out) = &cli.out {
        config.out = Some(out.clone());
    }
    Ok(())
}

fn thread_pool(jobs: Option<usize>) -> std::result::Result<rayon::ThreadPool, CliError> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(j) = jobs {
        if j == 0 {
            return Err(usage("--jobs must be at least 1"));
        }
        builder = builder.num_threads(j);
    }
    builder.build().map_err(|e| CliError {
        code: EXIT_RUNTIME,
        message: e.to_string(),
    })
}

fn run(cli: &Cli, args: &RunArgs) -> std::result::Result<String, CliError> {
    let mut config = ExperimentConfig::load(&args.config)?;
    apply_overrides(&mut config, cli, args)?;
    let base = args.config.parent().unwrap_or(Path::new(".")).to_path_buf();
    let out = match &cli.out {
        Some(out) => out.clone(),
        None => match &config.out {
            Some(out) if out.is_absolute() => out.clone(),
            Some(out) => base.join(out),
            None => return Err(usage("no output directory: pass --out or set `out` in the configuration")),
        },
    };
    let experiment = config.experiment(&base)?;
    let pool = thread_pool(cli.jobs)?;

    let cells = experiment.cells();
    // results come back in cell order whatever the scheduling
    let results: Vec<Result<RunRecord>> = pool.install(|| cells.par_iter().map(|c| experiment.run_cell(c)).collect());
    let tasks = pool.install(|| {
        experiment
            .tasks
            .par_iter()
            .map(|t| experiment.task_info(t))
            .collect::<Result<Vec<_>>>()
    })?;

    let mut records = Vec::with_capacity(results.len());
    let mut failures = Vec::new();
    let mut first_error = None;
    for (cell, result) in cells.iter().zip(results) {
        match result {
            Ok(r) => records.push(r),
            Err(e) => {
                failures.push(CellFailure {
                    task: cell.task.clone(),
                    policy: experiment.policies[cell.policy].name.clone(),
                    seed: cell.seed,
                    error: e.to_string(),
                });
                first_error.get_or_insert(e);
            }
        }
    }
    let manifest = Manifest {
        status: if failures.is_empty() {
            RunStatus::Complete
        } else {
            RunStatus::Partial
        },
        environment: config.environment_label(),
        normalization: match &experiment.source {
            crate::harness::EnvironmentSource::Replay(store) => store.normalization(),
            crate::harness::EnvironmentSource::Synthetic(_) => None,
        },
        budget: experiment.budget,
        checkpoints: experiment.checkpoints.clone(),
        root_seed: experiment.root_seed,
        seeds: experiment.seeds,
        tasks: experiment.tasks.clone(),
        policies: experiment.policies.iter().map(|p| p.name.clone()).collect(),
        failures,
        config: serde_json::to_value(ExperimentConfig {
            out: None,
            ..config.clone()
        })
        .map_err(Error::from)?,
    };
    std::fs::create_dir_all(&out).map_err(Error::from)?;
    write_run_artifacts(&out, &manifest, &records, &tasks)?;
    match first_error {
        None => Ok(format!("ran {} episodes into {}", records.len(), out.display())),
        Some(e) => {
            let mut err = CliError::from(e);
            err.message = format!(
                "{} of {} episodes failed; partial results in {}: {}",
                manifest.failures.len(),
                cells.len(),
                out.display(),
                err.message
            );
            Err(err)
        }
    }
}

fn report(cli: &Cli, args: &ReportArgs) -> std::result::Result<String, CliError> {
    let data = read_run_artifacts(&args.run_dir)?;
    let options = ReportOptions {
        baseline: args.baseline.clone(),
        alpha: args.alpha,
        correction: match args.correction {
            CorrectionArg::Bonferroni => Correction::Bonferroni,
            CorrectionArg::Holm => Correction::Holm,
        },
        plot_data: args.emit_plot_data,
        grid_points: args.grid,
    };
    if !(options.alpha > 0.0 && options.alpha < 1.0) {
        return Err(usage("--alpha must lie in (0, 1)"));
    }
    let out = cli.out.clone().unwrap_or_else(|| args.run_dir.clone());
    std::fs::create_dir_all(&out).map_err(Error::from)?;
    let files = write_report(&data, &out, &options)?;
    Ok(files.iter().map(|f| f.display().to_string()).collect::<Vec<_>>().join("\n"))
}
