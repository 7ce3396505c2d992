//! Run artifacts (`runs.csv`, `summary.csv`, `oracle.csv`, `manifest.json`)
//! and the report tables derived from them.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::episode::{checkpoint_incumbents, last_step_within};
use super::experiment::TaskInfo;
use super::stats::{
    average_rank, multiple_comparison_adjust, normalized_loss, pull_count_gain, sign_test, win_tie_loss, Correction,
};
use crate::error::{Error, Result};
use crate::types::{Budget, Normalization, RunRecord, StepRecord};

pub const RUNS_FILE: &str = "runs.csv";
pub const SUMMARY_FILE: &str = "summary.csv";
pub const ORACLE_FILE: &str = "oracle.csv";
pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RunStatus {
    Complete,
    Partial,
}

impl RunStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            RunStatus::Complete => "complete",
            RunStatus::Partial => "partial",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellFailure {
    pub task: String,
    pub policy: String,
    pub seed: u64,
    pub error: String,
}

/// Machine-readable description of a run directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub status: RunStatus,
    pub environment: String,
    pub normalization: Option<Normalization>,
    pub budget: Budget,
    pub checkpoints: Vec<f64>,
    pub root_seed: u64,
    pub seeds: u64,
    pub tasks: Vec<String>,
    pub policies: Vec<String>,
    pub failures: Vec<CellFailure>,
    /// The configuration the run was started with.
    pub config: serde_json::Value,
}

fn writer(path: &Path) -> Result<csv::Writer<BufWriter<File>>> {
    Ok(csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(BufWriter::new(File::create(path)?)))
}

fn commented_writer(path: &Path, comment: &str) -> Result<csv::Writer<BufWriter<File>>> {
    let mut file = BufWriter::new(File::create(path)?);
    writeln!(file, "# {comment}")?;
    Ok(csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(file))
}

fn reader(path: &Path) -> Result<csv::Reader<File>> {
    let file = File::open(path).map_err(|_| Error::MissingArtifact(path.to_path_buf()))?;
    Ok(csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(file))
}

fn fmt(x: f64) -> String {
    x.to_string()
}

/// Writes the per-run artifacts into `dir`, which must exist.
pub fn write_run_artifacts(dir: &Path, manifest: &Manifest, records: &[RunRecord], tasks: &[TaskInfo]) -> Result<()> {
    let mut runs = writer(&dir.join(RUNS_FILE))?;
    runs.write_record([
        "task", "policy", "seed", "repetition", "step", "arm_index", "arm", "reward", "cost", "spent", "incumbent",
    ])?;
    for r in records {
        let rep = r.repetition.map(|x| x.to_string()).unwrap_or_default();
        for s in &r.steps {
            runs.write_record([
                r.task_id.clone(),
                r.policy_name.clone(),
                r.seed.to_string(),
                rep.clone(),
                s.step.to_string(),
                s.arm.to_string(),
                s.arm_id.clone(),
                fmt(s.reward),
                fmt(s.cost),
                fmt(s.spent),
                fmt(s.incumbent),
            ])?;
        }
    }
    runs.flush()?;

    let bounds: BTreeMap<&str, &TaskInfo> = tasks.iter().map(|t| (t.task.as_str(), t)).collect();
    let mut summary = commented_writer(&dir.join(SUMMARY_FILE), &format!("status={}", manifest.status.as_str()))?;
    summary.write_record([
        "task",
        "policy",
        "seed",
        "checkpoint",
        "incumbent",
        "normalized_loss",
        "pulls",
        "spent",
    ])?;
    for r in records {
        let info = bounds
            .get(r.task_id.as_str())
            .ok_or_else(|| Error::Config(format!("no oracle for task {}", r.task_id)))?;
        for c in &r.checkpoints {
            summary.write_record([
                r.task_id.clone(),
                r.policy_name.clone(),
                r.seed.to_string(),
                fmt(c.fraction),
                fmt(c.incumbent),
                fmt(normalized_loss(c.incumbent, info.reward_min, info.reward_max)?),
                c.pulls.to_string(),
                fmt(c.spent),
            ])?;
        }
    }
    summary.flush()?;

    let mut oracle = writer(&dir.join(ORACLE_FILE))?;
    oracle.write_record(["task", "oracle_arm", "oracle_value", "reward_min", "reward_max"])?;
    for t in tasks {
        oracle.write_record([
            t.task.clone(),
            t.oracle_arm.clone(),
            fmt(t.oracle_value),
            fmt(t.reward_min),
            fmt(t.reward_max),
        ])?;
    }
    oracle.flush()?;

    let mut json = serde_json::to_string_pretty(manifest)?;
    json.push('\n');
    std::fs::write(dir.join(MANIFEST_FILE), json)?;
    Ok(())
}

/// Contents of a run directory, as needed by the report.
#[derive(Debug, Clone, PartialEq)]
pub struct RunData {
    pub manifest: Manifest,
    pub records: Vec<RunRecord>,
    pub tasks: BTreeMap<String, TaskInfo>,
}

#[derive(Debug, Deserialize)]
struct RunRow {
    task: String,
    policy: String,
    seed: u64,
    repetition: Option<u32>,
    step: usize,
    arm_index: usize,
    arm: String,
    reward: f64,
    cost: f64,
    spent: f64,
    incumbent: f64,
}

pub fn read_run_artifacts(dir: &Path) -> Result<RunData> {
    let manifest_path = dir.join(MANIFEST_FILE);
    let text = std::fs::read_to_string(&manifest_path).map_err(|_| Error::MissingArtifact(manifest_path))?;
    let manifest: Manifest = serde_json::from_str(&text)?;

    let mut tasks = BTreeMap::new();
    for row in reader(&dir.join(ORACLE_FILE))?.deserialize() {
        let info: TaskInfo = row?;
        tasks.insert(info.task.clone(), info);
    }

    let mut records: Vec<RunRecord> = Vec::new();
    for row in reader(&dir.join(RUNS_FILE))?.deserialize() {
        let row: RunRow = row?;
        let same = records
            .last()
            .is_some_and(|r| r.task_id == row.task && r.policy_name == row.policy && r.seed == row.seed);
        if !same {
            records.push(RunRecord {
                policy_name: row.policy.clone(),
                task_id: row.task.clone(),
                seed: row.seed,
                repetition: row.repetition,
                steps: Vec::new(),
                checkpoints: Vec::new(),
                final_incumbent: 0.0,
                ended_early: false,
            });
        }
        let rec = records.last_mut().expect("pushed above");
        rec.final_incumbent = row.incumbent;
        rec.steps.push(StepRecord {
            step: row.step,
            arm: row.arm_index,
            arm_id: row.arm,
            reward: row.reward,
            cost: row.cost,
            spent: row.spent,
            incumbent: row.incumbent,
        });
    }
    for r in &mut records {
        r.checkpoints = checkpoint_incumbents(&r.steps, manifest.budget, &manifest.checkpoints);
    }
    Ok(RunData {
        manifest,
        records,
        tasks,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportOptions {
    /// Compare this policy against every other; all pairs otherwise.
    pub baseline: Option<String>,
    pub alpha: f64,
    pub correction: Correction,
    /// Also write per-position regret and loss curves.
    pub plot_data: bool,
    /// Curve resolution under a seconds budget.
    pub grid_points: usize,
}

impl Default for ReportOptions {
    fn default() -> Self {
        Self {
            baseline: None,
            alpha: 0.05,
            correction: Correction::Bonferroni,
            plot_data: false,
            grid_points: 100,
        }
    }
}

/// Evaluation positions along the budget: every step, or evenly spaced
/// fractions of a seconds budget. Pairs of (position, budget limit).
fn positions(budget: Budget, grid: usize) -> Vec<(usize, f64)> {
    match budget {
        Budget::Steps(t) => (1..=t).map(|s| (s, s as f64)).collect(),
        Budget::Seconds(b) => (1..=grid.max(1)).map(|p| (p, b * p as f64 / grid.max(1) as f64)).collect(),
    }
}

struct Index<'a> {
    data: &'a RunData,
    policies: Vec<String>,
    /// (task, seed) blocks in which every policy has a record.
    blocks: Vec<(String, u64)>,
    by_cell: BTreeMap<(String, String, u64), &'a RunRecord>,
}

impl<'a> Index<'a> {
    fn new(data: &'a RunData) -> Self {
        let mut by_cell = BTreeMap::new();
        let mut blocks: Vec<(String, u64)> = Vec::new();
        for r in &data.records {
            by_cell.insert((r.policy_name.clone(), r.task_id.clone(), r.seed), r);
            let b = (r.task_id.clone(), r.seed);
            if !blocks.contains(&b) {
                blocks.push(b);
            }
        }
        Self {
            data,
            policies: data.manifest.policies.clone(),
            blocks,
            by_cell,
        }
    }

    fn block_name(task: &str, seed: u64) -> String {
        format!("{task}#{seed}")
    }

    fn loss(&self, incumbent: f64, task: &str) -> Result<f64> {
        let info = self
            .data
            .tasks
            .get(task)
            .ok_or_else(|| Error::Config(format!("no oracle entry for task {task}")))?;
        normalized_loss(incumbent, info.reward_min, info.reward_max)
    }

    /// Normalized loss per (policy, block) at a budget limit.
    fn losses_at(&self, limit: f64) -> Result<BTreeMap<(String, String), f64>> {
        let mut out = BTreeMap::new();
        for ((policy, task, seed), r) in &self.by_cell {
            if let Some(s) = last_step_within(&r.steps, self.data.manifest.budget, limit) {
                out.insert((policy.clone(), Self::block_name(task, *seed)), self.loss(s.incumbent, task)?);
            }
        }
        Ok(out)
    }

    fn losses_at_checkpoint(&self, idx: usize) -> Result<BTreeMap<(String, String), f64>> {
        let mut out = BTreeMap::new();
        for ((policy, task, seed), r) in &self.by_cell {
            if let Some(c) = r.checkpoints.get(idx) {
                out.insert((policy.clone(), Self::block_name(task, *seed)), self.loss(c.incumbent, task)?);
            }
        }
        Ok(out)
    }

    fn block_names(&self) -> Vec<String> {
        self.blocks.iter().map(|(t, s)| Self::block_name(t, *s)).collect()
    }

    fn tasks(&self) -> Vec<String> {
        let mut tasks: Vec<String> = self.blocks.iter().map(|(t, _)| t.clone()).collect();
        tasks.dedup();
        tasks
    }

    /// Per-task mean over seeds of a (policy, block) table.
    fn task_means(&self, table: &BTreeMap<(String, String), f64>, policy: &str) -> Result<Vec<f64>> {
        let mut out = Vec::new();
        for task in self.tasks() {
            let vals: Vec<f64> = self
                .blocks
                .iter()
                .filter(|(t, _)| *t == task)
                .map(|(t, s)| {
                    table
                        .get(&(policy.to_string(), Self::block_name(t, *s)))
                        .copied()
                        .ok_or_else(|| Error::MissingCell {
                            policy: policy.to_string(),
                            task: Self::block_name(t, *s),
                        })
                })
                .collect::<Result<_>>()?;
            out.push(vals.iter().sum::<f64>() / vals.len() as f64);
        }
        Ok(out)
    }
}

fn pairs(policies: &[String], baseline: Option<&str>) -> Result<Vec<(String, String)>> {
    let out: Vec<(String, String)> = match baseline {
        Some(b) => {
            if !policies.iter().any(|p| p == b) {
                return Err(Error::Config(format!("baseline {b:?} is not among the run's policies")));
            }
            policies
                .iter()
                .filter(|p| p.as_str() != b)
                .map(|p| (b.to_string(), p.clone()))
                .collect()
        }
        None => {
            let mut v = Vec::new();
            for (i, a) in policies.iter().enumerate() {
                for b in &policies[i + 1..] {
                    v.push((a.clone(), b.clone()));
                }
            }
            v
        }
    };
    if out.is_empty() {
        return Err(Error::Config("no policy pairs to compare".into()));
    }
    Ok(out)
}

/// Writes the report tables into `out` and returns their paths.
pub fn write_report(data: &RunData, out: &Path, options: &ReportOptions) -> Result<Vec<PathBuf>> {
    let index = Index::new(data);
    let comparisons = pairs(&index.policies, options.baseline.as_deref())?;
    let blocks = index.block_names();
    let budget = data.manifest.budget;
    let mut written = Vec::new();

    // per-position average ranks
    let path = out.join("ranks.csv");
    let mut w = writer(&path)?;
    w.write_record(["position", "budget", "policy", "average_rank"])?;
    for (pos, limit) in positions(budget, options.grid_points) {
        let ranks = average_rank(&index.policies, &blocks, &index.losses_at(limit)?)?;
        for (p, r) in index.policies.iter().zip(ranks) {
            w.write_record([pos.to_string(), fmt(limit), p.clone(), fmt(r)])?;
        }
    }
    w.flush()?;
    written.push(path);

    // checkpoint losses and ranks
    let path = out.join("losses.csv");
    let mut w = writer(&path)?;
    w.write_record(["checkpoint", "policy", "mean_normalized_loss", "average_rank"])?;
    let mut checkpoint_tables = Vec::new();
    for (ci, &fraction) in data.manifest.checkpoints.iter().enumerate() {
        let table = index.losses_at_checkpoint(ci)?;
        let ranks = average_rank(&index.policies, &blocks, &table)?;
        for (p, r) in index.policies.iter().zip(ranks) {
            let means = index.task_means(&table, p)?;
            let mean = means.iter().sum::<f64>() / means.len().max(1) as f64;
            w.write_record([fmt(fraction), p.clone(), fmt(mean), fmt(r)])?;
        }
        checkpoint_tables.push((fraction, table));
    }
    w.flush()?;
    written.push(path);

    // sign tests over tasks, one family per checkpoint
    let path = out.join("signtests.csv");
    let mut w = commented_writer(
        &path,
        &format!("correction={} alpha={}", options.correction.as_str(), options.alpha),
    )?;
    w.write_record([
        "checkpoint",
        "policy",
        "opponent",
        "wins",
        "ties",
        "losses",
        "p_value",
        "adjusted_alpha",
        "significant_raw",
        "significant_adjusted",
    ])?;
    for (fraction, table) in &checkpoint_tables {
        let mut tests = Vec::new();
        for (a, b) in &comparisons {
            let (wins, ties, losses) = win_tie_loss(&index.task_means(table, a)?, &index.task_means(table, b)?);
            tests.push(sign_test(wins, ties, losses));
        }
        let p: Vec<f64> = tests.iter().map(|t| t.p_value).collect();
        let decisions = multiple_comparison_adjust(&p, options.alpha, options.correction);
        for (((a, b), t), d) in comparisons.iter().zip(&tests).zip(&decisions) {
            w.write_record([
                fmt(*fraction),
                a.clone(),
                b.clone(),
                t.wins.to_string(),
                t.ties.to_string(),
                t.losses.to_string(),
                fmt(t.p_value),
                fmt(d.adjusted_alpha),
                d.significant_raw.to_string(),
                d.significant_adjusted.to_string(),
            ])?;
        }
    }
    w.flush()?;
    written.push(path);

    // regret against each task's oracle
    let path = out.join("regret.csv");
    let mut w = writer(&path)?;
    w.write_record(["task", "policy", "oracle_arm", "oracle_value", "mean_final_incumbent", "regret"])?;
    for task in index.tasks() {
        let info = &data.tasks[&task];
        for p in &index.policies {
            let recs: Vec<RunRecord> = data
                .records
                .iter()
                .filter(|r| r.task_id == task && &r.policy_name == p)
                .cloned()
                .collect();
            let mean = recs.iter().map(|r| r.final_incumbent).sum::<f64>() / recs.len().max(1) as f64;
            w.write_record([
                task.clone(),
                p.clone(),
                info.oracle_arm.clone(),
                fmt(info.oracle_value),
                fmt(mean),
                fmt(super::stats::regret(&recs, info.oracle_value)),
            ])?;
        }
    }
    w.flush()?;
    written.push(path);

    // pull-count gain of each cost-aware variant over its plain counterpart
    let path = out.join("pullgain.csv");
    let mut w = writer(&path)?;
    w.write_record(["policy", "cost_aware_policy", "mean_pulls", "mean_pulls_cost_aware", "gain_percent"])?;
    for p in &index.policies {
        let ca = format!("{p}-ca");
        if !index.policies.contains(&ca) {
            continue;
        }
        let pick = |name: &str| -> Vec<RunRecord> {
            data.records.iter().filter(|r| r.policy_name == name).cloned().collect()
        };
        let (plain, aware) = (pick(p), pick(&ca));
        let mean = |rs: &[RunRecord]| rs.iter().map(|r| r.total_pulls() as f64).sum::<f64>() / rs.len().max(1) as f64;
        w.write_record([
            p.clone(),
            ca.clone(),
            fmt(mean(&plain)),
            fmt(mean(&aware)),
            fmt(pull_count_gain(&aware, &plain)),
        ])?;
    }
    w.flush()?;
    written.push(path);

    if options.plot_data {
        let path = out.join("plot_regret.csv");
        let mut w = writer(&path)?;
        w.write_record([
            "position",
            "budget",
            "policy",
            "mean_incumbent",
            "mean_normalized_loss",
            "mean_regret",
        ])?;
        for (pos, limit) in positions(budget, options.grid_points) {
            for p in &index.policies {
                let (mut inc, mut loss, mut regret, mut n) = (0.0, 0.0, 0.0, 0usize);
                for (task, seed) in &index.blocks {
                    let Some(r) = index.by_cell.get(&(p.clone(), task.clone(), *seed)) else {
                        continue;
                    };
                    if let Some(s) = last_step_within(&r.steps, budget, limit) {
                        inc += s.incumbent;
                        loss += index.loss(s.incumbent, task)?;
                        regret += data.tasks[task].oracle_value - s.incumbent;
                        n += 1;
                    }
                }
                let n = n.max(1) as f64;
                w.write_record([pos.to_string(), fmt(limit), p.clone(), fmt(inc / n), fmt(loss / n), fmt(regret / n)])?;
            }
        }
        w.flush()?;
        written.push(path);
    }
    Ok(written)
}
