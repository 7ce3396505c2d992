//! Replay of precomputed optimization trajectories.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{Read, Write};
use std::path::Path;

use super::Environment;
use crate::error::{Error, Result};
use crate::types::{Budget, Normalization, Trajectory};

/// Column names of the trajectory file; `cost` may be omitted.
pub const TRAJECTORY_HEADER: [&str; 6] = ["task", "arm", "repetition", "step", "reward", "cost"];

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct LoadOptions {
    /// Maps raw metrics onto [0, 1]; without it rewards must already be there.
    pub normalize: Option<Normalization>,
}

/// Trajectories of one task, indexed by `(arm, repetition)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TaskData {
    pub arms: Vec<String>,
    pub repetitions: Vec<u32>,
    trajectories: BTreeMap<(String, u32), Trajectory>,
}

impl TaskData {
    pub fn trajectory(&self, arm: &str, repetition: u32) -> Option<&Trajectory> {
        self.trajectories.get(&(arm.to_string(), repetition))
    }

    pub fn trajectories(&self) -> impl Iterator<Item = &Trajectory> {
        self.trajectories.values()
    }

    /// Smallest and largest reward over every stored trajectory.
    pub fn reward_bounds(&self) -> (f64, f64) {
        self.trajectories()
            .flat_map(|t| t.rewards.iter().copied())
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), r| (lo.min(r), hi.max(r)))
    }
}

/// Immutable, validated collection of trajectories, shared read-only by
/// concurrent episodes.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryStore {
    tasks: BTreeMap<String, TaskData>,
    has_costs: bool,
    normalization: Option<Normalization>,
}

struct Row {
    line: u64,
    reward: f64,
    cost: f64,
}

fn field<'a>(record: &'a csv::StringRecord, idx: usize, name: &str, line: u64) -> Result<&'a str> {
    match record.get(idx) {
        Some(v) if !v.is_empty() => Ok(v),
        _ => Err(Error::Parse {
            line,
            message: format!("missing {name}"),
        }),
    }
}

fn number<T: std::str::FromStr>(record: &csv::StringRecord, idx: usize, name: &str, line: u64) -> Result<T> {
    let raw = field(record, idx, name, line)?;
    raw.parse().map_err(|_| Error::Parse {
        line,
        message: format!("invalid {name} {raw:?}"),
    })
}

impl TrajectoryStore {
    pub fn load(path: impl AsRef<Path>, options: LoadOptions) -> Result<Self> {
        Self::from_reader(std::fs::File::open(path)?, options)
    }

    pub fn from_reader<R: Read>(reader: R, options: LoadOptions) -> Result<Self> {
        let mut csv = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .flexible(true)
            .from_reader(reader);
        let header = csv.headers()?.clone();
        let column = |name: &str| header.iter().position(|h| h == name);
        let mut idx = [0usize; 5];
        for (slot, name) in idx.iter_mut().zip(&TRAJECTORY_HEADER[..5]) {
            *slot = column(name).ok_or_else(|| Error::Parse {
                line: 1,
                message: format!("header lacks column {name:?}"),
            })?;
        }
        let cost_idx = column("cost");

        let mut grouped: BTreeMap<(String, String, u32), BTreeMap<u64, Row>> = BTreeMap::new();
        for record in csv.records() {
            let record = record?;
            let line = record.position().map_or(0, |p| p.line());
            if record.iter().all(str::is_empty) {
                continue;
            }
            if record.len() != header.len() {
                return Err(Error::Parse {
                    line,
                    message: format!("expected {} fields, found {}", header.len(), record.len()),
                });
            }
            let task = field(&record, idx[0], "task", line)?.to_string();
            let arm = field(&record, idx[1], "arm", line)?.to_string();
            let repetition: u32 = number(&record, idx[2], "repetition", line)?;
            let step: u64 = number(&record, idx[3], "step", line)?;
            let raw: f64 = number(&record, idx[4], "reward", line)?;
            if !raw.is_finite() {
                return Err(Error::Parse {
                    line,
                    message: format!("non-finite reward {raw}"),
                });
            }
            let reward = match options.normalize {
                Some(n) => n.apply(raw),
                None => raw,
            };
            if !(0.0..=1.0).contains(&reward) {
                return Err(Error::Parse {
                    line,
                    message: format!("reward {raw} outside [0, 1]"),
                });
            }
            let cost = match cost_idx {
                Some(c) => {
                    let v: f64 = number(&record, c, "cost", line)?;
                    if !(v > 0.0) || !v.is_finite() {
                        return Err(Error::Parse {
                            line,
                            message: format!("cost {v} must be positive"),
                        });
                    }
                    v
                }
                None => 1.0,
            };
            if step == 0 {
                return Err(Error::Parse {
                    line,
                    message: "steps are 1-based".into(),
                });
            }
            let steps = grouped.entry((task.clone(), arm.clone(), repetition)).or_default();
            if steps.insert(step, Row { line, reward, cost }).is_some() {
                return Err(Error::DuplicateKey(format!(
                    "task={task} arm={arm} repetition={repetition} step={step} (line {line})"
                )));
            }
        }
        if grouped.is_empty() {
            return Err(Error::Parse {
                line: 1,
                message: "no trajectories".into(),
            });
        }

        let mut tasks: BTreeMap<String, TaskData> = BTreeMap::new();
        for ((task, arm, repetition), steps) in grouped {
            for (expected, (step, row)) in (1u64..).zip(&steps) {
                if *step != expected {
                    return Err(Error::Parse {
                        line: row.line,
                        message: format!(
                            "task={task} arm={arm} repetition={repetition}: step {step} where {expected} was expected"
                        ),
                    });
                }
            }
            let rewards = steps.values().map(|r| r.reward).collect();
            let costs = steps.values().map(|r| r.cost).collect();
            let traj = Trajectory::new(&task, &arm, repetition, rewards, costs)?;
            tasks
                .entry(task.clone())
                .or_insert_with(|| TaskData {
                    arms: Vec::new(),
                    repetitions: Vec::new(),
                    trajectories: BTreeMap::new(),
                })
                .trajectories
                .insert((arm, repetition), traj);
        }
        for (task, data) in tasks.iter_mut() {
            let arms: BTreeSet<&String> = data.trajectories.keys().map(|(a, _)| a).collect();
            let reps: BTreeSet<u32> = data.trajectories.keys().map(|(_, r)| *r).collect();
            for arm in &arms {
                for rep in &reps {
                    if !data.trajectories.contains_key(&((*arm).clone(), *rep)) {
                        return Err(Error::InvalidParameter(format!(
                            "task {task}: arm {arm} has no repetition {rep}"
                        )));
                    }
                }
            }
            data.arms = arms.into_iter().cloned().collect();
            data.repetitions = reps.into_iter().collect();
        }
        Ok(Self {
            tasks,
            has_costs: cost_idx.is_some(),
            normalization: options.normalize,
        })
    }

    /// Builds a store through the same validation as file ingestion.
    pub fn from_trajectories(trajectories: Vec<Trajectory>, has_costs: bool) -> Result<Self> {
        let mut buf = Vec::new();
        write_rows(&mut buf, trajectories.iter(), has_costs)?;
        Self::from_reader(buf.as_slice(), LoadOptions::default())
    }

    pub fn task_ids(&self) -> impl Iterator<Item = &String> {
        self.tasks.keys()
    }

    pub fn task(&self, task: &str) -> Result<&TaskData> {
        self.tasks
            .get(task)
            .ok_or_else(|| Error::Config(format!("unknown task {task:?}")))
    }

    pub fn has_costs(&self) -> bool {
        self.has_costs
    }

    pub fn normalization(&self) -> Option<Normalization> {
        self.normalization
    }

    /// Fails with `Error::MissingCost` when the file had no cost column.
    pub fn require_costs(&self) -> Result<()> {
        if self.has_costs {
            Ok(())
        } else {
            Err(Error::MissingCost)
        }
    }

    pub fn trajectories(&self) -> impl Iterator<Item = &Trajectory> {
        self.tasks.values().flat_map(|t| t.trajectories())
    }

    pub fn environment(&self, task: &str, repetition: u32) -> Result<ReplayEnvironment<'_>> {
        ReplayEnvironment::new(self, task, repetition)
    }
}

fn write_rows<'a, W: Write>(out: W, trajectories: impl Iterator<Item = &'a Trajectory>, costs: bool) -> Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    let cols = if costs { 6 } else { 5 };
    w.write_record(&TRAJECTORY_HEADER[..cols])?;
    for t in trajectories {
        for (k, (r, c)) in t.rewards.iter().zip(&t.costs).enumerate() {
            let mut row = vec![
                t.task_id.clone(),
                t.arm_id.clone(),
                t.repetition.to_string(),
                (k + 1).to_string(),
                r.to_string(),
            ];
            if costs {
                row.push(c.to_string());
            }
            w.write_record(&row)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Writes every trajectory in the store's canonical order.
pub fn write_trajectories<W: Write>(store: &TrajectoryStore, out: W) -> Result<()> {
    write_rows(out, store.trajectories(), store.has_costs)
}

/// One repetition of one task, consumed pull by pull.
#[derive(Debug, Clone)]
pub struct ReplayEnvironment<'a> {
    arm_ids: Vec<String>,
    trajectories: Vec<&'a Trajectory>,
    cursors: Vec<usize>,
}

impl<'a> ReplayEnvironment<'a> {
    pub fn new(store: &'a TrajectoryStore, task: &str, repetition: u32) -> Result<Self> {
        let data = store.task(task)?;
        let trajectories = data
            .arms
            .iter()
            .map(|arm| {
                data.trajectory(arm, repetition).ok_or_else(|| {
                    Error::Config(format!("task {task:?} has no repetition {repetition}"))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            arm_ids: data.arms.clone(),
            cursors: vec![0; trajectories.len()],
            trajectories,
        })
    }

    /// Pulls consumed so far per arm.
    pub fn cursors(&self) -> &[usize] {
        &self.cursors
    }
}

impl Environment for ReplayEnvironment<'_> {
    fn arm_ids(&self) -> &[String] {
        &self.arm_ids
    }

    fn pull(&mut self, arm: usize) -> Result<(f64, f64)> {
        let traj = self.trajectories.get(arm).ok_or(Error::UnknownArm(arm))?;
        let k = self.cursors[arm];
        if k >= traj.len() {
            return Err(Error::ArmExhausted(traj.arm_id.clone()));
        }
        self.cursors[arm] += 1;
        Ok((traj.rewards[k], traj.costs[k]))
    }
}

/// Best arm by expected final incumbent when pulled exclusively: per arm,
/// the max reward within its feasible horizon averaged over repetitions.
/// Under a seconds budget the horizon is `floor(B / mean cost)` of each
/// repetition, at least one pull.
pub fn oracle_max(store: &TrajectoryStore, task: &str, budget: Budget) -> Result<(String, f64)> {
    let data = store.task(task)?;
    let mut best: Option<(String, f64)> = None;
    for arm in &data.arms {
        let mut total = 0.0;
        for &rep in &data.repetitions {
            let traj = data.trajectory(arm, rep).expect("validated at load");
            let horizon = match budget {
                Budget::Steps(t) => t,
                Budget::Seconds(b) => ((b / traj.mean_cost()).floor() as usize).max(1),
            };
            let n = horizon.clamp(1, traj.len());
            total += traj.rewards[..n].iter().copied().fold(f64::NEG_INFINITY, f64::max);
        }
        let value = total / data.repetitions.len() as f64;
        if best.as_ref().is_none_or(|(_, v)| value > *v) {
            best = Some((arm.clone(), value));
        }
    }
    best.ok_or_else(|| Error::Config(format!("task {task:?} has no arms")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::Direction;

    fn load(text: &str) -> Result<TrajectoryStore> {
        TrajectoryStore::from_reader(text.as_bytes(), LoadOptions::default())
    }

    const SMALL: &str = "task,arm,repetition,step,reward,cost
t1,a,0,1,0.3,1.5
t1,a,0,2,0.6,1.5
t1,a,0,3,0.5,1.5
t1,b,0,1,0.1,2
t1,b,0,2,0.2,2
t1,b,0,3,0.4,2
";

    #[test]
    fn counts_trajectories() {
        let store = load(SMALL).unwrap();
        let task = store.task("t1").unwrap();
        assert_eq!(task.arms, ["a", "b"]);
        assert_eq!(task.trajectories().count(), 2);
        assert!(task.trajectories().all(|t| t.len() == 3));
        assert!(store.has_costs());
    }

    #[test]
    fn pulls_in_order_then_exhausted() {
        let store = load("task,arm,repetition,step,reward\nx,a,1,1,0.3\nx,a,1,2,0.6\n").unwrap();
        let mut env = store.environment("x", 1).unwrap();
        assert_eq!(env.pull(0).unwrap(), (0.3, 1.0));
        assert_eq!(env.pull(0).unwrap(), (0.6, 1.0));
        assert!(matches!(env.pull(0), Err(Error::ArmExhausted(a)) if a == "a"));
        assert!(matches!(store.require_costs(), Err(Error::MissingCost)));
    }

    #[test]
    fn duplicate_key_named() {
        let text = "task,arm,repetition,step,reward\nx,a,0,1,0.3\nx,a,0,1,0.4\n";
        let err = load(text).unwrap_err();
        assert!(matches!(&err, Error::DuplicateKey(k) if k.contains("arm=a") && k.contains("step=1")), "{err}");
    }

    #[test]
    fn malformed_rows_report_lines() {
        let cases = [
            ("task,arm,repetition,step,reward\nx,a,0,1,0.3\nx,a,0,2,oops\n", 3),
            ("task,arm,repetition,step,reward\nx,a,0,1,1.3\n", 2),
            ("task,arm,repetition,step,reward\nx,a,0,1,0.3\nx,a,0,3,0.3\n", 3),
            ("task,arm,repetition,step,reward,cost\nx,a,0,1,0.3,0\n", 2),
            ("task,arm,repetition,step,reward\nx,a,0,1\n", 2),
        ];
        for (text, line) in cases {
            match load(text) {
                Err(Error::Parse { line: l, .. }) => assert_eq!(l, line, "{text}"),
                other => panic!("{text}: {other:?}"),
            }
        }
        assert!(load("task,arm,step,reward\n").is_err());
    }

    #[test]
    fn normalization_at_ingestion() {
        let text = "task,arm,repetition,step,reward\nx,a,0,1,0.25\nx,a,0,2,0.1\n";
        let opts = LoadOptions {
            normalize: Some(Normalization::new(0.0, 0.5, Direction::Minimize).unwrap()),
        };
        let store = TrajectoryStore::from_reader(text.as_bytes(), opts).unwrap();
        let t = store.task("x").unwrap().trajectory("a", 0).unwrap();
        assert!((t.rewards[0] - 0.5).abs() < 1e-15);
        assert!((t.rewards[1] - 0.8).abs() < 1e-15);
    }

    #[test]
    fn inconsistent_arm_sets_rejected() {
        let text = "task,arm,repetition,step,reward\nx,a,0,1,0.3\nx,b,0,1,0.3\nx,a,1,1,0.3\n";
        assert!(load(text).is_err());
    }

    #[test]
    fn round_trip() {
        let store = load(SMALL).unwrap();
        let mut buf = Vec::new();
        write_trajectories(&store, &mut buf).unwrap();
        let again = load(std::str::from_utf8(&buf).unwrap()).unwrap();
        assert_eq!(store, again);
        assert_eq!(std::str::from_utf8(&buf).unwrap(), SMALL);
    }

    #[test]
    fn oracle_examples() {
        let single = load("task,arm,repetition,step,reward\nx,a,0,1,0.3\nx,a,0,2,0.7\nx,a,1,1,0.5\nx,a,1,2,0.4\n").unwrap();
        let (arm, v) = oracle_max(&single, "x", Budget::Steps(2)).unwrap();
        assert_eq!(arm, "a");
        assert!((v - 0.6).abs() < 1e-15);

        let two = load("task,arm,repetition,step,reward\nx,a,0,1,0.9\nx,b,0,1,0.8\nx,a,1,1,0.9\nx,b,1,1,0.8\n").unwrap();
        assert_eq!(oracle_max(&two, "x", Budget::Steps(1)).unwrap(), ("a".to_string(), 0.9));
    }

    #[test]
    fn budget_favours_cheap_arm() {
        // "good" only overtakes after 10 pulls at 10 seconds each; "cheap"
        // reaches 0.7 within a few one-second pulls
        let mut text = String::from("task,arm,repetition,step,reward,cost\n");
        for k in 1..=20 {
            let good = if k >= 10 { 0.9 } else { 0.5 };
            let cheap = if k >= 3 { 0.7 } else { 0.4 };
            text.push_str(&format!("x,good,0,{k},{good},10\nx,cheap,0,{k},{cheap},1\n"));
        }
        let store = load(&text).unwrap();
        assert_eq!(oracle_max(&store, "x", Budget::Seconds(50.0)).unwrap(), ("cheap".into(), 0.7));
        assert_eq!(oracle_max(&store, "x", Budget::Seconds(200.0)).unwrap(), ("good".into(), 0.9));
    }

    #[test]
    fn oracle_ignores_repetition_order() {
        let a = load("task,arm,repetition,step,reward\nx,a,0,1,0.2\nx,a,1,1,0.6\nx,b,0,1,0.5\nx,b,1,1,0.1\n").unwrap();
        let b = load("task,arm,repetition,step,reward\nx,b,1,1,0.1\nx,a,1,1,0.6\nx,b,0,1,0.5\nx,a,0,1,0.2\n").unwrap();
        assert_eq!(
            oracle_max(&a, "x", Budget::Steps(1)).unwrap(),
            oracle_max(&b, "x", Budget::Steps(1)).unwrap()
        );
    }
}
