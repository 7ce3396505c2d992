//! TOML experiment configuration.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::envs::{CostSpec, LoadOptions, SyntheticArmSpec, SyntheticSpec, TrajectoryStore};
use crate::error::{Error, Result};
use crate::harness::{EnvironmentSource, Experiment, DEFAULT_CHECKPOINTS};
use crate::policies::{benchmark_prior_map, PolicySpec, ThompsonTarget, TimeFunctionSpec};
use crate::priors::{PriorConfig, PriorKind};
use crate::types::{Budget, Direction, Normalization};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub environment: EnvironmentConfig,
    pub policies: Vec<PolicyEntry>,
    pub budget: Budget,
    #[serde(default = "default_checkpoints")]
    pub checkpoints: Vec<f64>,
    #[serde(default)]
    pub seeds: SeedConfig,
    /// Restricts the run to these tasks; all tasks otherwise.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tasks: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(default = "default_oracle_samples")]
    pub oracle_samples: usize,
}

fn default_checkpoints() -> Vec<f64> {
    DEFAULT_CHECKPOINTS.to_vec()
}

fn default_oracle_samples() -> usize {
    2000
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeedConfig {
    #[serde(default = "default_seed_count")]
    pub count: u64,
    #[serde(default)]
    pub root: u64,
}

fn default_seed_count() -> u64 {
    10
}

impl Default for SeedConfig {
    fn default() -> Self {
        Self {
            count: default_seed_count(),
            root: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "kebab-case", deny_unknown_fields)]
pub enum EnvironmentConfig {
    /// A trajectory file, relative paths resolved against the config file.
    Replay {
        path: PathBuf,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        normalize: Option<NormalizeConfig>,
    },
    Synthetic { tasks: BTreeMap<String, SyntheticTask> },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NormalizeConfig {
    pub lo: f64,
    pub hi: f64,
    pub direction: Direction,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SyntheticTask {
    /// The seven-arm skew-normal table with a common skew.
    SevenArm {
        shape: f64,
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        costs: Vec<CostSpec>,
    },
    Arms { arms: Vec<SyntheticArmSpec> },
}

impl SyntheticTask {
    pub fn spec(&self) -> SyntheticSpec {
        match self {
            SyntheticTask::SevenArm { shape, costs } => SyntheticSpec::seven_arm(*shape).with_costs(costs),
            SyntheticTask::Arms { arms } => SyntheticSpec { arms: arms.clone() },
        }
    }
}

/// A policy by name, or a table with options.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PolicyEntry {
    Name(String),
    Options(PolicyOptions),
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolicyOptions {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub time_function: Option<TimeFunctionSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prior: Option<PriorKind>,
    /// Used with `prior = "custom"`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma1_max: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma2_scale: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<usize>,
    /// Per-arm presets; `benchmark` fills in a published table.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prior_map: Option<BTreeMap<String, PriorKind>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub benchmark: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub particles: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bandwidth: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bins: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ts_target: Option<ThompsonTarget>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ucb_alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rising_window: Option<usize>,
}

impl PolicyEntry {
    pub fn name(&self) -> &str {
        match self {
            PolicyEntry::Name(n) => n,
            PolicyEntry::Options(o) => &o.name,
        }
    }

    pub fn to_spec(&self) -> Result<PolicySpec> {
        let o = match self {
            PolicyEntry::Name(n) => return PolicySpec::parse(n),
            PolicyEntry::Options(o) => o,
        };
        let mut spec = PolicySpec::parse(&o.name)?;
        if let Some(tf) = o.time_function {
            spec.time_function = tf;
        }
        match (o.prior, o.sigma1_max, o.sigma2_scale) {
            (Some(PriorKind::Custom), Some(s1), Some(s2)) => spec.prior = PriorConfig::custom(s1, s2),
            (Some(PriorKind::Custom), _, _) => {
                return Err(Error::Config(format!(
                    "policy {}: a custom prior needs sigma1_max and sigma2_scale",
                    o.name
                )))
            }
            (Some(kind), None, None) => spec.prior = PriorConfig::preset(kind),
            (None, None, None) => {}
            _ => {
                return Err(Error::Config(format!(
                    "policy {}: sigma1_max and sigma2_scale apply only to prior = \"custom\"",
                    o.name
                )))
            }
        }
        if let Some(h) = o.horizon {
            spec.prior = spec.prior.with_horizon(h);
        }
        let mut map = match &o.benchmark {
            Some(b) => benchmark_prior_map(b).ok_or_else(|| Error::Config(format!("unknown benchmark {b:?}")))?,
            None => BTreeMap::new(),
        };
        map.extend(o.prior_map.clone().unwrap_or_default());
        spec.prior_map = map;
        if let Some(m) = o.particles {
            spec.ppd.particles = m;
        }
        if let Some(h) = o.bandwidth {
            spec.ppd.bandwidth = h;
        }
        if let Some(b) = o.bins {
            spec.ppd.bins = b;
        }
        if let Some(t) = o.ts_target {
            spec.ts_target = t;
        }
        if let Some(a) = o.ucb_alpha {
            spec.ucb_alpha = a;
        }
        if let Some(w) = o.rising_window {
            spec.rising_window = w;
        }
        Ok(spec)
    }
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.message().to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|_| Error::MissingArtifact(path.to_path_buf()))?;
        Self::parse(&text)
    }

    /// Human-readable description of the environment for the manifest.
    pub fn environment_label(&self) -> String {
        match &self.environment {
            EnvironmentConfig::Replay { path, .. } => format!("replay:{}", path.display()),
            EnvironmentConfig::Synthetic { .. } => "synthetic".into(),
        }
    }

    /// Loads the environment and assembles a validated experiment. Relative
    /// trajectory paths are resolved against `base`.
    pub fn experiment(&self, base: &Path) -> Result<Experiment> {
        let source = match &self.environment {
            EnvironmentConfig::Replay { path, normalize } => {
                let path = if path.is_absolute() { path.clone() } else { base.join(path) };
                let normalize = normalize
                    .map(|n| Normalization::new(n.lo, n.hi, n.direction))
                    .transpose()?;
                if !path.is_file() {
                    return Err(Error::MissingArtifact(path));
                }
                EnvironmentSource::Replay(Arc::new(TrajectoryStore::load(&path, LoadOptions { normalize })?))
            }
            EnvironmentConfig::Synthetic { tasks } => {
                EnvironmentSource::Synthetic(tasks.iter().map(|(k, v)| (k.clone(), v.spec())).collect())
            }
        };
        let tasks = match &self.tasks {
            Some(t) => t.clone(),
            None => source.task_ids(),
        };
        let experiment = Experiment {
            source,
            tasks,
            policies: self.policies.iter().map(PolicyEntry::to_spec).collect::<Result<_>>()?,
            budget: self.budget,
            checkpoints: self.checkpoints.clone(),
            seeds: self.seeds.count,
            root_seed: self.seeds.root,
            oracle_samples: self.oracle_samples,
        };
        if let EnvironmentSource::Synthetic(specs) = &experiment.source {
            for spec in specs.values() {
                spec.validate()?;
            }
        }
        experiment.validate()?;
        Ok(experiment)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SYNTHETIC: &str = r#"
policies = ["ps-max", { name = "ps-ppd", prior = "curved", particles = 500 }]
budget = { mode = "steps", value = 20 }
seeds = { count = 2, root = 9 }

[environment]
source = "synthetic"

[environment.tasks.skewed]
kind = "seven-arm"
shape = -50
"#;

    #[test]
    fn parses_synthetic_config() {
        let c = ExperimentConfig::parse(SYNTHETIC).unwrap();
        assert_eq!(c.budget, Budget::Steps(20));
        assert_eq!(c.checkpoints, DEFAULT_CHECKPOINTS);
        let e = c.experiment(Path::new(".")).unwrap();
        assert_eq!(e.tasks, ["skewed"]);
        assert_eq!(e.policies[1].ppd.particles, 500);
        assert_eq!(e.policies[1].prior.name, PriorKind::Curved);
        assert_eq!(e.cells().len(), 4);
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(ExperimentConfig::parse(&format!("{SYNTHETIC}\nextra = 1\n")).is_err());
        let bad = SYNTHETIC.replace("particles = 500", "particles = 500, typo = 1");
        assert!(ExperimentConfig::parse(&bad).is_err());
        let bad = SYNTHETIC.replace("shape = -50", "shape = -50\nspread = 2");
        assert!(ExperimentConfig::parse(&bad).is_err());
    }

    #[test]
    fn custom_prior_needs_both_scales() {
        let entry = PolicyEntry::Options(PolicyOptions {
            name: "ps-ppd".into(),
            prior: Some(PriorKind::Custom),
            sigma1_max: Some(0.15),
            ..Default::default()
        });
        assert!(entry.to_spec().is_err());
        let entry = PolicyEntry::Options(PolicyOptions {
            name: "ps-ppds".into(),
            benchmark: Some("yahpogym".into()),
            prior_map: Some(BTreeMap::from([("extra".to_string(), PriorKind::Flat)])),
            horizon: Some(50),
            ..Default::default()
        });
        let spec = entry.to_spec().unwrap();
        assert_eq!(spec.prior.horizon, 50);
        assert_eq!(spec.prior_map["extra"], PriorKind::Flat);
        assert!(spec.prior_map.len() > 1);
    }

    #[test]
    fn missing_trajectory_file_named() {
        let c = ExperimentConfig::parse(
            "policies = [\"ts\"]\nbudget = { mode = \"steps\", value = 5 }\n[environment]\nsource = \"replay\"\npath = \"nope.csv\"\n",
        )
        .unwrap();
        match c.experiment(Path::new("/nonexistent")) {
            Err(Error::MissingArtifact(p)) => assert!(p.ends_with("nope.csv")),
            other => panic!("{other:?}"),
        }
    }
}
