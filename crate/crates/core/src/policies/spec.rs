//! Policy selection by name and construction for an episode.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{
    MaxUcb, Policy, PpdSettings, PsMax, PsPpd, RandomPolicy, RisingBandits, RoundRobin, ThompsonSampling,
    ThompsonTarget, TimeFunction, TimeFunctionSpec,
};
use crate::error::{Error, Result};
use crate::priors::{PriorConfig, PriorKind};
use crate::types::Budget;

/// Base policy names; PS variants and Rising Bandits also accept `-ca`.
pub const POLICY_NAMES: [&str; 8] = [
    "ps-max",
    "ps-ppd",
    "ps-ppds",
    "ts",
    "round-robin",
    "random",
    "max-ucb",
    "rising-bandits",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PolicyKind {
    PsMax,
    PsPpd,
    PsPpds,
    Ts,
    RoundRobin,
    Random,
    MaxUcb,
    RisingBandits,
}

impl PolicyKind {
    fn parse(base: &str) -> Option<Self> {
        Some(match base {
            "ps-max" => PolicyKind::PsMax,
            "ps-ppd" => PolicyKind::PsPpd,
            "ps-ppds" => PolicyKind::PsPpds,
            "ts" => PolicyKind::Ts,
            "round-robin" => PolicyKind::RoundRobin,
            "random" => PolicyKind::Random,
            "max-ucb" => PolicyKind::MaxUcb,
            "rising-bandits" => PolicyKind::RisingBandits,
            _ => return None,
        })
    }

    pub fn supports_cost_aware(&self) -> bool {
        matches!(
            self,
            PolicyKind::PsMax | PolicyKind::PsPpd | PolicyKind::PsPpds | PolicyKind::RisingBandits
        )
    }

    pub fn uses_ppd(&self) -> bool {
        matches!(self, PolicyKind::PsPpd | PolicyKind::PsPpds)
    }
}

/// A named policy with its options.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicySpec {
    /// Display name, e.g. `ps-ppd-ca`.
    pub name: String,
    pub kind: PolicyKind,
    pub cost_aware: bool,
    pub time_function: TimeFunctionSpec,
    /// Shared prior for `ps-ppd`, and fallback for unmapped `ps-ppds` arms.
    pub prior: PriorConfig,
    /// Per-arm presets for `ps-ppds`.
    pub prior_map: BTreeMap<String, PriorKind>,
    pub ppd: PpdSettings,
    pub ts_target: ThompsonTarget,
    pub ucb_alpha: f64,
    pub rising_window: usize,
}

impl PolicySpec {
    /// Parses `ps-max`, `ps-ppd-ca`, and so on, with default options.
    pub fn parse(name: &str) -> Result<Self> {
        let (base, cost_aware) = match name.strip_suffix("-ca") {
            Some(base) => (base, true),
            None => (name, false),
        };
        let kind = PolicyKind::parse(base).ok_or_else(|| Error::UnknownPolicy(name.to_string()))?;
        if cost_aware && !kind.supports_cost_aware() {
            return Err(Error::UnknownPolicy(name.to_string()));
        }
        Ok(Self {
            name: name.to_string(),
            kind,
            cost_aware,
            time_function: if cost_aware {
                TimeFunctionSpec::BudgetAware
            } else {
                TimeFunctionSpec::Step
            },
            prior: PriorConfig::semi_flat(),
            prior_map: BTreeMap::new(),
            ppd: PpdSettings::default(),
            ts_target: ThompsonTarget::Mean,
            ucb_alpha: MaxUcb::DEFAULT_ALPHA,
            rising_window: RisingBandits::DEFAULT_WINDOW,
        })
    }

    pub fn with_prior_map(mut self, map: BTreeMap<String, PriorKind>) -> Self {
        self.prior_map = map;
        self
    }

    /// Distinct priors used by the arms and each arm's index into them.
    pub fn arm_priors<S: AsRef<str>>(&self, arm_ids: &[S]) -> (Vec<PriorConfig>, Vec<usize>) {
        if self.kind != PolicyKind::PsPpds {
            return (vec![self.prior.clone()], vec![0; arm_ids.len()]);
        }
        let mut priors: Vec<PriorConfig> = Vec::new();
        let mut assignment = Vec::with_capacity(arm_ids.len());
        for id in arm_ids {
            let config = match self.prior_map.get(id.as_ref()) {
                Some(&kind) if kind != PriorKind::Custom => {
                    PriorConfig::preset(kind).with_horizon(self.prior.horizon)
                }
                _ => self.prior.clone(),
            };
            let idx = match priors.iter().position(|p| *p == config) {
                Some(i) => i,
                None => {
                    priors.push(config);
                    priors.len() - 1
                }
            };
            assignment.push(idx);
        }
        (priors, assignment)
    }

    pub fn validate(&self, budget: Budget) -> Result<()> {
        if self.time_function.uses_costs() && budget.seconds().is_none() {
            return Err(Error::Config(format!(
                "policy {} uses a cost-based time function and needs a seconds budget",
                self.name
            )));
        }
        if self.cost_aware && self.kind == PolicyKind::RisingBandits && budget.seconds().is_none() {
            return Err(Error::Config(format!("policy {} needs a seconds budget", self.name)));
        }
        if self.kind.uses_ppd() {
            self.ppd.validate()?;
            self.prior.validate()?;
        }
        if !(self.ucb_alpha > 0.0) {
            return Err(Error::Config("max-ucb alpha must be positive".into()));
        }
        Ok(())
    }

    /// Fresh policy instance for one episode.
    pub fn build<S: AsRef<str>>(&self, arm_ids: &[S], budget: Budget) -> Result<Box<dyn Policy>> {
        self.validate(budget)?;
        let k = arm_ids.len();
        let name = self.name.clone();
        Ok(match self.kind {
            PolicyKind::PsMax => {
                let tf = TimeFunction::new(self.time_function, k, budget, None)?;
                Box::new(PsMax::new(name, k, tf))
            }
            PolicyKind::PsPpd | PolicyKind::PsPpds => {
                let (priors, assignment) = self.arm_priors(arm_ids);
                let cap = PsPpd::horizon(&priors);
                let tf = TimeFunction::new(self.time_function, k, budget, Some(cap))?;
                let ids = arm_ids.iter().map(|s| s.as_ref().to_string()).collect();
                Box::new(PsPpd::new(name, ids, priors, assignment, tf, self.ppd)?)
            }
            PolicyKind::Ts => Box::new(ThompsonSampling::new(name, k, self.ts_target)),
            PolicyKind::RoundRobin => Box::new(RoundRobin::new(name)),
            PolicyKind::Random => Box::new(RandomPolicy::new(name)),
            PolicyKind::MaxUcb => Box::new(MaxUcb::new(name, self.ucb_alpha)),
            PolicyKind::RisingBandits => Box::new(RisingBandits::new(name, k, self.rising_window, self.cost_aware)),
        })
    }
}

/// Per-arm presets used for the three published benchmarks.
pub fn benchmark_prior_map(benchmark: &str) -> Option<BTreeMap<String, PriorKind>> {
    use PriorKind::{Curved, Flat, SemiFlat};
    let entries: &[(&str, PriorKind)] = match benchmark.to_ascii_lowercase().as_str() {
        "complex" => &[
            ("XTab", SemiFlat),
            ("FLAML", SemiFlat),
            ("RealMLP", Flat),
            ("TabForestPFN", SemiFlat),
            ("TabPFN_v2", SemiFlat),
        ],
        "tabreporaw" => &[
            ("CatBoost", SemiFlat),
            ("ExtraTrees", SemiFlat),
            ("LightGBM", Curved),
            ("NeuralNet(FastAI)", Curved),
            ("NeuralNet(Torch)", Curved),
            ("RandomForest", SemiFlat),
            ("XGBoost", Flat),
        ],
        "yahpogym" => &[
            ("AKNN", Curved),
            ("GLMNet", SemiFlat),
            ("RPart", SemiFlat),
            ("Ranger", Curved),
            ("SVM", Curved),
            ("XGBoost", Curved),
        ],
        _ => return None,
    };
    Some(entries.iter().map(|(k, v)| (k.to_string(), *v)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_all_names() {
        for name in POLICY_NAMES {
            let spec = PolicySpec::parse(name).unwrap();
            assert!(!spec.cost_aware);
            assert_eq!(spec.time_function, TimeFunctionSpec::Step);
        }
        let ca = PolicySpec::parse("ps-ppds-ca").unwrap();
        assert_eq!(ca.kind, PolicyKind::PsPpds);
        assert_eq!(ca.time_function, TimeFunctionSpec::BudgetAware);
        assert!(matches!(PolicySpec::parse("ts-ca"), Err(Error::UnknownPolicy(_))));
        assert!(matches!(PolicySpec::parse("greedy"), Err(Error::UnknownPolicy(_))));
    }

    #[test]
    fn cost_aware_requires_seconds() {
        let ca = PolicySpec::parse("ps-max-ca").unwrap();
        assert!(ca.build(&["a", "b"], Budget::Steps(10)).is_err());
        assert!(ca.build(&["a", "b"], Budget::Seconds(100.0)).is_ok());
    }

    #[test]
    fn per_arm_priors_follow_map() {
        let spec = PolicySpec::parse("ps-ppds")
            .unwrap()
            .with_prior_map(benchmark_prior_map("TabRepoRaw").unwrap());
        let arms = ["XGBoost", "CatBoost", "LightGBM", "Unknown"];
        let (priors, assignment) = spec.arm_priors(&arms);
        let kinds: Vec<PriorKind> = assignment.iter().map(|&i| priors[i].name).collect();
        assert_eq!(
            kinds,
            [PriorKind::Flat, PriorKind::SemiFlat, PriorKind::Curved, PriorKind::SemiFlat]
        );
        assert_eq!(priors.len(), 3);
        let shared = PolicySpec::parse("ps-ppd").unwrap().with_prior_map(benchmark_prior_map("yahpogym").unwrap());
        assert_eq!(shared.arm_priors(&["XGBoost", "GLMNet"]).0.len(), 1);
    }

    #[test]
    fn benchmark_tables() {
        assert_eq!(benchmark_prior_map("complex").unwrap().len(), 5);
        assert_eq!(benchmark_prior_map("yahpogym").unwrap()["XGBoost"], PriorKind::Curved);
        assert!(benchmark_prior_map("other").is_none());
    }
}
