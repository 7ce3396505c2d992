//! Generative environments: i.i.d. truncated skew-normal arms and arms that
//! replay a trajectory drawn from the synthetic prior.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::Environment;
use crate::error::{Error, Result};
use crate::priors::{generate_trajectory, sample_truncated_skew_normal, PriorConfig, SkewNormalSpec};
use crate::seeding::{derive_rng, SimRng};
use crate::types::Budget;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ArmGenerator {
    /// Independent draws from a skew-normal truncated to [0, 1].
    Iid(SkewNormalSpec),
    /// One trajectory drawn per episode, then replayed in order.
    Prior(PriorConfig),
}

/// Seconds charged per pull.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum CostSpec {
    Fixed { value: f64 },
    /// `exp(N(ln median, sigma^2))`.
    LogNormal { median: f64, sigma: f64 },
}

impl Default for CostSpec {
    fn default() -> Self {
        CostSpec::Fixed { value: 1.0 }
    }
}

impl CostSpec {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            CostSpec::Fixed { value } => value > 0.0 && value.is_finite(),
            CostSpec::LogNormal { median, sigma } => median > 0.0 && sigma >= 0.0 && median.is_finite() && sigma.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid cost spec {self:?}")))
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            CostSpec::Fixed { value } => value,
            CostSpec::LogNormal { median, sigma } => {
                let z: f64 = rng.sample(StandardNormal);
                median * (sigma * z).exp()
            }
        }
    }

    /// Expected cost of one pull.
    pub fn mean(&self) -> f64 {
        match *self {
            CostSpec::Fixed { value } => value,
            CostSpec::LogNormal { median, sigma } => median * (0.5 * sigma * sigma).exp(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticArmSpec {
    pub id: String,
    pub generator: ArmGenerator,
    #[serde(default)]
    pub cost: CostSpec,
}

/// Arm definitions of a synthetic environment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticSpec {
    pub arms: Vec<SyntheticArmSpec>,
}

impl SyntheticSpec {
    /// Seven i.i.d. arms with means from 0.80 down to 0.50 and sd 0.05 or
    /// 0.10, all with the given skew.
    pub fn seven_arm(shape: f64) -> Self {
        const ARMS: [(f64, f64); 7] = [
            (0.80, 0.05),
            (0.75, 0.05),
            (0.70, 0.05),
            (0.60, 0.05),
            (0.70, 0.10),
            (0.60, 0.10),
            (0.50, 0.10),
        ];
        Self::iid(ARMS.iter().map(|&(m, s)| (m, s, shape)))
    }

    /// i.i.d. arms named `arm0`, `arm1`, ... with unit costs.
    pub fn iid(params: impl IntoIterator<Item = (f64, f64, f64)>) -> Self {
        Self {
            arms: params
                .into_iter()
                .enumerate()
                .map(|(i, (mean, sd, shape))| SyntheticArmSpec {
                    id: format!("arm{i}"),
                    generator: ArmGenerator::Iid(SkewNormalSpec { mean, sd, shape }),
                    cost: CostSpec::default(),
                })
                .collect(),
        }
    }

    pub fn with_costs(mut self, costs: &[CostSpec]) -> Self {
        for (arm, cost) in self.arms.iter_mut().zip(costs) {
            arm.cost = *cost;
        }
        self
    }

    pub fn arm_ids(&self) -> Vec<String> {
        self.arms.iter().map(|a| a.id.clone()).collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.arms.is_empty() {
            return Err(Error::Config("synthetic environment needs at least one arm".into()));
        }
        for arm in &self.arms {
            match &arm.generator {
                ArmGenerator::Iid(s) => {
                    SkewNormalSpec::new(s.mean, s.sd, s.shape)?;
                }
                ArmGenerator::Prior(p) => p.validate()?,
            }
            arm.cost.validate()?;
        }
        Ok(())
    }

    /// Environment for one episode. Each arm has its own stream derived
    /// from `seed`, so the k-th pull of an arm is the same whatever the
    /// order in which arms are pulled.
    pub fn build(&self, seed: u64) -> Result<SyntheticEnvironment> {
        self.validate()?;
        let mut arms = Vec::with_capacity(self.arms.len());
        for (i, spec) in self.arms.iter().enumerate() {
            let mut rng = derive_rng(seed, &["arm".into(), i.into()]);
            let state = match &spec.generator {
                ArmGenerator::Iid(s) => ArmState::Iid(*s),
                ArmGenerator::Prior(p) => ArmState::Replay(generate_trajectory(p, &mut rng)?.rewards, 0),
            };
            arms.push(SyntheticArm {
                state,
                cost: spec.cost,
                rng,
            });
        }
        Ok(SyntheticEnvironment {
            arm_ids: self.arm_ids(),
            arms,
        })
    }

    /// Monte Carlo estimate of the best arm's expected maximum when pulled
    /// exclusively for its feasible horizon (`T`, or `floor(B / mean cost)`).
    pub fn oracle_max(&self, budget: Budget, samples: usize, seed: u64) -> Result<(String, f64)> {
        self.validate()?;
        let mut best: Option<(String, f64)> = None;
        for (i, arm) in self.arms.iter().enumerate() {
            let horizon = match budget {
                Budget::Steps(t) => t,
                Budget::Seconds(b) => (b / arm.cost.mean()).floor() as usize,
            }
            .max(1);
            let mut rng = derive_rng(seed, &["oracle".into(), i.into()]);
            let mut total = 0.0;
            for _ in 0..samples.max(1) {
                let draws = match &arm.generator {
                    ArmGenerator::Iid(s) => sample_truncated_skew_normal(s, horizon, &mut rng)?,
                    ArmGenerator::Prior(p) => {
                        let mut r = generate_trajectory(p, &mut rng)?.rewards;
                        r.truncate(horizon);
                        r
                    }
                };
                total += draws.into_iter().fold(f64::NEG_INFINITY, f64::max);
            }
            let value = total / samples.max(1) as f64;
            if best.as_ref().is_none_or(|(_, v)| value > *v) {
                best = Some((arm.id.clone(), value));
            }
        }
        Ok(best.expect("validated non-empty"))
    }
}

#[derive(Debug, Clone)]
enum ArmState {
    Iid(SkewNormalSpec),
    Replay(Vec<f64>, usize),
}

#[derive(Debug, Clone)]
struct SyntheticArm {
    state: ArmState,
    cost: CostSpec,
    rng: SimRng,
}

#[derive(Debug, Clone)]
pub struct SyntheticEnvironment {
    arm_ids: Vec<String>,
    arms: Vec<SyntheticArm>,
}

impl Environment for SyntheticEnvironment {
    fn arm_ids(&self) -> &[String] {
        &self.arm_ids
    }

    fn pull(&mut self, arm: usize) -> Result<(f64, f64)> {
        let a = self.arms.get_mut(arm).ok_or(Error::UnknownArm(arm))?;
        let reward = match &mut a.state {
            ArmState::Iid(spec) => sample_truncated_skew_normal(spec, 1, &mut a.rng)?[0],
            ArmState::Replay(rewards, cursor) => {
                let r = *rewards
                    .get(*cursor)
                    .ok_or_else(|| Error::ArmExhausted(self.arm_ids[arm].clone()))?;
                *cursor += 1;
                r
            }
        };
        Ok((reward, a.cost.sample(&mut a.rng)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn iid_arm_mean_near_parameter() {
        let spec = SyntheticSpec::iid([(0.8, 0.05, -50.0)]);
        let mut env = spec.build(1).unwrap();
        let n = 10_000;
        let mean = (0..n).map(|_| env.pull(0).unwrap().0).sum::<f64>() / n as f64;
        assert!((mean - 0.8).abs() < 0.02, "{mean}");
    }

    #[test]
    fn prior_arm_replays_then_exhausts() {
        let prior = PriorConfig::curved().with_horizon(5);
        let spec = SyntheticSpec {
            arms: vec![SyntheticArmSpec {
                id: "p".into(),
                generator: ArmGenerator::Prior(prior),
                cost: CostSpec::Fixed { value: 2.0 },
            }],
        };
        let mut env = spec.build(3).unwrap();
        let first: Vec<(f64, f64)> = (0..5).map(|_| env.pull(0).unwrap()).collect();
        assert!(first.iter().all(|&(r, c)| (0.0..=1.0).contains(&r) && c == 2.0));
        assert!(matches!(env.pull(0), Err(Error::ArmExhausted(_))));
        let mut again = spec.build(3).unwrap();
        assert_eq!((0..5).map(|_| again.pull(0).unwrap()).collect::<Vec<_>>(), first);
    }

    #[test]
    fn arm_streams_independent_of_pull_order() {
        let spec = SyntheticSpec::seven_arm(-50.0);
        let mut a = spec.build(9).unwrap();
        let mut b = spec.build(9).unwrap();
        let a0: Vec<f64> = (0..3).map(|_| a.pull(0).unwrap().0).collect();
        b.pull(4).unwrap();
        b.pull(2).unwrap();
        let b0: Vec<f64> = (0..3).map(|_| b.pull(0).unwrap().0).collect();
        assert_eq!(a0, b0);
    }

    #[test]
    fn default_cost_is_one() {
        let json = r#"{"arms":[{"id":"x","generator":{"kind":"iid","mean":0.5,"sd":0.1,"shape":0.0}}]}"#;
        let spec: SyntheticSpec = serde_json::from_str(json).unwrap();
        assert_eq!(spec.build(0).unwrap().pull(0).unwrap().1, 1.0);
        assert!(serde_json::from_str::<SyntheticSpec>(r#"{"arms":[],"extra":1}"#).is_err());
    }

    #[test]
    fn oracle_prefers_highest_mean() {
        let spec = SyntheticSpec::seven_arm(-50.0);
        let (arm, v) = spec.oracle_max(Budget::Steps(20), 500, 4).unwrap();
        assert_eq!(arm, "arm0");
        assert!(v > 0.8 && v <= 1.0);
        let costly = SyntheticSpec::iid([(0.8, 0.01, 0.0), (0.7, 0.01, 0.0)])
            .with_costs(&[CostSpec::Fixed { value: 100.0 }, CostSpec::Fixed { value: 1.0 }]);
        assert_eq!(costly.oracle_max(Budget::Seconds(50.0), 50, 1).unwrap().0, "arm0");
        let lognormal = CostSpec::LogNormal { median: 2.0, sigma: 0.5 };
        assert!((lognormal.mean() - 2.0 * 0.125f64.exp()).abs() < 1e-15);
    }
}
