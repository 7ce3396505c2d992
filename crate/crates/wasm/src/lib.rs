//! Browser bindings: prior trajectories, the approximate posterior
//! predictive of the running maximum, and seven-arm bandit runs.
//! Every export returns a JSON string.

use std::collections::BTreeMap;

use maxarm::envs::SyntheticSpec;
use maxarm::harness::{last_step_within, EnvironmentSource, Experiment};
use maxarm::policies::PolicySpec;
use maxarm::posterior::abc_ppd;
use maxarm::priors::{generate_trajectory, PriorConfig, PriorKind};
use maxarm::seeding::rng_from_seed;
use maxarm::types::{ArmObservations, Budget};
use serde::Serialize;
use wasm_bindgen::prelude::*;

fn js(e: maxarm::Error) -> JsValue {
    JsValue::from_str(&e.to_string())
}

fn preset(name: &str, horizon: usize) -> maxarm::Result<PriorConfig> {
    let cfg = PriorConfig::preset(name.parse::<PriorKind>()?).with_horizon(horizon);
    cfg.validate()?;
    Ok(cfg)
}

#[derive(Serialize)]
struct Trajectories {
    rewards: Vec<Vec<f64>>,
    running_max: Vec<Vec<f64>>,
}

pub fn prior_trajectories(name: &str, count: usize, horizon: usize, seed: u64) -> maxarm::Result<String> {
    let cfg = preset(name, horizon)?;
    let mut rng = rng_from_seed(seed);
    let mut out = Trajectories {
        rewards: Vec::with_capacity(count),
        running_max: Vec::with_capacity(count),
    };
    for _ in 0..count.clamp(1, 200) {
        let r = generate_trajectory(&cfg, &mut rng)?.rewards;
        out.running_max.push(maxarm::types::running_max(&r)?);
        out.rewards.push(r);
    }
    Ok(serde_json::to_string(&out)?)
}

#[derive(Serialize)]
struct Predictive {
    /// Mass per bin over [0, 1].
    masses: Vec<f64>,
    mean: f64,
    effective_sample_size: f64,
}

pub fn predictive(
    name: &str,
    context: &[f64],
    target: usize,
    particles: usize,
    bandwidth: f64,
    seed: u64,
) -> maxarm::Result<String> {
    let cfg = preset(name, maxarm::priors::DEFAULT_HORIZON)?;
    let obs = ArmObservations::from_rewards("arm", context)?;
    let est = abc_ppd(&cfg, &obs, target, particles, bandwidth, 100, &mut rng_from_seed(seed))?;
    Ok(serde_json::to_string(&Predictive {
        masses: est.distribution.masses().to_vec(),
        mean: est.distribution.mean(),
        effective_sample_size: est.effective_sample_size,
    })?)
}

#[derive(Serialize)]
struct PolicyCurve {
    policy: String,
    mean_incumbent: Vec<f64>,
    pulls_per_arm: Vec<f64>,
}

#[derive(Serialize)]
struct Simulation {
    oracle: f64,
    curves: Vec<PolicyCurve>,
}

pub fn simulate_seven_arm(policies: &str, shape: f64, horizon: usize, seeds: u64, seed: u64) -> maxarm::Result<String> {
    let spec = SyntheticSpec::seven_arm(shape);
    let names: Vec<&str> = policies.split(',').map(str::trim).filter(|s| !s.is_empty()).collect();
    let experiment = Experiment {
        source: EnvironmentSource::Synthetic(BTreeMap::from([("seven-arm".to_string(), spec)])),
        tasks: vec!["seven-arm".into()],
        policies: names.iter().map(|n| PolicySpec::parse(n)).collect::<maxarm::Result<_>>()?,
        budget: Budget::Steps(horizon),
        checkpoints: vec![1.0],
        seeds: seeds.max(1),
        root_seed: seed,
        oracle_samples: 500,
    };
    experiment.validate()?;
    let n = experiment.seeds as f64;
    let mut curves: Vec<PolicyCurve> = names
        .iter()
        .map(|p| PolicyCurve {
            policy: p.to_string(),
            mean_incumbent: vec![0.0; horizon],
            pulls_per_arm: vec![0.0; 7],
        })
        .collect();
    for (cell, record) in experiment.run_sequential() {
        let record = record?;
        let curve = &mut curves[cell.policy];
        for (step, v) in curve.mean_incumbent.iter_mut().enumerate() {
            let s = last_step_within(&record.steps, experiment.budget, (step + 1) as f64).expect("initialized");
            *v += s.incumbent / n;
        }
        for (arm, count) in record.pulls_per_arm(7).into_iter().enumerate() {
            curve.pulls_per_arm[arm] += count as f64 / n;
        }
    }
    let oracle = experiment.task_info("seven-arm")?.oracle_value;
    Ok(serde_json::to_string(&Simulation { oracle, curves })?)
}

#[wasm_bindgen(js_name = priorTrajectories)]
pub fn prior_trajectories_js(preset: &str, count: u32, horizon: u32, seed: u32) -> Result<String, JsValue> {
    prior_trajectories(preset, count as usize, horizon as usize, seed.into()).map_err(js)
}

#[wasm_bindgen(js_name = predictive)]
pub fn predictive_js(
    preset: &str,
    context: Vec<f64>,
    target: u32,
    particles: u32,
    bandwidth: f64,
    seed: u32,
) -> Result<String, JsValue> {
    predictive(preset, &context, target as usize, particles as usize, bandwidth, seed.into()).map_err(js)
}

#[wasm_bindgen(js_name = simulateSevenArm)]
pub fn simulate_seven_arm_js(policies: &str, shape: f64, horizon: u32, seeds: u32, seed: u32) -> Result<String, JsValue> {
    simulate_seven_arm(policies, shape, horizon as usize, seeds.into(), seed.into()).map_err(js)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trajectories_json() {
        let v: serde_json::Value = serde_json::from_str(&prior_trajectories("curved", 3, 50, 1).unwrap()).unwrap();
        assert_eq!(v["rewards"].as_array().unwrap().len(), 3);
        assert_eq!(v["running_max"][0].as_array().unwrap().len(), 50);
        assert!(prior_trajectories("bogus", 3, 50, 1).is_err());
    }

    #[test]
    fn predictive_json() {
        let v: serde_json::Value =
            serde_json::from_str(&predictive("semi-flat", &[0.4, 0.6, 0.5], 20, 2000, 0.02, 3).unwrap()).unwrap();
        let masses: Vec<f64> = v["masses"].as_array().unwrap().iter().map(|m| m.as_f64().unwrap()).collect();
        assert_eq!(masses.len(), 100);
        assert!((masses.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        // weighted particles sit near the observed best of 0.6
        assert!(masses[..55].iter().sum::<f64>() < 1e-3);
        assert!(v["mean"].as_f64().unwrap() > 0.6);
    }

    #[test]
    fn simulation_json() {
        let v: serde_json::Value = serde_json::from_str(&simulate_seven_arm("ps-max, ts", -50.0, 30, 3, 1).unwrap()).unwrap();
        let curves = v["curves"].as_array().unwrap();
        assert_eq!(curves.len(), 2);
        let pulls: f64 = curves[0]["pulls_per_arm"].as_array().unwrap().iter().map(|p| p.as_f64().unwrap()).sum();
        assert!((pulls - 30.0).abs() < 1e-9);
        assert!(simulate_seven_arm("nope", -50.0, 30, 3, 1).is_err());
    }
}
