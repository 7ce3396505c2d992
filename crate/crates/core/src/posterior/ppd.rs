//! Posterior predictive distribution (PPD) of an arm's running maximum.
//!
//! Given the running-max context `y_1..y_n` of an arm and a target step `t`,
//! the PPD is `p(max(r_1..r_t) | y_1..y_n)` under a trajectory prior. Two
//! estimators are provided:
//!
//! * [`exact_ppd`] enumerates a finite [`GridPrior`] in closed form.
//! * [`abc_ppd`] weights particles drawn from any [`TrajectoryPrior`] with a
//!   Gaussian kernel on the running-max prefix. [`ParticleBank`] and
//!   [`ContextWeights`] split this into a reusable particle set and an
//!   incrementally updated per-arm distance vector, which is what the bandit
//!   policies use.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::discrete::DiscreteDistribution;
use crate::error::{Error, Result};
use crate::priors::TrajectoryPrior;
use crate::seeding::SimRng;
use crate::types::ArmObservations;

/// Values closer than this are treated as the same support point.
const SUPPORT_EPS: f64 = 1e-12;

/// Reward distribution at one step: `(value, probability)` pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepSupport(Vec<(f64, f64)>);

impl StepSupport {
    pub fn new(mut points: Vec<(f64, f64)>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidParameter("empty reward support".into()));
        }
        for &(v, p) in &points {
            if !(0.0..=1.0).contains(&v) || !(p >= 0.0) {
                return Err(Error::InvalidParameter(format!("bad support point ({v}, {p})")));
            }
        }
        let total: f64 = points.iter().map(|p| p.1).sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidParameter(format!("support probabilities sum to {total}")));
        }
        points.sort_by(|a, b| a.0.total_cmp(&b.0));
        Ok(Self(points))
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.0
    }

    fn prob_eq(&self, v: f64) -> f64 {
        self.0.iter().filter(|(x, _)| (x - v).abs() <= SUPPORT_EPS).map(|p| p.1).sum()
    }

    fn prob_le(&self, v: f64) -> f64 {
        self.0.iter().filter(|(x, _)| *x <= v + SUPPORT_EPS).map(|p| p.1).sum()
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let mut u: f64 = rng.random();
        for &(v, p) in &self.0 {
            u -= p;
            if u < 0.0 {
                return v;
            }
        }
        self.0.last().expect("non-empty").0
    }
}

/// One parameter setting of a discrete prior: independent rewards whose
/// distribution may change with the step index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridAtom {
    pub weight: f64,
    pub steps: Vec<StepSupport>,
}

impl GridAtom {
    pub fn iid(weight: f64, support: StepSupport, horizon: usize) -> Self {
        Self {
            weight,
            steps: vec![support; horizon],
        }
    }
}

/// Finite mixture of [`GridAtom`]s sharing one horizon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridPrior {
    atoms: Vec<GridAtom>,
    horizon: usize,
}

/// Upper bound on atoms for exact enumeration.
pub const MAX_GRID_ATOMS: usize = 1_000_000;

impl GridPrior {
    pub fn new(atoms: Vec<GridAtom>) -> Result<Self> {
        let horizon = atoms.first().map(|a| a.steps.len()).unwrap_or(0);
        if atoms.is_empty() || atoms.len() > MAX_GRID_ATOMS {
            return Err(Error::InvalidParameter(format!("grid prior needs 1..={MAX_GRID_ATOMS} atoms")));
        }
        if horizon == 0 || atoms.iter().any(|a| a.steps.len() != horizon) {
            return Err(Error::InvalidParameter("grid atoms must share a positive horizon".into()));
        }
        if atoms.iter().any(|a| !(a.weight >= 0.0)) || atoms.iter().all(|a| a.weight == 0.0) {
            return Err(Error::InvalidParameter("atom weights must be non-negative and not all zero".into()));
        }
        Ok(Self { atoms, horizon })
    }

    pub fn atoms(&self) -> &[GridAtom] {
        &self.atoms
    }

    fn total_weight(&self) -> f64 {
        self.atoms.iter().map(|a| a.weight).sum()
    }
}

impl TrajectoryPrior for GridPrior {
    fn horizon(&self) -> usize {
        self.horizon
    }

    fn sample_rewards(&self, rng: &mut SimRng) -> Result<Vec<f64>> {
        let mut u = rng.random::<f64>() * self.total_weight();
        let mut atom = self.atoms.last().expect("non-empty");
        for a in &self.atoms {
            u -= a.weight;
            if u < 0.0 {
                atom = a;
                break;
            }
        }
        Ok(atom.steps.iter().map(|s| s.sample(rng)).collect())
    }
}

/// Likelihood of a running-max prefix under one atom. The running max is a
/// Markov chain: it either jumps to a new reward above the current max or
/// stays, which happens when the new reward is at most the current max.
fn running_max_likelihood(atom: &GridAtom, maxes: &[f64]) -> f64 {
    let mut lik = 1.0;
    let mut prev: Option<f64> = None;
    for (k, &y) in maxes.iter().enumerate() {
        let step = &atom.steps[k];
        lik *= match prev {
            None => step.prob_eq(y),
            Some(m) if (y - m).abs() <= SUPPORT_EPS => step.prob_le(m),
            Some(m) if y > m => step.prob_eq(y),
            Some(_) => 0.0,
        };
        if lik == 0.0 {
            return 0.0;
        }
        prev = Some(y);
    }
    lik
}

/// Distribution of `max(current, r_{from+1}..r_{to})` under one atom, as
/// `(value, probability)` pairs.
fn future_max_pmf(atom: &GridAtom, current: Option<f64>, from: usize, to: usize) -> Vec<(f64, f64)> {
    let mut candidates: Vec<f64> = atom.steps[from..to]
        .iter()
        .flat_map(|s| s.points().iter().map(|p| p.0))
        .filter(|v| current.is_none_or(|m| *v > m + SUPPORT_EPS))
        .collect();
    if let Some(m) = current {
        candidates.push(m);
    }
    candidates.sort_by(f64::total_cmp);
    candidates.dedup_by(|a, b| (*a - *b).abs() <= SUPPORT_EPS);

    let cdf = |v: f64| -> f64 {
        if current.is_some_and(|m| v < m - SUPPORT_EPS) {
            return 0.0;
        }
        atom.steps[from..to].iter().map(|s| s.prob_le(v)).product()
    };
    let mut prev = 0.0;
    candidates
        .into_iter()
        .filter_map(|v| {
            let c = cdf(v);
            let p = c - prev;
            prev = c;
            (p > 0.0).then_some((v, p))
        })
        .collect()
}

/// Exact PPD of the running max at step `t` under a discrete prior.
pub fn exact_ppd(prior: &GridPrior, context: &ArmObservations, t: usize, bins: usize) -> Result<DiscreteDistribution> {
    let n = context.pull_count();
    if t == 0 || t > prior.horizon || n > prior.horizon {
        return Err(Error::InvalidParameter(format!(
            "target step {t} / context length {n} outside horizon {}",
            prior.horizon
        )));
    }
    let maxes = &context.running_max;
    let posts: Vec<f64> = prior
        .atoms
        .iter()
        .map(|a| a.weight * running_max_likelihood(a, maxes))
        .collect();
    let evidence: f64 = posts.iter().sum();
    if !(evidence > 0.0) {
        return Err(Error::ContextOutsideSupport);
    }

    if t <= n {
        return Ok(DiscreteDistribution::point_mass(bins, maxes[t - 1]));
    }
    let current = maxes.last().copied();
    let mut values = Vec::new();
    for (atom, w) in prior.atoms.iter().zip(&posts) {
        if *w == 0.0 {
            continue;
        }
        for (v, p) in future_max_pmf(atom, current, n, t) {
            values.push((v, w / evidence * p));
        }
    }
    DiscreteDistribution::from_weighted_values(bins, values)
}

/// Running-max prefixes of particles drawn from a prior.
#[derive(Debug, Clone, PartialEq)]
pub struct ParticleBank {
    horizon: usize,
    /// Row-major `particles x horizon` running maxima.
    maxes: Vec<f64>,
}

impl ParticleBank {
    pub fn generate(prior: &dyn TrajectoryPrior, particles: usize, rng: &mut SimRng) -> Result<Self> {
        let horizon = prior.horizon();
        let mut maxes = Vec::with_capacity(particles * horizon);
        for _ in 0..particles {
            let rewards = prior.sample_rewards(rng)?;
            let mut best = f64::NEG_INFINITY;
            maxes.extend(rewards.iter().take(horizon).map(|&r| {
                best = best.max(r);
                best
            }));
        }
        Ok(Self { horizon, maxes })
    }

    pub fn particles(&self) -> usize {
        self.maxes.len() / self.horizon
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    /// Running max of particle `j` at 1-based step `step`.
    pub fn max_at(&self, j: usize, step: usize) -> f64 {
        self.maxes[j * self.horizon + step - 1]
    }
}

/// Accumulated squared distances between each particle's running-max
/// prefix and an arm's observed running max.
#[derive(Debug, Clone, PartialEq)]
pub struct ContextWeights {
    sq_dist: Vec<f64>,
    observed: usize,
}

impl ContextWeights {
    pub fn new(bank: &ParticleBank) -> Self {
        Self {
            sq_dist: vec![0.0; bank.particles()],
            observed: 0,
        }
    }

    pub fn observed(&self) -> usize {
        self.observed
    }

    /// Appends the next running-max value. Observations past the bank's
    /// horizon carry no information about the particles and are ignored.
    pub fn push(&mut self, bank: &ParticleBank, running_max: f64) {
        if self.observed >= bank.horizon() {
            return;
        }
        self.observed += 1;
        let k = self.observed;
        for (j, d) in self.sq_dist.iter_mut().enumerate() {
            let diff = bank.max_at(j, k) - running_max;
            *d += diff * diff;
        }
    }

    pub fn from_context(bank: &ParticleBank, maxes: &[f64]) -> Self {
        let mut w = Self::new(bank);
        for &y in maxes {
            w.push(bank, y);
        }
        w
    }

    /// Normalized kernel weights `exp(-d_j / (2 h^2))`. Computed relative to
    /// the closest particle so long contexts do not underflow.
    pub fn weights(&self, bandwidth: f64) -> Result<Vec<f64>> {
        let scale = 1.0 / (2.0 * bandwidth * bandwidth);
        let best = self.sq_dist.iter().copied().fold(f64::INFINITY, f64::min);
        if !best.is_finite() {
            return Err(Error::NoParticleMass);
        }
        let raw: Vec<f64> = self.sq_dist.iter().map(|d| (-(d - best) * scale).exp()).collect();
        let total: f64 = raw.iter().sum();
        if !(total > 0.0) || !total.is_finite() {
            return Err(Error::NoParticleMass);
        }
        Ok(raw.into_iter().map(|w| w / total).collect())
    }
}

/// PPD estimate plus its effective sample size.
#[derive(Debug, Clone, PartialEq)]
pub struct AbcEstimate {
    pub distribution: DiscreteDistribution,
    pub effective_sample_size: f64,
}

/// Kernel-weighted PPD at step `t` from a bank and precomputed weights.
pub fn abc_from_bank(
    bank: &ParticleBank,
    weights: &ContextWeights,
    t: usize,
    bandwidth: f64,
    bins: usize,
) -> Result<AbcEstimate> {
    if t == 0 || t > bank.horizon() {
        return Err(Error::InvalidParameter(format!(
            "target step {t} outside horizon {}",
            bank.horizon()
        )));
    }
    if !(bandwidth > 0.0) {
        return Err(Error::InvalidParameter("bandwidth must be positive".into()));
    }
    let w = weights.weights(bandwidth)?;
    let ess = 1.0 / w.iter().map(|x| x * x).sum::<f64>();
    let distribution =
        DiscreteDistribution::from_weighted_values(bins, w.iter().enumerate().map(|(j, &wj)| (bank.max_at(j, t), wj)))?;
    Ok(AbcEstimate {
        distribution,
        effective_sample_size: ess,
    })
}

/// Minimum particle count accepted by [`abc_ppd`].
pub const MIN_PARTICLES: usize = 100;

/// Approximate PPD by kernel-weighted particles drawn from `prior`.
pub fn abc_ppd(
    prior: &dyn TrajectoryPrior,
    context: &ArmObservations,
    t: usize,
    particles: usize,
    bandwidth: f64,
    bins: usize,
    rng: &mut SimRng,
) -> Result<AbcEstimate> {
    let n = context.pull_count();
    if particles < MIN_PARTICLES {
        return Err(Error::InvalidParameter(format!("need at least {MIN_PARTICLES} particles")));
    }
    if t > prior.horizon() || n > t {
        return Err(Error::InvalidParameter(format!(
            "need context length {n} <= target step {t} <= horizon {}",
            prior.horizon()
        )));
    }
    let bank = ParticleBank::generate(prior, particles, rng)?;
    let weights = ContextWeights::from_context(&bank, &context.running_max);
    abc_from_bank(&bank, &weights, t, bandwidth, bins)
}
