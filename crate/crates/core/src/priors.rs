//! Generative prior over synthetic optimization trajectories.
//!
//! A trajectory of length `m` is the element-wise product of i.i.d. draws
//! from a left-skewed "uncertainty" distribution `d1` with the ascending-sorted
//! draws from a "shift" distribution `d2` whose mean is pinned at 1. Both are
//! skew-normal distributions truncated to [0, 1]. The three named presets
//! differ only in the ranges of the two standard deviations.

use std::io::{BufRead, Write};

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seeding::{derive_rng, SimRng};
use crate::types::running_max;

/// Below this acceptance rate (after `MIN_PROPOSALS_FOR_RATE` proposals)
/// rejection sampling gives up.
pub const MIN_ACCEPTANCE_RATE: f64 = 1e-4;
const MIN_PROPOSALS_FOR_RATE: u64 = 100_000;

const SQRT_2_OVER_PI: f64 = 0.797_884_560_802_865_4;

/// Skew-normal distribution parameterized by its *untruncated* mean,
/// standard deviation and shape, restricted to [0, 1].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SkewNormalSpec {
    pub mean: f64,
    pub sd: f64,
    pub shape: f64,
}

impl SkewNormalSpec {
    pub fn new(mean: f64, sd: f64, shape: f64) -> Result<Self> {
        if !(sd >= 0.0) || !mean.is_finite() || !shape.is_finite() || !sd.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "skew-normal needs finite mean/shape and sd >= 0 (mean={mean}, sd={sd}, shape={shape})"
            )));
        }
        Ok(Self { mean, sd, shape })
    }

    pub fn delta(&self) -> f64 {
        self.shape / (1.0 + self.shape * self.shape).sqrt()
    }

    /// Location and scale `(xi, omega)` recovered from mean, sd and shape.
    pub fn location_scale(&self) -> (f64, f64) {
        let delta = self.delta();
        let omega = self.sd / (1.0 - 2.0 * delta * delta / std::f64::consts::PI).sqrt();
        let xi = self.mean - omega * delta * SQRT_2_OVER_PI;
        (xi, omega)
    }

    /// One draw from the untruncated distribution.
    pub fn sample_untruncated<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        if self.sd == 0.0 {
            return self.mean;
        }
        let (xi, omega) = self.location_scale();
        let delta = self.delta();
        let z0: f64 = rng.sample(StandardNormal);
        let z1: f64 = rng.sample(StandardNormal);
        xi + omega * (delta * z0.abs() + (1.0 - delta * delta).sqrt() * z1)
    }
}

/// Draws `n` values from the skew-normal conditioned on [0, 1], by rejection.
pub fn sample_truncated_skew_normal<R: Rng + ?Sized>(
    spec: &SkewNormalSpec,
    n: usize,
    rng: &mut R,
) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(Error::InvalidParameter("sample count must be >= 1".into()));
    }
    if spec.sd == 0.0 {
        return if (0.0..=1.0).contains(&spec.mean) {
            Ok(vec![spec.mean; n])
        } else {
            Err(Error::DegenerateTruncation {
                rate: 0.0,
                attempts: 0,
            })
        };
    }
    let mut out = Vec::with_capacity(n);
    let mut attempts: u64 = 0;
    while out.len() < n {
        attempts += 1;
        let x = spec.sample_untruncated(rng);
        if (0.0..=1.0).contains(&x) {
            out.push(x);
        } else if attempts >= MIN_PROPOSALS_FOR_RATE {
            let rate = out.len() as f64 / attempts as f64;
            if rate < MIN_ACCEPTANCE_RATE {
                return Err(Error::DegenerateTruncation { rate, attempts });
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PriorKind {
    Flat,
    SemiFlat,
    Curved,
    Custom,
}

impl PriorKind {
    pub const NAMES: [&'static str; 4] = ["flat", "semi-flat", "curved", "custom"];

    pub fn as_str(&self) -> &'static str {
        match self {
            PriorKind::Flat => "flat",
            PriorKind::SemiFlat => "semi-flat",
            PriorKind::Curved => "curved",
            PriorKind::Custom => "custom",
        }
    }
}

impl std::str::FromStr for PriorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "flat" => Ok(PriorKind::Flat),
            "semi-flat" | "semiflat" | "semi_flat" => Ok(PriorKind::SemiFlat),
            "curved" => Ok(PriorKind::Curved),
            "custom" => Ok(PriorKind::Custom),
            other => Err(Error::UnknownPreset(other.to_string())),
        }
    }
}

impl std::fmt::Display for PriorKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Parameters of the synthetic trajectory prior.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriorConfig {
    pub name: PriorKind,
    /// Range of the uniform draw for the mean of `d1`.
    pub mean_range: (f64, f64),
    /// Range of the uniform draw for both shape parameters.
    pub skew_range: (f64, f64),
    /// `sd1 ~ Uniform(0, sigma1_max)`.
    pub sigma1_max: f64,
    /// `sd2 ~ Uniform(sigma2_scale * (1 - mean1), sigma2_scale)`.
    pub sigma2_scale: f64,
    pub horizon: usize,
}

pub const DEFAULT_HORIZON: usize = 200;

impl PriorConfig {
    pub fn preset(kind: PriorKind) -> Self {
        let (sigma1_max, sigma2_scale) = match kind {
            PriorKind::Flat => (0.1, 0.001),
            PriorKind::SemiFlat | PriorKind::Custom => (0.2, 0.01),
            PriorKind::Curved => (0.2, 0.1),
        };
        Self {
            name: kind,
            mean_range: (0.0, 1.0),
            skew_range: (-100.0, -20.0),
            sigma1_max,
            sigma2_scale,
            horizon: DEFAULT_HORIZON,
        }
    }

    pub fn flat() -> Self {
        Self::preset(PriorKind::Flat)
    }

    pub fn semi_flat() -> Self {
        Self::preset(PriorKind::SemiFlat)
    }

    pub fn curved() -> Self {
        Self::preset(PriorKind::Curved)
    }

    pub fn custom(sigma1_max: f64, sigma2_scale: f64) -> Self {
        Self {
            name: PriorKind::Custom,
            sigma1_max,
            sigma2_scale,
            ..Self::preset(PriorKind::Custom)
        }
    }

    pub fn with_horizon(mut self, horizon: usize) -> Self {
        self.horizon = horizon;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let ordered = |(a, b): (f64, f64)| a.is_finite() && b.is_finite() && a <= b;
        if !ordered(self.mean_range) || !ordered(self.skew_range) {
            return Err(Error::InvalidParameter(format!(
                "prior ranges must be ordered: mean {:?}, skew {:?}",
                self.mean_range, self.skew_range
            )));
        }
        if !(self.sigma1_max > 0.0) || !(self.sigma2_scale > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "sigma bounds must be positive: {} / {}",
                self.sigma1_max, self.sigma2_scale
            )));
        }
        if self.horizon == 0 {
            return Err(Error::InvalidParameter("prior horizon must be >= 1".into()));
        }
        Ok(())
    }
}

/// Hyperparameters drawn for one synthetic trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryParams {
    pub mean1: f64,
    pub sd1: f64,
    pub shape1: f64,
    pub sd2: f64,
    pub shape2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryDraw {
    pub params: TrajectoryParams,
    pub rewards: Vec<f64>,
}

fn uniform<R: Rng + ?Sized>(rng: &mut R, (lo, hi): (f64, f64)) -> f64 {
    if hi > lo {
        rng.random_range(lo..hi)
    } else {
        lo
    }
}

pub fn generate_trajectory<R: Rng + ?Sized>(config: &PriorConfig, rng: &mut R) -> Result<TrajectoryDraw> {
    config.validate()?;
    let mean1 = uniform(rng, config.mean_range);
    let sd1 = uniform(rng, (0.0, config.sigma1_max));
    let sd2 = uniform(rng, (config.sigma2_scale * (1.0 - mean1), config.sigma2_scale));
    let shape1 = uniform(rng, config.skew_range);
    let shape2 = uniform(rng, config.skew_range);
    let params = TrajectoryParams {
        mean1,
        sd1,
        shape1,
        sd2,
        shape2,
    };

    let d1 = SkewNormalSpec::new(mean1, sd1, shape1)?;
    let d2 = SkewNormalSpec::new(1.0, sd2, shape2)?;
    let r1 = sample_truncated_skew_normal(&d1, config.horizon, rng)?;
    let mut r2 = sample_truncated_skew_normal(&d2, config.horizon, rng)?;
    r2.sort_by(f64::total_cmp);
    let rewards = r1.iter().zip(&r2).map(|(a, b)| a * b).collect();
    Ok(TrajectoryDraw { params, rewards })
}

/// Anything that can produce reward trajectories of a fixed horizon.
/// Implemented by the skew-normal prior and by small discrete test priors.
pub trait TrajectoryPrior {
    fn horizon(&self) -> usize;
    fn sample_rewards(&self, rng: &mut SimRng) -> Result<Vec<f64>>;
}

impl TrajectoryPrior for PriorConfig {
    fn horizon(&self) -> usize {
        self.horizon
    }

    fn sample_rewards(&self, rng: &mut SimRng) -> Result<Vec<f64>> {
        Ok(generate_trajectory(self, rng)?.rewards)
    }
}

/// Cutoff in `[1, m-1]` with `P(k) ∝ 1/k`.
pub fn sample_harmonic_cutoff<R: Rng + ?Sized>(m: usize, rng: &mut R) -> Result<usize> {
    if m < 2 {
        return Err(Error::InvalidParameter(format!("harmonic cutoff needs m >= 2, got {m}")));
    }
    let total: f64 = (1..m).map(|k| 1.0 / k as f64).sum();
    let mut u = rng.random::<f64>() * total;
    for k in 1..m {
        u -= 1.0 / k as f64;
        if u < 0.0 {
            return Ok(k);
        }
    }
    Ok(m - 1)
}

pub const CORPUS_HEADER: &str = "sequence_id,position,running_max,is_context";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorpusRecord {
    pub sequence_id: u64,
    pub position: usize,
    pub running_max: f64,
    pub is_context: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusSummary {
    pub sequences: u64,
    pub records: u64,
    pub context_records: u64,
}

/// Builds the records of one corpus sequence. The stream for sequence `i`
/// is derived from `(root_seed, "corpus", i)`.
pub fn corpus_sequence(config: &PriorConfig, root_seed: u64, sequence_id: u64) -> Result<Vec<CorpusRecord>> {
    let mut rng = derive_rng(root_seed, &["corpus".into(), sequence_id.into()]);
    let draw = generate_trajectory(config, &mut rng)?;
    let maxes = running_max(&draw.rewards)?;
    let cutoff = if config.horizon >= 2 {
        sample_harmonic_cutoff(config.horizon, &mut rng)?
    } else {
        1
    };
    Ok(maxes
        .into_iter()
        .enumerate()
        .map(|(i, v)| CorpusRecord {
            sequence_id,
            position: i + 1,
            running_max: v,
            is_context: i + 1 <= cutoff,
        })
        .collect())
}

/// Writes `count` sequences as CSV. Floats use the shortest representation
/// that parses back to the same value.
pub fn emit_corpus<W: Write>(
    config: &PriorConfig,
    count: u64,
    root_seed: u64,
    sink: &mut W,
) -> Result<CorpusSummary> {
    if count == 0 {
        return Err(Error::InvalidParameter("corpus count must be >= 1".into()));
    }
    config.validate()?;
    writeln!(sink, "{CORPUS_HEADER}").map_err(|source| Error::CorpusWrite {
        sequence_id: 0,
        source,
    })?;
    let mut summary = CorpusSummary {
        sequences: 0,
        records: 0,
        context_records: 0,
    };
    for id in 0..count {
        let records = corpus_sequence(config, root_seed, id)?;
        for r in &records {
            writeln!(
                sink,
                "{},{},{},{}",
                r.sequence_id,
                r.position,
                r.running_max,
                u8::from(r.is_context)
            )
            .map_err(|source| Error::CorpusWrite {
                sequence_id: id,
                source,
            })?;
            summary.records += 1;
            summary.context_records += u64::from(r.is_context);
        }
        summary.sequences += 1;
    }
    sink.flush().map_err(|source| Error::CorpusWrite {
        sequence_id: count - 1,
        source,
    })?;
    Ok(summary)
}

pub fn read_corpus<R: BufRead>(reader: R) -> Result<Vec<CorpusRecord>> {
    let mut out = Vec::new();
    let mut lines = reader.lines();
    let header = lines.next().transpose()?.unwrap_or_default();
    if header.trim_end() != CORPUS_HEADER {
        return Err(Error::Parse {
            line: 1,
            message: format!("expected header {CORPUS_HEADER:?}"),
        });
    }
    for (i, line) in lines.enumerate() {
        let line = line?;
        let lineno = i as u64 + 2;
        let bad = |message: String| Error::Parse { line: lineno, message };
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 4 {
            return Err(bad(format!("expected 4 fields, got {}", fields.len())));
        }
        out.push(CorpusRecord {
            sequence_id: fields[0].parse().map_err(|e| bad(format!("sequence_id: {e}")))?,
            position: fields[1].parse().map_err(|e| bad(format!("position: {e}")))?,
            running_max: fields[2].parse().map_err(|e| bad(format!("running_max: {e}")))?,
            is_context: match fields[3] {
                "1" => true,
                "0" => false,
                other => return Err(bad(format!("is_context must be 0 or 1, got {other:?}"))),
            },
        });
    }
    Ok(out)
}
