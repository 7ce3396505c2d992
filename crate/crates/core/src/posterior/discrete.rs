//! Binned probability mass over rewards in [0, 1].

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_BINS: usize = 1000;

const MASS_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteDistribution {
    edges: Vec<f64>,
    masses: Vec<f64>,
    #[serde(skip)]
    cumulative: Vec<f64>,
}

/// `bins + 1` evenly spaced edges over [0, 1].
pub fn uniform_edges(bins: usize) -> Vec<f64> {
    (0..=bins).map(|i| i as f64 / bins as f64).collect()
}

impl DiscreteDistribution {
    /// Normalizes non-negative weights into a distribution over `edges`.
    pub fn from_weights(edges: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if edges.len() < 2 || weights.len() + 1 != edges.len() {
            return Err(Error::InvalidParameter(format!(
                "{} edges cannot hold {} bins",
                edges.len(),
                weights.len()
            )));
        }
        if !edges.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::InvalidParameter("bin edges must be strictly increasing".into()));
        }
        if weights.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
            return Err(Error::InvalidParameter("bin weights must be finite and non-negative".into()));
        }
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) {
            return Err(Error::InvalidParameter("bin weights sum to zero".into()));
        }
        let masses: Vec<f64> = weights.into_iter().map(|w| w / total).collect();
        Ok(Self::with_cumulative(edges, masses))
    }

    fn with_cumulative(edges: Vec<f64>, masses: Vec<f64>) -> Self {
        let mut acc = 0.0;
        let mut cumulative: Vec<f64> = masses
            .iter()
            .map(|m| {
                acc += m;
                acc
            })
            .collect();
        if let Some(last) = cumulative.last_mut() {
            *last = 1.0;
        }
        Self {
            edges,
            masses,
            cumulative,
        }
    }

    /// Uniform mass over `bins` equal-width bins.
    pub fn uniform(bins: usize) -> Self {
        Self::from_weights(uniform_edges(bins), vec![1.0; bins]).expect("bins >= 1")
    }

    /// All mass in the bin containing `value`.
    pub fn point_mass(bins: usize, value: f64) -> Self {
        Self::from_weighted_values(bins, std::iter::once((value, 1.0))).expect("bins >= 1")
    }

    /// Histogram of weighted values on `bins` equal-width bins.
    pub fn from_weighted_values<I>(bins: usize, values: I) -> Result<Self>
    where
        I: IntoIterator<Item = (f64, f64)>,
    {
        if bins == 0 {
            return Err(Error::InvalidParameter("need at least one bin".into()));
        }
        let mut weights = vec![0.0; bins];
        for (v, w) in values {
            weights[uniform_bin_index(bins, v)] += w;
        }
        Self::from_weights(uniform_edges(bins), weights)
    }

    pub fn edges(&self) -> &[f64] {
        &self.edges
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn bins(&self) -> usize {
        self.masses.len()
    }

    /// Index of the bin containing `value`; values outside the support map
    /// to the first or last bin.
    pub fn bin_index(&self, value: f64) -> usize {
        let idx = self.edges.partition_point(|e| *e <= value);
        idx.saturating_sub(1).min(self.bins() - 1)
    }

    /// Mean under a uniform spread within each bin.
    pub fn mean(&self) -> f64 {
        self.masses
            .iter()
            .zip(self.edges.windows(2))
            .map(|(m, e)| m * 0.5 * (e[0] + e[1]))
            .sum()
    }

    /// Checks that the masses sum to one.
    pub fn is_normalized(&self) -> bool {
        (self.masses.iter().sum::<f64>() - 1.0).abs() < MASS_TOLERANCE
    }

    /// Total variation distance; both distributions must share edges.
    pub fn total_variation(&self, other: &Self) -> Result<f64> {
        if self.edges != other.edges {
            return Err(Error::InvalidParameter("distributions have different bin edges".into()));
        }
        Ok(0.5
            * self
                .masses
                .iter()
                .zip(&other.masses)
                .map(|(a, b)| (a - b).abs())
                .sum::<f64>())
    }

    /// Picks a bin by mass, then a point uniformly inside it.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let cumulative = if self.cumulative.len() == self.masses.len() {
            std::borrow::Cow::Borrowed(&self.cumulative)
        } else {
            // deserialized values skip the cache
            std::borrow::Cow::Owned(Self::with_cumulative(self.edges.clone(), self.masses.clone()).cumulative)
        };
        let u: f64 = rng.random();
        let idx = cumulative.partition_point(|c| *c <= u).min(self.bins() - 1);
        let (lo, hi) = (self.edges[idx], self.edges[idx + 1]);
        lo + (hi - lo) * rng.random::<f64>()
    }
}

/// Bin index on evenly spaced edges over [0, 1].
pub fn uniform_bin_index(bins: usize, value: f64) -> usize {
    if !(value > 0.0) {
        return 0;
    }
    ((value * bins as f64) as usize).min(bins - 1)
}

/// Free-function form of [`DiscreteDistribution::sample`].
pub fn ppd_sample<R: Rng + ?Sized>(dist: &DiscreteDistribution, rng: &mut R) -> f64 {
    dist.sample(rng)
}
