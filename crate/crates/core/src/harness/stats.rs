//! Evaluation statistics: regret, normalized loss, ranks, sign tests and
//! multiple-comparison control.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use statrs::function::factorial::ln_binomial;

use crate::error::{Error, Result};
use crate::types::RunRecord;

/// Oracle value minus the mean final incumbent of `records`.
pub fn regret(records: &[RunRecord], oracle: f64) -> f64 {
    if records.is_empty() {
        return oracle;
    }
    oracle - records.iter().map(|r| r.final_incumbent).sum::<f64>() / records.len() as f64
}

/// `(r_max - incumbent) / (r_max - r_min)`.
pub fn normalized_loss(incumbent: f64, r_min: f64, r_max: f64) -> Result<f64> {
    if !(r_max > r_min) {
        return Err(Error::DegenerateRange { lo: r_min, hi: r_max });
    }
    Ok((r_max - incumbent) / (r_max - r_min))
}

/// 1-based ranks of `values`, smallest first; tied values share the mean
/// of the ranks they span.
pub fn rank_with_ties(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let mean = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = mean;
        }
        i = j + 1;
    }
    ranks
}

/// Mean rank of each policy across blocks (tasks, or task and seed pairs),
/// ranking by loss so lower is better. Every policy must have a value in
/// every block.
pub fn average_rank(
    policies: &[String],
    blocks: &[String],
    losses: &BTreeMap<(String, String), f64>,
) -> Result<Vec<f64>> {
    let mut totals = vec![0.0; policies.len()];
    for block in blocks {
        let mut row = Vec::with_capacity(policies.len());
        for p in policies {
            let v = losses.get(&(p.clone(), block.clone())).ok_or_else(|| Error::MissingCell {
                policy: p.clone(),
                task: block.clone(),
            })?;
            row.push(*v);
        }
        for (t, r) in totals.iter_mut().zip(rank_with_ties(&row)) {
            *t += r;
        }
    }
    let n = blocks.len().max(1) as f64;
    Ok(totals.into_iter().map(|t| t / n).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SignTestResult {
    pub wins: u64,
    pub ties: u64,
    pub losses: u64,
    pub p_value: f64,
}

/// `P(X >= k)` for `X ~ Binomial(n, 1/2)`.
pub fn binomial_upper_tail(n: u64, k: u64) -> f64 {
    if k == 0 {
        return 1.0;
    }
    if k > n {
        return 0.0;
    }
    let ln_half_n = n as f64 * std::f64::consts::LN_2;
    let p: f64 = (k..=n).map(|j| (ln_binomial(n, j) - ln_half_n).exp()).sum();
    p.min(1.0)
}

/// One-sided sign test. Ties count half to each side and a half-integer
/// success count is rounded up.
pub fn sign_test(wins: u64, ties: u64, losses: u64) -> SignTestResult {
    let n = wins + ties + losses;
    // k = wins + ties / 2, rounded up
    let k = wins + ties.div_ceil(2);
    SignTestResult {
        wins,
        ties,
        losses,
        p_value: if n == 0 { 1.0 } else { binomial_upper_tail(n, k) },
    }
}

/// Wins, ties and losses of `a` against `b` over paired losses (lower wins).
pub fn win_tie_loss(a: &[f64], b: &[f64]) -> (u64, u64, u64) {
    let mut out = (0, 0, 0);
    for (x, y) in a.iter().zip(b) {
        if x < y {
            out.0 += 1;
        } else if x > y {
            out.2 += 1;
        } else {
            out.1 += 1;
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Correction {
    #[default]
    Bonferroni,
    Holm,
}

impl Correction {
    pub fn as_str(&self) -> &'static str {
        match self {
            Correction::Bonferroni => "bonferroni",
            Correction::Holm => "holm",
        }
    }
}

impl std::str::FromStr for Correction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "bonferroni" => Ok(Correction::Bonferroni),
            "holm" => Ok(Correction::Holm),
            other => Err(Error::Config(format!("unknown correction {other:?} (bonferroni, holm)"))),
        }
    }
}

/// Significance of one p-value before and after correction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Decision {
    pub p_value: f64,
    pub significant_raw: bool,
    /// Threshold the p-value was compared against after correction.
    pub adjusted_alpha: f64,
    pub significant_adjusted: bool,
}

/// Raw and corrected decisions at level `alpha`; significance means
/// strictly below the threshold.
pub fn multiple_comparison_adjust(p_values: &[f64], alpha: f64, method: Correction) -> Vec<Decision> {
    let m = p_values.len();
    let mut out: Vec<Decision> = p_values
        .iter()
        .map(|&p| Decision {
            p_value: p,
            significant_raw: p < alpha,
            adjusted_alpha: alpha / m as f64,
            significant_adjusted: p < alpha / m as f64,
        })
        .collect();
    if method == Correction::Holm {
        let mut order: Vec<usize> = (0..m).collect();
        order.sort_by(|&a, &b| p_values[a].total_cmp(&p_values[b]));
        let mut still_rejecting = true;
        for (rank, &i) in order.iter().enumerate() {
            let threshold = alpha / (m - rank) as f64;
            still_rejecting &= p_values[i] < threshold;
            out[i].adjusted_alpha = threshold;
            out[i].significant_adjusted = still_rejecting;
        }
    }
    out
}

/// Percentage change in mean total pulls of the cost-aware runs over the
/// plain runs.
pub fn pull_count_gain(cost_aware: &[RunRecord], plain: &[RunRecord]) -> f64 {
    let mean = |rs: &[RunRecord]| rs.iter().map(|r| r.total_pulls() as f64).sum::<f64>() / rs.len().max(1) as f64;
    let base = mean(plain);
    if base == 0.0 {
        return 0.0;
    }
    100.0 * (mean(cost_aware) - base) / base
}
