use std::collections::BTreeMap;
use std::f64::consts::E;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use super::parties::ProtocolTranscript;

/// One-shot cost bound `C + 2 log₂(C + 1) + 2 log₂ e` for a channel of
/// capacity `C` bits.
pub fn cost_upper_bound(capacity: f64) -> f64 {
    capacity + 2.0 * (capacity + 1.0).log2() + 2.0 * E.log2()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostSummary {
    pub runs: u64,
    pub mean_bits: f64,
    /// Standard error of `mean_bits`.
    pub standard_error: f64,
    pub median_bits: usize,
    pub p90_bits: usize,
    pub p99_bits: usize,
    pub max_bits: usize,
    /// Number of runs per message length.
    pub histogram: BTreeMap<usize, u64>,
    pub capacity: f64,
    pub bound: f64,
}

impl CostSummary {
    pub fn from_transcripts(transcripts: &[ProtocolTranscript], capacity: f64) -> Self {
        let mut lengths: Vec<usize> = transcripts.iter().map(|t| t.bits_sent).collect();
        lengths.sort_unstable();
        let n = lengths.len().max(1) as f64;
        let mean = lengths.iter().sum::<usize>() as f64 / n;
        let var = lengths.iter().map(|&b| (b as f64 - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
        let pct = |q: f64| lengths.get(((q * n).ceil() as usize).saturating_sub(1)).copied().unwrap_or(0);
        let mut histogram = BTreeMap::new();
        for &b in &lengths {
            *histogram.entry(b).or_insert(0) += 1;
        }
        CostSummary {
            runs: lengths.len() as u64,
            mean_bits: mean,
            standard_error: (var / n).sqrt(),
            median_bits: pct(0.5),
            p90_bits: pct(0.9),
            p99_bits: pct(0.99),
            max_bits: lengths.last().copied().unwrap_or(0),
            histogram,
            capacity,
            bound: cost_upper_bound(capacity),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutcomeFit {
    pub statistic: f64,
    pub degrees_of_freedom: usize,
    pub p_value: f64,
    /// Observations in cells of zero probability.
    pub impossible_outcomes: u64,
    pub max_abs_deviation: f64,
    pub alpha: f64,
    pub passed: bool,
}

/// Pearson chi-square test pooled over cells.
///
/// Each cell is one `(s, m)` with observed counts and expected
/// probabilities. Outcomes of probability zero contribute no degrees of
/// freedom and must never be observed; a cell contributes
/// `(#positive outcomes − 1)` degrees of freedom.
pub fn chi_square_fit(observed: &[Vec<u64>], expected: &[Vec<f64>], alpha: f64) -> OutcomeFit {
    let mut statistic = 0.0;
    let mut dof = 0usize;
    let mut impossible = 0u64;
    let mut max_dev = 0.0f64;
    for (counts, probs) in observed.iter().zip(expected) {
        let n: u64 = counts.iter().sum();
        if n == 0 {
            continue;
        }
        let mut positive = 0;
        for (&c, &p) in counts.iter().zip(probs) {
            let freq = c as f64 / n as f64;
            max_dev = max_dev.max((freq - p).abs());
            if p > 0.0 {
                positive += 1;
                let e = p * n as f64;
                statistic += (c as f64 - e).powi(2) / e;
            } else {
                impossible += c;
            }
        }
        dof += positive.max(1) - 1;
    }
    let p_value = if impossible > 0 {
        0.0
    } else if dof == 0 {
        1.0
    } else {
        let dist = ChiSquared::new(dof as f64).expect("positive degrees of freedom");
        dist.sf(statistic)
    };
    OutcomeFit {
        statistic,
        degrees_of_freedom: dof,
        p_value,
        impossible_outcomes: impossible,
        max_abs_deviation: max_dev,
        alpha,
        passed: p_value >= alpha,
    }
}
