//! Comparison of original and simulated workloads: static statistics of the
//! session logs and shape-based distances between metric series.

mod compare;
mod report;
mod sbd;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use compare::{compare, CompareOptions, Comparison};
pub use report::{esbd_groups, scores, EsbdReport, MetricDistance, MetricGroup, MetricPair};
pub use sbd::{cross_correlation, esbd, intensity_distance, sbd};

use crate::ingest::SessionTrace;
use crate::intensity::ThinkTimeModel;
use crate::par::Execution;

#[derive(Debug, Error, PartialEq)]
pub enum EvalError {
    #[error("no sessions to summarize")]
    Empty,
    #[error("series lengths differ ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("series is empty")]
    EmptySeries,
    #[error("series has zero norm")]
    ZeroNorm,
    #[error("densities have no mass on the grid")]
    ZeroMass,
    #[error("parameter out of range: {0}")]
    Parameter(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionLengthStats {
    pub min: f64,
    pub q1: f64,
    pub q2: f64,
    pub q3: f64,
    pub max: f64,
    pub mean: f64,
    pub ci95: (f64, f64),
    pub n: usize,
}

/// Quantile by linear interpolation between closest ranks, on sorted data.
pub fn quantile(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Five-number summary, mean and the normal-approximation 95% interval
/// `mean ± 1.96·s/√n` of the given lengths.
pub fn length_stats(lengths: &[usize]) -> Result<SessionLengthStats, EvalError> {
    if lengths.is_empty() {
        return Err(EvalError::Empty);
    }
    let mut v: Vec<f64> = lengths.iter().map(|&l| l as f64).collect();
    v.sort_by(f64::total_cmp);
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let half = if v.len() > 1 {
        let s = (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
        1.96 * s / n.sqrt()
    } else {
        0.0
    };
    Ok(SessionLengthStats {
        min: v[0],
        q1: quantile(&v, 0.25),
        q2: quantile(&v, 0.5),
        q3: quantile(&v, 0.75),
        max: v[v.len() - 1],
        mean,
        ci95: (mean - half, mean + half),
        n: v.len(),
    })
}

/// Statistics of the number of events per session, redirects included.
pub fn session_length_stats(traces: &[SessionTrace]) -> Result<SessionLengthStats, EvalError> {
    length_stats(&traces.iter().map(|t| t.events.len()).collect::<Vec<_>>())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BehaviorDistribution {
    pub frequencies: BTreeMap<String, f64>,
    /// Number of distinct behavior sequences.
    pub n_distinct: usize,
    pub total_requests: usize,
}

/// Relative frequency of each behavior over all events.
pub fn behavior_distribution(traces: &[SessionTrace]) -> Result<BehaviorDistribution, EvalError> {
    if traces.is_empty() {
        return Err(EvalError::Empty);
    }
    let mut counts: BTreeMap<String, usize> = BTreeMap::new();
    let mut distinct: BTreeSet<Vec<&str>> = BTreeSet::new();
    for t in traces {
        for b in t.behaviors() {
            *counts.entry(b.to_string()).or_default() += 1;
        }
        distinct.insert(t.behaviors().collect());
    }
    let total: usize = counts.values().sum();
    if total == 0 {
        return Err(EvalError::Empty);
    }
    Ok(BehaviorDistribution {
        frequencies: counts
            .into_iter()
            .map(|(k, c)| (k, c as f64 / total as f64))
            .collect(),
        n_distinct: distinct.len(),
        total_requests: total,
    })
}

impl BehaviorDistribution {
    /// Mean absolute frequency difference over the union of behavior types,
    /// in percentage points.
    pub fn mean_abs_difference_pp(&self, other: &Self) -> f64 {
        let keys: BTreeSet<&String> = self.frequencies.keys().chain(other.frequencies.keys()).collect();
        let sum: f64 = keys
            .iter()
            .map(|k| {
                let a = self.frequencies.get(*k).copied().unwrap_or(0.0);
                let b = other.frequencies.get(*k).copied().unwrap_or(0.0);
                (a - b).abs()
            })
            .sum();
        100.0 * sum / keys.len().max(1) as f64
    }
}

/// `n` equally spaced midpoints covering `[lo, hi]`, and their spacing.
pub fn uniform_grid(lo: f64, hi: f64, n: usize) -> (Vec<f64>, f64) {
    let dx = (hi - lo) / n as f64;
    ((0..n).map(|i| lo + (i as f64 + 0.5) * dx).collect(), dx)
}

/// Overlap of two densities sampled on a uniform grid:
/// `Σ min(f, g) / Σ max(f, g)`.
pub fn think_time_iou(f: &[f64], g: &[f64]) -> Result<f64, EvalError> {
    if f.len() != g.len() {
        return Err(EvalError::LengthMismatch(f.len(), g.len()));
    }
    let (mut inter, mut union) = (0.0, 0.0);
    for (a, b) in f.iter().zip(g) {
        inter += a.min(*b);
        union += a.max(*b);
    }
    if !(union > 0.0) {
        return Err(EvalError::ZeroMass);
    }
    Ok(inter / union)
}

/// IoU of two callables over `n` grid cells spanning `[lo, hi]`.
pub fn density_iou(
    f: impl Fn(f64) -> f64,
    g: impl Fn(f64) -> f64,
    lo: f64,
    hi: f64,
    n: usize,
) -> Result<f64, EvalError> {
    let (grid, _) = uniform_grid(lo, hi, n);
    let fv: Vec<f64> = grid.iter().map(|&x| f(x)).collect();
    let gv: Vec<f64> = grid.iter().map(|&x| g(x)).collect();
    think_time_iou(&fv, &gv)
}

/// Histogram density of `samples` over `bins` equal cells spanning `[lo, hi]`.
/// Samples outside the range are dropped but still count in the total.
pub fn histogram_density(samples: &[f64], lo: f64, hi: f64, bins: usize) -> Vec<f64> {
    let dx = (hi - lo) / bins as f64;
    let mut h = vec![0.0; bins];
    for &s in samples {
        if s >= lo && s <= hi {
            h[(((s - lo) / dx) as usize).min(bins - 1)] += 1.0;
        }
    }
    let norm = samples.len() as f64 * dx;
    h.iter_mut().for_each(|c| *c /= norm);
    h
}

/// IoU between the histogram of the original think times and the fitted KDE,
/// on `bins` cells spanning the samples widened by three bandwidths.
pub fn kde_fit_iou(samples: &[f64], ttm: &ThinkTimeModel, bins: usize) -> Result<f64, EvalError> {
    let (lo, hi) = padded_range(samples, 3.0 * ttm.h)?;
    let (grid, _) = uniform_grid(lo, hi, bins);
    think_time_iou(
        &histogram_density(samples, lo, hi, bins),
        &ttm.density_grid(Execution::default(), &grid),
    )
}

/// IoU between the histograms of two sets of think times on a common grid.
pub fn samples_iou(a: &[f64], b: &[f64], bins: usize) -> Result<f64, EvalError> {
    let both: Vec<f64> = a.iter().chain(b).copied().collect();
    let (lo, hi) = padded_range(&both, 0.0)?;
    think_time_iou(
        &histogram_density(a, lo, hi, bins),
        &histogram_density(b, lo, hi, bins),
    )
}

fn padded_range(samples: &[f64], pad: f64) -> Result<(f64, f64), EvalError> {
    let lo = samples.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = samples.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(hi >= lo) {
        return Err(EvalError::Empty);
    }
    let pad = if hi > lo || pad > 0.0 { pad } else { 0.5 };
    Ok((lo - pad, hi + pad))
}
