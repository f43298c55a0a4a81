use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{esbd, EvalError};

/// Business-correlation class of a metric.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MetricGroup {
    Weak,
    Strong,
}

/// A metric observed under both workloads.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricPair {
    pub name: String,
    pub group: MetricGroup,
    pub weight: f64,
    pub original: Vec<f64>,
    pub simulated: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricDistance {
    pub name: String,
    pub group: MetricGroup,
    pub weight: f64,
    pub esbd: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EsbdReport {
    pub metrics: Vec<MetricDistance>,
    pub esbd_weak: f64,
    pub esbd_strong: f64,
    pub score_w: f64,
    pub score_s: f64,
    pub score_c: f64,
    pub alpha: f64,
    pub mu: f64,
    pub beta: f64,
}

/// `score = μ/(μ + d)` per group and `score_c = (1 − β)·score_w + β·score_s`.
pub fn scores(esbd_weak: f64, esbd_strong: f64, mu: f64, beta: f64) -> Result<(f64, f64, f64), EvalError> {
    if !(mu > 0.0) {
        return Err(EvalError::Parameter(format!("mu must be positive, got {mu}")));
    }
    if !(beta > 0.0 && beta <= 1.0) {
        return Err(EvalError::Parameter(format!(
            "beta must lie in (0, 1], got {beta}"
        )));
    }
    if !(esbd_weak >= 0.0 && esbd_strong >= 0.0) {
        return Err(EvalError::Parameter("distances must be non-negative".into()));
    }
    let w = mu / (mu + esbd_weak);
    let s = mu / (mu + esbd_strong);
    Ok((w, s, (1.0 - beta) * w + beta * s))
}

fn weighted(ds: &[MetricDistance], g: MetricGroup) -> Result<f64, EvalError> {
    let (mut num, mut den) = (0.0, 0.0);
    for d in ds.iter().filter(|d| d.group == g) {
        num += d.weight * d.esbd;
        den += d.weight;
    }
    if !(den > 0.0) {
        return Err(EvalError::Parameter(format!(
            "no {g:?} metrics with positive weight"
        )));
    }
    Ok(num / den)
}

/// ESBD per metric, weighted averages per group, and the derived scores.
pub fn esbd_groups(pairs: &[MetricPair], alpha: f64, mu: f64, beta: f64) -> Result<EsbdReport, EvalError> {
    let metrics = pairs
        .iter()
        .map(|p| {
            Ok(MetricDistance {
                name: p.name.clone(),
                group: p.group,
                weight: p.weight,
                esbd: esbd(&p.original, &p.simulated, alpha)?,
            })
        })
        .collect::<Result<Vec<_>, EvalError>>()?;
    let esbd_weak = weighted(&metrics, MetricGroup::Weak)?;
    let esbd_strong = weighted(&metrics, MetricGroup::Strong)?;
    let (score_w, score_s, score_c) = scores(esbd_weak, esbd_strong, mu, beta)?;
    Ok(EsbdReport {
        metrics,
        esbd_weak,
        esbd_strong,
        score_w,
        score_s,
        score_c,
        alpha,
        mu,
        beta,
    })
}

impl EsbdReport {
    /// Flat `key=value` lines.
    pub fn to_kv(&self) -> String {
        let mut s = String::new();
        for m in &self.metrics {
            let g = match m.group {
                MetricGroup::Weak => "weak",
                MetricGroup::Strong => "strong",
            };
            let _ = writeln!(s, "metric.{}.group={g}", m.name);
            let _ = writeln!(s, "metric.{}.weight={}", m.name, m.weight);
            let _ = writeln!(s, "metric.{}.esbd={:.6}", m.name, m.esbd);
        }
        for (k, v) in [
            ("esbd_weak", self.esbd_weak),
            ("esbd_strong", self.esbd_strong),
            ("score_w", self.score_w),
            ("score_s", self.score_s),
            ("score_c", self.score_c),
            ("alpha", self.alpha),
            ("mu", self.mu),
            ("beta", self.beta),
        ] {
            let _ = writeln!(s, "{k}={v:.6}");
        }
        s
    }
}
