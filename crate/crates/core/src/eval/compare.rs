use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{
    behavior_distribution, esbd_groups, kde_fit_iou, samples_iou, session_length_stats, EsbdReport,
    EvalError, MetricGroup, MetricPair, SessionLengthStats,
};
use crate::ingest::{think_time_samples, SessionTrace};
use crate::intensity::{bucketize, ThinkTimeModel};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompareOptions {
    pub delta_s: f64,
    pub alpha: f64,
    pub mu: f64,
    pub beta: f64,
    /// Histogram cells for the think-time overlaps.
    pub bins: usize,
}

impl Default for CompareOptions {
    fn default() -> Self {
        Self {
            delta_s: 10.0,
            alpha: 0.5,
            mu: 1.0,
            beta: 0.9,
            bins: 50,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub original: SessionLengthStats,
    pub simulated: SessionLengthStats,
    /// `|mean_sim − mean_orig| / mean_orig`.
    pub mean_length_rel_diff: f64,
    pub frequency_mad_pp: f64,
    pub distinct_original: usize,
    pub distinct_simulated: usize,
    /// Original think times against the fitted density, when a model is given.
    pub think_time_iou_kde: Option<f64>,
    /// Original against simulated think times; absent when either side has none.
    pub think_time_iou: Option<f64>,
    pub dynamic: EsbdReport,
}

fn starts(traces: &[SessionTrace]) -> Vec<i64> {
    traces.iter().filter_map(|t| t.start_ts()).collect()
}

fn request_starts(traces: &[SessionTrace]) -> Vec<i64> {
    traces
        .iter()
        .flat_map(|t| t.events.iter().map(|e| e.start_ts))
        .collect()
}

fn rate_pair(
    name: &str,
    group: MetricGroup,
    orig: &[i64],
    sim: &[i64],
    delta_s: f64,
) -> Result<MetricPair, EvalError> {
    let series = bucketize(orig, delta_s).map_err(|e| EvalError::Parameter(e.to_string()))?;
    let to_f = |v: Vec<u64>| v.into_iter().map(|c| c as f64).collect::<Vec<_>>();
    Ok(MetricPair {
        name: name.into(),
        group,
        weight: 1.0,
        original: to_f(series.counts.clone()),
        simulated: to_f(series.rebucketize(sim)),
    })
}

/// Static statistics and rate-series distances between two corpora.
///
/// Simulated timestamps are shifted so that both workloads start at the same
/// instant; rates are counted on the original grid. The weak metric is the
/// session-start rate and the strong one the request rate.
pub fn compare(
    original: &[SessionTrace],
    simulated: &[SessionTrace],
    ttm: Option<&ThinkTimeModel>,
    opts: &CompareOptions,
) -> Result<Comparison, EvalError> {
    let lo = session_length_stats(original)?;
    let ls = session_length_stats(simulated)?;
    let fo = behavior_distribution(original)?;
    let fs = behavior_distribution(simulated)?;
    let tto = think_time_samples(original);
    let tts = think_time_samples(simulated);
    let think_time_iou_kde = match ttm {
        Some(m) if !tto.is_empty() => Some(kde_fit_iou(&tto, m, opts.bins)?),
        _ => None,
    };
    let think_time_iou = if tto.is_empty() || tts.is_empty() {
        None
    } else {
        Some(samples_iou(&tto, &tts, opts.bins)?)
    };

    let so = starts(original);
    let ss = starts(simulated);
    let shift = so.iter().min().copied().unwrap_or(0) - ss.iter().min().copied().unwrap_or(0);
    let shifted = |v: Vec<i64>| v.into_iter().map(|t| t + shift).collect::<Vec<_>>();
    let pairs = [
        rate_pair("session_rate", MetricGroup::Weak, &so, &shifted(ss), opts.delta_s)?,
        rate_pair(
            "request_rate",
            MetricGroup::Strong,
            &request_starts(original),
            &shifted(request_starts(simulated)),
            opts.delta_s,
        )?,
    ];
    let dynamic = esbd_groups(&pairs, opts.alpha, opts.mu, opts.beta)?;
    Ok(Comparison {
        mean_length_rel_diff: (ls.mean - lo.mean).abs() / lo.mean,
        original: lo,
        simulated: ls,
        frequency_mad_pp: fo.mean_abs_difference_pp(&fs),
        distinct_original: fo.n_distinct,
        distinct_simulated: fs.n_distinct,
        think_time_iou_kde,
        think_time_iou,
        dynamic,
    })
}

impl Comparison {
    /// Flat `key=value` lines, static statistics first.
    pub fn to_kv(&self) -> String {
        let mut s = String::new();
        for (side, l) in [("original", &self.original), ("simulated", &self.simulated)] {
            let _ = writeln!(s, "length.{side}.n={}", l.n);
            for (k, v) in [
                ("min", l.min),
                ("q1", l.q1),
                ("q2", l.q2),
                ("q3", l.q3),
                ("max", l.max),
                ("mean", l.mean),
            ] {
                let _ = writeln!(s, "length.{side}.{k}={v:.6}");
            }
            let _ = writeln!(s, "length.{side}.ci95={:.6}..{:.6}", l.ci95.0, l.ci95.1);
        }
        let _ = writeln!(s, "length.mean_rel_diff={:.6}", self.mean_length_rel_diff);
        let _ = writeln!(s, "frequency.mad_pp={:.6}", self.frequency_mad_pp);
        let _ = writeln!(s, "distinct.original={}", self.distinct_original);
        let _ = writeln!(s, "distinct.simulated={}", self.distinct_simulated);
        if let Some(v) = self.think_time_iou_kde {
            let _ = writeln!(s, "thinktime.iou_kde={v:.6}");
        }
        if let Some(v) = self.think_time_iou {
            let _ = writeln!(s, "thinktime.iou={v:.6}");
        }
        s.push_str(&self.dynamic.to_kv());
        s
    }
}
