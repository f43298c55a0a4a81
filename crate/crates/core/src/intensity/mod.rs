//! Workload intensity: session-start counts per time bucket, and the think-time
//! density.
//!
//! Three ways to obtain an intensity series are provided:
//!
//! * reproduction: [`bucketize`] the observed session starts;
//! * fitting: decompose the observed series and fit catalog expressions, then
//!   [`synthesize_from_fit`] with optional parameter edits;
//! * generation from scratch with the [`limbo`] or [`tsagen`] component models.

pub mod decompose;
pub mod fit;
pub mod kde;
pub mod limbo;
pub mod params;
pub mod period;
pub mod tsagen;

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use decompose::{decompose, Decomposition};
pub use fit::{
    evaluate_model, evaluate_sum, fit, fit_decomposed, fit_family, synthesize_from_fit, DecomposedFit,
    Family, FitCandidate, FitModel, FitReport, FitStatus, Override, OverrideOp,
};
pub use kde::{kde_fit, ThinkTimeModel};
pub use limbo::{limbo_generate, Interpolation, LimboParams};
pub use period::{detect_period, detect_seasonal_period};
pub use tsagen::{rmdf, tsagen_generate, Rmdf, TsagenParams};

#[derive(Debug, Error)]
pub enum IntensityError {
    #[error("no session start times")]
    NoStarts,
    #[error("bucket width must be positive, got {0}")]
    BadDelta(f64),
    #[error("series has {found} points, need at least {needed}")]
    TooShort { needed: usize, found: usize },
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("every fitting family failed: {0}")]
    NoFit(String),
    #[error("think-time samples are degenerate ({n} samples, standard deviation {sigma}); supply a fixed bandwidth")]
    DegenerateSamples { n: usize, sigma: f64 },
}

/// Session-start counts in consecutive buckets of width `delta_s`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntensitySeries {
    /// Left edge of the first bucket, nanoseconds since the epoch (or any
    /// reference for synthetic series).
    pub t_s: i64,
    pub delta_s: f64,
    pub counts: Vec<u64>,
    /// Width of the last bucket; equals `delta_s` for synthetic series.
    pub last_width_s: f64,
}

pub(crate) fn delta_ns(delta_s: f64) -> Result<i64, IntensityError> {
    let ns = (delta_s * 1e9).round();
    if !(delta_s > 0.0) || ns < 1.0 || !ns.is_finite() {
        return Err(IntensityError::BadDelta(delta_s));
    }
    Ok(ns as i64)
}

/// Counts session starts per bucket.
///
/// Buckets are `[t_s, t_s + δ), …` with `t_s` the earliest start; the last
/// bucket is closed and has width `(t_e − t_s) mod δ`, or `δ` when that is 0.
pub fn bucketize(starts_ns: &[i64], delta_s: f64) -> Result<IntensitySeries, IntensityError> {
    let d = delta_ns(delta_s)?;
    let (&t_s, &t_e) = starts_ns
        .iter()
        .min()
        .zip(starts_ns.iter().max())
        .ok_or(IntensityError::NoStarts)?;
    let span = t_e - t_s;
    let n = ((span + d - 1) / d).max(1) as usize;
    let rem = span % d;
    let mut series = IntensitySeries {
        t_s,
        delta_s,
        counts: vec![0; n],
        last_width_s: if rem == 0 { delta_s } else { rem as f64 / 1e9 },
    };
    series.counts = series.rebucketize(starts_ns);
    Ok(series)
}

impl IntensitySeries {
    /// A series whose buckets all have full width.
    pub fn synthetic(t_s: i64, delta_s: f64, counts: Vec<u64>) -> Self {
        Self {
            t_s,
            delta_s,
            counts,
            last_width_s: delta_s,
        }
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn values(&self) -> Vec<f64> {
        self.counts.iter().map(|&c| c as f64).collect()
    }

    /// Left edge of bucket `i` in nanoseconds.
    pub fn bucket_start_ns(&self, i: usize) -> i64 {
        self.t_s + i as i64 * (self.delta_s * 1e9).round() as i64
    }

    /// Counts `starts_ns` on this series' grid. Starts before `t_s` land in the
    /// first bucket and starts past the end in the last one.
    pub fn rebucketize(&self, starts_ns: &[i64]) -> Vec<u64> {
        let d = (self.delta_s * 1e9).round() as i64;
        let n = self.counts.len();
        let mut counts = vec![0; n];
        for &t in starts_ns {
            let i = ((t - self.t_s).max(0) / d) as usize;
            counts[i.min(n - 1)] += 1;
        }
        counts
    }

    /// Two-column text: a header with the grid, then `bucket_start_ns count`.
    pub fn to_text(&self) -> String {
        let mut out = format!(
            "# delta={} t_s={} last_width={}\n",
            self.delta_s, self.t_s, self.last_width_s
        );
        for (i, c) in self.counts.iter().enumerate() {
            let _ = writeln!(out, "{} {}", self.bucket_start_ns(i), c);
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self, IntensityError> {
        let table = SeriesTable::parse(text)?;
        let counts = table
            .values
            .iter()
            .zip(&table.lines)
            .map(|(&v, &line)| {
                if v < 0.0 || v.fract() != 0.0 {
                    Err(IntensityError::Syntax {
                        line,
                        message: format!("count {v} is not a non-negative integer"),
                    })
                } else {
                    Ok(v as u64)
                }
            })
            .collect::<Result<Vec<_>, _>>()?;
        let delta_s = table.delta_s.unwrap_or(1.0);
        delta_ns(delta_s)?;
        let t_s = table
            .t_s
            .or_else(|| table.times.first().map(|&t| t as i64))
            .unwrap_or(0);
        Ok(Self {
            t_s,
            delta_s,
            counts,
            last_width_s: table.last_width_s.unwrap_or(delta_s),
        })
    }
}

/// A parsed two-column series file. Header keys are optional; values may be
/// real-valued (decomposed components, monitoring metrics).
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesTable {
    pub delta_s: Option<f64>,
    pub t_s: Option<i64>,
    pub last_width_s: Option<f64>,
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    /// Source line number of each value.
    pub lines: Vec<usize>,
}

impl SeriesTable {
    pub fn parse(text: &str) -> Result<Self, IntensityError> {
        let mut t = SeriesTable {
            delta_s: None,
            t_s: None,
            last_width_s: None,
            times: Vec::new(),
            values: Vec::new(),
            lines: Vec::new(),
        };
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let s = raw.trim();
            if s.is_empty() {
                continue;
            }
            if let Some(header) = s.strip_prefix('#') {
                for kv in header.split_whitespace() {
                    let Some((k, v)) = kv.split_once('=') else {
                        continue;
                    };
                    let bad = || IntensityError::Syntax {
                        line,
                        message: format!("bad header value `{kv}`"),
                    };
                    match k {
                        "delta" => t.delta_s = Some(v.parse().map_err(|_| bad())?),
                        "t_s" => t.t_s = Some(v.parse().map_err(|_| bad())?),
                        "last_width" => t.last_width_s = Some(v.parse().map_err(|_| bad())?),
                        _ => {}
                    }
                }
                continue;
            }
            let cols: Vec<&str> = s
                .split(|c: char| c.is_whitespace() || c == ',')
                .filter(|c| !c.is_empty())
                .collect();
            let (time, value) = match cols.as_slice() {
                [v] => (t.values.len() as f64, *v),
                [time, v] => (
                    time.parse::<f64>().map_err(|_| IntensityError::Syntax {
                        line,
                        message: format!("bad timestamp `{time}`"),
                    })?,
                    *v,
                ),
                _ => {
                    return Err(IntensityError::Syntax {
                        line,
                        message: format!("expected 2 columns, found {}", cols.len()),
                    })
                }
            };
            let value: f64 = value
                .parse()
                .ok()
                .filter(|v: &f64| v.is_finite())
                .ok_or_else(|| IntensityError::Syntax {
                    line,
                    message: format!("bad value `{value}`"),
                })?;
            t.times.push(time);
            t.values.push(value);
            t.lines.push(line);
        }
        if t.values.is_empty() {
            return Err(IntensityError::Syntax {
                line: 0,
                message: "no data rows".into(),
            });
        }
        Ok(t)
    }
}

/// Round half to even and clamp at zero.
pub(crate) fn to_count(x: f64) -> u64 {
    if !(x > 0.0) {
        return 0;
    }
    x.round_ties_even() as u64
}
