//! Workload plans: which sessions start when, with which behaviors and think
//! times, and their zero-latency rendering as harness logs.

mod report;

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use report::{ExecutionReport, ReportSummary, RequestRecord, SKEW_BUCKETS_MS};

use crate::behavior::{sample_group, BehaviorError, RelationalModel};
use crate::harness::{fill_path, LogLine};
use crate::ids::ulid;
use crate::ingest::BehaviorCatalog;
use crate::intensity::{IntensitySeries, ThinkTimeModel};
use crate::par::{self, Execution};
use crate::rng::stream;

#[derive(Debug, Error)]
pub enum PlanError {
    #[error(transparent)]
    Behavior(#[from] BehaviorError),
    #[error("no behavior models to sample from")]
    NoModels,
    #[error("intensity series is empty")]
    EmptyIntensity,
    #[error("bucket width must be positive, got {0}")]
    BadDelta(f64),
    #[error("plan file line {line}: {message}")]
    Format { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduledSession {
    pub session_id: String,
    /// Nanoseconds after the plan epoch.
    pub start_offset_ns: i64,
    pub group: usize,
    pub behaviors: Vec<String>,
    /// Pause before each behavior after the first, in seconds.
    pub think_times: Vec<f64>,
}

impl ScheduledSession {
    pub fn start_offset_s(&self) -> f64 {
        self.start_offset_ns as f64 / 1e9
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanHeader {
    /// Plan epoch, nanoseconds since the Unix epoch.
    pub t0_ns: i64,
    pub delta_s: f64,
    /// Sessions per bucket, as driven by the intensity.
    pub bucket_counts: Vec<u64>,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WorkloadPlan {
    pub header: PlanHeader,
    /// Ordered by start offset.
    pub sessions: Vec<ScheduledSession>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlanOptions {
    /// Longest behavior sequence accepted from a model walk.
    pub max_len: usize,
    pub seed: u64,
    pub mode: Execution,
}

impl Default for PlanOptions {
    fn default() -> Self {
        Self {
            max_len: 10_000,
            seed: 0,
            mode: Execution::default(),
        }
    }
}

/// Schedules `k_i` sessions in bucket `i` at offsets `i·δ + j·δ/k_i`
/// (integer nanoseconds, rounded down), `j = 0..k_i`.
///
/// Session `n` (in schedule order) draws its group, behaviors, think times
/// and id from `stream(seed, n)`, so the plan does not depend on the
/// execution mode.
pub fn build_plan(
    models: &[RelationalModel],
    intensity: &IntensitySeries,
    ttm: &ThinkTimeModel,
    opts: &PlanOptions,
) -> Result<WorkloadPlan, PlanError> {
    if models.is_empty() {
        return Err(PlanError::NoModels);
    }
    if intensity.is_empty() {
        return Err(PlanError::EmptyIntensity);
    }
    let delta_ns = (intensity.delta_s * 1e9).round() as i64;
    if !(intensity.delta_s > 0.0) || delta_ns < 1 {
        return Err(PlanError::BadDelta(intensity.delta_s));
    }
    let offsets: Vec<i64> = intensity
        .counts
        .iter()
        .enumerate()
        .flat_map(|(i, &k)| {
            let left = i as i64 * delta_ns;
            (0..k as i64).map(move |j| left + ((j as i128 * delta_ns as i128) / k as i128) as i64)
        })
        .collect();
    let t0 = intensity.t_s;
    let sessions = par::map_range(opts.mode, offsets.len(), |n| {
        let mut rng = stream(opts.seed, n as u64);
        let group = sample_group(models, &mut rng)?;
        let behaviors = models[group].sample_sequence(&mut rng, opts.max_len)?;
        let think_times = (1..behaviors.len()).map(|_| ttm.sample(&mut rng)).collect();
        let unix_ms = (t0 + offsets[n]).max(0) / 1_000_000;
        Ok(ScheduledSession {
            session_id: ulid(unix_ms as u64, &mut rng),
            start_offset_ns: offsets[n],
            group,
            behaviors,
            think_times,
        })
    })
    .into_iter()
    .collect::<Result<Vec<_>, PlanError>>()?;
    Ok(WorkloadPlan {
        header: PlanHeader {
            t0_ns: t0,
            delta_s: intensity.delta_s,
            bucket_counts: intensity.counts.clone(),
            seed: opts.seed,
        },
        sessions,
    })
}

impl WorkloadPlan {
    /// Session starts in absolute nanoseconds.
    pub fn start_times_ns(&self) -> Vec<i64> {
        self.sessions
            .iter()
            .map(|s| self.header.t0_ns + s.start_offset_ns)
            .collect()
    }

    /// Sessions per bucket recounted from the schedule.
    pub fn scheduled_counts(&self) -> Vec<u64> {
        let delta_ns = (self.header.delta_s * 1e9).round() as i64;
        let mut counts = vec![0; self.header.bucket_counts.len()];
        for s in &self.sessions {
            let k = (s.start_offset_ns / delta_ns) as usize;
            if let Some(c) = counts.get_mut(k) {
                *c += 1;
            }
        }
        counts
    }

    /// Header line followed by one line per session.
    pub fn write<W: Write>(&self, mut w: W) -> Result<(), PlanError> {
        serde_json::to_writer(&mut w, &self.header).map_err(std::io::Error::from)?;
        w.write_all(b"\n")?;
        for s in &self.sessions {
            serde_json::to_writer(&mut w, s).map_err(std::io::Error::from)?;
            w.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn to_ndjson(&self) -> String {
        let mut buf = Vec::new();
        self.write(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("JSON is UTF-8")
    }

    pub fn read<R: BufRead>(r: R) -> Result<Self, PlanError> {
        let mut header = None;
        let mut sessions: Vec<ScheduledSession> = Vec::new();
        for (i, line) in r.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let err = |e: serde_json::Error| PlanError::Format {
                line: i + 1,
                message: e.to_string(),
            };
            if header.is_none() {
                header = Some(serde_json::from_str::<PlanHeader>(&line).map_err(err)?);
                continue;
            }
            let s: ScheduledSession = serde_json::from_str(&line).map_err(err)?;
            if s.think_times.len() + 1 != s.behaviors.len().max(1) {
                return Err(PlanError::Format {
                    line: i + 1,
                    message: format!(
                        "{} behaviors need {} think times, found {}",
                        s.behaviors.len(),
                        s.behaviors.len().saturating_sub(1),
                        s.think_times.len()
                    ),
                });
            }
            if sessions
                .last()
                .is_some_and(|p| p.start_offset_ns > s.start_offset_ns)
            {
                return Err(PlanError::Format {
                    line: i + 1,
                    message: "sessions out of start order".into(),
                });
            }
            sessions.push(s);
        }
        let header = header.ok_or(PlanError::Format {
            line: 1,
            message: "missing plan header".into(),
        })?;
        Ok(Self { header, sessions })
    }

    pub fn from_ndjson(text: &str) -> Result<Self, PlanError> {
        Self::read(text.as_bytes())
    }
}

/// Renders the plan as harness logs on a virtual clock with zero latency.
///
/// Every request is a started/label/complete group at one instant; a
/// behavior whose catalog entry redirects is followed by a group for the
/// redirect target at the same instant. Request ids are
/// `<session>-<sequence>` so that ingestion orders same-instant groups by
/// issue order. Lines come out ordered by time, then by plan order.
pub fn dry_run(plan: &WorkloadPlan, catalog: &BehaviorCatalog) -> Vec<LogLine> {
    let mut lines = Vec::new();
    for s in &plan.sessions {
        let mut t = plan.header.t0_ns + s.start_offset_ns;
        let mut seq = 0usize;
        for (j, b) in s.behaviors.iter().enumerate() {
            if j > 0 {
                t += (s.think_times[j - 1] * 1e9).round() as i64;
            }
            let mut label = b.as_str();
            loop {
                let entry = catalog.get(label);
                let method = entry
                    .and_then(|e| e.method.clone())
                    .unwrap_or_else(|| "GET".into());
                let path = entry.and_then(|e| e.path.as_deref()).map(|p| fill_path(p, "1"));
                let redirect = catalog.redirect_target(label);
                let rid = format!("{}-{seq:06}", s.session_id);
                seq += 1;
                let line = |message: &str,
                            method: Option<String>,
                            path: Option<String>,
                            status: Option<u16>| LogLine {
                    timestamp_ns: t,
                    session: s.session_id.clone(),
                    request_id: rid.clone(),
                    message: message.to_string(),
                    method,
                    path,
                    status,
                };
                lines.push(line("request started", Some(method), path, None));
                lines.push(line(label, None, None, None));
                lines.push(line(
                    "request complete",
                    None,
                    None,
                    Some(if redirect.is_some() { 302 } else { 200 }),
                ));
                match redirect {
                    Some(target) if target != label => label = target,
                    _ => break,
                }
            }
        }
    }
    lines.sort_by_key(|l| l.timestamp_ns);
    lines
}
