//! Log ingestion: raw request logs to ordered per-session behavior traces.
//!
//! Each HTTP request shows up in the logs as a *request group*: several records
//! sharing one request id, the first carrying the "started" message, the last
//! the "complete" message and the ones in between naming the behavior. Groups
//! are joined per session, ordered by start time and collapsed to
//! [`BehaviorEvent`]s.

pub mod archive;
mod assemble;
mod catalog;
mod parse;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use assemble::{assemble_sessions, AssemblyReport};
pub use catalog::{derive_catalog, detect_redirects, normalize_label, BehaviorCatalog, CatalogEntry};
pub use parse::{parse_log_lines, read_log_file, ParseOutput, ParseReport};

/// Errors raised by log ingestion.
#[derive(Debug, Error)]
pub enum IngestError {
    #[error("failed to read log input: {0}")]
    Io(#[from] std::io::Error),
    #[error("no behavior labels could be derived from {records} records")]
    EmptyCatalog { records: usize },
    #[error("behavior type `{0}` is not in the catalog")]
    UnknownBehavior(String),
    #[error("archive line {line}: {source}")]
    Archive {
        line: usize,
        #[source]
        source: serde_json::Error,
    },
}

/// Field names and template messages of the structured log format.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LogFormat {
    pub timestamp: String,
    pub session: String,
    pub request_id: String,
    pub message: String,
    pub method: String,
    pub path: String,
    pub status: String,
    pub started_message: String,
    pub complete_message: String,
}

impl Default for LogFormat {
    fn default() -> Self {
        Self {
            timestamp: "timestamp".into(),
            session: "session".into(),
            request_id: "http.req.id".into(),
            message: "message".into(),
            method: "http.req.method".into(),
            path: "http.req.path".into(),
            status: "http.resp.status".into(),
            started_message: "request started".into(),
            complete_message: "request complete".into(),
        }
    }
}

/// One request-related log line.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawLogRecord {
    /// Nanoseconds since the Unix epoch.
    pub timestamp: i64,
    pub session_id: String,
    pub request_id: String,
    pub message: String,
    pub http_method: Option<String>,
    pub http_path: Option<String>,
    pub http_status: Option<u16>,
    pub extra: BTreeMap<String, String>,
}

/// A single logical unit of work executed by the end user.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BehaviorEvent {
    pub behavior_type: String,
    pub start_ts: i64,
    pub complete_ts: i64,
    /// Set when this request was issued automatically by a server redirect.
    pub redirected_from: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub status: Option<u16>,
}

/// The ordered behaviors of one session.
#[derive(Debug, Clone, PartialEq)]
pub struct SessionTrace {
    pub session_id: String,
    pub events: Vec<BehaviorEvent>,
    /// Seconds between one request completing and the next one starting.
    /// Negative gaps (clock skew) are clamped to zero.
    pub think_gaps: Vec<f64>,
}

impl SessionTrace {
    /// Builds a trace from events that are already in start order. Returns the
    /// trace and the number of gaps that had to be clamped.
    pub fn from_events(session_id: impl Into<String>, events: Vec<BehaviorEvent>) -> (Self, usize) {
        let mut clamped = 0;
        let think_gaps = events
            .windows(2)
            .map(|w| {
                let gap = (w[1].start_ts - w[0].complete_ts) as f64 / 1e9;
                if gap < 0.0 {
                    clamped += 1;
                    0.0
                } else {
                    gap
                }
            })
            .collect();
        (
            Self {
                session_id: session_id.into(),
                events,
                think_gaps,
            },
            clamped,
        )
    }

    /// Behavior labels in order, including redirect targets.
    pub fn behaviors(&self) -> impl Iterator<Item = &str> {
        self.events.iter().map(|e| e.behavior_type.as_str())
    }

    /// Behavior labels the user initiated, i.e. without redirect targets.
    pub fn user_behaviors(&self) -> impl Iterator<Item = &str> {
        self.events
            .iter()
            .filter(|e| e.redirected_from.is_none())
            .map(|e| e.behavior_type.as_str())
    }

    pub fn start_ts(&self) -> Option<i64> {
        self.events.first().map(|e| e.start_ts)
    }
}

/// A redirect the catalog expects but the trace does not show.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RedirectMiss {
    pub session_id: String,
    pub event_index: usize,
    pub source: String,
    pub expected_target: String,
}

/// Marks redirect targets that immediately follow their source.
///
/// Annotated events stay in the trace but are excluded from think-time
/// sampling and from the user-initiated behavior sequence.
pub fn collapse_redirects(
    traces: &[SessionTrace],
    catalog: &BehaviorCatalog,
) -> (Vec<SessionTrace>, Vec<RedirectMiss>) {
    let mut misses = Vec::new();
    let out = traces
        .iter()
        .map(|trace| {
            let mut trace = trace.clone();
            for i in 0..trace.events.len() {
                let source = trace.events[i].behavior_type.clone();
                let Some(target) = catalog.redirect_target(&source) else {
                    continue;
                };
                match trace.events.get_mut(i + 1) {
                    Some(next) if next.behavior_type == target => {
                        next.redirected_from = Some(source);
                    }
                    _ => misses.push(RedirectMiss {
                        session_id: trace.session_id.clone(),
                        event_index: i,
                        source,
                        expected_target: target.to_string(),
                    }),
                }
            }
            trace
        })
        .collect();
    (out, misses)
}

/// All think gaps that do not lead into a redirect target.
pub fn think_time_samples(traces: &[SessionTrace]) -> Vec<f64> {
    traces
        .iter()
        .flat_map(|t| {
            t.think_gaps
                .iter()
                .zip(&t.events[1..])
                .filter(|(_, next)| next.redirected_from.is_none())
                .map(|(gap, _)| *gap)
        })
        .collect()
}

/// Default gap, in seconds, under which a redirect response counts as
/// immediately followed by its target.
pub const REDIRECT_GAP_S: f64 = 0.5;

/// Everything [`ingest`] derives from one log corpus.
#[derive(Debug, Clone)]
pub struct Ingested {
    pub catalog: BehaviorCatalog,
    /// Traces with redirect targets annotated.
    pub traces: Vec<SessionTrace>,
    pub parse: ParseReport,
    pub assembly: AssemblyReport,
    pub redirects: Vec<(String, String)>,
    pub redirect_misses: Vec<RedirectMiss>,
}

impl Ingested {
    pub fn think_times(&self) -> Vec<f64> {
        think_time_samples(&self.traces)
    }

    pub fn session_starts(&self) -> Vec<i64> {
        self.traces.iter().filter_map(SessionTrace::start_ts).collect()
    }
}

/// Catalog derivation, session assembly, redirect detection and collapsing
/// over parsed records.
pub fn ingest(parsed: ParseOutput, format: &LogFormat, redirect_gap_s: f64) -> Result<Ingested, IngestError> {
    let mut catalog = derive_catalog(&parsed.records, format)?;
    let (traces, assembly) = assemble_sessions(&parsed.records, &catalog, format);
    let redirects = detect_redirects(&traces, redirect_gap_s);
    for (a, b) in &redirects {
        catalog.set_redirect(a, b)?;
    }
    let (traces, redirect_misses) = collapse_redirects(&traces, &catalog);
    Ok(Ingested {
        catalog,
        traces,
        parse: parsed.report,
        assembly,
        redirects,
        redirect_misses,
    })
}

/// [`ingest`] over newline-delimited JSON text.
pub fn ingest_str(text: &str, format: &LogFormat) -> Result<Ingested, IngestError> {
    ingest(parse_log_lines(text.as_bytes(), format)?, format, REDIRECT_GAP_S)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ev(label: &str, start_s: f64, end_s: f64) -> BehaviorEvent {
        BehaviorEvent {
            behavior_type: label.into(),
            start_ts: (start_s * 1e9).round() as i64,
            complete_ts: (end_s * 1e9).round() as i64,
            redirected_from: None,
            status: None,
        }
    }

    fn catalog(labels: &[&str]) -> BehaviorCatalog {
        BehaviorCatalog::from_labels(labels.iter().copied())
    }

    #[test]
    fn gaps_are_subtracted_and_clamped() {
        let (t, clamped) = SessionTrace::from_events("s", vec![ev("a", 0.0, 1.0), ev("b", 6.0, 7.0)]);
        assert_eq!(t.think_gaps, vec![5.0]);
        assert_eq!(clamped, 0);
        let (t, clamped) = SessionTrace::from_events("s", vec![ev("a", 0.0, 2.0), ev("b", 1.5, 3.0)]);
        assert_eq!(t.think_gaps, vec![0.0]);
        assert_eq!(clamped, 1);
    }

    #[test]
    fn redirect_target_is_annotated() {
        let mut cat = catalog(&["home", "setting_currency"]);
        cat.set_redirect("setting_currency", "home").unwrap();
        let (t, _) =
            SessionTrace::from_events("s", vec![ev("setting_currency", 0.0, 0.1), ev("home", 0.1, 0.2)]);
        let (out, misses) = collapse_redirects(&[t], &cat);
        assert!(misses.is_empty());
        assert_eq!(
            out[0].events[1].redirected_from.as_deref(),
            Some("setting_currency")
        );
        assert_eq!(
            out[0].user_behaviors().collect::<Vec<_>>(),
            vec!["setting_currency"]
        );
    }

    #[test]
    fn empty_redirect_map_is_identity() {
        let cat = catalog(&["a", "b"]);
        let (t, _) = SessionTrace::from_events("s", vec![ev("a", 0.0, 1.0), ev("b", 2.0, 3.0)]);
        let (out, misses) = collapse_redirects(std::slice::from_ref(&t), &cat);
        assert_eq!(out, vec![t]);
        assert!(misses.is_empty());
    }

    #[test]
    fn missing_redirect_target_is_reported() {
        let mut cat = catalog(&["home", "setting_currency", "view_user_cart"]);
        cat.set_redirect("setting_currency", "home").unwrap();
        let (t, _) = SessionTrace::from_events(
            "s",
            vec![ev("setting_currency", 0.0, 0.1), ev("view_user_cart", 3.0, 3.1)],
        );
        let (out, misses) = collapse_redirects(&[t], &cat);
        assert!(out[0].events.iter().all(|e| e.redirected_from.is_none()));
        assert_eq!(misses.len(), 1);
        assert_eq!(misses[0].expected_target, "home");
    }

    #[test]
    fn think_samples_skip_redirects() {
        let (t, _) = SessionTrace::from_events(
            "s",
            vec![ev("a", 0.0, 1.0), ev("b", 6.0, 7.0), ev("c", 10.2, 11.0)],
        );
        assert_eq!(think_time_samples(std::slice::from_ref(&t)), vec![5.0, 3.2]);
        let mut r = t.clone();
        r.events[1].redirected_from = Some("a".into());
        assert_eq!(think_time_samples(&[r]), vec![3.2]);
        let (single, _) = SessionTrace::from_events("x", vec![ev("a", 0.0, 1.0)]);
        assert!(think_time_samples(&[single]).is_empty());
    }
}
