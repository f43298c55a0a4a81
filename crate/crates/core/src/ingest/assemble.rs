use std::collections::BTreeMap;

use serde::Serialize;

use super::catalog::{is_template_message, normalize_label, request_groups, template_label};
use super::{BehaviorCatalog, BehaviorEvent, LogFormat, RawLogRecord, SessionTrace};

/// Counters describing what [`assemble_sessions`] kept and dropped.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct AssemblyReport {
    pub request_groups: usize,
    pub events: usize,
    /// Groups without a started or a complete record.
    pub incomplete_groups: usize,
    /// Groups answered with a status of 400 or above.
    pub error_groups: usize,
    /// Groups whose label is not in the catalog.
    pub unknown_groups: usize,
    /// Negative think gaps clamped to zero.
    pub clamped_gaps: usize,
}

/// Collapses request groups into behavior events and joins them per session.
///
/// Sessions come back ordered by id and events by `(start, complete, request
/// id)`, so the output does not depend on the order of `records`.
pub fn assemble_sessions(
    records: &[RawLogRecord],
    catalog: &BehaviorCatalog,
    format: &LogFormat,
) -> (Vec<SessionTrace>, AssemblyReport) {
    let mut report = AssemblyReport::default();
    let mut sessions: BTreeMap<&str, Vec<(BehaviorEvent, &str)>> = BTreeMap::new();

    for ((session, request), group) in request_groups(records) {
        report.request_groups += 1;
        let started = group.iter().find(|r| r.message == format.started_message);
        let complete = group.iter().rev().find(|r| r.message == format.complete_message);
        let (Some(started), Some(complete)) = (started, complete) else {
            report.incomplete_groups += 1;
            continue;
        };
        let status = complete
            .http_status
            .or_else(|| group.iter().find_map(|r| r.http_status));
        if status.is_some_and(|s| s >= 400) {
            report.error_groups += 1;
            continue;
        }
        let label = group
            .iter()
            .filter(|r| !is_template_message(&r.message, format))
            .find_map(|r| catalog.resolve(&r.message))
            .or_else(|| {
                let (m, p) = group
                    .iter()
                    .find_map(|r| Some((r.http_method.as_deref()?, r.http_path.as_deref()?)))?;
                catalog
                    .resolve_request(m, p)
                    .or_else(|| catalog.resolve(&normalize_label(&template_label(m, p))))
            });
        let Some(label) = label else {
            report.unknown_groups += 1;
            continue;
        };
        sessions.entry(session).or_default().push((
            BehaviorEvent {
                behavior_type: label.to_string(),
                start_ts: started.timestamp,
                complete_ts: complete.timestamp.max(started.timestamp),
                redirected_from: None,
                status,
            },
            request,
        ));
    }

    let traces = sessions
        .into_iter()
        .map(|(id, mut events)| {
            events.sort_by(|(a, ra), (b, rb)| {
                (a.start_ts, a.complete_ts, ra).cmp(&(b.start_ts, b.complete_ts, rb))
            });
            report.events += events.len();
            let (trace, clamped) =
                SessionTrace::from_events(id, events.into_iter().map(|(e, _)| e).collect());
            report.clamped_gaps += clamped;
            trace
        })
        .collect();
    (traces, report)
}
