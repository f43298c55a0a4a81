//! Canonical session archive: one JSON object per line per session.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use super::{BehaviorEvent, IngestError, SessionTrace};

#[derive(Serialize, Deserialize)]
struct ArchiveRecord {
    session_id: String,
    events: Vec<BehaviorEvent>,
}

/// Writes traces in archive form. Think gaps are not stored; they are derived
/// from the event timestamps when reading.
pub fn write_archive<W: Write>(mut out: W, traces: &[SessionTrace]) -> std::io::Result<()> {
    for t in traces {
        let rec = ArchiveRecord {
            session_id: t.session_id.clone(),
            events: t.events.clone(),
        };
        serde_json::to_writer(&mut out, &rec)?;
        out.write_all(b"\n")?;
    }
    out.flush()
}

pub fn to_string(traces: &[SessionTrace]) -> String {
    let mut buf = Vec::new();
    write_archive(&mut buf, traces).expect("writing to memory cannot fail");
    String::from_utf8(buf).expect("archive is UTF-8")
}

pub fn read_archive<R: BufRead>(input: R) -> Result<Vec<SessionTrace>, IngestError> {
    let mut traces = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: ArchiveRecord =
            serde_json::from_str(&line).map_err(|source| IngestError::Archive { line: i + 1, source })?;
        let (trace, _) = SessionTrace::from_events(rec.session_id, rec.events);
        traces.push(trace);
    }
    Ok(traces)
}

pub fn from_str(text: &str) -> Result<Vec<SessionTrace>, IngestError> {
    read_archive(text.as_bytes())
}
