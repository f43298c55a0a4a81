use serde::{Deserialize, Serialize};

/// Upper bounds (ms) of the start-skew histogram buckets; the last bucket is
/// open-ended.
pub const SKEW_BUCKETS_MS: [f64; 6] = [1.0, 5.0, 10.0, 50.0, 100.0, 1000.0];

/// One request issued by the driver.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RequestRecord {
    pub session_id: String,
    pub behavior_type: String,
    /// Planned and actual send times, nanoseconds since the Unix epoch.
    pub scheduled_ns: i64,
    pub actual_ns: i64,
    pub status: Option<u16>,
    pub latency_s: f64,
    /// Server redirects followed while answering this request.
    #[serde(default)]
    pub redirects: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl RequestRecord {
    pub fn skew_ms(&self) -> f64 {
        (self.actual_ns - self.scheduled_ns) as f64 / 1e6
    }

    pub fn is_ok(&self) -> bool {
        self.error.is_none() && self.status.is_some_and(|s| s < 400)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ReportSummary {
    pub sent: usize,
    pub ok: usize,
    pub errored: usize,
    /// Session-start skew counts per [`SKEW_BUCKETS_MS`] bucket plus one
    /// overflow bucket.
    pub skew_histogram: Vec<usize>,
    /// Sessions whose first request started later than the tolerance.
    pub late_sessions: usize,
    pub tolerance_ms: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ExecutionReport {
    pub records: Vec<RequestRecord>,
    pub summary: ReportSummary,
}

impl ExecutionReport {
    /// Builds the summary from records; the first record of each session
    /// gives that session's start skew.
    pub fn from_records(mut records: Vec<RequestRecord>, tolerance_ms: f64) -> Self {
        records.sort_by(|a, b| (a.scheduled_ns, &a.session_id).cmp(&(b.scheduled_ns, &b.session_id)));
        let mut summary = ReportSummary {
            sent: records.len(),
            ok: records.iter().filter(|r| r.is_ok()).count(),
            skew_histogram: vec![0; SKEW_BUCKETS_MS.len() + 1],
            tolerance_ms,
            ..Default::default()
        };
        summary.errored = summary.sent - summary.ok;
        let mut seen = std::collections::HashSet::new();
        for r in &records {
            if !seen.insert(r.session_id.as_str()) {
                continue;
            }
            let skew = r.skew_ms().abs();
            let k = SKEW_BUCKETS_MS
                .iter()
                .position(|b| skew <= *b)
                .unwrap_or(SKEW_BUCKETS_MS.len());
            summary.skew_histogram[k] += 1;
            if skew > tolerance_ms {
                summary.late_sessions += 1;
            }
        }
        Self { records, summary }
    }

    /// One JSON record per line.
    pub fn to_ndjson(&self) -> String {
        self.records
            .iter()
            .map(|r| serde_json::to_string(r).expect("record serializes") + "\n")
            .collect()
    }
}
