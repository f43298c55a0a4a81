use chrono::{DateTime, SecondsFormat};
use serde::Serialize;

/// One structured log record in the harness format.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LogLine {
    pub timestamp_ns: i64,
    pub session: String,
    pub request_id: String,
    pub message: String,
    pub method: Option<String>,
    pub path: Option<String>,
    pub status: Option<u16>,
}

#[derive(Serialize)]
struct Wire<'a> {
    timestamp: String,
    session: &'a str,
    #[serde(rename = "http.req.id")]
    request_id: &'a str,
    message: &'a str,
    #[serde(rename = "http.req.method", skip_serializing_if = "Option::is_none")]
    method: Option<&'a str>,
    #[serde(rename = "http.req.path", skip_serializing_if = "Option::is_none")]
    path: Option<&'a str>,
    #[serde(rename = "http.resp.status", skip_serializing_if = "Option::is_none")]
    status: Option<u16>,
}

/// RFC 3339 in UTC with nanoseconds.
pub fn format_timestamp(ns: i64) -> String {
    DateTime::from_timestamp_nanos(ns).to_rfc3339_opts(SecondsFormat::Nanos, true)
}

impl LogLine {
    /// Newline-free JSON object.
    pub fn to_json(&self) -> String {
        serde_json::to_string(&Wire {
            timestamp: format_timestamp(self.timestamp_ns),
            session: &self.session,
            request_id: &self.request_id,
            message: &self.message,
            method: self.method.as_deref(),
            path: self.path.as_deref(),
            status: self.status,
        })
        .expect("log line serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wire_format() {
        let l = LogLine {
            timestamp_ns: 1_651_572_000_000_000_001,
            session: "s".into(),
            request_id: "r".into(),
            message: "request complete".into(),
            method: None,
            path: None,
            status: Some(200),
        };
        assert_eq!(
            l.to_json(),
            r#"{"timestamp":"2022-05-03T10:00:00.000000001Z","session":"s","http.req.id":"r","message":"request complete","http.resp.status":200}"#
        );
    }
}
