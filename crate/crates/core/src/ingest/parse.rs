use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, Read};
use std::path::Path;

use chrono::DateTime;
use flate2::read::MultiGzDecoder;
use serde_json::{Map, Value};

use super::{LogFormat, RawLogRecord};

/// What the parser skipped.
#[derive(Debug, Clone, Default, PartialEq, Eq, serde::Serialize)]
pub struct ParseReport {
    /// 1-based line numbers of request-related lines that could not be parsed.
    pub malformed_lines: Vec<usize>,
    /// Structured lines without session or request id (system noise).
    pub non_request_lines: usize,
    pub blank_lines: usize,
}

#[derive(Debug, Clone, Default)]
pub struct ParseOutput {
    pub records: Vec<RawLogRecord>,
    pub report: ParseReport,
}

/// Parses newline-delimited JSON log lines.
///
/// Lines that are structured but carry no session or request id are dropped as
/// noise. Lines that are not valid objects, or that are request-related but
/// have an unusable timestamp or message, are listed in the report.
pub fn parse_log_lines<R: BufRead>(reader: R, format: &LogFormat) -> std::io::Result<ParseOutput> {
    let mut out = ParseOutput::default();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let line_no = idx + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            out.report.blank_lines += 1;
            continue;
        }
        let Ok(Value::Object(obj)) = serde_json::from_str::<Value>(trimmed) else {
            out.report.malformed_lines.push(line_no);
            continue;
        };
        match record_from_object(obj, format) {
            Line::Record(r) => out.records.push(r),
            Line::Noise => out.report.non_request_lines += 1,
            Line::Malformed => out.report.malformed_lines.push(line_no),
        }
    }
    Ok(out)
}

/// Reads a plain or gzip-compressed log file.
pub fn read_log_file(path: &Path, format: &LogFormat) -> std::io::Result<ParseOutput> {
    let mut file = File::open(path)?;
    let mut magic = [0u8; 2];
    let n = file.read(&mut magic)?;
    let file = File::open(path)?;
    if n == 2 && magic == [0x1f, 0x8b] {
        parse_log_lines(BufReader::new(MultiGzDecoder::new(file)), format)
    } else {
        parse_log_lines(BufReader::new(file), format)
    }
}

enum Line {
    Record(RawLogRecord),
    Noise,
    Malformed,
}

fn record_from_object(mut obj: Map<String, Value>, f: &LogFormat) -> Line {
    let session = obj.remove(&f.session).and_then(string_value);
    let request = obj.remove(&f.request_id).and_then(string_value);
    let (Some(session_id), Some(request_id)) = (session, request) else {
        return Line::Noise;
    };
    if session_id.is_empty() || request_id.is_empty() {
        return Line::Noise;
    }
    let Some(timestamp) = obj.remove(&f.timestamp).as_ref().and_then(parse_timestamp) else {
        return Line::Malformed;
    };
    if timestamp <= 0 {
        return Line::Malformed;
    }
    let Some(message) = obj.remove(&f.message).and_then(string_value) else {
        return Line::Malformed;
    };
    let http_method = obj.remove(&f.method).and_then(string_value);
    let http_path = obj.remove(&f.path).and_then(string_value);
    let http_status = match obj.remove(&f.status) {
        None | Some(Value::Null) => None,
        Some(v) => match status_value(&v) {
            Some(s) => Some(s),
            None => return Line::Malformed,
        },
    };
    let extra: BTreeMap<String, String> = obj
        .into_iter()
        .map(|(k, v)| {
            let v = match v {
                Value::String(s) => s,
                other => other.to_string(),
            };
            (k, v)
        })
        .collect();
    Line::Record(RawLogRecord {
        timestamp,
        session_id,
        request_id,
        message,
        http_method,
        http_path,
        http_status,
        extra,
    })
}

fn string_value(v: Value) -> Option<String> {
    match v {
        Value::String(s) => Some(s),
        Value::Number(n) => Some(n.to_string()),
        _ => None,
    }
}

fn status_value(v: &Value) -> Option<u16> {
    match v {
        Value::Number(n) => n.as_u64().and_then(|x| u16::try_from(x).ok()),
        Value::String(s) => s.trim().parse().ok(),
        _ => None,
    }
}

/// Accepts RFC 3339 strings and integer or fractional epoch values. Integer
/// epochs are read as seconds, milliseconds, microseconds or nanoseconds
/// depending on magnitude.
pub(crate) fn parse_timestamp(v: &Value) -> Option<i64> {
    match v {
        Value::Number(n) => {
            if let Some(i) = n.as_i64() {
                Some(scale_integer_epoch(i))
            } else {
                n.as_f64().and_then(seconds_to_ns)
            }
        }
        Value::String(s) => {
            let s = s.trim();
            if let Ok(i) = s.parse::<i64>() {
                Some(scale_integer_epoch(i))
            } else if let Ok(dt) = DateTime::parse_from_rfc3339(s) {
                dt.timestamp_nanos_opt()
            } else {
                s.parse::<f64>().ok().and_then(seconds_to_ns)
            }
        }
        _ => None,
    }
}

fn scale_integer_epoch(i: i64) -> i64 {
    let a = i.unsigned_abs();
    if a < 100_000_000_000 {
        i.saturating_mul(1_000_000_000)
    } else if a < 100_000_000_000_000 {
        i.saturating_mul(1_000_000)
    } else if a < 100_000_000_000_000_000 {
        i.saturating_mul(1_000)
    } else {
        i
    }
}

fn seconds_to_ns(s: f64) -> Option<i64> {
    let ns = (s * 1e9).round();
    (ns.is_finite() && ns.abs() < 9.2e18).then_some(ns as i64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn parse(text: &str) -> ParseOutput {
        parse_log_lines(text.as_bytes(), &LogFormat::default()).unwrap()
    }

    #[test]
    fn empty_stream() {
        let out = parse("");
        assert!(out.records.is_empty());
        assert_eq!(out.report, ParseReport::default());
    }

    #[test]
    fn request_group_shares_request_id() {
        let text = r#"{"timestamp":"2022-05-03T10:00:00.000000001Z","session":"s1","http.req.id":"r1","message":"request started","http.req.method":"GET","http.req.path":"/home"}
{"timestamp":"2022-05-03T10:00:00.002Z","session":"s1","http.req.id":"r1","message":"home"}
{"timestamp":"2022-05-03T10:00:00.004Z","session":"s1","http.req.id":"r1","message":"request complete","http.resp.status":200}
{"timestamp":"2022-05-03T10:00:00.004Z","message":"kernel: eth0 link up"}"#;
        let out = parse(text);
        assert_eq!(out.records.len(), 3);
        assert!(out.records.iter().all(|r| r.request_id == "r1"));
        assert_eq!(out.records[0].http_path.as_deref(), Some("/home"));
        assert_eq!(out.records[2].http_status, Some(200));
        assert_eq!(out.records[0].timestamp, 1_651_572_000_000_000_001);
        assert_eq!(out.report.non_request_lines, 1);
        assert!(out.report.malformed_lines.is_empty());
    }

    #[test]
    fn corrupted_lines_are_reported_by_number() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let mut corrupt = std::collections::BTreeSet::new();
        while corrupt.len() < 10 {
            corrupt.insert(rng.random_range(1..=1000usize));
        }
        let mut text = String::new();
        for line in 1..=1000usize {
            if corrupt.contains(&line) {
                match line % 3 {
                    0 => text.push_str("{\"timestamp\": 17, \"session\": \"s\", \"http.req.id\""),
                    1 => text.push_str("{\"timestamp\": \"yesterday\", \"session\": \"s\", \"http.req.id\": \"r\", \"message\": \"home\"}"),
                    _ => text.push_str("garbage ]"),
                }
            } else {
                text.push_str(&format!(
                    "{{\"timestamp\": {}, \"session\": \"s{}\", \"http.req.id\": \"r{line}\", \"message\": \"home\"}}",
                    1_700_000_000_000_000_000i64 + line as i64,
                    line % 7
                ));
            }
            text.push('\n');
        }
        let out = parse(&text);
        assert_eq!(out.records.len(), 990);
        assert_eq!(
            out.report.malformed_lines,
            corrupt.into_iter().collect::<Vec<_>>()
        );
    }

    #[test]
    fn timestamp_forms() {
        use serde_json::json;
        assert_eq!(
            parse_timestamp(&json!(1_700_000_000)),
            Some(1_700_000_000_000_000_000)
        );
        assert_eq!(
            parse_timestamp(&json!(1_700_000_000_123i64)),
            Some(1_700_000_000_123_000_000)
        );
        assert_eq!(
            parse_timestamp(&json!(1_700_000_000_123_456i64)),
            Some(1_700_000_000_123_456_000)
        );
        assert_eq!(
            parse_timestamp(&json!(1_700_000_000_123_456_789i64)),
            Some(1_700_000_000_123_456_789)
        );
        assert_eq!(
            parse_timestamp(&json!("2023-11-14T22:13:20.5+00:00")),
            Some(1_700_000_000_500_000_000)
        );
        assert_eq!(parse_timestamp(&json!(1.5)), Some(1_500_000_000));
        assert_eq!(parse_timestamp(&json!(true)), None);
    }

    #[test]
    fn non_positive_timestamp_is_malformed() {
        let out = parse(r#"{"timestamp":0,"session":"s","http.req.id":"r","message":"home"}"#);
        assert_eq!(out.report.malformed_lines, vec![1]);
    }

    #[test]
    fn gzip_input_is_detected() {
        use flate2::{write::GzEncoder, Compression};
        use std::io::Write;
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("logs.ndjson.gz");
        let mut enc = GzEncoder::new(File::create(&path).unwrap(), Compression::default());
        writeln!(
            enc,
            r#"{{"timestamp":5,"session":"s","http.req.id":"r","message":"home"}}"#
        )
        .unwrap();
        enc.finish().unwrap();
        let out = read_log_file(&path, &LogFormat::default()).unwrap();
        assert_eq!(out.records.len(), 1);
        assert_eq!(out.records[0].timestamp, 5_000_000_000);
    }
}
