//! The harness behind an HTTP listener.

use std::fs::{File, OpenOptions};
use std::io::{BufWriter, Write};
use std::sync::{Arc, Mutex};

use axum::body::Body;
use axum::extract::State;
use axum::http::{header, HeaderMap, HeaderValue, Method, StatusCode, Uri};
use axum::response::Response;
use axum::Router;
use lws_core::harness::{Harness, HarnessConfig, LogLine, SESSION_COOKIE, SESSION_HEADER};
use lws_core::ids::ulid;
use lws_core::rng::{seeded, WorkloadRng};

use crate::{unix_now_ns, NetError, Served};

enum Sink {
    Memory(Mutex<Vec<LogLine>>),
    File(Mutex<BufWriter<File>>),
}

impl Sink {
    /// Appends whole lines under one lock so concurrent requests never
    /// interleave within a line.
    fn write(&self, lines: &[LogLine]) {
        match self {
            Sink::Memory(v) => v.lock().expect("log lock").extend_from_slice(lines),
            Sink::File(f) => {
                let mut f = f.lock().expect("log lock");
                for l in lines {
                    let _ = writeln!(f, "{}", l.to_json());
                }
                let _ = f.flush();
            }
        }
    }
}

struct Shared {
    harness: Harness,
    sink: Sink,
    rng: Mutex<WorkloadRng>,
}

pub struct HarnessServer {
    served: Served,
    shared: Arc<Shared>,
}

impl HarnessServer {
    pub fn url(&self) -> String {
        self.served.url()
    }

    pub fn port(&self) -> u16 {
        self.served.addr().port()
    }

    /// Lines logged so far when no log file is configured.
    pub fn lines(&self) -> Vec<LogLine> {
        match &self.shared.sink {
            Sink::Memory(v) => v.lock().expect("log lock").clone(),
            Sink::File(_) => Vec::new(),
        }
    }

    pub fn ndjson(&self) -> String {
        self.lines().iter().map(|l| l.to_json() + "\n").collect()
    }

    pub async fn stop(self) -> Result<(), NetError> {
        self.served.stop().await
    }

    pub async fn run_until_ctrl_c(self) -> Result<(), NetError> {
        self.served.run_until_ctrl_c().await
    }
}

fn session_of(headers: &HeaderMap) -> Option<String> {
    if let Some(v) = headers.get(SESSION_HEADER).and_then(|v| v.to_str().ok()) {
        if !v.is_empty() {
            return Some(v.to_string());
        }
    }
    headers
        .get_all(header::COOKIE)
        .iter()
        .filter_map(|v| v.to_str().ok())
        .flat_map(|v| v.split(';'))
        .filter_map(|c| c.trim().split_once('='))
        .find(|(k, v)| *k == SESSION_COOKIE && !v.is_empty())
        .map(|(_, v)| v.to_string())
}

async fn handle(State(shared): State<Arc<Shared>>, method: Method, uri: Uri, headers: HeaderMap) -> Response {
    let now = unix_now_ns();
    let (session, fresh) = match session_of(&headers) {
        Some(s) => (s, false),
        None => (
            ulid(
                (now / 1_000_000) as u64,
                &mut *shared.rng.lock().expect("rng lock"),
            ),
            true,
        ),
    };
    let rid = shared.harness.next_request_id();
    let (pending, lines) = shared
        .harness
        .begin(rid, session.clone(), method.as_str(), uri.path(), now);
    shared.sink.write(&lines);
    let delay = shared
        .harness
        .config()
        .latency
        .sample_ns(&mut *shared.rng.lock().expect("rng lock"));
    if delay > 0 {
        tokio::time::sleep(std::time::Duration::from_nanos(delay as u64)).await;
    }
    shared
        .sink
        .write(&[shared.harness.finish(&pending, unix_now_ns())]);

    let reply = pending.reply;
    let mut resp = Response::new(Body::from(reply.body));
    *resp.status_mut() = StatusCode::from_u16(reply.status).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR);
    let h = resp.headers_mut();
    if let Some(loc) = reply.location.and_then(|l| HeaderValue::from_str(&l).ok()) {
        h.insert(header::LOCATION, loc);
    }
    if let Ok(v) = HeaderValue::from_str(&session) {
        h.insert(SESSION_HEADER, v);
    }
    if fresh {
        if let Ok(v) = HeaderValue::from_str(&format!("{SESSION_COOKIE}={session}; Path=/")) {
            h.insert(header::SET_COOKIE, v);
        }
    }
    resp
}

/// Starts the harness on `127.0.0.1:config.port` (0 picks a free port).
/// Logs go to `config.log_path` when set, otherwise to memory.
pub async fn serve_harness(config: HarnessConfig, seed: u64) -> Result<HarnessServer, NetError> {
    let sink = match &config.log_path {
        Some(p) => Sink::File(Mutex::new(BufWriter::new(
            OpenOptions::new().create(true).append(true).open(p)?,
        ))),
        None => Sink::Memory(Mutex::new(Vec::new())),
    };
    let port = config.port;
    let shared = Arc::new(Shared {
        harness: Harness::new(config)?,
        sink,
        rng: Mutex::new(seeded(seed)),
    });
    let app = Router::new().fallback(handle).with_state(shared.clone());
    let served = Served::start(app, "127.0.0.1", port).await?;
    Ok(HarnessServer { served, shared })
}
