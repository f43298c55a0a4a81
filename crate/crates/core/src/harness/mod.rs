//! A small session-based shop used as the system under test.
//!
//! The request handling here is transport-free: [`Harness::begin`] and
//! [`Harness::finish`] produce the log lines of one request group, and the
//! HTTP server, the virtual original workload and the dry run all share them.

mod log;
pub mod script;

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Mutex;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use log::{format_timestamp, LogLine};
pub use script::{simulate_original_workload, Profile, ScriptedUser, Stage, VirtualRun, DATASET_A_SCALED};

use crate::ingest::{normalize_label, BehaviorCatalog, CatalogEntry};

pub const SESSION_COOKIE: &str = "shop_session-id";
/// Header alternative to the cookie.
pub const SESSION_HEADER: &str = "x-session-id";

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("duplicate behavior label `{0}`")]
    DuplicateLabel(String),
    #[error("redirect `{0}` refers to an unknown label")]
    UnknownRedirect(String),
    #[error("redirect target `{0}` must be a GET endpoint without path parameters")]
    BadRedirectTarget(String),
    #[error("latency bounds must satisfy 0 <= lo <= hi, got {0}..{1}")]
    Latency(f64, f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Endpoint {
    /// Label written to the log, e.g. "setting currency".
    pub label: String,
    pub method: String,
    /// Path template; `{id}` matches any single segment.
    pub path: String,
    /// Further messages logged after the label (aliases).
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub extra_messages: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Latency {
    Fixed { ms: f64 },
    Uniform { lo_ms: f64, hi_ms: f64 },
}

impl Latency {
    pub fn sample_ns<R: Rng + ?Sized>(&self, rng: &mut R) -> i64 {
        let ms = match *self {
            Latency::Fixed { ms } => ms,
            Latency::Uniform { lo_ms, hi_ms } if hi_ms > lo_ms => rng.random_range(lo_ms..hi_ms),
            Latency::Uniform { lo_ms, .. } => lo_ms,
        };
        (ms * 1e6).round() as i64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HarnessConfig {
    pub port: u16,
    pub endpoints: Vec<Endpoint>,
    /// Source label to target label.
    #[serde(default)]
    pub redirects: BTreeMap<String, String>,
    pub latency: Latency,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub log_path: Option<PathBuf>,
}

fn ep(label: &str, method: &str, path: &str, extra: &[&str]) -> Endpoint {
    Endpoint {
        label: label.into(),
        method: method.into(),
        path: path.into(),
        extra_messages: extra.iter().map(|s| s.to_string()).collect(),
    }
}

impl Default for HarnessConfig {
    /// Six shop behaviors; changing the currency redirects home and adding to
    /// the cart redirects to the cart view.
    fn default() -> Self {
        Self {
            port: 8080,
            endpoints: vec![
                ep("home", "GET", "/home", &[]),
                ep("setting currency", "POST", "/setcurrency", &[]),
                ep("serving product page", "GET", "/product/{id}", &[]),
                ep("view user cart", "GET", "/cart", &[]),
                ep("adding to cart", "POST", "/cart", &[]),
                ep("placing order", "POST", "/cart/checkout", &["order placed"]),
            ],
            redirects: [("setting currency", "home"), ("adding to cart", "view user cart")]
                .into_iter()
                .map(|(a, b)| (a.to_string(), b.to_string()))
                .collect(),
            latency: Latency::Uniform {
                lo_ms: 2.0,
                hi_ms: 20.0,
            },
            log_path: None,
        }
    }
}

impl HarnessConfig {
    pub fn validate(&self) -> Result<(), HarnessError> {
        let mut seen = std::collections::BTreeSet::new();
        for e in &self.endpoints {
            if !seen.insert(normalize_label(&e.label)) {
                return Err(HarnessError::DuplicateLabel(e.label.clone()));
            }
        }
        for (src, dst) in &self.redirects {
            if self.endpoint(src).is_none() {
                return Err(HarnessError::UnknownRedirect(src.clone()));
            }
            let target = self
                .endpoint(dst)
                .ok_or_else(|| HarnessError::UnknownRedirect(dst.clone()))?;
            if target.method != "GET" || target.path.contains('{') {
                return Err(HarnessError::BadRedirectTarget(dst.clone()));
            }
        }
        match self.latency {
            Latency::Fixed { ms } if !(ms >= 0.0) => Err(HarnessError::Latency(ms, ms)),
            Latency::Uniform { lo_ms, hi_ms } if !(lo_ms >= 0.0 && hi_ms >= lo_ms) => {
                Err(HarnessError::Latency(lo_ms, hi_ms))
            }
            _ => Ok(()),
        }
    }

    /// Looks an endpoint up by label, in any spelling [`normalize_label`]
    /// accepts.
    pub fn endpoint(&self, label: &str) -> Option<&Endpoint> {
        let key = normalize_label(label);
        self.endpoints.iter().find(|e| normalize_label(&e.label) == key)
    }

    /// The catalog ingest would derive from this harness's logs.
    pub fn catalog(&self) -> BehaviorCatalog {
        let mut entries: Vec<CatalogEntry> = self
            .endpoints
            .iter()
            .map(|e| CatalogEntry {
                behavior_type: normalize_label(&e.label),
                method: Some(e.method.clone()),
                path: Some(e.path.clone()),
                redirect_target: self.redirects.get(&e.label).map(|t| normalize_label(t)),
                aliases: e.extra_messages.iter().map(|m| normalize_label(m)).collect(),
            })
            .collect();
        entries.sort_by(|a, b| a.behavior_type.cmp(&b.behavior_type));
        BehaviorCatalog { entries }
    }

    fn route(&self, method: &str, path: &str) -> Option<usize> {
        let path = path.split('?').next().unwrap_or(path);
        self.endpoints
            .iter()
            .position(|e| e.method.eq_ignore_ascii_case(method) && path_matches(&e.path, path))
    }
}

pub(crate) fn path_matches(template: &str, path: &str) -> bool {
    let t: Vec<&str> = template.trim_matches('/').split('/').collect();
    let p: Vec<&str> = path.trim_matches('/').split('/').collect();
    t.len() == p.len()
        && t.iter()
            .zip(&p)
            .all(|(a, b)| (a.starts_with('{') && !b.is_empty()) || a == b)
}

/// Fills `{...}` segments of a template with `value`.
pub fn fill_path(template: &str, value: &str) -> String {
    template
        .split('/')
        .map(|s| {
            if s.starts_with('{') && s.ends_with('}') {
                value
            } else {
                s
            }
        })
        .collect::<Vec<_>>()
        .join("/")
}

/// What the transport should answer.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Reply {
    pub status: u16,
    pub location: Option<String>,
    pub body: String,
}

/// A request between its started and complete log lines.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Pending {
    pub request_id: String,
    pub session_id: String,
    pub reply: Reply,
}

/// Harness state: cart sizes per session and a request counter.
#[derive(Debug)]
pub struct Harness {
    config: HarnessConfig,
    carts: Mutex<BTreeMap<String, u32>>,
    next_request: AtomicU64,
}

impl Harness {
    pub fn new(config: HarnessConfig) -> Result<Self, HarnessError> {
        config.validate()?;
        Ok(Self {
            config,
            carts: Mutex::new(BTreeMap::new()),
            next_request: AtomicU64::new(1),
        })
    }

    pub fn config(&self) -> &HarnessConfig {
        &self.config
    }

    /// A fresh request id, unique within this harness.
    pub fn next_request_id(&self) -> String {
        format!("req-{:012}", self.next_request.fetch_add(1, Ordering::Relaxed))
    }

    /// Handles the request up to the point of replying. Returns the started
    /// and label lines.
    pub fn begin(
        &self,
        request_id: String,
        session_id: String,
        method: &str,
        path: &str,
        now_ns: i64,
    ) -> (Pending, Vec<LogLine>) {
        let mut lines = vec![LogLine {
            timestamp_ns: now_ns,
            session: session_id.clone(),
            request_id: request_id.clone(),
            message: "request started".into(),
            method: Some(method.to_string()),
            path: Some(path.to_string()),
            status: None,
        }];
        let reply = match self.config.route(method, path) {
            None => Reply {
                status: 404,
                location: None,
                body: "not found\n".into(),
            },
            Some(i) => {
                let e = &self.config.endpoints[i];
                for m in std::iter::once(&e.label).chain(&e.extra_messages) {
                    lines.push(LogLine {
                        timestamp_ns: now_ns,
                        session: session_id.clone(),
                        request_id: request_id.clone(),
                        message: m.clone(),
                        method: None,
                        path: None,
                        status: None,
                    });
                }
                self.reply(e, &session_id)
            }
        };
        (
            Pending {
                request_id,
                session_id,
                reply,
            },
            lines,
        )
    }

    fn reply(&self, e: &Endpoint, session: &str) -> Reply {
        let key = normalize_label(&e.label);
        let mut carts = self.carts.lock().expect("cart lock");
        let body = match key.as_str() {
            "adding_to_cart" => {
                *carts.entry(session.to_string()).or_default() += 1;
                "added\n".to_string()
            }
            "placing_order" => {
                let n = carts.remove(session).unwrap_or(0);
                format!("order placed: {n} items\n")
            }
            "view_user_cart" => format!("cart: {} items\n", carts.get(session).copied().unwrap_or(0)),
            _ => format!("{}\n", e.label),
        };
        match self
            .config
            .redirects
            .get(&e.label)
            .and_then(|t| self.config.endpoint(t))
        {
            Some(target) => Reply {
                status: 302,
                location: Some(target.path.clone()),
                body: String::new(),
            },
            None => Reply {
                status: 200,
                location: None,
                body,
            },
        }
    }

    /// The complete line closing a request group.
    pub fn finish(&self, pending: &Pending, now_ns: i64) -> LogLine {
        LogLine {
            timestamp_ns: now_ns,
            session: pending.session_id.clone(),
            request_id: pending.request_id.clone(),
            message: "request complete".into(),
            method: None,
            path: None,
            status: Some(pending.reply.status),
        }
    }

    /// Items in the session's cart.
    pub fn cart_size(&self, session: &str) -> u32 {
        self.carts
            .lock()
            .expect("cart lock")
            .get(session)
            .copied()
            .unwrap_or(0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{assemble_sessions, parse_log_lines, LogFormat};

    fn ingest(lines: &[LogLine]) -> Vec<crate::ingest::SessionTrace> {
        let text: String = lines.iter().map(|l| l.to_json() + "\n").collect();
        let out = parse_log_lines(text.as_bytes(), &LogFormat::default()).unwrap();
        assemble_sessions(
            &out.records,
            &HarnessConfig::default().catalog(),
            &LogFormat::default(),
        )
        .0
    }

    #[test]
    fn home_logs_one_group_of_three() {
        let h = Harness::new(HarnessConfig::default()).unwrap();
        let (p, mut lines) = h.begin(h.next_request_id(), "s1".into(), "GET", "/home", 1_000);
        lines.push(h.finish(&p, 2_000));
        assert_eq!(lines.len(), 3);
        assert!(lines.iter().all(|l| l.request_id == lines[0].request_id));
        assert_eq!(lines[1].message, "home");
        let traces = ingest(&lines);
        assert_eq!(traces[0].behaviors().collect::<Vec<_>>(), vec!["home"]);
    }

    #[test]
    fn redirect_and_cart_state() {
        let h = Harness::new(HarnessConfig::default()).unwrap();
        let (p, _) = h.begin(h.next_request_id(), "s".into(), "POST", "/setcurrency", 0);
        assert_eq!(p.reply.status, 302);
        assert_eq!(p.reply.location.as_deref(), Some("/home"));
        let (p, _) = h.begin(h.next_request_id(), "s".into(), "POST", "/cart", 0);
        assert_eq!(p.reply.location.as_deref(), Some("/cart"));
        assert_eq!(h.cart_size("s"), 1);
        let (p, lines) = h.begin(h.next_request_id(), "s".into(), "POST", "/cart/checkout", 0);
        assert_eq!(lines.len(), 3);
        assert_eq!(p.reply.body, "order placed: 1 items\n");
        let (p, _) = h.begin(h.next_request_id(), "s".into(), "GET", "/nope", 0);
        assert_eq!(p.reply.status, 404);
    }

    #[test]
    fn config_validation() {
        let mut c = HarnessConfig::default();
        c.redirects.insert("home".into(), "serving product page".into());
        assert!(matches!(Harness::new(c), Err(HarnessError::BadRedirectTarget(_))));
        let mut c = HarnessConfig::default();
        c.endpoints.push(ep("Home", "GET", "/x", &[]));
        assert!(matches!(Harness::new(c), Err(HarnessError::DuplicateLabel(_))));
        let c = HarnessConfig {
            latency: Latency::Uniform {
                lo_ms: 5.0,
                hi_ms: 1.0,
            },
            ..Default::default()
        };
        assert!(c.validate().is_err());
    }

    #[test]
    fn paths() {
        assert!(path_matches("/product/{id}", "/product/OLJCESPC7Z"));
        assert!(!path_matches("/product/{id}", "/product"));
        assert_eq!(fill_path("/product/{id}", "7"), "/product/7");
    }
}
