//! Executes a [`WorkloadPlan`] against a live target.

use std::sync::Arc;
use std::time::Duration;

use lws_core::harness::{fill_path, SESSION_HEADER};
use lws_core::ingest::BehaviorCatalog;
use lws_core::plan::{ExecutionReport, RequestRecord, ScheduledSession, WorkloadPlan};
use reqwest::{Client, Method};
use tokio::sync::Semaphore;
use tokio::time::Instant;

use crate::{unix_now_ns, NetError};

#[derive(Debug, Clone)]
pub struct DriverOptions {
    /// Sessions starting later than this count as late in the report.
    pub tolerance_ms: f64,
    /// Requests in flight at once.
    pub max_inflight: usize,
    /// Plan time runs this many times faster than wall time.
    pub time_scale: f64,
    /// Delay between the call and the plan epoch.
    pub lead: Duration,
    pub request_timeout: Duration,
    /// Redirects followed per request before giving up.
    pub max_redirects: u32,
}

impl Default for DriverOptions {
    fn default() -> Self {
        Self {
            tolerance_ms: 50.0,
            max_inflight: 1024,
            time_scale: 1.0,
            lead: Duration::from_millis(200),
            request_timeout: Duration::from_secs(30),
            max_redirects: 10,
        }
    }
}

struct Ctx {
    client: Client,
    base: String,
    catalog: BehaviorCatalog,
    permits: Semaphore,
    /// Wall instant and Unix time of the plan epoch.
    start: Instant,
    start_unix_ns: i64,
    opts: DriverOptions,
}

impl Ctx {
    fn plan_to_wall(&self, plan_ns: f64) -> Duration {
        Duration::from_nanos((plan_ns / self.opts.time_scale).max(0.0) as u64)
    }

    fn unix_of(&self, at: Instant) -> i64 {
        self.start_unix_ns + at.saturating_duration_since(self.start).as_nanos() as i64
    }
}

/// Sends every planned session on its own task. Session `s` starts at the
/// plan epoch plus its offset; each later behavior follows the previous
/// response after its think time. Redirects are followed by hand so that
/// each request record counts them. Requests carry the planned session id in
/// the session header, so the target's logs use plan ids.
pub async fn execute_plan(
    plan: &WorkloadPlan,
    catalog: &BehaviorCatalog,
    target: &str,
    opts: &DriverOptions,
) -> Result<ExecutionReport, NetError> {
    if !(opts.time_scale > 0.0) {
        return Err(NetError::Target(format!(
            "time scale must be positive, got {}",
            opts.time_scale
        )));
    }
    let base = target.trim_end_matches('/').to_string();
    if !(base.starts_with("http://") || base.starts_with("https://")) {
        return Err(NetError::Target(target.to_string()));
    }
    let client = Client::builder()
        .redirect(reqwest::redirect::Policy::none())
        .no_proxy()
        .timeout(opts.request_timeout)
        .pool_max_idle_per_host(opts.max_inflight.max(1))
        .build()?;
    let ctx = Arc::new(Ctx {
        client,
        base,
        catalog: catalog.clone(),
        permits: Semaphore::new(opts.max_inflight.max(1)),
        start: Instant::now() + opts.lead,
        start_unix_ns: unix_now_ns() + opts.lead.as_nanos() as i64,
        opts: opts.clone(),
    });
    let tasks: Vec<_> = plan
        .sessions
        .iter()
        .cloned()
        .map(|s| {
            let ctx = ctx.clone();
            tokio::spawn(async move { run_session(&ctx, s).await })
        })
        .collect();
    let mut records = Vec::new();
    for t in tasks {
        records.extend(t.await.map_err(|e| NetError::Io(std::io::Error::other(e)))?);
    }
    Ok(ExecutionReport::from_records(records, opts.tolerance_ms))
}

async fn run_session(ctx: &Ctx, s: ScheduledSession) -> Vec<RequestRecord> {
    let mut out = Vec::with_capacity(s.behaviors.len());
    let mut due = ctx.start + ctx.plan_to_wall(s.start_offset_ns as f64);
    for (j, b) in s.behaviors.iter().enumerate() {
        if j > 0 {
            due = Instant::now() + ctx.plan_to_wall(s.think_times[j - 1] * 1e9);
        }
        tokio::time::sleep_until(due).await;
        out.push(send(ctx, &s.session_id, b, ctx.unix_of(due)).await);
    }
    out
}

async fn send(ctx: &Ctx, session: &str, behavior: &str, scheduled_ns: i64) -> RequestRecord {
    let _permit = ctx.permits.acquire().await.expect("semaphore open");
    let sent = Instant::now();
    let mut rec = RequestRecord {
        session_id: session.to_string(),
        behavior_type: behavior.to_string(),
        scheduled_ns,
        actual_ns: ctx.unix_of(sent),
        status: None,
        latency_s: 0.0,
        redirects: 0,
        error: None,
    };
    let Some(entry) = ctx.catalog.get(behavior) else {
        rec.error = Some(format!("behavior `{behavior}` is not in the catalog"));
        return rec;
    };
    let Some(path) = entry.path.as_deref() else {
        rec.error = Some(format!("behavior `{behavior}` has no request path"));
        return rec;
    };
    let mut method = entry
        .method
        .as_deref()
        .unwrap_or("GET")
        .parse::<Method>()
        .unwrap_or(Method::GET);
    let mut path = fill_path(path, "1");
    loop {
        let resp = ctx
            .client
            .request(method.clone(), format!("{}{path}", ctx.base))
            .header(SESSION_HEADER, session)
            .send()
            .await;
        match resp {
            Err(e) => {
                rec.error = Some(e.to_string());
                break;
            }
            Ok(r) => {
                let status = r.status();
                rec.status = Some(status.as_u16());
                let location = r
                    .headers()
                    .get(reqwest::header::LOCATION)
                    .and_then(|v| v.to_str().ok())
                    .map(String::from);
                let _ = r.bytes().await;
                match location {
                    Some(loc) if status.is_redirection() => {
                        if rec.redirects == ctx.opts.max_redirects {
                            rec.error = Some("too many redirects".into());
                            break;
                        }
                        rec.redirects += 1;
                        method = Method::GET;
                        path = match loc.strip_prefix(&ctx.base) {
                            Some(p) => p.to_string(),
                            None => loc,
                        };
                    }
                    _ => break,
                }
            }
        }
    }
    rec.latency_s = sent.elapsed().as_secs_f64();
    rec
}
