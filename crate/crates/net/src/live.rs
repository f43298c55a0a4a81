//! The scripted original workload against a live target.

use std::time::Duration;

use lws_core::harness::{Profile, ScriptedUser, SESSION_HEADER};
use lws_core::ids::ulid;
use lws_core::rng::stream;
use rand::Rng;
use reqwest::{Client, Method};
use tokio::time::Instant;

use crate::{unix_now_ns, NetError};

#[derive(Debug, Clone)]
pub struct LiveOptions {
    pub seed: u64,
    /// Profile time runs this many times faster than wall time.
    pub time_scale: f64,
    pub request_timeout: Duration,
}

impl Default for LiveOptions {
    fn default() -> Self {
        Self {
            seed: 0,
            time_scale: 1.0,
            request_timeout: Duration::from_secs(30),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LiveSummary {
    pub sessions: usize,
    pub requests: usize,
    pub errors: usize,
}

/// Endpoint paths of the default shop harness.
fn request_of(label: &str, product: u32) -> (Method, String) {
    match label {
        "home" => (Method::GET, "/home".into()),
        "setting currency" => (Method::POST, "/setcurrency".into()),
        "serving product page" => (Method::GET, format!("/product/{product}")),
        "view user cart" => (Method::GET, "/cart".into()),
        "adding to cart" => (Method::POST, "/cart".into()),
        _ => (Method::POST, "/cart/checkout".into()),
    }
}

/// Runs one task per virtual user of `profile` against the shop at `target`,
/// with the same per-user decisions as the virtual-clock simulation. The
/// client follows redirects itself.
pub async fn run_scripted(
    target: &str,
    profile: &Profile,
    user: &ScriptedUser,
    opts: &LiveOptions,
) -> Result<LiveSummary, NetError> {
    if !(opts.time_scale > 0.0) {
        return Err(NetError::Target(format!(
            "time scale must be positive, got {}",
            opts.time_scale
        )));
    }
    let client = Client::builder()
        .no_proxy()
        .timeout(opts.request_timeout)
        .build()?;
    let base = target.trim_end_matches('/').to_string();
    let start = Instant::now();
    let tasks: Vec<_> = (0..profile.max_users())
        .map(|i| {
            let (client, base, profile, user, opts) = (
                client.clone(),
                base.clone(),
                profile.clone(),
                user.clone(),
                opts.clone(),
            );
            tokio::spawn(async move {
                let mut rng = stream(opts.seed, i as u64);
                let mut sum = LiveSummary::default();
                let profile_s = |now: Instant| (now - start).as_secs_f64() * opts.time_scale;
                let wall = |s: f64| Duration::from_secs_f64((s / opts.time_scale).max(0.0));
                while profile_s(Instant::now()) < profile.total_s() {
                    if !profile.is_active(i, profile_s(Instant::now())) {
                        tokio::time::sleep(wall(1.0)).await;
                        continue;
                    }
                    let session = ulid((unix_now_ns() / 1_000_000) as u64, &mut rng);
                    sum.sessions += 1;
                    for (j, label) in user.session(&mut rng).iter().enumerate() {
                        if j > 0 {
                            tokio::time::sleep(wall(user.think_time(&mut rng))).await;
                        }
                        let product = rng.random_range(1..=user.products.max(1) as u32);
                        let (method, path) = request_of(label, product);
                        sum.requests += 1;
                        let r = client
                            .request(method, format!("{base}{path}"))
                            .header(SESSION_HEADER, &session)
                            .send()
                            .await;
                        match r {
                            Ok(r) if r.status().is_success() => {
                                let _ = r.bytes().await;
                            }
                            _ => sum.errors += 1,
                        }
                    }
                }
                sum
            })
        })
        .collect();
    let mut total = LiveSummary::default();
    for t in tasks {
        let s = t.await.map_err(|e| NetError::Io(std::io::Error::other(e)))?;
        total.sessions += s.sessions;
        total.requests += s.requests;
        total.errors += s.errors;
    }
    Ok(total)
}
