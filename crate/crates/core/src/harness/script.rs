//! The scripted "original" workload: virtual users following a stepped
//! concurrency profile, each running scripted shop sessions back to back.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{fill_path, Harness, HarnessConfig, HarnessError, LogLine};
use crate::ids::ulid;
use crate::par::{self, Execution};
use crate::rng::{stream, WorkloadRng};

/// Ramp linearly to `target` virtual users over `duration_s`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stage {
    pub duration_s: f64,
    pub target: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Profile {
    pub stages: Vec<Stage>,
}

const fn st(duration_s: f64, target: f64) -> Stage {
    Stage { duration_s, target }
}

/// The dataset-A shape at a tenth of its users and durations: 22 minutes,
/// 0→6→2→8→2→6→0 users with one-minute ramps.
pub const DATASET_A_SCALED: [Stage; 11] = [
    st(60.0, 6.0),
    st(240.0, 6.0),
    st(60.0, 2.0),
    st(120.0, 2.0),
    st(60.0, 8.0),
    st(240.0, 8.0),
    st(60.0, 2.0),
    st(120.0, 2.0),
    st(60.0, 6.0),
    st(240.0, 6.0),
    st(60.0, 0.0),
];

impl Profile {
    pub fn dataset_a_scaled() -> Self {
        Self {
            stages: DATASET_A_SCALED.to_vec(),
        }
    }

    pub fn total_s(&self) -> f64 {
        self.stages.iter().map(|s| s.duration_s).sum()
    }

    /// Multiplies every user level.
    pub fn scale_users(&self, factor: f64) -> Self {
        Self {
            stages: self
                .stages
                .iter()
                .map(|s| st(s.duration_s, s.target * factor))
                .collect(),
        }
    }

    /// Multiplies every duration.
    pub fn scale_time(&self, factor: f64) -> Self {
        Self {
            stages: self
                .stages
                .iter()
                .map(|s| st(s.duration_s * factor, s.target))
                .collect(),
        }
    }

    pub fn max_users(&self) -> usize {
        self.stages
            .iter()
            .map(|s| s.target.max(0.0).floor() as usize)
            .max()
            .unwrap_or(0)
    }

    /// Target user level at `t_s` seconds; 0 before the start and after the end.
    pub fn users_at(&self, t_s: f64) -> f64 {
        let (mut start, mut from) = (0.0, 0.0);
        if t_s < 0.0 {
            return 0.0;
        }
        for s in &self.stages {
            if t_s < start + s.duration_s {
                return from + (s.target - from) * (t_s - start) / s.duration_s;
            }
            start += s.duration_s;
            from = s.target;
        }
        0.0
    }

    /// Whether user `i` (0-based) is active at `t_s`.
    pub fn is_active(&self, i: usize, t_s: f64) -> bool {
        self.users_at(t_s) + 1e-9 >= (i + 1) as f64
    }
}

/// Session script of the original users.
///
/// A session opens at home and then performs `len − 2` middle steps drawn
/// from a per-archetype distribution; a cart addition only directly follows
/// a product page. Buyers end by placing an order when the cart is
/// non-empty. Think times are `Normal(mean, sd)` redrawn until they fall
/// inside `[min, max]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScriptedUser {
    pub min_len: usize,
    pub max_len: usize,
    pub buyer_share: f64,
    pub think_mean_s: f64,
    pub think_sd_s: f64,
    pub think_min_s: f64,
    pub think_max_s: f64,
    pub products: usize,
}

impl Default for ScriptedUser {
    fn default() -> Self {
        Self {
            min_len: 7,
            max_len: 20,
            buyer_share: 0.4,
            think_mean_s: 5.0,
            think_sd_s: 2.0,
            think_min_s: 1.0,
            think_max_s: 15.0,
            products: 9,
        }
    }
}

const HOME: &str = "home";
const CURRENCY: &str = "setting currency";
const PRODUCT: &str = "serving product page";
const CART: &str = "view user cart";
const ADD: &str = "adding to cart";
const ORDER: &str = "placing order";

impl ScriptedUser {
    pub fn think_time<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let n = Normal::new(self.think_mean_s, self.think_sd_s.max(f64::MIN_POSITIVE)).expect("valid normal");
        loop {
            let v = n.sample(rng);
            if (self.think_min_s..=self.think_max_s).contains(&v) {
                return v;
            }
        }
    }

    /// Behavior labels of one session.
    pub fn session<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<&'static str> {
        let len = rng
            .random_range(self.min_len..=self.max_len.max(self.min_len))
            .max(2);
        let buyer = rng.random_bool(self.buyer_share.clamp(0.0, 1.0));
        let weights: [(&str, f64); 5] = if buyer {
            [
                (HOME, 0.1),
                (CURRENCY, 0.05),
                (PRODUCT, 0.45),
                (CART, 0.1),
                (ADD, 0.3),
            ]
        } else {
            [
                (HOME, 0.25),
                (CURRENCY, 0.15),
                (PRODUCT, 0.45),
                (CART, 0.15),
                (ADD, 0.0),
            ]
        };
        let mut out = vec![HOME];
        let mut cart = 0;
        while out.len() < len - 1 {
            let mut r = rng.random::<f64>() * weights.iter().map(|w| w.1).sum::<f64>();
            let mut pick = weights[weights.len() - 1].0;
            for (label, w) in weights {
                if r < w {
                    pick = label;
                    break;
                }
                r -= w;
            }
            if pick == ADD && out.last() != Some(&PRODUCT) {
                pick = PRODUCT;
            }
            if pick == ADD {
                cart += 1;
            }
            out.push(pick);
        }
        out.push(if buyer && cart > 0 {
            ORDER
        } else if buyer {
            CART
        } else {
            HOME
        });
        out
    }
}

/// Log stream of a virtual-clock run.
#[derive(Debug, Clone, PartialEq)]
pub struct VirtualRun {
    pub lines: Vec<LogLine>,
    pub sessions: usize,
    pub requests: usize,
}

impl VirtualRun {
    pub fn to_ndjson(&self) -> String {
        self.lines.iter().map(|l| l.to_json() + "\n").collect()
    }
}

struct UserRun {
    lines: Vec<LogLine>,
    sessions: usize,
    requests: usize,
}

/// Runs the profile on a virtual clock starting at `epoch_ns`.
///
/// Users are independent: user `i` draws from `stream(seed, i)`, runs
/// sessions back to back while active, finishes a session in progress when
/// the level drops, and waits (checking once per second) while inactive.
/// Request latencies come from the harness configuration and redirects are
/// followed immediately.
pub fn simulate_original_workload(
    config: &HarnessConfig,
    profile: &Profile,
    user: &ScriptedUser,
    epoch_ns: i64,
    seed: u64,
    mode: Execution,
) -> Result<VirtualRun, HarnessError> {
    let harness = Harness::new(config.clone())?;
    let runs = par::map_range(mode, profile.max_users(), |i| {
        run_user(&harness, profile, user, epoch_ns, seed, i)
    });
    let mut lines = Vec::new();
    let (mut sessions, mut requests) = (0, 0);
    for r in runs {
        lines.extend(r.lines);
        sessions += r.sessions;
        requests += r.requests;
    }
    lines.sort_by_key(|l| l.timestamp_ns);
    Ok(VirtualRun {
        lines,
        sessions,
        requests,
    })
}

fn run_user(
    harness: &Harness,
    profile: &Profile,
    user: &ScriptedUser,
    epoch_ns: i64,
    seed: u64,
    i: usize,
) -> UserRun {
    let mut rng: WorkloadRng = stream(seed, i as u64);
    let total_ns = (profile.total_s() * 1e9) as i64;
    let mut out = UserRun {
        lines: Vec::new(),
        sessions: 0,
        requests: 0,
    };
    let mut t: i64 = 0;
    while t < total_ns {
        if !profile.is_active(i, t as f64 / 1e9) {
            t = (t / 1_000_000_000 + 1) * 1_000_000_000;
            continue;
        }
        let session = ulid(((epoch_ns + t) / 1_000_000) as u64, &mut rng);
        let behaviors = user.session(&mut rng);
        let mut k = 0;
        for (j, label) in behaviors.iter().enumerate() {
            if j > 0 {
                t += (user.think_time(&mut rng) * 1e9).round() as i64;
            }
            let e = harness
                .config()
                .endpoint(label)
                .expect("script labels exist in the default harness");
            let product = rng.random_range(1..=user.products.max(1)).to_string();
            let (mut method, mut path) = (e.method.clone(), fill_path(&e.path, &product));
            loop {
                let rid = format!("{session}-{k:04}");
                k += 1;
                let (p, lines) = harness.begin(rid, session.clone(), &method, &path, epoch_ns + t);
                out.lines.extend(lines);
                t += harness.config().latency.sample_ns(&mut rng);
                out.lines.push(harness.finish(&p, epoch_ns + t));
                out.requests += 1;
                match p.reply.location {
                    Some(loc) if p.reply.status == 302 => {
                        method = "GET".into();
                        path = loc;
                    }
                    _ => break,
                }
            }
        }
        out.sessions += 1;
    }
    out
}
