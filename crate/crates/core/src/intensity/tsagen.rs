//! Component-based generation with fractal cycle shapes and Pearson type III
//! noise.

use rand::Rng;
use rand_distr::{Distribution, Gamma, Normal};
use serde::{Deserialize, Serialize};

use super::params::{render, ParamDoc};
use super::{to_count, IntensityError, IntensitySeries};
use crate::rng::{stream, WorkloadRng};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TsagenParams {
    /// Trend level and slope per bucket.
    pub theta1: f64,
    pub theta2: f64,
    /// Cycle amplitude.
    pub theta3: f64,
    /// Cycle frequency; a cycle spans `1/θ4` buckets before drift.
    pub theta4: f64,
    /// Number of cycles.
    pub theta5: u32,
    /// Noise skewness, location and scale.
    pub theta6: f64,
    pub theta7: f64,
    pub theta8: f64,
    /// Amplitude and frequency drift degrees.
    pub k1: f64,
    pub k2: f64,
    /// Shared and per-cycle recursion depths.
    pub d1: u32,
    pub d2: u32,
    pub seed: u64,
}

const KEYS: [&str; 13] = [
    "theta1", "theta2", "theta3", "theta4", "theta5", "theta6", "theta7", "theta8", "k1", "k2", "d1", "d2",
    "seed",
];

/// Depth limit keeping curves below ~16M points.
const MAX_DEPTH: u32 = 24;

/// Random midpoint displacement curve from `(0,0)` to `(1,0)`.
///
/// Every recursion replaces each segment by two, moving the new midpoint
/// along the segment's perpendicular bisector by a `Normal(0, σ)` draw with
/// `σ = 0.25·2^−level`. The base curve is built from `stream(seed, 0)`; fork
/// `i` continues it for further levels from `stream(seed, i + 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Rmdf {
    seed: u64,
    depth: u32,
    points: Vec<(f64, f64)>,
}

fn displace(points: &[(f64, f64)], level: u32, rng: &mut WorkloadRng) -> Vec<(f64, f64)> {
    let sd = 0.25 * 0.5f64.powi(level as i32);
    let normal = Normal::new(0.0, sd).expect("positive standard deviation");
    let mut out = Vec::with_capacity(points.len() * 2 - 1);
    out.push(points[0]);
    for w in points.windows(2) {
        let ((x0, y0), (x1, y1)) = (w[0], w[1]);
        let (mx, my) = (0.5 * (x0 + x1), 0.5 * (y0 + y1));
        let (dx, dy) = (x1 - x0, y1 - y0);
        let len = dx.hypot(dy);
        let s = normal.sample(rng);
        let (nx, ny) = if len > 0.0 {
            (-dy / len, dx / len)
        } else {
            (0.0, 1.0)
        };
        out.push((mx + s * nx, my + s * ny));
        out.push(w[1]);
    }
    out
}

impl Rmdf {
    pub fn base(d1: u32, seed: u64) -> Self {
        let mut rng = stream(seed, 0);
        let mut points = vec![(0.0, 0.0), (1.0, 0.0)];
        for level in 0..d1.min(MAX_DEPTH) {
            points = displace(&points, level, &mut rng);
        }
        Self {
            seed,
            depth: d1,
            points,
        }
    }

    /// Applies `d2` more recursions for fork `index`.
    pub fn fork(&self, d2: u32, index: u64) -> Self {
        let mut rng = stream(self.seed, index + 1);
        let mut points = self.points.clone();
        let end = (self.depth + d2).min(MAX_DEPTH);
        for level in self.depth..end {
            points = displace(&points, level, &mut rng);
        }
        Self {
            seed: self.seed,
            depth: end,
            points,
        }
    }

    /// The `2^depth + 1` control points in curve order.
    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    pub fn segments(&self) -> usize {
        self.points.len() - 1
    }

    /// Height at curve parameter `u ∈ [0, 1]`, interpolating linearly between
    /// control points spaced evenly in `u`.
    pub fn at(&self, u: f64) -> f64 {
        let pos = u.clamp(0.0, 1.0) * self.segments() as f64;
        let k = (pos.floor() as usize).min(self.segments() - 1);
        let frac = pos - k as f64;
        let (a, b) = (self.points[k].1, self.points[k + 1].1);
        a + (b - a) * frac
    }
}

/// Fork 0 of the curve with `d1` shared and `d2` cycle-specific levels.
pub fn rmdf(d1: u32, d2: u32, seed: u64) -> Rmdf {
    Rmdf::base(d1, seed).fork(d2, 0)
}

/// Per-bucket component values.
#[derive(Debug, Clone, PartialEq)]
pub struct TsagenComponents {
    pub trend: Vec<f64>,
    pub season: Vec<f64>,
    pub noise: Vec<f64>,
}

impl TsagenParams {
    pub fn validate(&self) -> Result<(), IntensityError> {
        let bad = |m: String| Err(IntensityError::Parameter(m));
        let reals = [
            self.theta1,
            self.theta2,
            self.theta3,
            self.theta4,
            self.theta6,
            self.theta7,
            self.theta8,
            self.k1,
            self.k2,
        ];
        if reals.iter().any(|v| !v.is_finite()) {
            return bad("all parameters must be finite".into());
        }
        if !(self.theta4 > 0.0) {
            return bad(format!("theta4 must be positive, got {}", self.theta4));
        }
        if self.theta5 < 1 {
            return bad("theta5 must be at least 1".into());
        }
        if self.k1 < 0.0 || self.k2 < 0.0 {
            return bad("k1 and k2 must be non-negative".into());
        }
        if self.theta8 < 0.0 {
            return bad(format!("theta8 must be non-negative, got {}", self.theta8));
        }
        if self.theta8 > 0.0 && self.theta6 == 0.0 {
            return bad("theta6 must be non-zero when theta8 > 0".into());
        }
        if self.d1 + self.d2 > MAX_DEPTH {
            return bad(format!("d1 + d2 must not exceed {MAX_DEPTH}"));
        }
        Ok(())
    }

    pub fn trend(&self, t: u64) -> f64 {
        self.theta1 + self.theta2 * t as f64
    }

    /// Concatenated cycles; zero past the last cycle.
    ///
    /// Cycle `i` has `round(f_i/θ4)` samples (at least one) taken at
    /// `u = j/n_i` on fork `i` of the shared curve, scaled by `θ3·a_i`.
    pub fn season(&self, length: usize) -> Vec<f64> {
        let base = Rmdf::base(self.d1, self.seed);
        let mut drift = stream(self.seed, u64::MAX);
        let mut out = Vec::with_capacity(length);
        for i in 0..self.theta5 {
            if out.len() >= length {
                break;
            }
            let a: f64 = 1.0 + self.k1 * drift.random::<f64>();
            let f: f64 = 1.0 + self.k2 * drift.random::<f64>();
            let n = ((f / self.theta4).round() as usize).max(1);
            let curve = base.fork(self.d2, i as u64);
            out.extend((0..n).map(|j| self.theta3 * a * curve.at(j as f64 / n as f64)));
        }
        out.resize(length, 0.0);
        out
    }

    /// Pearson type III draws: `θ7 + (θ6·θ8/2)·G` with `G ~ Gamma(4/θ6², 1)`.
    ///
    /// This has mean `θ7 + 2θ8/θ6`, standard deviation `θ8` and skewness `θ6`;
    /// a negative `θ6` mirrors the distribution. `θ8 = 0` yields `θ7`.
    pub fn noise(&self, length: usize) -> Vec<f64> {
        if self.theta8 == 0.0 {
            return vec![self.theta7; length];
        }
        let gamma = Gamma::new(4.0 / (self.theta6 * self.theta6), 1.0).expect("positive shape");
        let scale = 0.5 * self.theta6 * self.theta8;
        let mut rng = stream(self.seed, u64::MAX - 1);
        (0..length)
            .map(|_| self.theta7 + scale * gamma.sample(&mut rng))
            .collect()
    }

    pub fn components(&self, length: usize) -> Result<TsagenComponents, IntensityError> {
        self.validate()?;
        Ok(TsagenComponents {
            trend: (0..length as u64).map(|t| self.trend(t)).collect(),
            season: self.season(length),
            noise: self.noise(length),
        })
    }

    pub fn from_text(text: &str) -> Result<Self, IntensityError> {
        let d = ParamDoc::parse(text)?;
        d.reject_unknown(&KEYS)?;
        let p = Self {
            theta1: d.get("theta1")?,
            theta2: d.get_or("theta2", 0.0)?,
            theta3: d.get("theta3")?,
            theta4: d.get("theta4")?,
            theta5: d.get("theta5")?,
            theta6: d.get_or("theta6", 1.0)?,
            theta7: d.get_or("theta7", 0.0)?,
            theta8: d.get_or("theta8", 0.0)?,
            k1: d.get_or("k1", 0.0)?,
            k2: d.get_or("k2", 0.0)?,
            d1: d.get_or("d1", 0)?,
            d2: d.get_or("d2", 0)?,
            seed: d.get_or("seed", 0)?,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn to_text(&self) -> String {
        let f = |v: f64| format!("{v:?}");
        render(&[
            ("theta1", f(self.theta1)),
            ("theta2", f(self.theta2)),
            ("theta3", f(self.theta3)),
            ("theta4", f(self.theta4)),
            ("theta5", self.theta5.to_string()),
            ("theta6", f(self.theta6)),
            ("theta7", f(self.theta7)),
            ("theta8", f(self.theta8)),
            ("k1", f(self.k1)),
            ("k2", f(self.k2)),
            ("d1", self.d1.to_string()),
            ("d2", self.d2.to_string()),
            ("seed", self.seed.to_string()),
        ])
    }
}

/// Sums trend, season and noise per bucket, clamps at zero and rounds half to
/// even. The random source is the parameter seed.
pub fn tsagen_generate(
    p: &TsagenParams,
    t_s: i64,
    length: usize,
    delta_s: f64,
) -> Result<IntensitySeries, IntensityError> {
    super::delta_ns(delta_s)?;
    let c = p.components(length)?;
    let counts = (0..length)
        .map(|i| to_count(c.trend[i] + c.season[i] + c.noise[i]))
        .collect();
    Ok(IntensitySeries::synthetic(t_s, delta_s, counts))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> TsagenParams {
        TsagenParams {
            theta1: 5.0,
            theta2: 0.1,
            theta3: 10.0,
            theta4: 0.02,
            theta5: 4,
            theta6: 1.0,
            theta7: 0.0,
            theta8: 1.0,
            k1: 0.0,
            k2: 0.0,
            d1: 3,
            d2: 0,
            seed: 9,
        }
    }

    #[test]
    fn linear_trend() {
        assert!((sample().trend(10) - 6.0).abs() < 1e-12);
    }

    #[test]
    fn rmdf_endpoints_and_size() {
        for (d1, d2) in [(0, 0), (2, 3), (5, 1)] {
            let c = rmdf(d1, d2, 3);
            assert_eq!(c.segments(), 1 << (d1 + d2));
            assert_eq!(c.points()[0], (0.0, 0.0));
            assert_eq!(*c.points().last().unwrap(), (1.0, 0.0));
        }
        assert!(rmdf(0, 0, 1).points().iter().all(|p| p.1 == 0.0));
    }

    #[test]
    fn forks_share_base_points() {
        let b = Rmdf::base(3, 5);
        let f0 = b.fork(2, 0);
        let f1 = b.fork(2, 1);
        assert_ne!(f0, f1);
        for (k, p) in b.points().iter().enumerate() {
            assert_eq!(f0.points()[4 * k], *p);
            assert_eq!(f1.points()[4 * k], *p);
        }
        assert_eq!(rmdf(3, 2, 5), f0);
    }

    #[test]
    fn identical_cycles_without_drift() {
        let p = sample();
        let s = p.season(200);
        assert_eq!(&s[..50], &s[50..100]);
        assert_eq!(&s[..50], &s[150..200]);
    }

    #[test]
    fn text_round_trip() {
        let p = TsagenParams {
            k1: 0.5,
            d2: 2,
            ..sample()
        };
        assert_eq!(TsagenParams::from_text(&p.to_text()).unwrap(), p);
    }

    #[test]
    fn season_zero_after_cycles() {
        let s = sample().season(260);
        assert!(s[200..].iter().all(|v| *v == 0.0));
    }
}
