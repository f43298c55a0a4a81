//! Component-based generation: trend, multi-peak season, recurring bursts and
//! bounded Gaussian noise, each shaped by a three-point interpolation.

use std::fmt;
use std::str::FromStr;

use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::params::{render, ParamDoc};
use super::{to_count, IntensityError, IntensitySeries};
use crate::rng::WorkloadRng;

/// Shape through a start, middle and end point.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Interpolation {
    /// The parabola through the three points.
    #[default]
    Quadratic,
    /// Two straight pieces meeting at the middle point.
    Linear,
}

impl Interpolation {
    /// Value at `x` of the curve through `(0, y0)`, `(xm, ym)`, `(len, y1)`.
    pub fn eval(self, x: f64, len: f64, y0: f64, y1: f64, xm: f64, ym: f64) -> f64 {
        match self {
            Interpolation::Quadratic => {
                let l0 = (x - xm) * (x - len) / (xm * len);
                let lm = x * (x - len) / (xm * (xm - len));
                let l1 = x * (x - xm) / (len * (len - xm));
                y0 * l0 + ym * lm + y1 * l1
            }
            Interpolation::Linear => {
                if x <= xm {
                    y0 + (ym - y0) * x / xm
                } else {
                    ym + (y1 - ym) * (x - xm) / (len - xm)
                }
            }
        }
    }
}

impl fmt::Display for Interpolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Interpolation::Quadratic => "quadratic",
            Interpolation::Linear => "linear",
        })
    }
}

impl FromStr for Interpolation {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim().to_ascii_lowercase().as_str() {
            "quadratic" => Ok(Interpolation::Quadratic),
            "linear" => Ok(Interpolation::Linear),
            other => Err(format!("unknown interpolation `{other}`")),
        }
    }
}

/// Generator parameters. Positions and widths are in buckets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimboParams {
    /// Seasonal periods per trend.
    pub eta1: u32,
    /// Seasonal period.
    pub eta2: u32,
    /// Peaks per period.
    pub eta3: u32,
    /// Distance from the first to the last peak.
    pub eta4: f64,
    /// Offset of the first burst peak.
    pub eta5: f64,
    /// Distance between bursts.
    pub eta6: f64,
    /// Burst width.
    pub eta7: f64,
    /// Noise bounds.
    pub eta8: f64,
    pub eta9: f64,
    /// Trend start, end and middle.
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    /// Season value at period boundaries.
    pub c4: f64,
    /// Trough value.
    pub c5: f64,
    /// First and last peak.
    pub c6: f64,
    pub c7: f64,
    /// Burst height; 0 disables bursts.
    pub c8: f64,
    pub g1: Interpolation,
    pub g2: Interpolation,
    pub g3: Interpolation,
}

const KEYS: [&str; 20] = [
    "eta1", "eta2", "eta3", "eta4", "eta5", "eta6", "eta7", "eta8", "eta9", "c1", "c2", "c3", "c4", "c5",
    "c6", "c7", "c8", "g1", "g2", "g3",
];

/// Per-bucket component values.
#[derive(Debug, Clone, PartialEq)]
pub struct LimboComponents {
    pub trend: Vec<f64>,
    pub season: Vec<f64>,
    pub burst: Vec<f64>,
    pub noise: Vec<f64>,
}

impl LimboParams {
    /// Peak spacing `η4 / (η3 − 1)`.
    pub fn eta_r(&self) -> f64 {
        self.eta4 / (self.eta3 as f64 - 1.0)
    }

    /// Period minus the peak span.
    pub fn eta_m(&self) -> f64 {
        self.eta2 as f64 - self.eta4
    }

    /// Length of each boundary segment.
    pub fn eta_s(&self) -> f64 {
        0.5 * (self.eta_m() + self.eta_r())
    }

    pub fn validate(&self) -> Result<(), IntensityError> {
        let bad = |m: String| Err(IntensityError::Parameter(m));
        let finite = [
            self.eta4, self.eta5, self.eta6, self.eta7, self.eta8, self.eta9, self.c1, self.c2, self.c3,
            self.c4, self.c5, self.c6, self.c7, self.c8,
        ];
        if finite.iter().any(|v| !v.is_finite()) {
            return bad("all parameters must be finite".into());
        }
        if self.eta1 < 1 || self.eta2 < 1 {
            return bad("eta1 and eta2 must be at least 1".into());
        }
        if self.eta3 < 2 {
            return bad(format!("eta3 must be at least 2, got {}", self.eta3));
        }
        if !(self.eta4 > 0.0 && self.eta4 < self.eta2 as f64) {
            return bad(format!("eta4 must lie in (0, eta2), got {}", self.eta4));
        }
        if !(self.eta6 > 0.0) || self.eta5 < 0.0 || self.eta5 >= self.eta6 {
            return bad(format!(
                "need 0 <= eta5 < eta6, got eta5={} eta6={}",
                self.eta5, self.eta6
            ));
        }
        if !(self.eta7 > 0.0) || self.eta7 > self.eta6 {
            return bad(format!("need 0 < eta7 <= eta6, got eta7={}", self.eta7));
        }
        if self.eta8 > self.eta9 {
            return bad(format!("eta8 ({}) exceeds eta9 ({})", self.eta8, self.eta9));
        }
        Ok(())
    }

    /// Trend at bucket offset `t`; holds `c2` after `η1·η2` buckets.
    pub fn trend(&self, t: u64) -> f64 {
        let len = self.eta1 as f64 * self.eta2 as f64;
        let x = t as f64;
        if x >= len {
            return self.c2;
        }
        self.g1.eval(x, len, self.c1, self.c2, 0.5 * len, self.c3)
    }

    /// Season at bucket offset `t`.
    ///
    /// Peak `j` sits at `0.5·η_m + j·η_r`; troughs lie halfway between peaks.
    /// Each boundary segment runs from the period edge to the nearest trough,
    /// each inner segment from trough to trough.
    pub fn season(&self, t: u64) -> f64 {
        let p = self.eta2 as u64;
        let tc = (t % p) as f64;
        let (eta_s, eta_r, eta_m) = (self.eta_s(), self.eta_r(), self.eta_m());
        let period = p as f64;
        if tc < eta_s {
            return self.g2.eval(tc, eta_s, self.c4, self.c5, 0.5 * eta_m, self.c6);
        }
        if tc >= period - eta_s {
            let x = tc - (period - eta_s);
            return self.g2.eval(x, eta_s, self.c5, self.c4, 0.5 * eta_r, self.c7);
        }
        let i = (((tc - eta_s) / eta_r).floor() as u32).min(self.eta3.saturating_sub(3));
        let x = tc - eta_s - i as f64 * eta_r;
        let peak = self.c6 + (i + 1) as f64 * (self.c7 - self.c6) / (self.eta3 as f64 - 1.0);
        self.g2.eval(x, eta_r, self.c5, self.c5, 0.5 * eta_r, peak)
    }

    /// Position of `t` within its burst window, so that a burst peak falls on
    /// `η5 + k·η6`.
    pub fn burst_phase(&self, t: u64) -> f64 {
        (t as f64 - self.eta5 + 0.5 * self.eta7).rem_euclid(self.eta6)
    }

    pub fn burst(&self, t: u64) -> f64 {
        let tc = self.burst_phase(t);
        if tc > self.eta7 || self.c8 == 0.0 {
            return 0.0;
        }
        self.g3.eval(tc, self.eta7, 0.0, 0.0, 0.5 * self.eta7, self.c8)
    }

    /// One draw of `Normal((η8+η9)/2, (η9−η8)/6)` clamped to `[η8, η9]`.
    pub fn noise(&self, rng: &mut WorkloadRng) -> f64 {
        let mean = 0.5 * (self.eta8 + self.eta9);
        let sd = (self.eta9 - self.eta8) / 6.0;
        if sd <= 0.0 {
            return mean;
        }
        let n = Normal::new(mean, sd).expect("positive standard deviation");
        n.sample(rng).clamp(self.eta8, self.eta9)
    }

    pub fn components(
        &self,
        length: usize,
        rng: &mut WorkloadRng,
    ) -> Result<LimboComponents, IntensityError> {
        self.validate()?;
        let ts = 0..length as u64;
        Ok(LimboComponents {
            trend: ts.clone().map(|t| self.trend(t)).collect(),
            season: ts.clone().map(|t| self.season(t)).collect(),
            burst: ts.map(|t| self.burst(t)).collect(),
            noise: (0..length).map(|_| self.noise(rng)).collect(),
        })
    }

    pub fn from_text(text: &str) -> Result<Self, IntensityError> {
        let d = ParamDoc::parse(text)?;
        d.reject_unknown(&KEYS)?;
        let interp = |k: &str| -> Result<Interpolation, IntensityError> {
            d.get_or::<String>(k, "quadratic".into())?
                .parse()
                .map_err(IntensityError::Parameter)
        };
        let p = Self {
            eta1: d.get("eta1")?,
            eta2: d.get("eta2")?,
            eta3: d.get("eta3")?,
            eta4: d.get("eta4")?,
            eta5: d.get_or("eta5", 0.0)?,
            eta6: d.get_or("eta6", 1.0)?,
            eta7: d.get_or("eta7", 1.0)?,
            eta8: d.get_or("eta8", 0.0)?,
            eta9: d.get_or("eta9", 0.0)?,
            c1: d.get("c1")?,
            c2: d.get("c2")?,
            c3: d.get("c3")?,
            c4: d.get("c4")?,
            c5: d.get("c5")?,
            c6: d.get("c6")?,
            c7: d.get("c7")?,
            c8: d.get_or("c8", 0.0)?,
            g1: interp("g1")?,
            g2: interp("g2")?,
            g3: interp("g3")?,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn to_text(&self) -> String {
        let f = |v: f64| format!("{v:?}");
        render(&[
            ("eta1", self.eta1.to_string()),
            ("eta2", self.eta2.to_string()),
            ("eta3", self.eta3.to_string()),
            ("eta4", f(self.eta4)),
            ("eta5", f(self.eta5)),
            ("eta6", f(self.eta6)),
            ("eta7", f(self.eta7)),
            ("eta8", f(self.eta8)),
            ("eta9", f(self.eta9)),
            ("c1", f(self.c1)),
            ("c2", f(self.c2)),
            ("c3", f(self.c3)),
            ("c4", f(self.c4)),
            ("c5", f(self.c5)),
            ("c6", f(self.c6)),
            ("c7", f(self.c7)),
            ("c8", f(self.c8)),
            ("g1", self.g1.to_string()),
            ("g2", self.g2.to_string()),
            ("g3", self.g3.to_string()),
        ])
    }
}

/// Sums the four components per bucket, clamps at zero and rounds half to even.
pub fn limbo_generate(
    p: &LimboParams,
    t_s: i64,
    length: usize,
    delta_s: f64,
    rng: &mut WorkloadRng,
) -> Result<IntensitySeries, IntensityError> {
    super::delta_ns(delta_s)?;
    let c = p.components(length, rng)?;
    let counts = (0..length)
        .map(|i| to_count(c.trend[i] + c.season[i] + c.burst[i] + c.noise[i]))
        .collect();
    Ok(IntensitySeries::synthetic(t_s, delta_s, counts))
}
