//! Gaussian kernel density estimate of think times.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::IntensityError;
use crate::par::{self, Execution};
use crate::rng::WorkloadRng;

/// Kernel contributions beyond this many bandwidths are below 1e-16.
const CUTOFF: f64 = 8.5;

const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThinkTimeModel {
    /// Retained samples in seconds, ascending.
    pub samples: Vec<f64>,
    /// Bandwidth in seconds.
    pub h: f64,
    /// Sample standard deviation.
    pub sigma: f64,
}

fn std_dev(x: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    (x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
}

/// Rule-of-thumb bandwidth `1.06·σ·n^(−1/5)`.
pub fn rule_of_thumb(sigma: f64, n: usize) -> f64 {
    1.06 * sigma * (n as f64).powf(-0.2)
}

/// Fits the estimator with the rule-of-thumb bandwidth.
///
/// Fewer than two samples, or samples without spread, are rejected; use
/// [`ThinkTimeModel::with_bandwidth`] with a chosen bandwidth instead.
pub fn kde_fit(samples: &[f64]) -> Result<ThinkTimeModel, IntensityError> {
    let n = samples.len();
    let sigma = if n >= 2 { std_dev(samples) } else { 0.0 };
    if n < 2 || !(sigma > 0.0) || !sigma.is_finite() {
        return Err(IntensityError::DegenerateSamples { n, sigma });
    }
    ThinkTimeModel::with_bandwidth(samples, rule_of_thumb(sigma, n))
}

impl ThinkTimeModel {
    /// Uses a fixed bandwidth; `h = 0` makes the model the empirical
    /// distribution.
    pub fn with_bandwidth(samples: &[f64], h: f64) -> Result<Self, IntensityError> {
        if samples.is_empty() {
            return Err(IntensityError::DegenerateSamples { n: 0, sigma: 0.0 });
        }
        if samples.iter().any(|v| !v.is_finite()) || !(h >= 0.0) || !h.is_finite() {
            return Err(IntensityError::Parameter(format!("bad samples or bandwidth {h}")));
        }
        let mut sorted = samples.to_vec();
        sorted.sort_by(f64::total_cmp);
        let sigma = if sorted.len() >= 2 { std_dev(&sorted) } else { 0.0 };
        Ok(Self {
            samples: sorted,
            h,
            sigma,
        })
    }

    pub fn n(&self) -> usize {
        self.samples.len()
    }

    fn window(&self, tau: f64) -> (usize, usize) {
        let lo = self.samples.partition_point(|&s| s < tau - CUTOFF * self.h);
        let hi = self.samples.partition_point(|&s| s <= tau + CUTOFF * self.h);
        (lo, hi)
    }

    /// `f̂(τ) = (1/(n·h))·Σ φ((τ − t_i)/h)`.
    pub fn density(&self, tau: f64) -> f64 {
        if self.h == 0.0 {
            return 0.0;
        }
        let (lo, hi) = self.window(tau);
        let s: f64 = self.samples[lo..hi]
            .iter()
            .map(|t| {
                let z = (tau - t) / self.h;
                (-0.5 * z * z).exp()
            })
            .sum();
        s * INV_SQRT_2PI / (self.n() as f64 * self.h)
    }

    /// `∫_{−∞}^{τ} f̂`.
    pub fn cdf(&self, tau: f64) -> f64 {
        if self.h == 0.0 {
            return self.samples.partition_point(|&s| s <= tau) as f64 / self.n() as f64;
        }
        let (lo, hi) = self.window(tau);
        let s: f64 = self.samples[lo..hi]
            .iter()
            .map(|t| 0.5 * libm::erfc(-(tau - t) / (self.h * std::f64::consts::SQRT_2)))
            .sum();
        (lo as f64 + s) / self.n() as f64
    }

    pub fn density_grid(&self, mode: Execution, grid: &[f64]) -> Vec<f64> {
        par::map_slice(mode, grid, |&x| self.density(x))
    }

    /// A uniformly chosen sample plus `Normal(0, h)` noise, redrawn while the
    /// result is negative. Gives up with 0 after 10⁴ tries.
    pub fn sample(&self, rng: &mut WorkloadRng) -> f64 {
        let normal = (self.h > 0.0).then(|| Normal::new(0.0, self.h).expect("positive bandwidth"));
        for _ in 0..10_000 {
            let base = self.samples[rng.random_range(0..self.n())];
            let tau = match &normal {
                Some(n) => base + n.sample(rng),
                None => base,
            };
            if tau >= 0.0 || (normal.is_none() && base < 0.0) {
                return tau;
            }
        }
        0.0
    }
}
