use serde::{Deserialize, Serialize};

use super::IntensityError;

/// Additive split of a series into trend, season and residual noise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Decomposition {
    pub trend: Vec<f64>,
    pub season: Vec<f64>,
    pub noise: Vec<f64>,
    pub period: usize,
}

impl Decomposition {
    /// `(trend + season) + noise`, the summation order under which the
    /// residual reproduces the input.
    pub fn recompose(&self) -> Vec<f64> {
        (0..self.trend.len())
            .map(|t| (self.trend[t] + self.season[t]) + self.noise[t])
            .collect()
    }
}

/// Classical moving-average decomposition.
///
/// The trend is a centered moving average over one period (a 2×P average for
/// even P), extended to the edges by a least-squares line through the nearest
/// `period` trend values. The season is the per-phase mean of the detrended
/// series, shifted to mean zero and tiled. The noise is whatever remains.
pub fn decompose(values: &[f64], period: usize) -> Result<Decomposition, IntensityError> {
    let n = values.len();
    if period < 2 {
        return Err(IntensityError::Parameter(format!(
            "period must be at least 2, got {period}"
        )));
    }
    if n < 2 * period {
        return Err(IntensityError::TooShort {
            needed: 2 * period,
            found: n,
        });
    }
    let half = period / 2;
    let mut trend = vec![f64::NAN; n];
    for (t, slot) in trend.iter_mut().enumerate().take(n - half).skip(half) {
        *slot = if period % 2 == 1 {
            values[t - half..=t + half].iter().sum::<f64>() / period as f64
        } else {
            let inner: f64 = values[t - half + 1..t + half].iter().sum();
            (inner + 0.5 * (values[t - half] + values[t + half])) / period as f64
        };
    }
    let (lo, hi) = (half, n - half - 1);
    let take = period.min(hi - lo + 1);
    let (a, b) = line_fit((lo..lo + take).map(|t| (t as f64, trend[t])));
    for (t, slot) in trend.iter_mut().enumerate().take(lo) {
        *slot = a + b * t as f64;
    }
    let (a, b) = line_fit((hi + 1 - take..=hi).map(|t| (t as f64, trend[t])));
    for (t, slot) in trend.iter_mut().enumerate().skip(hi + 1) {
        *slot = a + b * t as f64;
    }

    let mut phase_sum = vec![0.0; period];
    let mut phase_n = vec![0usize; period];
    for t in 0..n {
        phase_sum[t % period] += values[t] - trend[t];
        phase_n[t % period] += 1;
    }
    let phase: Vec<f64> = phase_sum
        .iter()
        .zip(&phase_n)
        .map(|(s, &k)| s / k as f64)
        .collect();
    let mean = phase.iter().sum::<f64>() / period as f64;
    let season: Vec<f64> = (0..n).map(|t| phase[t % period] - mean).collect();
    let noise: Vec<f64> = (0..n).map(|t| values[t] - (trend[t] + season[t])).collect();
    Ok(Decomposition {
        trend,
        season,
        noise,
        period,
    })
}

/// Least-squares intercept and slope.
fn line_fit(points: impl Iterator<Item = (f64, f64)> + Clone) -> (f64, f64) {
    let n = points.clone().count() as f64;
    let (sx, sy) = points.clone().fold((0.0, 0.0), |(a, b), (x, y)| (a + x, b + y));
    let (mx, my) = (sx / n, sy / n);
    let (sxy, sxx) = points.fold((0.0, 0.0), |(a, b), (x, y)| {
        (a + (x - mx) * (y - my), b + (x - mx) * (x - mx))
    });
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    (my - slope * mx, slope)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn line_has_no_season() {
        let v: Vec<f64> = (0..200).map(|t| 3.0 + 0.5 * t as f64).collect();
        for p in [2, 7, 10] {
            let d = decompose(&v, p).unwrap();
            let amp = 100.0;
            assert!(d.season.iter().all(|s| s.abs() <= 1e-9 * amp));
            assert!(d.noise.iter().all(|s| s.abs() <= 1e-9 * amp));
        }
    }

    #[test]
    fn recovers_sine_season() {
        let p = 24;
        let v: Vec<f64> = (0..480)
            .map(|t| {
                let t = t as f64;
                10.0 + 0.05 * t + 4.0 * (2.0 * PI * t / p as f64).sin()
            })
            .collect();
        let d = decompose(&v, p).unwrap();
        let inner = p..v.len() - p;
        let err: f64 = inner
            .clone()
            .map(|t| (d.season[t] - 4.0 * (2.0 * PI * t as f64 / p as f64).sin()).powi(2))
            .sum::<f64>();
        let truth: f64 = inner
            .map(|t| (4.0 * (2.0 * PI * t as f64 / p as f64).sin()).powi(2))
            .sum();
        assert!((err / truth).sqrt() < 0.02);
    }

    #[test]
    fn components_add_up() {
        let v: Vec<f64> = (0..100)
            .map(|t| ((t * 37) % 11) as f64 + (t as f64).sqrt())
            .collect();
        let d = decompose(&v, 9).unwrap();
        for (t, vt) in v.iter().enumerate() {
            let sum = d.trend[t] + d.season[t] + d.noise[t];
            assert!((sum - vt).abs() <= 4.0 * f64::EPSILON * vt.abs().max(1.0));
        }
    }

    #[test]
    fn preconditions() {
        assert!(decompose(&[1.0; 10], 1).is_err());
        assert!(decompose(&[1.0; 10], 6).is_err());
    }
}
