use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use super::IntensityError;

/// Dominant period of a series, in samples, from the largest peak of the
/// magnitude spectrum of the mean-removed series.
///
/// Returns `None` for aperiodic input: a flat spectrum whose maximum is not
/// above three times its median, or a constant series.
pub fn detect_period(values: &[f64]) -> Result<Option<usize>, IntensityError> {
    let n = values.len();
    if n < 4 {
        return Err(IntensityError::TooShort { needed: 4, found: n });
    }
    let mags = magnitudes(values);
    let (k, max) = mags
        .iter()
        .enumerate()
        .skip(1)
        .fold((0, 0.0), |best, (k, &m)| if m > best.1 { (k, m) } else { best });
    let scale = values
        .iter()
        .fold(0.0f64, |a, v| a.max(v.abs()))
        .max(f64::MIN_POSITIVE);
    if max <= 1e-9 * scale * n as f64 {
        return Ok(None);
    }
    let mut sorted: Vec<f64> = mags[1..].to_vec();
    sorted.sort_by(f64::total_cmp);
    let median = sorted[sorted.len() / 2];
    if max <= 3.0 * median {
        return Ok(None);
    }
    Ok(Some((n as f64 / k as f64).round() as usize))
}

/// Period of the series after removing its least-squares line, so that a
/// strong trend does not mask the season. Periods longer than half the series
/// are discarded.
pub fn detect_seasonal_period(values: &[f64]) -> Result<Option<usize>, IntensityError> {
    Ok(detect_period(&detrend_line(values))?.filter(|p| 2 * p <= values.len()))
}

pub(crate) fn detrend_line(y: &[f64]) -> Vec<f64> {
    let n = y.len() as f64;
    let mx = (n - 1.0) / 2.0;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (i, v) in y.iter().enumerate() {
        sxy += (i as f64 - mx) * (v - my);
        sxx += (i as f64 - mx).powi(2);
    }
    let b = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    y.iter()
        .enumerate()
        .map(|(i, v)| v - my - b * (i as f64 - mx))
        .collect()
}

/// `|X_k|` for `k = 0..=n/2`.
pub(crate) fn magnitudes(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    let mean = values.iter().sum::<f64>() / n as f64;
    let mut buf: Vec<Complex<f64>> = values.iter().map(|&v| Complex::new(v - mean, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    buf[..=n / 2].iter().map(|c| c.norm()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn single_tone() {
        let v: Vec<f64> = (0..500).map(|t| (2.0 * PI * t as f64 / 50.0).sin()).collect();
        let p = detect_period(&v).unwrap().unwrap();
        assert!(p.abs_diff(50) <= 1);
    }

    #[test]
    fn dominant_of_two_tones() {
        let v: Vec<f64> = (0..500)
            .map(|t| {
                let t = t as f64;
                3.0 * (2.0 * PI * t / 50.0).sin() + (2.0 * PI * t / 20.0).sin()
            })
            .collect();
        // the oracle: the bin with the larger amplitude is N/50 = 10
        let mags = magnitudes(&v);
        assert!(mags[10] > mags[25]);
        assert_eq!(detect_period(&v).unwrap(), Some(50));
    }

    #[test]
    fn constant_is_aperiodic() {
        assert_eq!(detect_period(&[4.0; 64]).unwrap(), None);
        assert!(detect_period(&[1.0, 2.0]).is_err());
    }
}
