use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use super::EvalError;

fn check(x: &[f64], y: &[f64]) -> Result<(f64, f64), EvalError> {
    if x.len() != y.len() {
        return Err(EvalError::LengthMismatch(x.len(), y.len()));
    }
    if x.is_empty() {
        return Err(EvalError::EmptySeries);
    }
    let nx = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    let ny = y.iter().map(|v| v * v).sum::<f64>().sqrt();
    if !(nx > 0.0) || !(ny > 0.0) {
        return Err(EvalError::ZeroNorm);
    }
    Ok((nx, ny))
}

/// Circular cross-correlation `cc[w] = Σ_t x[t]·y[(t + w) mod n]`, via FFT.
pub fn cross_correlation(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    let mut planner = FftPlanner::new();
    let fwd = planner.plan_fft_forward(n);
    let inv = planner.plan_fft_inverse(n);
    let mut a: Vec<Complex<f64>> = x.iter().map(|&v| Complex::new(v, 0.0)).collect();
    let mut b: Vec<Complex<f64>> = y.iter().map(|&v| Complex::new(v, 0.0)).collect();
    fwd.process(&mut a);
    fwd.process(&mut b);
    let mut c: Vec<Complex<f64>> = a.iter().zip(&b).map(|(p, q)| p.conj() * q).collect();
    inv.process(&mut c);
    c.iter().map(|v| v.re / n as f64).collect()
}

/// Shape-based distance `1 − max_w cc[w] / (‖x‖·‖y‖)` over circular shifts,
/// in `[0, 2]`.
pub fn sbd(x: &[f64], y: &[f64]) -> Result<f64, EvalError> {
    let (nx, ny) = check(x, y)?;
    let best = cross_correlation(x, y)
        .into_iter()
        .fold(f64::NEG_INFINITY, f64::max);
    Ok((1.0 - best / (nx * ny)).clamp(0.0, 2.0))
}

/// `|‖x‖ − ‖y‖| / max(‖x‖, ‖y‖)`, in `[0, 1]`.
pub fn intensity_distance(x: &[f64], y: &[f64]) -> Result<f64, EvalError> {
    let (nx, ny) = check(x, y)?;
    Ok((nx - ny).abs() / nx.max(ny))
}

/// `α·SBD + (1 − α)·2·D_int`, in `[0, 2]` for `α ∈ [0, 1]`.
pub fn esbd(x: &[f64], y: &[f64], alpha: f64) -> Result<f64, EvalError> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(EvalError::Parameter(format!(
            "alpha must lie in [0, 1], got {alpha}"
        )));
    }
    Ok(alpha * sbd(x, y)? + (1.0 - alpha) * 2.0 * intensity_distance(x, y)?)
}
