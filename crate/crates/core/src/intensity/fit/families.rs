use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::intensity::period::magnitudes;

/// One expression of the fitting catalog. Every expression is written in the
/// normalized abscissa `x ∈ [0, 1]` spanning the fit interval.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum Family {
    /// `Σ_{k=0..n} p_k x^k`
    Poly(u8),
    /// `a0 + Σ_{k=1..n} a_k cos(k w x) + b_k sin(k w x)`
    Fourier(u8),
    /// `Σ_{k=1..n} a_k exp(-((x - b_k) / c_k)²)`
    Gauss(u8),
    /// `a e^(b x)` or `a e^(b x) + c e^(d x)`
    Exp(u8),
    /// `a (1 + x)^b + c`
    Power,
    /// `a sin(b x + c)`
    Sine,
}

impl Family {
    /// The 25 catalog entries in selection order.
    pub fn all() -> Vec<Family> {
        let mut v: Vec<Family> = (1..=9).map(Family::Poly).collect();
        v.extend((1..=8).map(Family::Fourier));
        v.extend((1..=4).map(Family::Gauss));
        v.extend((1..=2).map(Family::Exp));
        v.push(Family::Power);
        v.push(Family::Sine);
        v
    }

    pub fn n_params(self) -> usize {
        match self {
            Family::Poly(n) => n as usize + 1,
            Family::Fourier(n) => 2 * n as usize + 2,
            Family::Gauss(n) => 3 * n as usize,
            Family::Exp(n) => 2 * n as usize,
            Family::Power | Family::Sine => 3,
        }
    }

    pub fn param_names(self) -> Vec<String> {
        match self {
            Family::Poly(n) => (0..=n).map(|k| format!("p{k}")).collect(),
            Family::Fourier(n) => {
                let mut v = vec!["a0".to_string()];
                for k in 1..=n {
                    v.push(format!("a{k}"));
                    v.push(format!("b{k}"));
                }
                v.push("w".into());
                v
            }
            Family::Gauss(n) => (1..=n)
                .flat_map(|k| [format!("a{k}"), format!("b{k}"), format!("c{k}")])
                .collect(),
            Family::Exp(1) => vec!["a".into(), "b".into()],
            Family::Exp(_) => vec!["a".into(), "b".into(), "c".into(), "d".into()],
            Family::Power | Family::Sine => vec!["a".into(), "b".into(), "c".into()],
        }
    }

    pub fn expression(self) -> String {
        match self {
            Family::Poly(n) => format!("sum(p_k * x^k, k=0..{n})"),
            Family::Fourier(n) => format!("a0 + sum(a_k*cos(k*w*x) + b_k*sin(k*w*x), k=1..{n})"),
            Family::Gauss(n) => format!("sum(a_k*exp(-((x-b_k)/c_k)^2), k=1..{n})"),
            Family::Exp(1) => "a*exp(b*x)".into(),
            Family::Exp(_) => "a*exp(b*x) + c*exp(d*x)".into(),
            Family::Power => "a*(1+x)^b + c".into(),
            Family::Sine => "a*sin(b*x + c)".into(),
        }
    }

    /// Whether the expression is linear in all parameters.
    pub fn is_linear(self) -> bool {
        matches!(self, Family::Poly(_))
    }

    pub fn eval(self, x: f64, p: &[f64]) -> f64 {
        match self {
            Family::Poly(_) => p.iter().rev().fold(0.0, |acc, c| acc * x + c),
            Family::Fourier(n) => {
                let w = p[p.len() - 1];
                let mut s = p[0];
                for k in 1..=n as usize {
                    let (sn, cs) = (k as f64 * w * x).sin_cos();
                    s += p[2 * k - 1] * cs + p[2 * k] * sn;
                }
                s
            }
            Family::Gauss(_) => p
                .chunks_exact(3)
                .map(|g| {
                    let z = (x - g[1]) / g[2];
                    g[0] * (-z * z).exp()
                })
                .sum(),
            Family::Exp(_) => p.chunks_exact(2).map(|t| t[0] * (t[1] * x).exp()).sum(),
            Family::Power => p[0] * (1.0 + x).powf(p[1]) + p[2],
            Family::Sine => p[0] * (p[1] * x + p[2]).sin(),
        }
    }

    /// Value and gradient with respect to the parameters.
    pub fn eval_grad(self, x: f64, p: &[f64], g: &mut [f64]) -> f64 {
        match self {
            Family::Poly(_) => {
                let mut xk = 1.0;
                for gk in g.iter_mut() {
                    *gk = xk;
                    xk *= x;
                }
                self.eval(x, p)
            }
            Family::Fourier(n) => {
                let w = p[p.len() - 1];
                let mut s = p[0];
                g[0] = 1.0;
                let mut dw = 0.0;
                for k in 1..=n as usize {
                    let kf = k as f64;
                    let (sn, cs) = (kf * w * x).sin_cos();
                    let (a, b) = (p[2 * k - 1], p[2 * k]);
                    s += a * cs + b * sn;
                    g[2 * k - 1] = cs;
                    g[2 * k] = sn;
                    dw += kf * x * (b * cs - a * sn);
                }
                g[p.len() - 1] = dw;
                s
            }
            Family::Gauss(_) => {
                let mut s = 0.0;
                for (gp, gg) in p.chunks_exact(3).zip(g.chunks_exact_mut(3)) {
                    let (a, b, c) = (gp[0], gp[1], gp[2]);
                    let z = (x - b) / c;
                    let e = (-z * z).exp();
                    s += a * e;
                    gg[0] = e;
                    gg[1] = a * e * 2.0 * z / c;
                    gg[2] = a * e * 2.0 * z * z / c;
                }
                s
            }
            Family::Exp(_) => {
                let mut s = 0.0;
                for (tp, tg) in p.chunks_exact(2).zip(g.chunks_exact_mut(2)) {
                    let e = (tp[1] * x).exp();
                    s += tp[0] * e;
                    tg[0] = e;
                    tg[1] = tp[0] * x * e;
                }
                s
            }
            Family::Power => {
                let base = (1.0 + x).powf(p[1]);
                g[0] = base;
                g[1] = p[0] * base * (1.0 + x).ln();
                g[2] = 1.0;
                p[0] * base + p[2]
            }
            Family::Sine => {
                let (sn, cs) = (p[1] * x + p[2]).sin_cos();
                g[0] = sn;
                g[1] = p[0] * x * cs;
                g[2] = p[0] * cs;
                p[0] * sn
            }
        }
    }

    /// Starting point for the optimizer.
    ///
    /// * polynomials: the closed-form least-squares solution;
    /// * Fourier: `w` from the dominant FFT bin, coefficients by least squares
    ///   for that `w`;
    /// * sine: the same frequency, amplitude and phase by least squares;
    /// * Gaussians: repeatedly take the largest residual peak, its location and
    ///   its half-maximum width;
    /// * exponentials: a log-linear fit when the data are positive;
    /// * power: `b = 1` with `a`, `c` by least squares.
    pub fn initial_params(self, x: &[f64], y: &[f64]) -> Vec<f64> {
        match self {
            Family::Poly(n) => lstsq(x, y, n as usize + 1, |x, k| x.powi(k as i32)),
            Family::Fourier(n) => {
                let w = dominant_omega(y);
                let n = n as usize;
                let coef = lstsq(x, y, 2 * n + 1, |x, j| {
                    if j == 0 {
                        1.0
                    } else {
                        let k = j.div_ceil(2) as f64;
                        if j % 2 == 1 {
                            (k * w * x).cos()
                        } else {
                            (k * w * x).sin()
                        }
                    }
                });
                let mut p = coef;
                p.push(w);
                p
            }
            Family::Sine => {
                let w = dominant_omega(y);
                let ab = lstsq(x, y, 2, |x, j| if j == 0 { (w * x).sin() } else { (w * x).cos() });
                vec![ab[0].hypot(ab[1]), w, ab[1].atan2(ab[0])]
            }
            Family::Gauss(n) => {
                let mut r = y.to_vec();
                let mut p = Vec::new();
                let span = (x[x.len() - 1] - x[0]).abs().max(1e-9);
                for _ in 0..n {
                    let (i, _) =
                        r.iter().enumerate().fold(
                            (0, 0.0f64),
                            |b, (i, v)| if v.abs() > b.1.abs() { (i, *v) } else { b },
                        );
                    let a = r[i];
                    let half = a.abs() / 2.0;
                    let mut lo = i;
                    while lo > 0 && r[lo].abs() > half {
                        lo -= 1;
                    }
                    let mut hi = i;
                    while hi + 1 < r.len() && r[hi].abs() > half {
                        hi += 1;
                    }
                    let fwhm = (x[hi] - x[lo]).abs().max(span / x.len() as f64);
                    let c = fwhm / (2.0 * std::f64::consts::LN_2.sqrt());
                    let g = [a, x[i], c];
                    for (rk, &xk) in r.iter_mut().zip(x) {
                        *rk -= Family::Gauss(1).eval(xk, &g);
                    }
                    p.extend(g);
                }
                p
            }
            Family::Exp(n) => {
                let (a, b) = if y.iter().all(|&v| v > 0.0) {
                    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
                    let c = lstsq(x, &ly, 2, |x, k| x.powi(k as i32));
                    (c[0].exp(), c[1])
                } else {
                    (y.iter().sum::<f64>() / y.len() as f64, 0.0)
                };
                if n == 1 {
                    vec![a, b]
                } else {
                    let d = if b.abs() < 1e-6 { 1.0 } else { 0.5 * b };
                    vec![0.5 * a, b, 0.5 * a, d]
                }
            }
            Family::Power => {
                let c = lstsq(x, y, 2, |x, k| if k == 0 { 1.0 + x } else { 1.0 });
                vec![c[0], 1.0, c[1]]
            }
        }
    }
}

/// Least squares for `y ≈ Σ_j c_j basis(x, j)` via SVD.
fn lstsq(x: &[f64], y: &[f64], n: usize, basis: impl Fn(f64, usize) -> f64) -> Vec<f64> {
    let a = DMatrix::from_fn(x.len(), n, |i, j| basis(x[i], j));
    let b = DVector::from_column_slice(y);
    let svd = a.svd(true, true);
    match svd.solve(&b, 1e-12) {
        Ok(c) if c.iter().all(|v| v.is_finite()) => c.iter().copied().collect(),
        _ => vec![0.0; n],
    }
}

/// Angular frequency, in units of the normalized abscissa, of the largest
/// spectral peak.
fn dominant_omega(y: &[f64]) -> f64 {
    let m = y.len();
    let mags = magnitudes(y);
    let k = mags
        .iter()
        .enumerate()
        .skip(1)
        .fold((1, 0.0), |b, (k, &v)| if v > b.1 { (k, v) } else { b })
        .0;
    2.0 * std::f64::consts::PI * k as f64 * (m.max(2) - 1) as f64 / m as f64
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Family::Poly(n) => write!(f, "poly{n}"),
            Family::Fourier(n) => write!(f, "fourier{n}"),
            Family::Gauss(n) => write!(f, "gauss{n}"),
            Family::Exp(n) => write!(f, "exp{n}"),
            Family::Power => write!(f, "power"),
            Family::Sine => write!(f, "sine"),
        }
    }
}

impl FromStr for Family {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let num = |prefix: &str, max: u8| -> Option<u8> {
            s.strip_prefix(prefix)?
                .parse()
                .ok()
                .filter(|n| (1..=max).contains(n))
        };
        match s {
            "power" => return Ok(Family::Power),
            "sine" => return Ok(Family::Sine),
            _ => {}
        }
        num("poly", 9)
            .map(Family::Poly)
            .or_else(|| num("fourier", 8).map(Family::Fourier))
            .or_else(|| num("gauss", 4).map(Family::Gauss))
            .or_else(|| num("exp", 2).map(Family::Exp))
            .ok_or_else(|| format!("unknown fitting family `{s}`"))
    }
}

impl From<Family> for String {
    fn from(f: Family) -> String {
        f.to_string()
    }
}

impl TryFrom<String> for Family {
    type Error = String;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}
