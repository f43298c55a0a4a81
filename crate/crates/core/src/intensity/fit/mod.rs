//! Least-squares fitting of catalog expressions to a series interval.

mod bfgs;
mod families;

use std::fmt::Write as _;
use std::ops::Range;

use serde::{Deserialize, Serialize};

pub use families::Family;

use super::decompose::decompose;
use super::period::detect_seasonal_period;
use super::{to_count, IntensityError, IntensitySeries};
use crate::par::{self, Execution};

const MAX_ITERATIONS: usize = 400;

/// A fitted expression over `interval` (half-open, in sample indices).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitModel {
    pub family: Family,
    pub params: Vec<f64>,
    pub interval: (usize, usize),
    pub sse: f64,
    pub r_square: f64,
    pub rmse: f64,
}

impl FitModel {
    fn x_of(&self, i: f64) -> f64 {
        let len = self.interval.1 - self.interval.0;
        (i - self.interval.0 as f64) / (len.max(2) - 1) as f64
    }

    /// Value at sample index `i`; indices outside the interval extrapolate.
    pub fn eval_at(&self, i: usize) -> f64 {
        self.family.eval(self.x_of(i as f64), &self.params)
    }

    pub fn param(&self, name: &str) -> Option<f64> {
        let k = self.family.param_names().iter().position(|n| n == name)?;
        Some(self.params[k])
    }

    /// Compact form `family@start..end:name=value,...`.
    pub fn to_spec(&self) -> String {
        let mut s = format!("{}@{}..{}:", self.family, self.interval.0, self.interval.1);
        for (i, (n, v)) in self.family.param_names().iter().zip(&self.params).enumerate() {
            if i > 0 {
                s.push(',');
            }
            let _ = write!(s, "{n}={v:?}");
        }
        s
    }

    /// Parses [`FitModel::to_spec`] output. Goodness-of-fit fields are unknown
    /// and set to NaN.
    pub fn parse_spec(spec: &str) -> Result<Self, String> {
        let (head, params) = spec
            .trim()
            .split_once(':')
            .ok_or("expected `family@start..end:params`")?;
        let (family, range) = head.split_once('@').ok_or("expected `family@start..end`")?;
        let family: Family = family.parse()?;
        let (a, b) = range.split_once("..").ok_or("expected `start..end`")?;
        let interval = (
            a.trim()
                .parse::<usize>()
                .map_err(|e| format!("interval start: {e}"))?,
            b.trim()
                .parse::<usize>()
                .map_err(|e| format!("interval end: {e}"))?,
        );
        if interval.1 <= interval.0 {
            return Err("empty interval".into());
        }
        let names = family.param_names();
        let mut values = vec![None; names.len()];
        for kv in params.split(',').filter(|s| !s.trim().is_empty()) {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| format!("expected name=value, got `{kv}`"))?;
            let idx = names
                .iter()
                .position(|n| n == k.trim())
                .ok_or_else(|| format!("{family} has no parameter `{}`", k.trim()))?;
            values[idx] = Some(
                v.trim()
                    .parse::<f64>()
                    .map_err(|e| format!("{}: {e}", k.trim()))?,
            );
        }
        let params = values
            .into_iter()
            .zip(&names)
            .map(|(v, n)| v.ok_or_else(|| format!("missing parameter `{n}`")))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self {
            family,
            params,
            interval,
            sse: f64::NAN,
            r_square: f64::NAN,
            rmse: f64::NAN,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitStatus {
    Converged,
    /// Stopped at the iteration limit; the result is still usable.
    IterationLimit,
    /// The objective became non-finite.
    Diverged,
    TooFewPoints,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitCandidate {
    pub family: Family,
    pub status: FitStatus,
    pub iterations: usize,
    pub model: Option<FitModel>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub best: FitModel,
    pub candidates: Vec<FitCandidate>,
}

fn check_interval(n: usize, interval: &Range<usize>) -> Result<(), IntensityError> {
    if interval.start >= interval.end || interval.end > n {
        return Err(IntensityError::Parameter(format!(
            "interval {}..{} is not within a series of {n} points",
            interval.start, interval.end
        )));
    }
    Ok(())
}

/// Fits one family over `values[interval]`, starting from the family's
/// documented initial point.
pub fn fit_family(
    values: &[f64],
    family: Family,
    interval: Range<usize>,
) -> Result<FitCandidate, IntensityError> {
    check_interval(values.len(), &interval)?;
    let y = &values[interval.clone()];
    let m = y.len();
    if m < family.n_params() + 1 {
        return Ok(FitCandidate {
            family,
            status: FitStatus::TooFewPoints,
            iterations: 0,
            model: None,
        });
    }
    let x: Vec<f64> = (0..m).map(|i| i as f64 / (m - 1) as f64).collect();
    let p0 = family.initial_params(&x, y);
    let objective = |p: &[f64], g: &mut [f64]| {
        g.iter_mut().for_each(|v| *v = 0.0);
        let mut gi = vec![0.0; p.len()];
        let mut sse = 0.0;
        for (xi, yi) in x.iter().zip(y) {
            let r = family.eval_grad(*xi, p, &mut gi) - yi;
            sse += r * r;
            for (gk, dk) in g.iter_mut().zip(&gi) {
                *gk += 2.0 * r * dk;
            }
        }
        sse
    };
    let out = bfgs::minimize(objective, &p0, MAX_ITERATIONS);
    if !out.value.is_finite() || out.params.iter().any(|v| !v.is_finite()) {
        return Ok(FitCandidate {
            family,
            status: FitStatus::Diverged,
            iterations: out.iterations,
            model: None,
        });
    }
    let model = metrics(family, out.params, (interval.start, interval.end), y);
    Ok(FitCandidate {
        family,
        status: if out.converged {
            FitStatus::Converged
        } else {
            FitStatus::IterationLimit
        },
        iterations: out.iterations,
        model: Some(model),
    })
}

fn metrics(family: Family, params: Vec<f64>, interval: (usize, usize), y: &[f64]) -> FitModel {
    let mut model = FitModel {
        family,
        params,
        interval,
        sse: 0.0,
        r_square: 0.0,
        rmse: 0.0,
    };
    let pred: Vec<f64> = (interval.0..interval.1).map(|i| model.eval_at(i)).collect();
    let (sse, r_square, rmse) = goodness(y, &pred);
    model.sse = sse;
    model.r_square = r_square;
    model.rmse = rmse;
    model
}

/// Goodness of fixed parameters over `values[interval]`, without fitting.
pub fn evaluate_model(
    values: &[f64],
    family: Family,
    params: Vec<f64>,
    interval: Range<usize>,
) -> Result<FitModel, IntensityError> {
    check_interval(values.len(), &interval)?;
    if params.len() != family.n_params() {
        return Err(IntensityError::Parameter(format!(
            "{family} takes {} parameters, got {}",
            family.n_params(),
            params.len()
        )));
    }
    Ok(metrics(
        family,
        params,
        (interval.start, interval.end),
        &values[interval],
    ))
}

/// SSE, R² and RMSE of the summed `models` against `values[interval]`.
pub fn evaluate_sum(
    values: &[f64],
    models: &[FitModel],
    interval: Range<usize>,
) -> Result<(f64, f64, f64), IntensityError> {
    check_interval(values.len(), &interval)?;
    let pred: Vec<f64> = interval
        .clone()
        .map(|i| models.iter().map(|m| m.eval_at(i)).sum())
        .collect();
    Ok(goodness(&values[interval], &pred))
}

/// SSE, R² and RMSE of a prediction.
pub(crate) fn goodness(y: &[f64], pred: &[f64]) -> (f64, f64, f64) {
    let m = y.len() as f64;
    let mean = y.iter().sum::<f64>() / m;
    let sse: f64 = y.iter().zip(pred).map(|(a, b)| (a - b).powi(2)).sum();
    let sst: f64 = y.iter().map(|a| (a - mean).powi(2)).sum();
    let r_square = if sst > 0.0 {
        1.0 - sse / sst
    } else if sse <= 1e-24 {
        1.0
    } else {
        0.0
    };
    (sse, r_square, (sse / m).sqrt())
}

/// Fits every requested family and keeps the one with the smallest RMSE.
///
/// RMSEs that agree to within rounding count as equal; the family with fewer
/// parameters, then the earlier catalog entry, wins such ties.
pub fn fit(
    values: &[f64],
    families: &[Family],
    interval: Range<usize>,
    mode: Execution,
) -> Result<FitReport, IntensityError> {
    check_interval(values.len(), &interval)?;
    let families = if families.is_empty() {
        Family::all()
    } else {
        families.to_vec()
    };
    let candidates = par::map_slice(mode, &families, |&f| fit_family(values, f, interval.clone()))
        .into_iter()
        .collect::<Result<Vec<_>, _>>()?;
    let amplitude = values[interval.clone()]
        .iter()
        .fold(0.0f64, |a, v| a.max(v.abs()))
        .max(1.0);
    let catalog = Family::all();
    let order = |f: Family| catalog.iter().position(|c| *c == f).unwrap_or(usize::MAX);
    let mut best: Option<&FitModel> = None;
    for m in candidates.iter().filter_map(|c| c.model.as_ref()) {
        best = Some(match best {
            None => m,
            Some(b) => {
                let tie = (m.rmse - b.rmse).abs() <= 1e-9 * m.rmse.max(b.rmse) + 1e-12 * amplitude;
                let better = if tie {
                    (m.family.n_params(), order(m.family)) < (b.family.n_params(), order(b.family))
                } else {
                    m.rmse < b.rmse
                };
                if better {
                    m
                } else {
                    b
                }
            }
        });
    }
    let Some(best) = best.cloned() else {
        let summary = candidates
            .iter()
            .map(|c| format!("{}: {:?}", c.family, c.status))
            .collect::<Vec<_>>()
            .join(", ");
        return Err(IntensityError::NoFit(summary));
    };
    Ok(FitReport { best, candidates })
}

/// Separate fits of the trend and season of a decomposed interval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecomposedFit {
    pub period: usize,
    pub trend: FitModel,
    pub season: FitModel,
    /// Goodness of `trend + season` against the original values.
    pub sse: f64,
    pub r_square: f64,
    pub rmse: f64,
}

impl DecomposedFit {
    pub fn components(&self) -> Vec<FitModel> {
        vec![self.trend.clone(), self.season.clone()]
    }
}

/// Decomposes `values[interval]` and fits its trend and season separately.
///
/// Without an explicit period, the period is detected on the series minus its
/// least-squares line, so that a strong trend does not mask the season. The
/// noise is not modeled.
pub fn fit_decomposed(
    values: &[f64],
    period: Option<usize>,
    families: &[Family],
    interval: Range<usize>,
    mode: Execution,
) -> Result<DecomposedFit, IntensityError> {
    check_interval(values.len(), &interval)?;
    let y = &values[interval.clone()];
    let period = match period {
        Some(p) => p,
        None => detect_seasonal_period(y)?
            .ok_or_else(|| IntensityError::Parameter("no dominant period to decompose by".into()))?,
    };
    let d = decompose(y, period)?;
    let pad = |component: &[f64]| {
        let mut v = vec![0.0; values.len()];
        v[interval.clone()].copy_from_slice(component);
        v
    };
    let trend = fit(&pad(&d.trend), families, interval.clone(), mode)?.best;
    let season = fit(&pad(&d.season), families, interval.clone(), mode)?.best;
    let pred: Vec<f64> = interval
        .clone()
        .map(|i| trend.eval_at(i) + season.eval_at(i))
        .collect();
    let (sse, r_square, rmse) = goodness(y, &pred);
    Ok(DecomposedFit {
        period,
        trend,
        season,
        sse,
        r_square,
        rmse,
    })
}

/// A parameter edit applied before synthesis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Override {
    /// Index into the list of fitted components.
    pub component: usize,
    pub param: String,
    pub op: OverrideOp,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OverrideOp {
    Set(f64),
    Scale(f64),
}

impl Override {
    /// `component:param=value` or `component:param*=factor`.
    pub fn parse(s: &str) -> Result<Self, String> {
        let (c, rest) = s
            .trim()
            .split_once(':')
            .ok_or_else(|| format!("expected `component:param=value`, got `{s}`"))?;
        let component = c
            .trim()
            .parse()
            .map_err(|_| format!("bad component index `{c}`"))?;
        let (param, op) = if let Some((p, v)) = rest.split_once("*=") {
            (
                p,
                OverrideOp::Scale(v.trim().parse().map_err(|_| format!("bad factor `{v}`"))?),
            )
        } else if let Some((p, v)) = rest.split_once('=') {
            (
                p,
                OverrideOp::Set(v.trim().parse().map_err(|_| format!("bad value `{v}`"))?),
            )
        } else {
            return Err(format!("expected `=` or `*=` in `{s}`"));
        };
        Ok(Self {
            component,
            param: param.trim().to_string(),
            op,
        })
    }
}

impl std::fmt::Display for Override {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.op {
            OverrideOp::Set(v) => write!(f, "{}:{}={v:?}", self.component, self.param),
            OverrideOp::Scale(v) => write!(f, "{}:{}*={v:?}", self.component, self.param),
        }
    }
}

/// Evaluates the summed components for `horizon` buckets after applying the
/// overrides, rounding half to even and clamping at zero.
pub fn synthesize_from_fit(
    fits: &[FitModel],
    horizon: usize,
    overrides: &[Override],
    t_s: i64,
    delta_s: f64,
) -> Result<IntensitySeries, IntensityError> {
    let mut fits = fits.to_vec();
    for o in overrides {
        let m = fits
            .get_mut(o.component)
            .ok_or_else(|| IntensityError::Parameter(format!("no fitted component {}", o.component)))?;
        let k = m
            .family
            .param_names()
            .iter()
            .position(|n| *n == o.param)
            .ok_or_else(|| {
                IntensityError::Parameter(format!("{} has no parameter `{}`", m.family, o.param))
            })?;
        match o.op {
            OverrideOp::Set(v) => m.params[k] = v,
            OverrideOp::Scale(f) => m.params[k] *= f,
        }
    }
    let counts = (0..horizon)
        .map(|i| to_count(fits.iter().map(|m| m.eval_at(i)).sum()))
        .collect();
    Ok(IntensitySeries::synthetic(t_s, delta_s, counts))
}
