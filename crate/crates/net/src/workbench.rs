//! Local JSON API backing the interactive fitting workbench. All numbers come
//! from `lws_core::intensity`; payload schemas are listed in
//! `docs/workbench-api.md`.

use std::ops::Range;
use std::sync::{Arc, Mutex};
use std::time::Instant;

use axum::extract::State;
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use lws_core::dsl::{serialize_dsl, BehaviorSpec, DriverSpec, IntensitySpec, ThinkTimeSpec, WorkloadSpecDoc};
use lws_core::intensity::{
    decompose, detect_seasonal_period, evaluate_model, evaluate_sum, fit, fit_decomposed, Family, FitModel,
    FitStatus, IntensityError, Override, SeriesTable,
};
use lws_core::par::Execution;
use serde::{Deserialize, Serialize};

use crate::{NetError, Served};

#[derive(Debug, Clone)]
struct Loaded {
    values: Vec<f64>,
}

#[derive(Default)]
struct WorkbenchState {
    series: Mutex<Option<Loaded>>,
}

type Shared = Arc<WorkbenchState>;

#[derive(Debug, Serialize)]
pub struct ApiError {
    pub error: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub line: Option<usize>,
}

struct Failure(StatusCode, ApiError);

impl IntoResponse for Failure {
    fn into_response(self) -> Response {
        (self.0, Json(self.1)).into_response()
    }
}

impl From<IntensityError> for Failure {
    fn from(e: IntensityError) -> Self {
        let line = match &e {
            IntensityError::Syntax { line, .. } => Some(*line),
            _ => None,
        };
        Failure(
            StatusCode::UNPROCESSABLE_ENTITY,
            ApiError {
                error: e.to_string(),
                line,
            },
        )
    }
}

fn bad_request(msg: impl Into<String>) -> Failure {
    Failure(
        StatusCode::BAD_REQUEST,
        ApiError {
            error: msg.into(),
            line: None,
        },
    )
}

type ApiResult<T> = Result<Json<T>, Failure>;

fn loaded(state: &Shared) -> Result<Loaded, Failure> {
    state.series.lock().expect("state lock").clone().ok_or_else(|| {
        Failure(
            StatusCode::CONFLICT,
            ApiError {
                error: "no series loaded; POST /series first".into(),
                line: None,
            },
        )
    })
}

fn interval(given: Option<[usize; 2]>, n: usize) -> Range<usize> {
    match given {
        Some([a, b]) => a..b,
        None => 0..n,
    }
}

#[derive(Debug, Deserialize)]
pub struct SeriesRequest {
    /// Series file contents: optional `# delta=… t_s=…` header, then one
    /// `value` or `time value` row per bucket.
    pub text: String,
}

#[derive(Debug, Serialize, Deserialize, PartialEq)]
pub struct SeriesInfo {
    pub points: usize,
    pub delta_s: Option<f64>,
    pub total: f64,
    pub min: f64,
    pub max: f64,
    pub period: Option<usize>,
}

async fn post_series(State(state): State<Shared>, Json(req): Json<SeriesRequest>) -> ApiResult<SeriesInfo> {
    let table = SeriesTable::parse(&req.text)?;
    let values = table.values;
    let period = if values.len() >= 4 {
        detect_seasonal_period(&values)?
    } else {
        None
    };
    let info = SeriesInfo {
        points: values.len(),
        delta_s: table.delta_s,
        total: values.iter().sum(),
        min: values.iter().copied().fold(f64::INFINITY, f64::min),
        max: values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        period,
    };
    *state.series.lock().expect("state lock") = Some(Loaded { values });
    Ok(Json(info))
}

#[derive(Debug, Serialize, Deserialize, PartialEq)]
pub struct PeriodInfo {
    pub period: Option<usize>,
}

async fn get_period(State(state): State<Shared>) -> ApiResult<PeriodInfo> {
    let s = loaded(&state)?;
    Ok(Json(PeriodInfo {
        period: detect_seasonal_period(&s.values)?,
    }))
}

#[derive(Debug, Default, Deserialize)]
pub struct DecomposeRequest {
    pub period: Option<usize>,
    pub interval: Option<[usize; 2]>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct DecomposeResponse {
    pub period: usize,
    pub interval: [usize; 2],
    pub trend: Vec<f64>,
    pub season: Vec<f64>,
    pub noise: Vec<f64>,
}

async fn post_decompose(
    State(state): State<Shared>,
    Json(req): Json<DecomposeRequest>,
) -> ApiResult<DecomposeResponse> {
    let s = loaded(&state)?;
    let iv = interval(req.interval, s.values.len());
    let y = s
        .values
        .get(iv.clone())
        .filter(|y| !y.is_empty())
        .ok_or_else(|| bad_request("interval out of range"))?;
    let period = match req.period {
        Some(p) => p,
        None => detect_seasonal_period(y)?.ok_or_else(|| bad_request("no dominant period; give one"))?,
    };
    let d = decompose(y, period)?;
    Ok(Json(DecomposeResponse {
        period,
        interval: [iv.start, iv.end],
        trend: d.trend,
        season: d.season,
        noise: d.noise,
    }))
}

/// A fitted or edited expression.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ModelJson {
    pub family: String,
    pub params: Vec<f64>,
    pub interval: [usize; 2],
    /// Filled in responses.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub param_names: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spec: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sse: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r_square: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rmse: Option<f64>,
}

fn finite(v: f64) -> Option<f64> {
    v.is_finite().then_some(v)
}

impl From<&FitModel> for ModelJson {
    fn from(m: &FitModel) -> Self {
        Self {
            family: m.family.to_string(),
            params: m.params.clone(),
            interval: [m.interval.0, m.interval.1],
            param_names: m.family.param_names(),
            spec: Some(m.to_spec()),
            sse: finite(m.sse),
            r_square: finite(m.r_square),
            rmse: finite(m.rmse),
        }
    }
}

impl ModelJson {
    fn to_model(&self) -> Result<FitModel, Failure> {
        let family: Family = self.family.parse().map_err(bad_request)?;
        if self.params.len() != family.n_params() {
            return Err(bad_request(format!(
                "{family} takes {} parameters",
                family.n_params()
            )));
        }
        if self.interval[1] <= self.interval[0] {
            return Err(bad_request("empty interval"));
        }
        Ok(FitModel {
            family,
            params: self.params.clone(),
            interval: (self.interval[0], self.interval[1]),
            sse: f64::NAN,
            r_square: f64::NAN,
            rmse: f64::NAN,
        })
    }
}

#[derive(Debug, Default, Deserialize)]
pub struct FitRequest {
    pub interval: Option<[usize; 2]>,
    /// Families to try; empty or absent means all 25.
    #[serde(default)]
    pub families: Vec<String>,
    /// Fit trend and season separately.
    #[serde(default)]
    pub decompose: bool,
    pub period: Option<usize>,
    /// Manual mode: score these expressions instead of fitting.
    #[serde(default)]
    pub models: Vec<ModelJson>,
    /// Edits applied to the fitted or given models before scoring.
    #[serde(default)]
    pub overrides: Vec<String>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct CandidateJson {
    pub family: String,
    pub status: FitStatus,
    pub rmse: Option<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct FitResponse {
    /// `auto`, `decomposed` or `manual`.
    pub mode: String,
    pub interval: [usize; 2],
    pub models: Vec<ModelJson>,
    pub sse: f64,
    pub r_square: f64,
    pub rmse: f64,
    /// Sum of the models at each index of the interval.
    pub overlay: Vec<f64>,
    #[serde(default)]
    pub candidates: Vec<CandidateJson>,
    pub period: Option<usize>,
    pub elapsed_ms: f64,
}

fn apply(models: &mut [FitModel], overrides: &[String]) -> Result<(), Failure> {
    for o in overrides {
        let o = Override::parse(o).map_err(bad_request)?;
        let m = models
            .get_mut(o.component)
            .ok_or_else(|| bad_request(format!("no component {}", o.component)))?;
        let k = m
            .family
            .param_names()
            .iter()
            .position(|n| *n == o.param)
            .ok_or_else(|| bad_request(format!("{} has no parameter `{}`", m.family, o.param)))?;
        m.params[k] = match o.op {
            lws_core::intensity::OverrideOp::Set(v) => v,
            lws_core::intensity::OverrideOp::Scale(f) => m.params[k] * f,
        };
    }
    Ok(())
}

async fn post_fit(State(state): State<Shared>, Json(req): Json<FitRequest>) -> ApiResult<FitResponse> {
    let started = Instant::now();
    let s = loaded(&state)?;
    let values = s.values;
    let iv = interval(req.interval, values.len());
    let families = req
        .families
        .iter()
        .map(|f| f.parse::<Family>().map_err(bad_request))
        .collect::<Result<Vec<_>, _>>()?;
    let (mode, mut models, candidates, period) = if !req.models.is_empty() {
        let models = req
            .models
            .iter()
            .map(ModelJson::to_model)
            .collect::<Result<Vec<_>, _>>()?;
        ("manual", models, Vec::new(), None)
    } else if req.decompose {
        let d = fit_decomposed(&values, req.period, &families, iv.clone(), Execution::default())?;
        ("decomposed", d.components(), Vec::new(), Some(d.period))
    } else {
        let r = fit(&values, &families, iv.clone(), Execution::default())?;
        let candidates = r
            .candidates
            .iter()
            .map(|c| CandidateJson {
                family: c.family.to_string(),
                status: c.status,
                rmse: c.model.as_ref().map(|m| m.rmse),
            })
            .collect();
        ("auto", vec![r.best], candidates, None)
    };
    if !req.overrides.is_empty() || mode == "manual" {
        apply(&mut models, &req.overrides)?;
        models = models
            .into_iter()
            .map(|m| {
                let (a, b) = m.interval;
                evaluate_model(&values, m.family, m.params, a..b)
            })
            .collect::<Result<_, _>>()?;
    }
    let (sse, r_square, rmse) = evaluate_sum(&values, &models, iv.clone())?;
    let overlay = iv
        .clone()
        .map(|i| models.iter().map(|m| m.eval_at(i)).sum())
        .collect();
    Ok(Json(FitResponse {
        mode: mode.into(),
        interval: [iv.start, iv.end],
        models: models.iter().map(ModelJson::from).collect(),
        sse,
        r_square,
        rmse,
        overlay,
        candidates,
        period,
        elapsed_ms: started.elapsed().as_secs_f64() * 1e3,
    }))
}

#[derive(Debug, Serialize, Deserialize, PartialEq)]
pub struct FamilyJson {
    pub name: String,
    pub expression: String,
    pub params: Vec<String>,
}

async fn get_families() -> Json<Vec<FamilyJson>> {
    Json(
        Family::all()
            .into_iter()
            .map(|f| FamilyJson {
                name: f.to_string(),
                expression: f.expression(),
                params: f.param_names(),
            })
            .collect(),
    )
}

#[derive(Debug, Default, Deserialize)]
pub struct ExportRequest {
    pub models: Vec<ModelJson>,
    #[serde(default)]
    pub overrides: Vec<String>,
    /// Series file the document should refer to.
    pub series: Option<String>,
    pub horizon: Option<usize>,
    /// Behavior source of the exported document; `original.log` by default.
    pub logs: Option<String>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ExportResponse {
    /// A complete `.lws` document whose intensity section carries the models.
    pub text: String,
}

async fn post_export(Json(req): Json<ExportRequest>) -> ApiResult<ExportResponse> {
    if req.models.is_empty() {
        return Err(bad_request("nothing to export: no models"));
    }
    let models = req
        .models
        .iter()
        .map(|m| m.to_model().map(|m| m.to_spec()))
        .collect::<Result<Vec<_>, _>>()?;
    let overrides = req
        .overrides
        .iter()
        .map(|o| Override::parse(o).map_err(bad_request))
        .collect::<Result<Vec<_>, _>>()?;
    if req.horizon == Some(0) {
        return Err(bad_request("horizon must be at least 1"));
    }
    let doc = WorkloadSpecDoc {
        behavior: BehaviorSpec {
            model: None,
            logs: Some(req.logs.unwrap_or_else(|| "original.log".into())),
            clusters: 1,
            max_len: 10_000,
        },
        intensity: IntensitySpec::Fitting {
            series: req.series,
            fits: None,
            models,
            families: Vec::new(),
            decompose: true,
            period: None,
            horizon: req.horizon,
            overrides,
        },
        thinktime: ThinkTimeSpec::default(),
        driver: DriverSpec::default(),
    };
    Ok(Json(ExportResponse {
        text: serialize_dsl(&doc),
    }))
}

pub fn workbench_router() -> Router {
    Router::new()
        .route("/series", post(post_series))
        .route("/period", get(get_period))
        .route("/decompose", post(post_decompose))
        .route("/fit", post(post_fit))
        .route("/families", get(get_families))
        .route("/export", post(post_export))
        .with_state(Shared::default())
}

/// Serves the workbench API on `127.0.0.1:port`.
pub async fn serve_workbench(port: u16) -> Result<Served, NetError> {
    Served::start(workbench_router(), "127.0.0.1", port).await
}
