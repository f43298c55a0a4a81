use std::f64::consts::PI;
use std::time::Instant;

use lws_core::dsl::{parse_dsl, IntensitySpec};
use lws_core::intensity::{fit, SeriesTable};
use lws_core::par::Execution;
use lws_net::serve_workbench;
use serde_json::{json, Value};

struct Api {
    base: String,
    client: reqwest::Client,
}

impl Api {
    async fn post(&self, path: &str, body: Value) -> (u16, Value) {
        let r = self
            .client
            .post(format!("{}{path}", self.base))
            .json_body(&body)
            .send()
            .await
            .unwrap();
        (
            r.status().as_u16(),
            serde_json::from_str(&r.text().await.unwrap()).unwrap(),
        )
    }

    async fn get(&self, path: &str) -> (u16, Value) {
        let r = self
            .client
            .get(format!("{}{path}", self.base))
            .send()
            .await
            .unwrap();
        (
            r.status().as_u16(),
            serde_json::from_str(&r.text().await.unwrap()).unwrap(),
        )
    }
}

trait JsonBody {
    fn json_body(self, v: &Value) -> Self;
}

impl JsonBody for reqwest::RequestBuilder {
    fn json_body(self, v: &Value) -> Self {
        self.header("content-type", "application/json")
            .body(v.to_string())
    }
}

fn planted_series() -> String {
    let mut text = String::from("# delta=600\n");
    for i in 0..1296 {
        let v = 40.0 + 0.01 * i as f64 + 25.0 * (2.0 * PI * i as f64 / 144.0).sin();
        text.push_str(&format!("{}\n", v.round()));
    }
    text
}

async fn api() -> (lws_net::Served, Api) {
    let served = serve_workbench(0).await.unwrap();
    let api = Api {
        base: served.url(),
        client: reqwest::Client::builder().no_proxy().build().unwrap(),
    };
    (served, api)
}

#[tokio::test]
async fn import_detects_planted_period() {
    let (served, api) = api().await;
    let (code, _) = api.get("/period").await;
    assert_eq!(code, 409);
    let (code, info) = api.post("/series", json!({ "text": planted_series() })).await;
    assert_eq!(code, 200, "{info}");
    assert_eq!(info["points"], 1296);
    assert_eq!(info["period"], 144);
    let (_, again) = api.post("/series", json!({ "text": planted_series() })).await;
    assert_eq!(again, info);
    assert_eq!(api.get("/period").await.1["period"], 144);

    let (code, err) = api.post("/series", json!({ "text": "" })).await;
    assert_eq!(code, 422);
    assert!(err["error"].as_str().unwrap().contains("no data rows"));
    let (code, err) = api.post("/series", json!({ "text": "1\n2\nthree\n" })).await;
    assert_eq!(code, 422);
    assert_eq!(err["line"], 3);

    let (code, d) = api.post("/decompose", json!({})).await;
    assert_eq!(code, 200);
    assert_eq!(d["period"], 144);
    assert_eq!(d["trend"].as_array().unwrap().len(), 1296);
    served.stop().await.unwrap();
}

#[tokio::test]
async fn families_catalog() {
    let (served, api) = api().await;
    let (_, f) = api.get("/families").await;
    let f = f.as_array().unwrap();
    assert_eq!(f.len(), 25);
    assert!(f
        .iter()
        .any(|x| x["name"] == "fourier1" && x["params"].as_array().unwrap().len() == 4));
    served.stop().await.unwrap();
}

#[tokio::test]
async fn auto_fit_matches_core_and_manual_edits_respond() {
    let (served, api) = api().await;
    let text: String = (0..200)
        .map(|i| format!("{}\n", 3.0 + 0.5 * i as f64 + 0.01 * (i * i) as f64))
        .collect();
    api.post("/series", json!({ "text": text })).await;
    let (code, r) = api.post("/fit", json!({})).await;
    assert_eq!(code, 200, "{r}");
    assert_eq!(r["mode"], "auto");
    let values = SeriesTable::parse(&text).unwrap().values;
    let core = fit(&values, &[], 0..values.len(), Execution::Sequential)
        .unwrap()
        .best;
    assert_eq!(r["models"][0]["spec"].as_str().unwrap(), core.to_spec());
    assert!(core.family.to_string().starts_with("poly"));
    assert!((r["r_square"].as_f64().unwrap() - 1.0).abs() < 1e-9);
    assert_eq!(r["candidates"].as_array().unwrap().len(), 25);

    // A sine, then the amplitude doubled by hand.
    let wave: String = (0..2000)
        .map(|i| format!("{}\n", 10.0 * (2.0 * PI * i as f64 / 250.0).sin()))
        .collect();
    api.post("/series", json!({ "text": wave })).await;
    let (_, fitted) = api.post("/fit", json!({ "families": ["fourier1"] })).await;
    let mut model = fitted["models"][0].clone();
    let peak = |v: &Value| {
        v["overlay"]
            .as_array()
            .unwrap()
            .iter()
            .map(|x| x.as_f64().unwrap())
            .fold(0.0, f64::max)
    };
    let names: Vec<String> = model["param_names"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_str().unwrap().to_string())
        .collect();
    let params = model["params"].as_array_mut().unwrap();
    for (p, n) in params.iter_mut().zip(&names) {
        if *n != "w" {
            *p = json!(p.as_f64().unwrap() * 2.0);
        }
    }
    let t = Instant::now();
    let (code, manual) = api.post("/fit", json!({ "models": [model] })).await;
    let elapsed = t.elapsed();
    assert_eq!(code, 200, "{manual}");
    assert_eq!(manual["mode"], "manual");
    assert!((peak(&manual) / peak(&fitted) - 2.0).abs() < 1e-9);
    assert!(manual["rmse"].as_f64().unwrap() > fitted["rmse"].as_f64().unwrap());
    assert!(elapsed.as_millis() <= 200, "manual refit took {elapsed:?}");

    let (_, via) = api
        .post(
            "/fit",
            json!({ "families": ["fourier1"], "overrides": ["0:a1*=2", "0:b1*=2", "0:a0*=2"] }),
        )
        .await;
    assert!((peak(&via) - peak(&manual)).abs() < 1e-9);
    let (code, _) = api
        .post(
            "/fit",
            json!({ "families": ["fourier1"], "overrides": ["0:zz=1"] }),
        )
        .await;
    assert_eq!(code, 400);
    served.stop().await.unwrap();
}

#[tokio::test]
async fn export_parses_without_warnings() {
    let (served, api) = api().await;
    api.post("/series", json!({ "text": planted_series() })).await;
    let (code, fitted) = api
        .post(
            "/fit",
            json!({ "decompose": true, "families": ["poly1", "fourier1"] }),
        )
        .await;
    assert_eq!(code, 200, "{fitted}");
    assert_eq!(fitted["period"], 144);
    assert!(fitted["r_square"].as_f64().unwrap() > 0.95);
    let body = json!({ "models": fitted["models"], "series": "dataset_b.txt", "overrides": ["1:a1*=2"] });
    let (code, a) = api.post("/export", body.clone()).await;
    assert_eq!(code, 200, "{a}");
    let (_, b) = api.post("/export", body).await;
    assert_eq!(a, b);
    let text = a["text"].as_str().unwrap();
    let parsed = parse_dsl(text).unwrap();
    assert!(parsed.warnings.is_empty(), "{:?}", parsed.warnings);
    let IntensitySpec::Fitting {
        models, overrides, ..
    } = &parsed.doc.intensity
    else {
        panic!("{text}")
    };
    assert_eq!(models.len(), 2);
    assert_eq!(models[0], fitted["models"][0]["spec"].as_str().unwrap());
    assert_eq!(overrides[0].to_string(), "1:a1*=2.0");
    let (code, _) = api.post("/export", json!({ "models": [] })).await;
    assert_eq!(code, 400);
    served.stop().await.unwrap();
}
