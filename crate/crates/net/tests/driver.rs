use std::collections::BTreeMap;

use lws_core::behavior::{Corpus, RelationalModel};
use lws_core::harness::{HarnessConfig, Latency, Profile, ScriptedUser};
use lws_core::ingest::{ingest_str, LogFormat};
use lws_core::intensity::{IntensitySeries, ThinkTimeModel};
use lws_core::par::Execution;
use lws_core::plan::{build_plan, PlanOptions};
use lws_net::{execute_plan, run_scripted, serve_harness, DriverOptions, LiveOptions};

fn shop_models() -> Vec<RelationalModel> {
    let seqs = vec![
        vec!["home", "serving_product_page", "adding_to_cart", "placing_order"],
        vec!["home", "setting_currency", "serving_product_page", "home"],
        vec![
            "home",
            "view_user_cart",
            "serving_product_page",
            "adding_to_cart",
            "view_user_cart",
        ],
    ];
    let mut c = Corpus::from_label_sequences(&seqs);
    let labels = HarnessConfig::default().catalog().labels();
    let remap: Vec<usize> = c
        .types
        .iter()
        .map(|t| labels.iter().position(|l| l == t).unwrap())
        .collect();
    c.sequences = c
        .sequences
        .iter()
        .map(|s| s.iter().map(|&i| remap[i]).collect())
        .collect();
    c.types = labels;
    vec![RelationalModel::learn(&c, Execution::Sequential).unwrap()]
}

#[tokio::test(flavor = "multi_thread", worker_threads = 4)]
async fn plan_runs_against_the_harness() {
    let harness = HarnessConfig {
        port: 0,
        latency: Latency::Fixed { ms: 1.0 },
        ..Default::default()
    };
    let catalog = harness.catalog();
    let server = serve_harness(harness, 9).await.unwrap();
    let series = IntensitySeries::synthetic(0, 1.0, vec![3, 0, 2, 4, 1]);
    let ttm = ThinkTimeModel::with_bandwidth(&[0.5, 1.0, 2.0], 0.1).unwrap();
    let plan = build_plan(
        &shop_models(),
        &series,
        &ttm,
        &PlanOptions {
            seed: 3,
            ..Default::default()
        },
    )
    .unwrap();
    let opts = DriverOptions {
        time_scale: 10.0,
        ..Default::default()
    };
    let report = execute_plan(&plan, &catalog, &server.url(), &opts).await.unwrap();
    let logs = server.ndjson();
    server.stop().await.unwrap();

    let planned: usize = plan.sessions.iter().map(|s| s.behaviors.len()).sum();
    assert_eq!(report.summary.sent, planned);
    assert_eq!(
        report.summary.ok,
        planned,
        "{:?}",
        report.records.iter().find(|r| !r.is_ok())
    );
    assert_eq!(
        report.summary.skew_histogram.iter().sum::<usize>(),
        plan.sessions.len()
    );
    assert_eq!(report.summary.late_sessions, 0, "{:?}", report.summary);
    let redirects = |b: &str| u32::from(matches!(b, "setting_currency" | "adding_to_cart"));
    assert!(report
        .records
        .iter()
        .all(|r| r.redirects == redirects(&r.behavior_type)));

    let ing = ingest_str(&logs, &LogFormat::default()).unwrap();
    let by_id: BTreeMap<&str, _> = ing.traces.iter().map(|t| (t.session_id.as_str(), t)).collect();
    assert_eq!(by_id.len(), plan.sessions.len());
    for s in &plan.sessions {
        let got: Vec<&str> = by_id[s.session_id.as_str()].user_behaviors().collect();
        assert_eq!(got, s.behaviors.iter().map(String::as_str).collect::<Vec<_>>());
    }
}

#[tokio::test]
async fn unreachable_target_is_recorded() {
    let series = IntensitySeries::synthetic(0, 1.0, vec![1]);
    let ttm = ThinkTimeModel::with_bandwidth(&[1.0], 0.0).unwrap();
    let plan = build_plan(&shop_models(), &series, &ttm, &PlanOptions::default()).unwrap();
    let opts = DriverOptions {
        time_scale: 100.0,
        lead: std::time::Duration::ZERO,
        ..Default::default()
    };
    let r = execute_plan(
        &plan,
        &HarnessConfig::default().catalog(),
        "http://127.0.0.1:9",
        &opts,
    )
    .await
    .unwrap();
    assert_eq!(r.summary.ok, 0);
    assert_eq!(r.summary.errored, r.summary.sent);
    assert!(
        execute_plan(&plan, &HarnessConfig::default().catalog(), "ftp://x", &opts)
            .await
            .is_err()
    );
}

#[tokio::test(flavor = "multi_thread", worker_threads = 4)]
async fn live_scripted_workload_is_logged() {
    let harness = HarnessConfig {
        port: 0,
        latency: Latency::Fixed { ms: 0.0 },
        ..Default::default()
    };
    let server = serve_harness(harness, 1).await.unwrap();
    let profile = Profile::dataset_a_scaled().scale_time(1.0 / 30.0);
    let opts = LiveOptions {
        seed: 4,
        time_scale: 40.0,
        ..Default::default()
    };
    let sum = run_scripted(&server.url(), &profile, &ScriptedUser::default(), &opts)
        .await
        .unwrap();
    let logs = server.ndjson();
    server.stop().await.unwrap();
    assert!(sum.sessions > 0);
    assert_eq!(sum.errors, 0);
    let ing = ingest_str(&logs, &LogFormat::default()).unwrap();
    assert_eq!(ing.traces.len(), sum.sessions);
    let user_requests: usize = ing.traces.iter().map(|t| t.user_behaviors().count()).sum();
    assert_eq!(user_requests, sum.requests);
}
