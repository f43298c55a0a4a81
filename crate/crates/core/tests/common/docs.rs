//! Random valid workload documents.

use lws_core::dsl::{BehaviorSpec, DriverSpec, IntensitySpec, Source, ThinkTimeSpec, WorkloadSpecDoc};
use lws_core::intensity::{Family, Interpolation, LimboParams, Override, OverrideOp, TsagenParams};
use lws_core::rng::WorkloadRng;
use rand::Rng;

pub fn path(r: &mut WorkloadRng) -> String {
    let names = [
        "orig.log",
        "data/a b.ndjson",
        "m\"odel\".json",
        "series.txt",
        "C:\\logs\\x.gz",
        "héllo#1.txt",
    ];
    names[r.random_range(0..names.len())].to_string()
}

pub fn maybe<T>(r: &mut WorkloadRng, f: impl FnOnce(&mut WorkloadRng) -> T) -> Option<T> {
    r.random_bool(0.5).then(|| f(r))
}

pub fn limbo(r: &mut WorkloadRng) -> LimboParams {
    let eta2 = r.random_range(10..200u32);
    let eta6 = r.random_range(5.0..80.0);
    let eta8 = r.random_range(0.0..5.0);
    let g = |b: bool| {
        if b {
            Interpolation::Quadratic
        } else {
            Interpolation::Linear
        }
    };
    LimboParams {
        eta1: r.random_range(1..5),
        eta2,
        eta3: r.random_range(2..6),
        eta4: r.random_range(0.1..0.9) * eta2 as f64,
        eta5: r.random_range(0.0..eta6),
        eta6,
        eta7: r.random_range(0.5..=eta6),
        eta8,
        eta9: eta8 + r.random_range(0.0..10.0),
        c1: r.random_range(0.0..50.0),
        c2: r.random_range(0.0..50.0),
        c3: r.random_range(0.0..50.0),
        c4: r.random_range(0.0..10.0),
        c5: r.random_range(0.0..10.0),
        c6: r.random_range(10.0..40.0),
        c7: r.random_range(10.0..40.0),
        c8: r.random_range(0.0..30.0),
        g1: g(r.random()),
        g2: g(r.random()),
        g3: g(r.random()),
    }
}

pub fn tsagen(r: &mut WorkloadRng) -> TsagenParams {
    TsagenParams {
        theta1: r.random_range(-10.0..10.0),
        theta2: r.random_range(-1.0..1.0),
        theta3: r.random_range(0.0..10.0),
        theta4: r.random_range(0.001..0.5),
        theta5: r.random_range(1..20),
        theta6: r.random_range(0.1..3.0),
        theta7: r.random_range(-2.0..2.0),
        theta8: r.random_range(0.0..3.0),
        k1: r.random_range(0.0..2.0),
        k2: r.random_range(0.0..2.0),
        d1: r.random_range(0..6),
        d2: r.random_range(0..6),
        seed: r.random(),
    }
}

pub fn intensity(r: &mut WorkloadRng) -> IntensitySpec {
    match r.random_range(0..4) {
        0 => IntensitySpec::Reproduction {
            series: maybe(r, path),
        },
        1 => {
            let all = Family::all();
            let families = (0..r.random_range(0..4))
                .map(|_| all[r.random_range(0..all.len())])
                .collect();
            let models = if r.random_bool(0.5) {
                vec![
                    "poly2@0..100:p0=1.5,p1=-2.0,p2=0.25".to_string(),
                    "fourier1@10..110:a0=0.0,a1=3.0,b1=-1e-7,w=6.283185307179586".to_string(),
                ]
            } else {
                Vec::new()
            };
            let fits = if models.is_empty() { maybe(r, path) } else { None };
            let overrides = (0..r.random_range(0..3))
                .map(|i| Override {
                    component: i,
                    param: "a1".into(),
                    op: if r.random() {
                        OverrideOp::Scale(r.random_range(0.1..4.0))
                    } else {
                        OverrideOp::Set(r.random())
                    },
                })
                .collect();
            IntensitySpec::Fitting {
                series: maybe(r, path),
                fits,
                models,
                families,
                decompose: r.random(),
                period: maybe(r, |r| r.random_range(2..500)),
                horizon: maybe(r, |r| r.random_range(1..5000)),
                overrides,
            }
        }
        2 => IntensitySpec::Limbo {
            params: if r.random() {
                Source::Inline(limbo(r))
            } else {
                Source::File(path(r))
            },
            length: r.random_range(1..10_000),
        },
        _ => IntensitySpec::Tsagen {
            params: if r.random() {
                Source::Inline(tsagen(r))
            } else {
                Source::File(path(r))
            },
            length: r.random_range(1..10_000),
        },
    }
}

pub fn random_doc(r: &mut WorkloadRng) -> WorkloadSpecDoc {
    let model = maybe(r, path);
    let logs = if model.is_none() {
        Some(path(r))
    } else {
        maybe(r, path)
    };
    WorkloadSpecDoc {
        behavior: BehaviorSpec {
            model,
            logs,
            clusters: r.random_range(1..6),
            max_len: if r.random() {
                10_000
            } else {
                r.random_range(1..50_000)
            },
        },
        intensity: intensity(r),
        thinktime: ThinkTimeSpec {
            samples: maybe(r, path),
            bandwidth: maybe(r, |r| r.random_range(0.01..5.0)),
        },
        driver: DriverSpec {
            target: if r.random() {
                "http://127.0.0.1:8080".into()
            } else {
                "http://localhost:9000/x".into()
            },
            delta_s: [10.0, 5.0, 60.0, 0.25, r.random_range(0.001..100.0)][r.random_range(0..5)],
            tolerance_s: [0.05, 0.001, r.random_range(0.0..1.0)][r.random_range(0..3)],
            seed: if r.random() { 0 } else { r.random() },
            max_inflight: r.random_range(1..4096),
        },
    }
}
