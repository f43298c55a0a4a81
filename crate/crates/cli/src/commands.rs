use std::path::{Path, PathBuf};

use anyhow::Result;
use lws_core::behavior::{learn_group_models, Corpus, GroupModels};
use lws_core::dsl::{parse_dsl, IntensitySpec, Source, WorkloadSpecDoc};
use lws_core::eval::{compare, CompareOptions};
use lws_core::harness::{simulate_original_workload, HarnessConfig, Latency, Profile, ScriptedUser};
use lws_core::ingest::{
    archive, ingest, ingest_str, read_log_file, think_time_samples, BehaviorCatalog, Ingested, LogFormat,
    ParseOutput, SessionTrace,
};
use lws_core::intensity::{
    bucketize, detect_seasonal_period, fit, fit_decomposed, kde_fit, limbo_generate, synthesize_from_fit,
    tsagen_generate, Family, FitModel, IntensitySeries, LimboParams, Override, SeriesTable, ThinkTimeModel,
    TsagenParams,
};
use lws_core::par::Execution;
use lws_core::plan::{build_plan, dry_run, PlanOptions, WorkloadPlan};
use lws_core::rng::seeded;
use lws_net::{execute_plan, run_scripted, serve_harness, serve_workbench, DriverOptions, LiveOptions};

use crate::workspace::*;
use crate::{Cli, Command, EvalArgs, FitArgs, FitMode, HarnessCmd, IntensityCmd, RunArgs};

struct Ctx {
    ws: Workspace,
    /// Parsed specification and the directory its relative paths start from.
    spec: Option<(WorkloadSpecDoc, PathBuf)>,
    seed: u64,
    delta_s: f64,
    headless: bool,
}

impl Ctx {
    fn doc(&self) -> Option<&WorkloadSpecDoc> {
        self.spec.as_ref().map(|(d, _)| d)
    }

    fn resolve(&self, p: &str) -> PathBuf {
        match &self.spec {
            Some((_, base)) => base.join(p),
            None => PathBuf::from(p),
        }
    }

    fn traces(&self) -> Result<Vec<SessionTrace>> {
        archive::read_archive(self.ws.read(TRACES)?.as_bytes()).class(Failure::Data)
    }

    fn catalog(&self) -> Result<BehaviorCatalog> {
        serde_json::from_str(&self.ws.read(CATALOG)?).class(Failure::Data)
    }

    /// Grid origin for generated series: the original series, then the
    /// earliest ingested session, then zero.
    fn origin_ns(&self) -> Result<i64> {
        if self.ws.has(ORIGINAL_SERIES) {
            return Ok(IntensitySeries::from_text(&self.ws.read(ORIGINAL_SERIES)?)
                .class(Failure::Data)?
                .t_s);
        }
        if self.ws.has(TRACES) {
            return Ok(self
                .traces()?
                .iter()
                .filter_map(|t| t.start_ts())
                .min()
                .unwrap_or(0));
        }
        Ok(0)
    }

    fn runtime(&self) -> Result<tokio::runtime::Runtime> {
        Ok(tokio::runtime::Runtime::new()?)
    }
}

fn load_spec(path: &Path) -> Result<(WorkloadSpecDoc, PathBuf)> {
    let text = read_input(path)?;
    let parsed = parse_dsl(&text).class(Failure::Spec)?;
    for w in &parsed.warnings {
        eprintln!("warning: {}:{}: {}", path.display(), w.line, w.message);
    }
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    parsed.doc.check_files(&base).class(Failure::Spec)?;
    Ok((parsed.doc, base))
}

pub fn run(cli: Cli) -> Result<()> {
    let spec = cli.spec.as_deref().map(load_spec).transpose()?;
    let driver = spec.as_ref().map(|(d, _)| d.driver.clone()).unwrap_or_default();
    let delta_s = cli.delta.unwrap_or(driver.delta_s);
    if !(delta_s > 0.0) {
        return Err(fail(
            Failure::Spec,
            format!("bucket width must be positive, got {delta_s}"),
        ));
    }
    let ctx = Ctx {
        ws: Workspace::new(cli.workspace),
        spec,
        seed: cli.seed.unwrap_or(driver.seed),
        delta_s,
        headless: cli.headless,
    };
    match cli.command {
        Command::Ingest { logs, redirect_gap } => cmd_ingest(&ctx, logs, redirect_gap),
        Command::Model { clusters, bandwidth } => cmd_model(&ctx, clusters, bandwidth),
        Command::Intensity { method } => cmd_intensity(&ctx, method),
        Command::Plan { max_len } => cmd_plan(&ctx, max_len),
        Command::Run(args) => cmd_run(&ctx, args),
        Command::Harness { action } => cmd_harness(&ctx, action),
        Command::Eval(args) => cmd_eval(&ctx, args),
        Command::Workbench { port } => workbench(&ctx, port),
    }
}

fn read_logs(paths: &[PathBuf], format: &LogFormat) -> Result<ParseOutput> {
    let mut all = ParseOutput::default();
    for p in paths {
        if !p.is_file() {
            return Err(fail(Failure::Artifact, format!("{} does not exist", p.display())));
        }
        let part = read_log_file(p, format).class(Failure::Data)?;
        all.records.extend(part.records);
        all.report.malformed_lines.extend(part.report.malformed_lines);
        all.report.non_request_lines += part.report.non_request_lines;
        all.report.blank_lines += part.report.blank_lines;
    }
    Ok(all)
}

fn ingest_files(paths: &[PathBuf], gap_s: f64) -> Result<Ingested> {
    let format = LogFormat::default();
    let ing = ingest(read_logs(paths, &format)?, &format, gap_s).class(Failure::Data)?;
    if ing.traces.is_empty() {
        let names: Vec<String> = paths.iter().map(|p| p.display().to_string()).collect();
        return Err(fail(
            Failure::Data,
            format!("no sessions in {}", names.join(", ")),
        ));
    }
    Ok(ing)
}

fn cmd_ingest(ctx: &Ctx, logs: Vec<PathBuf>, gap_s: f64) -> Result<()> {
    let logs = if !logs.is_empty() {
        logs
    } else if let Some(p) = ctx.doc().and_then(|d| d.behavior.logs.as_deref()) {
        vec![ctx.resolve(p)]
    } else {
        vec![ctx.ws.path(ORIGINAL_LOG)]
    };
    let ing = ingest_files(&logs, gap_s)?;
    ctx.ws.write(TRACES, &archive::to_string(&ing.traces))?;
    ctx.ws
        .write(CATALOG, &serde_json::to_string_pretty(&ing.catalog)?)?;
    let report = serde_json::json!({
        "parse": ing.parse,
        "assembly": ing.assembly,
        "redirects": ing.redirects,
        "redirect_misses": ing.redirect_misses,
    });
    ctx.ws
        .write(INGEST_REPORT, &serde_json::to_string_pretty(&report)?)?;
    println!(
        "{} sessions, {} events, {} behavior types, {} redirects, {} malformed lines",
        ing.traces.len(),
        ing.assembly.events,
        ing.catalog.labels().len(),
        ing.redirects.len(),
        ing.parse.malformed_lines.len()
    );
    Ok(())
}

fn read_samples(path: &Path) -> Result<Vec<f64>> {
    read_input(path)?
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'))
        .map(|(i, l)| {
            l.trim()
                .parse::<f64>()
                .map_err(|e| fail(Failure::Data, format!("{}:{}: {e}", path.display(), i + 1)))
        })
        .collect()
}

fn cmd_model(ctx: &Ctx, clusters: Option<usize>, bandwidth: Option<f64>) -> Result<()> {
    let doc = ctx.doc();
    let models = match doc.and_then(|d| d.behavior.model.as_deref()) {
        Some(p) => GroupModels::from_json(&read_input(&ctx.resolve(p))?).class(Failure::Data)?,
        None => {
            let corpus = Corpus::from_traces(&ctx.traces()?, &ctx.catalog()?).class(Failure::Data)?;
            let k = clusters.or(doc.map(|d| d.behavior.clusters)).unwrap_or(1);
            learn_group_models(&corpus, k, Execution::default()).class(Failure::Data)?
        }
    };
    ctx.ws.write(MODELS, &models.to_json())?;
    println!(
        "{} group models, abstraction {:.3}s",
        models.models.len(),
        models.abstraction_time_s
    );

    let samples = match doc.and_then(|d| d.thinktime.samples.as_deref()) {
        Some(p) => read_samples(&ctx.resolve(p))?,
        None => think_time_samples(&ctx.traces()?),
    };
    let ttm = match bandwidth.or(doc.and_then(|d| d.thinktime.bandwidth)) {
        Some(h) => ThinkTimeModel::with_bandwidth(&samples, h),
        None => kde_fit(&samples),
    }
    .class(Failure::Data)?;
    ctx.ws.write(THINKTIME, &serde_json::to_string(&ttm)?)?;
    println!("think times: {} samples, bandwidth {:.4}s", ttm.n(), ttm.h);
    Ok(())
}

fn write_intensity(ctx: &Ctx, s: &IntensitySeries) -> Result<()> {
    ctx.ws.write(INTENSITY, &s.to_text())?;
    println!("{} buckets of {}s, {} sessions", s.len(), s.delta_s, s.total());
    Ok(())
}

/// The original series: a given file, the saved one, or a fresh bucketing of
/// the ingested traces (which is then saved).
fn original_series(ctx: &Ctx, given: Option<PathBuf>) -> Result<String> {
    if let Some(p) = given {
        return read_input(&p);
    }
    if ctx.ws.has(ORIGINAL_SERIES) {
        return ctx.ws.read(ORIGINAL_SERIES);
    }
    let starts: Vec<i64> = ctx.traces()?.iter().filter_map(|t| t.start_ts()).collect();
    let text = bucketize(&starts, ctx.delta_s).class(Failure::Data)?.to_text();
    ctx.ws.write(ORIGINAL_SERIES, &text)?;
    Ok(text)
}

fn cmd_intensity(ctx: &Ctx, method: Option<IntensityCmd>) -> Result<()> {
    let method = match method {
        Some(m) => m,
        None => {
            let doc = ctx.doc().ok_or_else(|| {
                fail(
                    Failure::Spec,
                    "give an intensity method or a specification with an intensity section",
                )
            })?;
            return from_spec(ctx, &doc.intensity);
        }
    };
    match method {
        IntensityCmd::Reproduce { series } => reproduce(ctx, series),
        IntensityCmd::Fit(args) => {
            let preset = match ctx.doc().map(|d| &d.intensity) {
                Some(spec @ IntensitySpec::Fitting { .. }) => Some(spec),
                _ => None,
            };
            fitting(ctx, args, preset)
        }
        IntensityCmd::Limbo { params, length } => {
            let p = LimboParams::from_text(&read_input(&params)?).class(Failure::Spec)?;
            limbo(ctx, &p, length)
        }
        IntensityCmd::Tsagen { params, length } => {
            let p = TsagenParams::from_text(&read_input(&params)?).class(Failure::Spec)?;
            tsagen(ctx, &p, length)
        }
        IntensityCmd::Period { series } => {
            let table = SeriesTable::parse(&original_series(ctx, series)?).class(Failure::Data)?;
            match detect_seasonal_period(&table.values).class(Failure::Data)? {
                Some(p) => println!("period {p}"),
                None => println!("no dominant period"),
            }
            Ok(())
        }
    }
}

fn from_spec(ctx: &Ctx, spec: &IntensitySpec) -> Result<()> {
    match spec {
        IntensitySpec::Reproduction { series } => reproduce(ctx, series.as_deref().map(|p| ctx.resolve(p))),
        IntensitySpec::Fitting { .. } => fitting(ctx, FitArgs::empty(), Some(spec)),
        IntensitySpec::Limbo { params, length } => {
            let p = match params {
                Source::Inline(p) => p.clone(),
                Source::File(f) => {
                    LimboParams::from_text(&read_input(&ctx.resolve(f))?).class(Failure::Spec)?
                }
            };
            limbo(ctx, &p, *length)
        }
        IntensitySpec::Tsagen { params, length } => {
            let p = match params {
                Source::Inline(p) => p.clone(),
                Source::File(f) => {
                    TsagenParams::from_text(&read_input(&ctx.resolve(f))?).class(Failure::Spec)?
                }
            };
            tsagen(ctx, &p, *length)
        }
    }
}

fn reproduce(ctx: &Ctx, series: Option<PathBuf>) -> Result<()> {
    let s = match series {
        Some(p) => IntensitySeries::from_text(&read_input(&p)?).class(Failure::Data)?,
        None => {
            let starts: Vec<i64> = ctx.traces()?.iter().filter_map(|t| t.start_ts()).collect();
            bucketize(&starts, ctx.delta_s).class(Failure::Data)?
        }
    };
    ctx.ws.write(ORIGINAL_SERIES, &s.to_text())?;
    write_intensity(ctx, &s)
}

fn limbo(ctx: &Ctx, p: &LimboParams, length: usize) -> Result<()> {
    let s = limbo_generate(p, ctx.origin_ns()?, length, ctx.delta_s, &mut seeded(ctx.seed))
        .class(Failure::Spec)?;
    write_intensity(ctx, &s)
}

fn tsagen(ctx: &Ctx, p: &TsagenParams, length: usize) -> Result<()> {
    let s = tsagen_generate(p, ctx.origin_ns()?, length, ctx.delta_s).class(Failure::Spec)?;
    write_intensity(ctx, &s)
}

impl FitArgs {
    fn empty() -> Self {
        Self {
            series: None,
            mode: None,
            families: Vec::new(),
            interval: None,
            period: None,
            horizon: None,
            overrides: Vec::new(),
            port: 7878,
        }
    }
}

fn parse_interval(s: &str) -> Result<std::ops::Range<usize>> {
    let bad = || {
        fail(
            Failure::Spec,
            format!("interval must look like `start..end`, got `{s}`"),
        )
    };
    let (a, b) = s.split_once("..").ok_or_else(bad)?;
    Ok(a.trim().parse().map_err(|_| bad())?..b.trim().parse().map_err(|_| bad())?)
}

fn parse_fits(text: &str) -> Result<Vec<FitModel>> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| FitModel::parse_spec(l).map_err(|e| fail(Failure::Data, format!("fit `{l}`: {e}"))))
        .collect()
}

/// Command-line values win over the specification's fitting section.
fn fitting(ctx: &Ctx, args: FitArgs, spec: Option<&IntensitySpec>) -> Result<()> {
    let (
        mut series,
        mut fits_file,
        mut preset,
        mut families,
        mut decomposed,
        mut period,
        mut horizon,
        mut overrides,
    ) = (None, None, Vec::new(), Vec::new(), true, None, None, Vec::new());
    if let Some(IntensitySpec::Fitting {
        series: s,
        fits,
        models,
        families: f,
        decompose,
        period: p,
        horizon: h,
        overrides: o,
    }) = spec
    {
        series = s.as_deref().map(|p| ctx.resolve(p));
        fits_file = fits.as_deref().map(|p| ctx.resolve(p));
        preset = models.clone();
        families = f.clone();
        decomposed = *decompose;
        period = *p;
        horizon = *h;
        overrides = o.clone();
    }
    if args.series.is_some() {
        series = args.series;
    }
    if !args.families.is_empty() {
        families = args
            .families
            .iter()
            .map(|f| f.parse::<Family>().map_err(|e| fail(Failure::Spec, e)))
            .collect::<Result<_>>()?;
    }
    if let Some(m) = args.mode {
        decomposed = m == FitMode::Decomposed;
    }
    period = args.period.or(period);
    horizon = args.horizon.or(horizon);
    for o in &args.overrides {
        overrides.push(Override::parse(o).map_err(|e| fail(Failure::Spec, e))?);
    }

    let table = SeriesTable::parse(&original_series(ctx, series)?).class(Failure::Data)?;
    let models = if let Some(p) = fits_file {
        parse_fits(&read_input(&p)?)?
    } else if !preset.is_empty() {
        parse_fits(&preset.join("\n"))?
    } else {
        if !ctx.headless {
            println!("no fits given; starting the workbench (use --headless to fit here)");
            return workbench(ctx, args.port);
        }
        let n = table.values.len();
        let iv = match &args.interval {
            Some(s) => parse_interval(s)?,
            None => 0..n,
        };
        if decomposed {
            fit_decomposed(&table.values, period, &families, iv, Execution::default())
                .class(Failure::Data)?
                .components()
        } else {
            vec![
                fit(&table.values, &families, iv, Execution::default())
                    .class(Failure::Data)?
                    .best,
            ]
        }
    };
    let specs: Vec<String> = models.iter().map(FitModel::to_spec).collect();
    let mut text = specs.join("\n");
    text.push('\n');
    ctx.ws.write(FITS, &text)?;
    print!("{text}");

    let delta_s = table.delta_s.unwrap_or(ctx.delta_s);
    let t_s = table
        .t_s
        .or_else(|| table.times.first().map(|&t| t as i64))
        .unwrap_or(0);
    let s = synthesize_from_fit(
        &models,
        horizon.unwrap_or(table.values.len()),
        &overrides,
        t_s,
        delta_s,
    )
    .class(Failure::Spec)?;
    write_intensity(ctx, &s)
}

fn cmd_plan(ctx: &Ctx, max_len: Option<usize>) -> Result<()> {
    let models = GroupModels::from_json(&ctx.ws.read(MODELS)?).class(Failure::Data)?;
    let intensity = IntensitySeries::from_text(&ctx.ws.read(INTENSITY)?).class(Failure::Data)?;
    let ttm: ThinkTimeModel = serde_json::from_str(&ctx.ws.read(THINKTIME)?).class(Failure::Data)?;
    let opts = PlanOptions {
        max_len: max_len
            .or(ctx.doc().map(|d| d.behavior.max_len))
            .unwrap_or(10_000),
        seed: ctx.seed,
        mode: Execution::default(),
    };
    let plan = build_plan(&models.models, &intensity, &ttm, &opts).class(Failure::Data)?;
    ctx.ws.write(PLAN, &plan.to_ndjson())?;
    let requests: usize = plan.sessions.iter().map(|s| s.behaviors.len()).sum();
    println!(
        "{} sessions, {} behaviors, seed {}",
        plan.sessions.len(),
        requests,
        ctx.seed
    );
    Ok(())
}

fn cmd_run(ctx: &Ctx, args: RunArgs) -> Result<()> {
    let plan = WorkloadPlan::from_ndjson(&ctx.ws.read(PLAN)?).class(Failure::Data)?;
    let catalog = ctx.catalog()?;
    if args.dry_run {
        let mut text = String::new();
        for l in dry_run(&plan, &catalog) {
            text.push_str(&l.to_json());
            text.push('\n');
        }
        let p = ctx.ws.write(SIMULATED_LOG, &text)?;
        println!("{} sessions rendered to {}", plan.sessions.len(), p.display());
        return Ok(());
    }
    let driver = ctx.doc().map(|d| d.driver.clone()).unwrap_or_default();
    let target = args.target.unwrap_or(driver.target);
    let opts = DriverOptions {
        tolerance_ms: args.tolerance_ms.unwrap_or(driver.tolerance_s * 1e3),
        max_inflight: driver.max_inflight,
        time_scale: args.time_scale,
        ..Default::default()
    };
    let report = ctx
        .runtime()?
        .block_on(execute_plan(&plan, &catalog, &target, &opts))
        .class(Failure::Network)?;
    ctx.ws.write(REPORT, &report.to_ndjson())?;
    let s = &report.summary;
    println!(
        "{} sent, {} ok, {} errors, {} late sessions (tolerance {} ms)",
        s.sent, s.ok, s.errored, s.late_sessions, s.tolerance_ms
    );
    if s.sent > 0 && s.ok == 0 {
        return Err(fail(
            Failure::Network,
            format!("no request to {target} succeeded"),
        ));
    }
    Ok(())
}

fn cmd_harness(ctx: &Ctx, action: HarnessCmd) -> Result<()> {
    match action {
        HarnessCmd::Serve {
            port,
            log,
            latency_ms,
        } => {
            let mut cfg = HarnessConfig {
                port,
                log_path: Some(log.unwrap_or_else(|| ctx.ws.path("harness.log"))),
                ..Default::default()
            };
            if let Some(ms) = latency_ms {
                cfg.latency = Latency::Fixed { ms };
            }
            cfg.validate().class(Failure::Spec)?;
            let seed = ctx.seed;
            ctx.runtime()?
                .block_on(async move {
                    let server = serve_harness(cfg, seed).await?;
                    println!("harness listening on {}", server.url());
                    server.run_until_ctrl_c().await
                })
                .class(Failure::Network)
        }
        HarnessCmd::Simulate {
            users,
            time,
            out,
            epoch_ns,
        } => {
            let profile = Profile::dataset_a_scaled().scale_users(users).scale_time(time);
            let run = simulate_original_workload(
                &HarnessConfig::default(),
                &profile,
                &ScriptedUser::default(),
                epoch_ns,
                ctx.seed,
                Execution::default(),
            )
            .class(Failure::Spec)?;
            let text = run.to_ndjson();
            let p = match out {
                Some(p) => {
                    std::fs::write(&p, &text)?;
                    p
                }
                None => ctx.ws.write(ORIGINAL_LOG, &text)?,
            };
            println!(
                "{} sessions, {} requests written to {}",
                run.sessions,
                run.requests,
                p.display()
            );
            Ok(())
        }
        HarnessCmd::Live {
            target,
            users,
            time,
            time_scale,
        } => {
            let profile = Profile::dataset_a_scaled().scale_users(users).scale_time(time);
            let opts = LiveOptions {
                seed: ctx.seed,
                time_scale,
                ..Default::default()
            };
            let s = ctx
                .runtime()?
                .block_on(run_scripted(&target, &profile, &ScriptedUser::default(), &opts))
                .class(Failure::Network)?;
            println!(
                "{} sessions, {} requests, {} errors",
                s.sessions, s.requests, s.errors
            );
            Ok(())
        }
    }
}

fn cmd_eval(ctx: &Ctx, args: EvalArgs) -> Result<()> {
    let original = match &args.original {
        Some(p) => ingest_files(std::slice::from_ref(p), lws_core::ingest::REDIRECT_GAP_S)?.traces,
        None => ctx.traces()?,
    };
    let simulated = match &args.simulated {
        Some(p) => read_input(p)?,
        None => ctx.ws.read(SIMULATED_LOG)?,
    };
    let simulated = ingest_str(&simulated, &LogFormat::default())
        .class(Failure::Data)?
        .traces;
    let ttm: Option<ThinkTimeModel> = if ctx.ws.has(THINKTIME) {
        Some(serde_json::from_str(&ctx.ws.read(THINKTIME)?).class(Failure::Data)?)
    } else {
        None
    };
    let opts = CompareOptions {
        delta_s: ctx.delta_s,
        alpha: args.alpha,
        mu: args.mu,
        beta: args.beta,
        bins: args.bins,
    };
    let c = compare(&original, &simulated, ttm.as_ref(), &opts).class(Failure::Data)?;
    let kv = c.to_kv();
    ctx.ws.write(EVAL, &kv)?;
    print!("{kv}");
    Ok(())
}

fn workbench(ctx: &Ctx, port: u16) -> Result<()> {
    ctx.runtime()?
        .block_on(async move {
            let served = serve_workbench(port).await?;
            println!("workbench API on {}", served.url());
            served.run_until_ctrl_c().await
        })
        .class(Failure::Network)
}
