//! `lws`: ingest → model → intensity → plan → run → eval over a workspace
//! directory of artifact files, plus the harness and workbench servers.

mod commands;
mod workspace;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use lws_core::ingest::REDIRECT_GAP_S;

use workspace::Failure;

#[derive(Parser)]
#[command(
    name = "lws",
    version,
    about = "Session-based HTTP workload extraction, simulation and scoring"
)]
pub struct Cli {
    /// Workload specification (.lws).
    #[arg(long, global = true)]
    pub spec: Option<PathBuf>,
    /// Directory holding the pipeline artifacts.
    #[arg(long, global = true, env = "LWS_WORKSPACE", default_value = ".")]
    pub workspace: PathBuf,
    /// Seed for every stochastic step; overrides the specification.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Bucket width in seconds; overrides the specification.
    #[arg(long, global = true)]
    pub delta: Option<f64>,
    /// Never start the interactive workbench.
    #[arg(long, global = true)]
    pub headless: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand)]
pub enum Command {
    /// Parse logs into session traces and a behavior catalog.
    Ingest {
        /// Log files; defaults to the specification's logs, then original.log.
        logs: Vec<PathBuf>,
        /// Largest gap in seconds between a redirect source and its target.
        #[arg(long, default_value_t = REDIRECT_GAP_S)]
        redirect_gap: f64,
    },
    /// Learn per-group behavior models and the think-time density.
    Model {
        #[arg(long)]
        clusters: Option<usize>,
        /// Fixed KDE bandwidth in seconds.
        #[arg(long)]
        bandwidth: Option<f64>,
    },
    /// Produce the intensity series; without a method the specification decides.
    Intensity {
        #[command(subcommand)]
        method: Option<IntensityCmd>,
    },
    /// Schedule sessions from the models, the intensity and the think times.
    Plan {
        /// Longest behavior sequence accepted from a model walk.
        #[arg(long)]
        max_len: Option<usize>,
    },
    /// Execute the plan against a target, or render it on a virtual clock.
    Run(RunArgs),
    /// The shop application used as the system under test.
    Harness {
        #[command(subcommand)]
        action: HarnessCmd,
    },
    /// Compare the original and simulated workloads.
    Eval(EvalArgs),
    /// Serve the fitting workbench API.
    Workbench {
        #[arg(long, default_value_t = 7878)]
        port: u16,
    },
}

#[derive(Subcommand)]
pub enum IntensityCmd {
    /// Bucketize the original session starts.
    Reproduce {
        /// Use this series file instead of the ingested traces.
        #[arg(long)]
        series: Option<PathBuf>,
    },
    /// Fit expressions to a series and synthesize from them.
    Fit(FitArgs),
    /// Generate with the LIMBO model.
    Limbo {
        #[arg(long)]
        params: PathBuf,
        #[arg(long)]
        length: usize,
    },
    /// Generate with the TSAGen model.
    Tsagen {
        #[arg(long)]
        params: PathBuf,
        #[arg(long)]
        length: usize,
    },
    /// Print the detected period of a series.
    Period {
        #[arg(long)]
        series: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FitMode {
    /// Best single family over the interval.
    Auto,
    /// Separate fits of trend and season.
    Decomposed,
}

#[derive(Args)]
pub struct FitArgs {
    /// Series to fit; defaults to original_intensity.txt.
    #[arg(long)]
    pub series: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub mode: Option<FitMode>,
    /// Families to try, comma separated; all by default.
    #[arg(long, value_delimiter = ',')]
    pub families: Vec<String>,
    /// Fitting interval `start..end` in bucket indices.
    #[arg(long)]
    pub interval: Option<String>,
    #[arg(long)]
    pub period: Option<usize>,
    /// Buckets to synthesize; defaults to the series length.
    #[arg(long)]
    pub horizon: Option<usize>,
    /// Parameter edit `component:param=value` or `component:param*=factor`.
    #[arg(long = "override")]
    pub overrides: Vec<String>,
    /// Workbench port when not headless.
    #[arg(long, default_value_t = 7878)]
    pub port: u16,
}

#[derive(Args)]
pub struct RunArgs {
    /// Render harness logs with zero latency instead of sending requests.
    #[arg(long)]
    pub dry_run: bool,
    /// Base URL of the system under test; overrides the specification.
    #[arg(long)]
    pub target: Option<String>,
    /// Plan time runs this many times faster than wall time.
    #[arg(long, default_value_t = 1.0)]
    pub time_scale: f64,
    #[arg(long)]
    pub tolerance_ms: Option<f64>,
}

#[derive(Subcommand)]
pub enum HarnessCmd {
    /// Serve the shop over HTTP until interrupted.
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
        /// Append logs to this file; defaults to harness.log in the workspace.
        #[arg(long)]
        log: Option<PathBuf>,
        /// Fixed request latency in milliseconds.
        #[arg(long)]
        latency_ms: Option<f64>,
    },
    /// Write the logs of the scripted original workload on a virtual clock.
    Simulate {
        /// Scale of the number of virtual users.
        #[arg(long, default_value_t = 1.0)]
        users: f64,
        /// Scale of the profile duration.
        #[arg(long, default_value_t = 1.0)]
        time: f64,
        /// Defaults to original.log in the workspace.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Virtual clock start, nanoseconds since the Unix epoch.
        #[arg(long, default_value_t = 1_651_572_000_000_000_000)]
        epoch_ns: i64,
    },
    /// Drive the scripted original workload against a running harness.
    Live {
        #[arg(long, default_value = "http://127.0.0.1:8080")]
        target: String,
        #[arg(long, default_value_t = 1.0)]
        users: f64,
        #[arg(long, default_value_t = 1.0)]
        time: f64,
        #[arg(long, default_value_t = 1.0)]
        time_scale: f64,
    },
}

#[derive(Args)]
pub struct EvalArgs {
    /// Original logs; defaults to the ingested traces.
    #[arg(long)]
    pub original: Option<PathBuf>,
    /// Simulated logs; defaults to simulated.log.
    #[arg(long)]
    pub simulated: Option<PathBuf>,
    #[arg(long, default_value_t = 0.5)]
    pub alpha: f64,
    #[arg(long, default_value_t = 1.0)]
    pub mu: f64,
    #[arg(long, default_value_t = 0.9)]
    pub beta: f64,
    /// Histogram cells for think-time overlaps.
    #[arg(long, default_value_t = 50)]
    pub bins: usize,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(e.downcast_ref::<Failure>().map_or(1, |f| f.code()))
        }
    }
}
