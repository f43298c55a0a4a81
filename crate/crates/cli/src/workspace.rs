use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Result};

pub const ORIGINAL_LOG: &str = "original.log";
pub const TRACES: &str = "traces.ndjson";
pub const CATALOG: &str = "catalog.json";
pub const INGEST_REPORT: &str = "ingest.json";
pub const MODELS: &str = "models.json";
pub const THINKTIME: &str = "thinktime.json";
pub const ORIGINAL_SERIES: &str = "original_intensity.txt";
pub const FITS: &str = "fits.txt";
pub const INTENSITY: &str = "intensity.txt";
pub const PLAN: &str = "plan.ndjson";
pub const SIMULATED_LOG: &str = "simulated.log";
pub const REPORT: &str = "report.ndjson";
pub const EVAL: &str = "eval.txt";

/// Failure classes, each with its own exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Failure {
    /// An input file or a predecessor's artifact is absent.
    Artifact,
    /// The specification or a flag is invalid.
    Spec,
    /// Input data cannot be parsed or modeled.
    Data,
    /// A server could not bind or a target could not be reached.
    Network,
}

impl Failure {
    pub fn code(self) -> u8 {
        match self {
            Failure::Artifact => 3,
            Failure::Spec => 4,
            Failure::Data => 5,
            Failure::Network => 6,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Failure::Artifact => "missing input",
            Failure::Spec => "invalid specification",
            Failure::Data => "bad data",
            Failure::Network => "network failure",
        })
    }
}

pub trait Classify<T> {
    fn class(self, f: Failure) -> Result<T>;
}

impl<T, E: Into<anyhow::Error>> Classify<T> for std::result::Result<T, E> {
    fn class(self, f: Failure) -> Result<T> {
        self.map_err(|e| e.into().context(f))
    }
}

pub fn fail(f: Failure, msg: impl fmt::Display) -> anyhow::Error {
    anyhow!("{msg}").context(f)
}

/// The subcommand that writes an artifact.
fn producer(name: &str) -> &'static str {
    match name {
        ORIGINAL_LOG => "harness simulate",
        TRACES | CATALOG | INGEST_REPORT => "ingest",
        MODELS | THINKTIME => "model",
        ORIGINAL_SERIES | FITS | INTENSITY => "intensity",
        PLAN => "plan",
        SIMULATED_LOG => "run --dry-run",
        REPORT => "run",
        _ => "eval",
    }
}

pub fn read_input(path: &Path) -> Result<String> {
    if !path.exists() {
        return Err(fail(
            Failure::Artifact,
            format!("{} does not exist", path.display()),
        ));
    }
    fs::read_to_string(path).map_err(|e| anyhow!("{}: {e}", path.display()).context(Failure::Artifact))
}

pub struct Workspace {
    root: PathBuf,
}

impl Workspace {
    pub fn new(root: PathBuf) -> Self {
        Self { root }
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    pub fn has(&self, name: &str) -> bool {
        self.path(name).is_file()
    }

    pub fn read(&self, name: &str) -> Result<String> {
        let p = self.path(name);
        if !p.is_file() {
            return Err(fail(
                Failure::Artifact,
                format!("{} not found; run `lws {}` first", p.display(), producer(name)),
            ));
        }
        fs::read_to_string(&p).map_err(|e| anyhow!("{}: {e}", p.display()).context(Failure::Artifact))
    }

    pub fn write(&self, name: &str, contents: &str) -> Result<PathBuf> {
        fs::create_dir_all(&self.root)?;
        let p = self.path(name);
        fs::write(&p, contents).map_err(|e| anyhow!("{}: {e}", p.display()))?;
        Ok(p)
    }
}
