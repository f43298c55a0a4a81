//! The `.lws` workload specification.
//!
//! ```text
//! # comments run to the end of the line
//! [behavior]
//! logs = "original.log"
//! clusters = 3
//!
//! [intensity.reproduction]
//!
//! [driver]
//! delta = 10s
//! tolerance = 50ms
//! seed = 7
//! ```
//!
//! Sections are `[behavior]`, exactly one of `[intensity.reproduction]`,
//! `[intensity.fitting]`, `[intensity.generation.limbo]` or
//! `[intensity.generation.tsagen]`, and optionally `[thinktime]` and
//! `[driver]`. Values are integers, reals, booleans, durations with an
//! `ms`/`s`/`m`/`h` suffix, or strings (quoted, or a bare word without
//! spaces). Serialization is canonical: fixed section and key order, defaults
//! omitted.

mod lex;

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use thiserror::Error;

use lex::{Kind, RawEntry, RawSection, Value};

use crate::intensity::{Family, FitModel, LimboParams, Override, TsagenParams};

#[derive(Debug, Error, PartialEq)]
pub enum DslError {
    #[error("line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("line {line}: unknown section [{name}]")]
    UnknownSection { line: usize, name: String },
    #[error("line {line}: unknown key `{key}` in [{section}]")]
    UnknownKey {
        line: usize,
        section: String,
        key: String,
    },
    #[error("line {line}: `{key}` expects {expected}, found `{found}`")]
    Type {
        line: usize,
        key: String,
        expected: &'static str,
        found: String,
    },
    #[error("line {line}: `{key}` repeats line {first}")]
    DuplicateKey { line: usize, first: usize, key: String },
    #[error("lines {lines:?}: {message}")]
    Constraint { lines: Vec<usize>, message: String },
    #[error("missing {0}")]
    Missing(String),
    #[error("`{key}` refers to `{path}`, which does not exist")]
    File { key: String, path: String },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Warning {
    pub line: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BehaviorSpec {
    /// Learned model file; when absent the model is learned from `logs`.
    pub model: Option<String>,
    pub logs: Option<String>,
    pub clusters: usize,
    pub max_len: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Source<T> {
    File(String),
    Inline(T),
}

#[derive(Debug, Clone, PartialEq)]
pub enum IntensitySpec {
    /// Bucketize the original session starts, or read a series file.
    Reproduction { series: Option<String> },
    Fitting {
        series: Option<String>,
        /// Previously saved fits; fitting is skipped when given.
        fits: Option<String>,
        /// Inline fitted expressions in the `family@a..b:p=v,...` form, one
        /// per component; these also skip fitting.
        models: Vec<String>,
        /// Empty means the whole catalog.
        families: Vec<Family>,
        /// Fit trend and season separately.
        decompose: bool,
        period: Option<usize>,
        /// Buckets to synthesize; defaults to the series length.
        horizon: Option<usize>,
        overrides: Vec<Override>,
    },
    Limbo {
        params: Source<LimboParams>,
        length: usize,
    },
    Tsagen {
        params: Source<TsagenParams>,
        length: usize,
    },
}

impl IntensitySpec {
    pub fn method(&self) -> &'static str {
        match self {
            IntensitySpec::Reproduction { .. } => "reproduction",
            IntensitySpec::Fitting { .. } => "fitting",
            IntensitySpec::Limbo { .. } => "generation.limbo",
            IntensitySpec::Tsagen { .. } => "generation.tsagen",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ThinkTimeSpec {
    /// One think time in seconds per line; defaults to the original logs.
    pub samples: Option<String>,
    /// Fixed bandwidth instead of the rule of thumb.
    pub bandwidth: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DriverSpec {
    pub target: String,
    pub delta_s: f64,
    pub tolerance_s: f64,
    pub seed: u64,
    pub max_inflight: usize,
}

impl Default for DriverSpec {
    fn default() -> Self {
        Self {
            target: DEFAULT_TARGET.into(),
            delta_s: 10.0,
            tolerance_s: 0.05,
            seed: 0,
            max_inflight: 1024,
        }
    }
}

const DEFAULT_TARGET: &str = "http://127.0.0.1:8080";
const DEFAULT_CLUSTERS: usize = 1;
const DEFAULT_MAX_LEN: usize = 10_000;

#[derive(Debug, Clone, PartialEq)]
pub struct WorkloadSpecDoc {
    pub behavior: BehaviorSpec,
    pub intensity: IntensitySpec,
    pub thinktime: ThinkTimeSpec,
    pub driver: DriverSpec,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Parsed {
    pub doc: WorkloadSpecDoc,
    pub warnings: Vec<Warning>,
}

const LIMBO_KEYS: [&str; 20] = [
    "eta1", "eta2", "eta3", "eta4", "eta5", "eta6", "eta7", "eta8", "eta9", "c1", "c2", "c3", "c4", "c5",
    "c6", "c7", "c8", "g1", "g2", "g3",
];
const TSAGEN_KEYS: [&str; 13] = [
    "theta1", "theta2", "theta3", "theta4", "theta5", "theta6", "theta7", "theta8", "k1", "k2", "d1", "d2",
    "seed",
];

fn schema(section: &str) -> Option<Vec<(&'static str, Kind)>> {
    use Kind::*;
    Some(match section {
        "behavior" => vec![("model", Str), ("logs", Str), ("clusters", Int), ("max_len", Int)],
        "intensity.reproduction" => vec![("series", Str)],
        "intensity.fitting" => vec![
            ("series", Str),
            ("fits", Str),
            ("models", Str),
            ("families", Str),
            ("decompose", Bool),
            ("period", Int),
            ("horizon", Int),
            ("overrides", Str),
        ],
        "intensity.generation.limbo" => {
            let mut v = vec![("params", Str), ("length", Int)];
            v.extend(LIMBO_KEYS.iter().map(|k| (*k, Raw)));
            v
        }
        "intensity.generation.tsagen" => {
            let mut v = vec![("params", Str), ("length", Int)];
            v.extend(TSAGEN_KEYS.iter().map(|k| (*k, Raw)));
            v
        }
        "thinktime" => vec![("samples", Str), ("bandwidth", Real)],
        "driver" => vec![
            ("target", Str),
            ("delta", Duration),
            ("tolerance", Duration),
            ("seed", Int),
            ("max_inflight", Int),
        ],
        _ => return None,
    })
}

/// Typed entries of one section.
struct Section<'a> {
    raw: &'a RawSection,
    values: BTreeMap<&'static str, (Value, usize)>,
}

impl Section<'_> {
    fn str(&self, k: &str) -> Option<String> {
        self.values.get(k).map(|(v, _)| v.as_str().to_string())
    }
    fn int(&self, k: &str) -> Option<(u64, usize)> {
        self.values.get(k).map(|(v, l)| (v.as_int(), *l))
    }
    fn real(&self, k: &str) -> Option<(f64, usize)> {
        self.values.get(k).map(|(v, l)| (v.as_real(), *l))
    }
    fn line(&self, k: &str) -> usize {
        self.values.get(k).map(|(_, l)| *l).unwrap_or(self.raw.line)
    }
}

fn typed<'a>(raw: &'a RawSection) -> Result<Section<'a>, DslError> {
    let schema = schema(&raw.name).ok_or_else(|| DslError::UnknownSection {
        line: raw.line,
        name: raw.name.clone(),
    })?;
    let mut values = BTreeMap::new();
    let mut first_line: BTreeMap<&str, usize> = BTreeMap::new();
    for RawEntry {
        key,
        value,
        line,
        column,
    } in &raw.entries
    {
        let Some(&(name, kind)) = schema.iter().find(|(k, _)| k == key) else {
            return Err(DslError::UnknownKey {
                line: *line,
                section: raw.name.clone(),
                key: key.clone(),
            });
        };
        if let Some(first) = first_line.insert(name, *line) {
            return Err(DslError::DuplicateKey {
                line: *line,
                first,
                key: key.clone(),
            });
        }
        let v = lex::parse_value(value, kind).map_err(|e| match e {
            lex::ValueError::Syntax(offset, message) => DslError::Syntax {
                line: *line,
                column: column + offset,
                message,
            },
            lex::ValueError::Type(expected) => DslError::Type {
                line: *line,
                key: key.clone(),
                expected,
                found: value.clone(),
            },
        })?;
        values.insert(name, (v, *line));
    }
    Ok(Section { raw, values })
}

fn constraint(line: usize, message: impl Into<String>) -> DslError {
    DslError::Constraint {
        lines: vec![line],
        message: message.into(),
    }
}

fn positive(s: &Section, key: &str, default: usize) -> Result<usize, DslError> {
    match s.int(key) {
        None => Ok(default),
        Some((0, l)) => Err(constraint(l, format!("`{key}` must be at least 1"))),
        Some((v, _)) => Ok(v as usize),
    }
}

fn note_default<T: PartialEq>(warnings: &mut Vec<Warning>, s: &Section, key: &str, value: &T, default: &T) {
    if s.values.contains_key(key) && value == default {
        warnings.push(Warning {
            line: s.line(key),
            message: format!("`{key}` repeats its default value"),
        });
    }
}

/// Parses and checks a document. Referenced files are not checked; see
/// [`WorkloadSpecDoc::check_files`].
pub fn parse_dsl(text: &str) -> Result<Parsed, DslError> {
    let raw = lex::sections(text)?;
    let mut seen: BTreeMap<&str, usize> = BTreeMap::new();
    for s in &raw {
        if let Some(first) = seen.insert(&s.name, s.line) {
            return Err(DslError::Constraint {
                lines: vec![first, s.line],
                message: format!("section [{}] appears twice", s.name),
            });
        }
    }
    let sections = raw.iter().map(typed).collect::<Result<Vec<_>, _>>()?;
    let get = |name: &str| sections.iter().find(|s| s.raw.name == name);
    let mut warnings = Vec::new();

    let b = get("behavior").ok_or_else(|| DslError::Missing("section [behavior]".into()))?;
    let behavior = BehaviorSpec {
        model: b.str("model"),
        logs: b.str("logs"),
        clusters: positive(b, "clusters", DEFAULT_CLUSTERS)?,
        max_len: positive(b, "max_len", DEFAULT_MAX_LEN)?,
    };
    if behavior.model.is_none() && behavior.logs.is_none() {
        return Err(constraint(b.raw.line, "[behavior] needs `model` or `logs`"));
    }
    note_default(
        &mut warnings,
        b,
        "clusters",
        &behavior.clusters,
        &DEFAULT_CLUSTERS,
    );
    note_default(&mut warnings, b, "max_len", &behavior.max_len, &DEFAULT_MAX_LEN);

    let methods: Vec<&Section> = sections
        .iter()
        .filter(|s| s.raw.name.starts_with("intensity."))
        .collect();
    let intensity = match methods.as_slice() {
        [] => return Err(DslError::Missing("an [intensity.*] section".into())),
        [one] => intensity_spec(one, &mut warnings)?,
        many => {
            return Err(DslError::Constraint {
                lines: many.iter().map(|s| s.raw.line).collect(),
                message: format!(
                    "choose one intensity method, found {}",
                    many.iter()
                        .map(|s| format!("[{}]", s.raw.name))
                        .collect::<Vec<_>>()
                        .join(" and ")
                ),
            })
        }
    };

    let thinktime = match get("thinktime") {
        None => ThinkTimeSpec::default(),
        Some(t) => {
            if t.values.is_empty() {
                warnings.push(Warning {
                    line: t.raw.line,
                    message: "empty section [thinktime]".into(),
                });
            }
            let bandwidth = match t.real("bandwidth") {
                Some((h, l)) if !(h > 0.0) => return Err(constraint(l, "`bandwidth` must be positive")),
                other => other.map(|(h, _)| h),
            };
            ThinkTimeSpec {
                samples: t.str("samples"),
                bandwidth,
            }
        }
    };

    let d0 = DriverSpec::default();
    let driver = match get("driver") {
        None => d0,
        Some(d) => {
            if d.values.is_empty() {
                warnings.push(Warning {
                    line: d.raw.line,
                    message: "empty section [driver]".into(),
                });
            }
            let delta_s = match d.real("delta") {
                Some((v, l)) if !(v > 0.0) => return Err(constraint(l, "`delta` must be positive")),
                other => other.map_or(d0.delta_s, |(v, _)| v),
            };
            let spec = DriverSpec {
                target: d.str("target").unwrap_or(d0.target.clone()),
                delta_s,
                tolerance_s: d.real("tolerance").map_or(d0.tolerance_s, |(v, _)| v),
                seed: d.int("seed").map_or(d0.seed, |(v, _)| v),
                max_inflight: positive(d, "max_inflight", d0.max_inflight)?,
            };
            note_default(&mut warnings, d, "target", &spec.target, &d0.target);
            note_default(&mut warnings, d, "delta", &spec.delta_s, &d0.delta_s);
            note_default(&mut warnings, d, "tolerance", &spec.tolerance_s, &d0.tolerance_s);
            note_default(&mut warnings, d, "seed", &spec.seed, &d0.seed);
            note_default(
                &mut warnings,
                d,
                "max_inflight",
                &spec.max_inflight,
                &d0.max_inflight,
            );
            if spec.tolerance_s > spec.delta_s {
                warnings.push(Warning {
                    line: d.line("tolerance"),
                    message: "scheduling tolerance exceeds the bucket width".into(),
                });
            }
            spec
        }
    };
    warnings.sort_by_key(|w| w.line);
    Ok(Parsed {
        doc: WorkloadSpecDoc {
            behavior,
            intensity,
            thinktime,
            driver,
        },
        warnings,
    })
}

fn inline_params(s: &Section, keys: &[&str]) -> Option<String> {
    let text: String = keys
        .iter()
        .filter_map(|k| s.values.get(k).map(|(v, _)| format!("{k}={}\n", v.as_str())))
        .collect();
    (!text.is_empty()).then_some(text)
}

fn intensity_spec(s: &Section, warnings: &mut Vec<Warning>) -> Result<IntensitySpec, DslError> {
    Ok(match s.raw.name.as_str() {
        "intensity.reproduction" => IntensitySpec::Reproduction {
            series: s.str("series"),
        },
        "intensity.fitting" => {
            let families = match s.str("families") {
                None => Vec::new(),
                Some(list) => list
                    .split(',')
                    .map(str::trim)
                    .filter(|f| !f.is_empty())
                    .map(|f| f.parse::<Family>().map_err(|e| constraint(s.line("families"), e)))
                    .collect::<Result<_, _>>()?,
            };
            let overrides = match s.str("overrides") {
                None => Vec::new(),
                Some(list) => list
                    .split(';')
                    .map(str::trim)
                    .filter(|o| !o.is_empty())
                    .map(|o| Override::parse(o).map_err(|e| constraint(s.line("overrides"), e)))
                    .collect::<Result<_, _>>()?,
            };
            let models = match s.str("models") {
                None => Vec::new(),
                Some(list) => list
                    .split(';')
                    .map(str::trim)
                    .filter(|m| !m.is_empty())
                    .map(|m| {
                        FitModel::parse_spec(m)
                            .map(|f| f.to_spec())
                            .map_err(|e| constraint(s.line("models"), e))
                    })
                    .collect::<Result<_, _>>()?,
            };
            if !models.is_empty() && s.values.contains_key("fits") {
                return Err(DslError::Constraint {
                    lines: vec![s.line("fits"), s.line("models")],
                    message: "give either `fits` or `models`, not both".into(),
                });
            }
            let decompose = s.values.get("decompose").is_none_or(|(v, _)| v.as_bool());
            note_default(warnings, s, "decompose", &decompose, &true);
            let period = match s.int("period") {
                Some((p, l)) if p < 2 => return Err(constraint(l, "`period` must be at least 2")),
                other => other.map(|(p, _)| p as usize),
            };
            IntensitySpec::Fitting {
                series: s.str("series"),
                fits: s.str("fits"),
                models,
                families,
                decompose,
                period,
                horizon: match s.int("horizon") {
                    Some((0, l)) => return Err(constraint(l, "`horizon` must be at least 1")),
                    other => other.map(|(h, _)| h as usize),
                },
                overrides,
            }
        }
        name @ ("intensity.generation.limbo" | "intensity.generation.tsagen") => {
            let limbo = name.ends_with("limbo");
            let keys: &[&str] = if limbo { &LIMBO_KEYS } else { &TSAGEN_KEYS };
            let length = match s.int("length") {
                None => return Err(DslError::Missing(format!("`length` in [{name}]"))),
                Some((0, l)) => return Err(constraint(l, "`length` must be at least 1")),
                Some((n, _)) => n as usize,
            };
            let inline = inline_params(s, keys);
            let file = s.str("params");
            let bad = |e: crate::intensity::IntensityError| constraint(s.raw.line, e.to_string());
            match (file, inline) {
                (Some(_), Some(_)) => {
                    return Err(constraint(
                        s.line("params"),
                        "give either `params` or inline parameters, not both",
                    ))
                }
                (None, None) => return Err(DslError::Missing(format!("parameters in [{name}]"))),
                (Some(f), None) if limbo => IntensitySpec::Limbo {
                    params: Source::File(f),
                    length,
                },
                (Some(f), None) => IntensitySpec::Tsagen {
                    params: Source::File(f),
                    length,
                },
                (None, Some(text)) if limbo => IntensitySpec::Limbo {
                    params: Source::Inline(LimboParams::from_text(&text).map_err(bad)?),
                    length,
                },
                (None, Some(text)) => IntensitySpec::Tsagen {
                    params: Source::Inline(TsagenParams::from_text(&text).map_err(bad)?),
                    length,
                },
            }
        }
        other => unreachable!("schema admits no section {other}"),
    })
}

impl WorkloadSpecDoc {
    /// Every file the document refers to, with its key.
    pub fn files(&self) -> Vec<(&'static str, &str)> {
        let mut out = Vec::new();
        fn push<'a>(out: &mut Vec<(&'static str, &'a str)>, k: &'static str, v: &'a Option<String>) {
            if let Some(p) = v {
                out.push((k, p.as_str()));
            }
        }
        push(&mut out, "behavior.model", &self.behavior.model);
        push(&mut out, "behavior.logs", &self.behavior.logs);
        match &self.intensity {
            IntensitySpec::Reproduction { series } => push(&mut out, "intensity.series", series),
            IntensitySpec::Fitting { series, fits, .. } => {
                push(&mut out, "intensity.series", series);
                push(&mut out, "intensity.fits", fits);
            }
            IntensitySpec::Limbo {
                params: Source::File(f),
                ..
            }
            | IntensitySpec::Tsagen {
                params: Source::File(f),
                ..
            } => out.push(("intensity.params", f)),
            _ => {}
        }
        if let Some(p) = &self.thinktime.samples {
            out.push(("thinktime.samples", p));
        }
        out
    }

    /// Fails on the first referenced file that does not exist, resolving
    /// relative paths against `base`.
    pub fn check_files(&self, base: &Path) -> Result<(), DslError> {
        for (key, p) in self.files() {
            if !base.join(p).exists() {
                return Err(DslError::File {
                    key: key.into(),
                    path: p.into(),
                });
            }
        }
        Ok(())
    }
}

fn real(v: f64) -> String {
    format!("{v:?}")
}

fn duration(v: f64) -> String {
    format!("{v:?}s")
}

/// Canonical text: fixed order, defaults omitted, strings quoted.
pub fn serialize_dsl(doc: &WorkloadSpecDoc) -> String {
    let mut s = String::new();
    let q = lex::quote;
    s.push_str("[behavior]\n");
    let b = &doc.behavior;
    if let Some(m) = &b.model {
        let _ = writeln!(s, "model = {}", q(m));
    }
    if let Some(l) = &b.logs {
        let _ = writeln!(s, "logs = {}", q(l));
    }
    if b.clusters != DEFAULT_CLUSTERS {
        let _ = writeln!(s, "clusters = {}", b.clusters);
    }
    if b.max_len != DEFAULT_MAX_LEN {
        let _ = writeln!(s, "max_len = {}", b.max_len);
    }
    let _ = writeln!(s, "\n[intensity.{}]", doc.intensity.method());
    match &doc.intensity {
        IntensitySpec::Reproduction { series } => {
            if let Some(p) = series {
                let _ = writeln!(s, "series = {}", q(p));
            }
        }
        IntensitySpec::Fitting {
            series,
            fits,
            models,
            families,
            decompose,
            period,
            horizon,
            overrides,
        } => {
            if let Some(p) = series {
                let _ = writeln!(s, "series = {}", q(p));
            }
            if let Some(p) = fits {
                let _ = writeln!(s, "fits = {}", q(p));
            }
            if !models.is_empty() {
                let _ = writeln!(s, "models = {}", q(&models.join(";")));
            }
            if !families.is_empty() {
                let list: Vec<String> = families.iter().map(|f| f.to_string()).collect();
                let _ = writeln!(s, "families = {}", q(&list.join(",")));
            }
            if !decompose {
                s.push_str("decompose = false\n");
            }
            if let Some(p) = period {
                let _ = writeln!(s, "period = {p}");
            }
            if let Some(h) = horizon {
                let _ = writeln!(s, "horizon = {h}");
            }
            if !overrides.is_empty() {
                let list: Vec<String> = overrides.iter().map(|o| o.to_string()).collect();
                let _ = writeln!(s, "overrides = {}", q(&list.join(";")));
            }
        }
        IntensitySpec::Limbo { params, length } => {
            let _ = writeln!(s, "length = {length}");
            match params {
                Source::File(f) => {
                    let _ = writeln!(s, "params = {}", q(f));
                }
                Source::Inline(p) => spaced(&mut s, &p.to_text()),
            }
        }
        IntensitySpec::Tsagen { params, length } => {
            let _ = writeln!(s, "length = {length}");
            match params {
                Source::File(f) => {
                    let _ = writeln!(s, "params = {}", q(f));
                }
                Source::Inline(p) => spaced(&mut s, &p.to_text()),
            }
        }
    }
    let t = &doc.thinktime;
    if t.samples.is_some() || t.bandwidth.is_some() {
        s.push_str("\n[thinktime]\n");
        if let Some(p) = &t.samples {
            let _ = writeln!(s, "samples = {}", q(p));
        }
        if let Some(h) = t.bandwidth {
            let _ = writeln!(s, "bandwidth = {}", real(h));
        }
    }
    let d = &doc.driver;
    let d0 = DriverSpec::default();
    let mut body = String::new();
    if d.target != d0.target {
        let _ = writeln!(body, "target = {}", q(&d.target));
    }
    if d.delta_s != d0.delta_s {
        let _ = writeln!(body, "delta = {}", duration(d.delta_s));
    }
    if d.tolerance_s != d0.tolerance_s {
        let _ = writeln!(body, "tolerance = {}", duration(d.tolerance_s));
    }
    if d.seed != d0.seed {
        let _ = writeln!(body, "seed = {}", d.seed);
    }
    if d.max_inflight != d0.max_inflight {
        let _ = writeln!(body, "max_inflight = {}", d.max_inflight);
    }
    if !body.is_empty() {
        s.push_str("\n[driver]\n");
        s.push_str(&body);
    }
    s
}

/// Rewrites `k=v` lines as `k = v`.
fn spaced(out: &mut String, kv: &str) {
    for line in kv.lines() {
        if let Some((k, v)) = line.split_once('=') {
            let _ = writeln!(out, "{k} = {v}");
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "[behavior]\nlogs = \"orig.log\"\n\n[intensity.reproduction]\n";

    #[test]
    fn minimal_doc_gets_defaults() {
        let p = parse_dsl(MINIMAL).unwrap();
        assert!(p.warnings.is_empty());
        assert_eq!(p.doc.behavior.clusters, 1);
        assert_eq!(p.doc.driver, DriverSpec::default());
        assert_eq!(p.doc.intensity, IntensitySpec::Reproduction { series: None });
        assert_eq!(serialize_dsl(&p.doc), MINIMAL);
    }

    #[test]
    fn two_methods_name_both_lines() {
        let text = format!("{MINIMAL}\n[intensity.generation.tsagen]\nlength = 5\ntheta1 = 1\ntheta3 = 1\ntheta4 = 0.1\ntheta5 = 1\n");
        match parse_dsl(&text) {
            Err(DslError::Constraint { lines, message }) => {
                assert_eq!(lines, vec![4, 6]);
                assert!(message.contains("[intensity.reproduction]") && message.contains("tsagen"));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn errors_carry_positions() {
        let e = parse_dsl("[behavior]\nlogs = 'x'\n").unwrap_err();
        assert!(
            matches!(
                e,
                DslError::Syntax {
                    line: 2,
                    column: 8,
                    ..
                }
            ),
            "{e:?}"
        );
        let e = parse_dsl("[behavior]\nlogz = x\n").unwrap_err();
        assert!(matches!(e, DslError::UnknownKey { line: 2, .. }));
        let e = parse_dsl("[behavior]\nlogs = x\nclusters = two\n[intensity.reproduction]\n").unwrap_err();
        assert!(matches!(
            e,
            DslError::Type {
                line: 3,
                expected: "an integer",
                ..
            }
        ));
        let e =
            parse_dsl("[behavior]\nlogs = x\n[intensity.reproduction]\n[driver]\ndelta = 10\n").unwrap_err();
        assert!(
            matches!(
                e,
                DslError::Type {
                    line: 5,
                    expected: "a duration",
                    ..
                }
            ),
            "{e:?}"
        );
        assert!(matches!(
            parse_dsl("[behavior]\nlogs = x\n"),
            Err(DslError::Missing(_))
        ));
        let e = parse_dsl("[behavior]\n[intensity.reproduction]\n").unwrap_err();
        assert!(matches!(e, DslError::Constraint { .. }));
    }

    #[test]
    fn durations_and_warnings() {
        let text = format!("{MINIMAL}[driver]\ndelta = 2m\ntolerance = 50ms\nseed = 0\n");
        let p = parse_dsl(&text).unwrap();
        assert_eq!(p.doc.driver.delta_s, 120.0);
        assert_eq!(p.doc.driver.tolerance_s, 0.05);
        assert_eq!(p.warnings.len(), 2);
        let canon = serialize_dsl(&p.doc);
        assert!(parse_dsl(&canon).unwrap().warnings.is_empty());
        assert_eq!(serialize_dsl(&parse_dsl(&canon).unwrap().doc), canon);
    }

    #[test]
    fn inline_generation_params() {
        let text = "[behavior]\nmodel = m.json\n[intensity.generation.tsagen]\nlength = 100\ntheta1 = 5\ntheta2 = 0.1\ntheta3 = 4\ntheta4 = 0.05\ntheta5 = 3\n";
        let p = parse_dsl(text).unwrap();
        let IntensitySpec::Tsagen {
            params: Source::Inline(t),
            length: 100,
        } = &p.doc.intensity
        else {
            panic!("{:?}", p.doc.intensity)
        };
        assert_eq!(t.theta5, 3);
        assert_eq!(parse_dsl(&serialize_dsl(&p.doc)).unwrap().doc, p.doc);
        let bad = text.replace("theta4 = 0.05", "theta4 = 0");
        assert!(matches!(parse_dsl(&bad), Err(DslError::Constraint { .. })));
    }
}
