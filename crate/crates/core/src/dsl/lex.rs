//! Line-level lexing and value typing.

use super::DslError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(super) enum Kind {
    Int,
    Real,
    Bool,
    Duration,
    Str,
    /// Kept as text for a nested parser.
    Raw,
}

#[derive(Debug, Clone, PartialEq)]
pub(super) enum Value {
    Int(u64),
    Real(f64),
    Bool(bool),
    Str(String),
}

impl Value {
    pub(super) fn as_int(&self) -> u64 {
        match self {
            Value::Int(v) => *v,
            _ => unreachable!("typed as integer"),
        }
    }
    pub(super) fn as_real(&self) -> f64 {
        match self {
            Value::Real(v) => *v,
            Value::Int(v) => *v as f64,
            _ => unreachable!("typed as real"),
        }
    }
    pub(super) fn as_bool(&self) -> bool {
        matches!(self, Value::Bool(true))
    }
    pub(super) fn as_str(&self) -> &str {
        match self {
            Value::Str(s) => s,
            _ => unreachable!("typed as string"),
        }
    }
}

#[derive(Debug, Clone)]
pub(super) struct RawEntry {
    pub key: String,
    pub value: String,
    pub line: usize,
    /// 1-based column where the value starts.
    pub column: usize,
}

#[derive(Debug, Clone)]
pub(super) struct RawSection {
    pub name: String,
    pub line: usize,
    pub entries: Vec<RawEntry>,
}

/// Byte offset of a `#` that is not inside a quoted string.
fn comment_start(line: &str) -> Option<usize> {
    let mut in_str = false;
    let mut escaped = false;
    for (i, c) in line.char_indices() {
        match c {
            _ if escaped => escaped = false,
            '\\' if in_str => escaped = true,
            '"' => in_str = !in_str,
            '#' if !in_str => return Some(i),
            _ => {}
        }
    }
    None
}

fn is_ident(s: &str, dots: bool) -> bool {
    !s.is_empty()
        && s.chars()
            .all(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || c == '_' || (dots && c == '.'))
}

pub(super) fn sections(text: &str) -> Result<Vec<RawSection>, DslError> {
    let mut out: Vec<RawSection> = Vec::new();
    for (i, full) in text.lines().enumerate() {
        let line = i + 1;
        let body = &full[..comment_start(full).unwrap_or(full.len())];
        let trimmed = body.trim();
        if trimmed.is_empty() {
            continue;
        }
        let indent = body.len() - body.trim_start().len();
        let syntax = |col: usize, message: &str| DslError::Syntax {
            line,
            column: col,
            message: message.into(),
        };
        if let Some(rest) = trimmed.strip_prefix('[') {
            let name = rest
                .strip_suffix(']')
                .ok_or_else(|| syntax(indent + trimmed.len(), "expected `]`"))?;
            if !is_ident(name, true) {
                return Err(syntax(
                    indent + 2,
                    "section names use lowercase letters, digits, `_` and `.`",
                ));
            }
            out.push(RawSection {
                name: name.into(),
                line,
                entries: Vec::new(),
            });
            continue;
        }
        let eq = body
            .find('=')
            .ok_or_else(|| syntax(indent + 1, "expected `key = value` or `[section]`"))?;
        let key = body[..eq].trim();
        if !is_ident(key, false) {
            return Err(syntax(indent + 1, "keys use lowercase letters, digits and `_`"));
        }
        let after = &body[eq + 1..];
        let value = after.trim();
        if value.is_empty() {
            return Err(syntax(eq + 2, "missing value"));
        }
        let column = eq + 2 + (after.len() - after.trim_start().len());
        let section = out
            .last_mut()
            .ok_or_else(|| syntax(1, "entry before the first section"))?;
        section.entries.push(RawEntry {
            key: key.into(),
            value: value.into(),
            line,
            column,
        });
    }
    Ok(out)
}

pub(super) enum ValueError {
    /// Offset within the value (0-based) and message.
    Syntax(usize, String),
    Type(&'static str),
}

fn unquote(v: &str) -> Result<String, ValueError> {
    let inner = &v[1..];
    let mut out = String::new();
    let mut chars = inner.char_indices();
    while let Some((i, c)) = chars.next() {
        match c {
            '"' => {
                if i + 1 != inner.len() {
                    return Err(ValueError::Syntax(i + 2, "text after closing quote".into()));
                }
                return Ok(out);
            }
            '\\' => match chars.next() {
                Some((_, '"')) => out.push('"'),
                Some((_, '\\')) => out.push('\\'),
                Some((_, 'n')) => out.push('\n'),
                Some((_, 't')) => out.push('\t'),
                _ => return Err(ValueError::Syntax(i + 1, "unknown escape".into())),
            },
            c => out.push(c),
        }
    }
    Err(ValueError::Syntax(v.len(), "unterminated string".into()))
}

pub(super) fn quote(s: &str) -> String {
    let mut out = String::from("\"");
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

pub(super) fn parse_value(v: &str, kind: Kind) -> Result<Value, ValueError> {
    if v.starts_with('\'') {
        return Err(ValueError::Syntax(0, "strings use double quotes".into()));
    }
    let text = if v.starts_with('"') {
        Some(unquote(v)?)
    } else {
        if v.chars().any(char::is_whitespace) {
            return Err(ValueError::Syntax(
                v.find(char::is_whitespace).unwrap_or(0),
                "unquoted value contains spaces".into(),
            ));
        }
        None
    };
    let bare = text.is_none();
    let s = text.unwrap_or_else(|| v.to_string());
    match kind {
        Kind::Str | Kind::Raw => Ok(Value::Str(s)),
        Kind::Int if bare => s
            .parse()
            .map(Value::Int)
            .map_err(|_| ValueError::Type("an integer")),
        Kind::Real if bare => s
            .parse::<f64>()
            .ok()
            .filter(|x| x.is_finite())
            .map(Value::Real)
            .ok_or(ValueError::Type("a real number")),
        Kind::Bool if bare => match s.as_str() {
            "true" => Ok(Value::Bool(true)),
            "false" => Ok(Value::Bool(false)),
            _ => Err(ValueError::Type("true or false")),
        },
        Kind::Duration if bare => {
            let split = s
                .find(|c: char| c.is_ascii_alphabetic())
                .ok_or(ValueError::Type("a duration"))?;
            let (num, unit) = s.split_at(split);
            let n: f64 = num
                .parse()
                .ok()
                .filter(|x: &f64| x.is_finite() && *x >= 0.0)
                .ok_or(ValueError::Type("a duration"))?;
            let secs = match unit {
                "ms" => n / 1000.0,
                "s" => n,
                "m" => n * 60.0,
                "h" => n * 3600.0,
                _ => return Err(ValueError::Type("a duration")),
            };
            Ok(Value::Real(secs))
        }
        Kind::Int => Err(ValueError::Type("an integer")),
        Kind::Real => Err(ValueError::Type("a real number")),
        Kind::Bool => Err(ValueError::Type("true or false")),
        Kind::Duration => Err(ValueError::Type("a duration")),
    }
}
