//! Flat `key=value` parameter documents for the generators.
//!
//! One assignment per line; `#` starts a comment. Keys use the symbol names of
//! the generator tables (`eta1`, `c4`, `theta7`, `k1`, `d2`, ...).

use std::collections::BTreeMap;
use std::str::FromStr;

use super::IntensityError;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ParamDoc {
    values: BTreeMap<String, (usize, String)>,
}

impl ParamDoc {
    pub fn parse(text: &str) -> Result<Self, IntensityError> {
        let mut values = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| IntensityError::Syntax {
                line: i + 1,
                message: format!("expected key=value, got `{line}`"),
            })?;
            let key = k.trim().to_ascii_lowercase();
            if values
                .insert(key.clone(), (i + 1, v.trim().to_string()))
                .is_some()
            {
                return Err(IntensityError::Syntax {
                    line: i + 1,
                    message: format!("duplicate key `{key}`"),
                });
            }
        }
        Ok(Self { values })
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<T, IntensityError> {
        let (line, v) = self
            .values
            .get(key)
            .ok_or_else(|| IntensityError::Parameter(format!("missing `{key}`")))?;
        v.parse().map_err(|_| IntensityError::Syntax {
            line: *line,
            message: format!("`{key}` has unparsable value `{v}`"),
        })
    }

    /// Parses `key`, falling back to `default` when it is absent.
    pub fn get_or<T: FromStr>(&self, key: &str, default: T) -> Result<T, IntensityError> {
        if self.values.contains_key(key) {
            self.get(key)
        } else {
            Ok(default)
        }
    }

    /// Fails on keys outside `known`, which catches typos.
    pub fn reject_unknown(&self, known: &[&str]) -> Result<(), IntensityError> {
        match self.values.iter().find(|(k, _)| !known.contains(&k.as_str())) {
            Some((k, (line, _))) => Err(IntensityError::Syntax {
                line: *line,
                message: format!("unknown parameter `{k}`"),
            }),
            None => Ok(()),
        }
    }
}

/// Renders `(key, value)` pairs one per line.
pub fn render(pairs: &[(&str, String)]) -> String {
    pairs.iter().map(|(k, v)| format!("{k}={v}\n")).collect()
}
