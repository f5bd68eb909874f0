//! Flat `key = value` config files. `#` and `;` start comments, `[section]`
//! headers are ignored, and `_` in keys is read as `-` so keys can match the
//! long flag names either way.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use crate::failure::{CliResult, Failure};

#[derive(Debug, Default, Clone, PartialEq)]
pub struct ConfigFile {
    values: BTreeMap<String, String>,
}

impl ConfigFile {
    pub fn parse(text: &str, allowed: &[&str]) -> CliResult<Self> {
        let mut values = BTreeMap::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split(['#', ';']).next().unwrap_or("").trim();
            if line.is_empty() || (line.starts_with('[') && line.ends_with(']')) {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                Failure::usage(format!("config line {}: expected key = value", n + 1))
            })?;
            let key = k.trim().replace('_', "-");
            if !allowed.contains(&key.as_str()) {
                return Err(Failure::usage(format!(
                    "config line {}: unknown key {key:?}",
                    n + 1
                )));
            }
            values.insert(key, v.trim().to_string());
        }
        Ok(ConfigFile { values })
    }

    pub fn load(path: &Path, allowed: &[&str]) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Failure::io(path.display(), e))?;
        Self::parse(&text, allowed)
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    /// Flag value if given, else the file's value, else `default`.
    pub fn resolve<T>(&self, flag: Option<T>, key: &str, default: T) -> CliResult<T>
    where
        T: FromStr,
        T::Err: std::fmt::Display,
    {
        if let Some(v) = flag {
            return Ok(v);
        }
        match self.raw(key) {
            Some(s) => s
                .parse()
                .map_err(|e| Failure::usage(format!("config {key} = {s:?}: {e}"))),
            None => Ok(default),
        }
    }

    pub fn resolve_opt(&self, flag: Option<String>, key: &str) -> Option<String> {
        flag.or_else(|| self.raw(key).map(str::to_string))
    }
}

/// Parses `a,b,c` into a list.
pub fn parse_list<T>(key: &str, s: &str) -> CliResult<Vec<T>>
where
    T: FromStr,
    T::Err: std::fmt::Display,
{
    s.split(',')
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .map(|p| {
            p.parse()
                .map_err(|e| Failure::usage(format!("{key}: {p:?}: {e}")))
        })
        .collect()
}
