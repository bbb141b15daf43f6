//! Run settings merged from defaults, an optional `key = value` file and
//! command-line flags, in increasing order of precedence.

use std::cell::RefCell;
use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;
use std::str::FromStr;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{0}")]
    Invalid(String),
    #[error("config file {path}: {msg}")]
    File { path: String, msg: String },
    #[error(transparent)]
    Library(#[from] rkhs_transform::Error),
}

pub const KEYS: &[&str] = &[
    "antithetic",
    "dim",
    "expect",
    "functional",
    "grid",
    "horizon",
    "kernel",
    "measure",
    "out",
    "paths",
    "ranks",
    "s",
    "save-paths",
    "schedule",
    "seed",
    "sets",
    "shards",
    "stamp",
    "t",
    "trials",
    "weights",
];

/// Keys that change where or how results are written but never the results
/// themselves; they are left out of the recorded configuration.
const PRESENTATION_KEYS: &[&str] = &["out", "shards", "stamp", "save-paths"];

fn defaults() -> BTreeMap<String, String> {
    [
        ("antithetic", "false"),
        ("out", "out"),
        ("paths", "100000"),
        ("seed", "1"),
        ("shards", "0"),
        ("stamp", "false"),
    ]
    .into_iter()
    .map(|(k, v)| (k.to_string(), v.to_string()))
    .collect()
}

#[derive(Debug, Default)]
pub struct Settings {
    values: BTreeMap<String, String>,
    tolerances: BTreeMap<String, f64>,
    used_tolerances: RefCell<BTreeSet<String>>,
}

impl Settings {
    /// Layers `file` over the defaults and `flags` over both. Keys named
    /// `tol.NAME` set tolerance overrides.
    pub fn build(
        file: Option<&Path>,
        flags: &[(String, String)],
        tol_flags: &[String],
    ) -> Result<Self, ConfigError> {
        let mut s = Settings { values: defaults(), ..Default::default() };
        if let Some(path) = file {
            let text = std::fs::read_to_string(path).map_err(|e| ConfigError::File {
                path: path.display().to_string(),
                msg: e.to_string(),
            })?;
            for (n, line) in text.lines().enumerate() {
                let line = line.trim();
                if line.is_empty() || line.starts_with('#') {
                    continue;
                }
                let (k, v) = line.split_once('=').ok_or_else(|| ConfigError::File {
                    path: path.display().to_string(),
                    msg: format!("line {} is not key = value", n + 1),
                })?;
                s.set(k.trim(), v.trim())?;
            }
        }
        for (k, v) in flags {
            s.set(k, v)?;
        }
        for t in tol_flags {
            let (k, v) = t
                .split_once('=')
                .ok_or_else(|| ConfigError::Invalid(format!("--tol {t:?} is not NAME=VALUE")))?;
            s.set(&format!("tol.{}", k.trim()), v.trim())?;
        }
        Ok(s)
    }

    fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        if let Some(name) = key.strip_prefix("tol.") {
            let v: f64 = value
                .parse()
                .map_err(|_| ConfigError::Invalid(format!("tolerance {name} = {value:?} is not a number")))?;
            if v.is_nan() || v < 0.0 {
                return Err(ConfigError::Invalid(format!("tolerance {name} must be >= 0")));
            }
            self.tolerances.insert(name.to_string(), v);
            return Ok(());
        }
        if !KEYS.contains(&key) {
            return Err(ConfigError::Invalid(format!("unknown setting {key:?}")));
        }
        self.values.insert(key.to_string(), value.to_string());
        Ok(())
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>, ConfigError> {
        self.raw(key)
            .map(|v| {
                v.parse()
                    .map_err(|_| ConfigError::Invalid(format!("bad value for {key}: {v:?}")))
            })
            .transpose()
    }

    pub fn get_or<T: FromStr>(&self, key: &str, default: T) -> Result<T, ConfigError> {
        Ok(self.get(key)?.unwrap_or(default))
    }

    pub fn flag(&self, key: &str) -> Result<bool, ConfigError> {
        self.get_or(key, false)
    }

    /// Comma-separated list.
    pub fn list<T: FromStr>(&self, key: &str) -> Result<Option<Vec<T>>, ConfigError> {
        self.raw(key)
            .map(|v| {
                v.split(',')
                    .map(str::trim)
                    .filter(|x| !x.is_empty())
                    .map(|x| {
                        x.parse()
                            .map_err(|_| ConfigError::Invalid(format!("bad entry {x:?} in {key}")))
                    })
                    .collect()
            })
            .transpose()
    }

    /// Gate for the check `name`, overridable with `--tol name=VALUE`.
    pub fn gate(&self, name: &str, default: f64) -> f64 {
        self.used_tolerances.borrow_mut().insert(name.to_string());
        self.tolerances.get(name).copied().unwrap_or(default)
    }

    /// A copy holding only `keys` (plus defaults) and all tolerance overrides.
    pub fn restricted(&self, keys: &[&str]) -> Settings {
        let mut values = defaults();
        for k in keys {
            if let Some(v) = self.values.get(*k) {
                values.insert(k.to_string(), v.clone());
            }
        }
        Settings { values, tolerances: self.tolerances.clone(), ..Default::default() }
    }

    /// Marks the tolerances consulted through `other` as used here too.
    pub fn absorb_used(&self, other: &Settings) {
        let theirs = other.used_tolerances.borrow();
        self.used_tolerances.borrow_mut().extend(theirs.iter().cloned());
    }

    /// Overrides that no check asked for.
    pub fn unused_tolerances(&self) -> Vec<String> {
        let used = self.used_tolerances.borrow();
        self.tolerances.keys().filter(|k| !used.contains(*k)).cloned().collect()
    }

    /// Settings that can influence results, for the output header.
    pub fn recorded(&self) -> BTreeMap<String, String> {
        let mut out: BTreeMap<String, String> = self
            .values
            .iter()
            .filter(|(k, _)| !PRESENTATION_KEYS.contains(&k.as_str()))
            .map(|(k, v)| (k.clone(), v.clone()))
            .collect();
        for (k, v) in &self.tolerances {
            out.insert(format!("tol.{k}"), format!("{v:?}"));
        }
        out
    }
}
