// SPDX-License-Identifier: MIT OR Apache-2.0

//! `key = value` run manifests.
//!
//! Blank lines and `#` comments are skipped, values may be quoted, and keys
//! match the long flag names with `-` or `_` interchangeable. A flag given on
//! the command line always wins over the file, which wins over defaults.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::path::Path;
use std::str::FromStr;

use crate::CliError;

/// Keys accepted in a config file.
pub const KNOWN_KEYS: &[&str] = &[
    "alpha",
    "beta",
    "n_balls",
    "ratio",
    "criterion",
    "param_count",
    "min_run",
    "k",
    "method",
    "methods",
    "eta",
    "tol",
    "max_iter",
    "n_init",
    "nmi_norm",
    "lag",
    "window",
    "seed",
    "reps",
    "periods",
    "min_len",
    "max_len",
    "z",
    "kde_points",
];

#[derive(Debug, Default, Clone)]
pub struct Config {
    values: BTreeMap<String, String>,
}

fn normalize_key(k: &str) -> String {
    k.trim().replace('-', "_").to_ascii_lowercase()
}

impl Config {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut values = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| CliError::Usage(format!("config line {}: expected key = value", i + 1)))?;
            let key = normalize_key(k);
            if !KNOWN_KEYS.contains(&key.as_str()) {
                return Err(CliError::Usage(format!("config line {}: unknown key {key:?}", i + 1)));
            }
            let v = v.trim().trim_matches('"').trim_matches('\'').to_owned();
            values.insert(key, v);
        }
        Ok(Self { values })
    }

    /// Flag value if given, else the config entry, else `default`.
    pub fn pick<T>(&self, flag: Option<T>, key: &str, default: T) -> Result<T, CliError>
    where
        T: FromStr,
        T::Err: Display,
    {
        if let Some(v) = flag {
            return Ok(v);
        }
        match self.values.get(key) {
            Some(text) => text
                .parse()
                .map_err(|e| CliError::Usage(format!("config key {key}: {e}"))),
            None => Ok(default),
        }
    }

    /// Like [`Config::pick`] without a default.
    pub fn pick_opt<T>(&self, flag: Option<T>, key: &str) -> Result<Option<T>, CliError>
    where
        T: FromStr,
        T::Err: Display,
    {
        if flag.is_some() {
            return Ok(flag);
        }
        self.values
            .get(key)
            .map(|text| text.parse().map_err(|e| CliError::Usage(format!("config key {key}: {e}"))))
            .transpose()
    }
}
