//! Flat key=value run configuration.
//!
//! A config file holds one `key=value` pair per line (`#` comments
//! allowed); command-line flags override file values. The effective
//! semantic settings of a run are hashed (SHA-256, first 16 hex digits)
//! and every output file starts with a `# config <hash>` comment line.
//! Execution-only parameters (`threads`, output paths) stay out of the
//! hash so reruns into different directories or with different thread
//! counts produce byte-identical files.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use sha2::{Digest, Sha256};

use crate::CliError;

pub fn load_config_file(path: &Path) -> Result<BTreeMap<String, String>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::io(format!("{}: {e}", path.display())))?;
    let mut map = BTreeMap::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            CliError::validation(format!(
                "{}:{}: expected key=value, got {line:?}",
                path.display(),
                lineno + 1
            ))
        })?;
        map.insert(key.trim().to_owned(), value.trim().to_owned());
    }
    Ok(map)
}

/// Merges config-file values with flag overrides and records the
/// effective settings for hashing.
pub struct Resolver {
    file: BTreeMap<String, String>,
    effective: BTreeMap<String, String>,
}

impl Resolver {
    pub fn new(config: Option<&PathBuf>) -> Result<Resolver, CliError> {
        let file = match config {
            Some(path) => load_config_file(path)?,
            None => BTreeMap::new(),
        };
        Ok(Resolver {
            file,
            effective: BTreeMap::new(),
        })
    }

    fn file_value(&self, key: &str) -> Option<&str> {
        self.file.get(key).map(String::as_str)
    }

    fn record(&mut self, key: &str, value: impl Display) {
        self.effective.insert(key.to_owned(), value.to_string());
    }

    /// Resolved path (flag wins over file); recorded in the hash.
    pub fn path(&mut self, key: &str, flag: Option<&PathBuf>) -> Option<PathBuf> {
        let value = flag
            .cloned()
            .or_else(|| self.file_value(key).map(PathBuf::from));
        if let Some(p) = &value {
            self.record(key, p.display());
        }
        value
    }

    /// Resolved required value with default; recorded in the hash.
    pub fn value<T>(&mut self, key: &str, flag: Option<T>, default: T) -> Result<T, CliError>
    where
        T: FromStr + Display + Clone,
    {
        let value = match flag {
            Some(v) => v,
            None => match self.file_value(key) {
                Some(raw) => raw.parse().map_err(|_| {
                    CliError::validation(format!("config key {key}: cannot parse {raw:?}"))
                })?,
                None => default,
            },
        };
        self.record(key, &value);
        Ok(value)
    }

    /// Resolved optional value; recorded when present.
    pub fn optional<T>(&mut self, key: &str, flag: Option<T>) -> Result<Option<T>, CliError>
    where
        T: FromStr + Display + Clone,
    {
        let value = match flag {
            Some(v) => Some(v),
            None => match self.file_value(key) {
                Some(raw) => Some(raw.parse().map_err(|_| {
                    CliError::validation(format!("config key {key}: cannot parse {raw:?}"))
                })?),
                None => None,
            },
        };
        if let Some(v) = &value {
            self.record(key, v);
        }
        Ok(value)
    }

    pub fn flag(&mut self, key: &str, set: bool) -> Result<bool, CliError> {
        let value = if set {
            true
        } else {
            match self.file_value(key) {
                Some(raw) => raw.parse().map_err(|_| {
                    CliError::validation(format!("config key {key}: expected true/false"))
                })?,
                None => false,
            }
        };
        self.record(key, value);
        Ok(value)
    }

    /// Execution-only parameter: resolved from flag or file but excluded
    /// from the hash.
    pub fn execution<T>(&self, key: &str, flag: Option<T>) -> Result<Option<T>, CliError>
    where
        T: FromStr,
    {
        match flag {
            Some(v) => Ok(Some(v)),
            None => match self.file_value(key) {
                Some(raw) => raw
                    .parse()
                    .map(Some)
                    .map_err(|_| CliError::validation(format!("config key {key}: cannot parse {raw:?}"))),
                None => Ok(None),
            },
        }
    }

    /// Hash of the effective semantic settings.
    pub fn config_hash(&self) -> String {
        let mut canon = String::new();
        for (k, v) in &self.effective {
            canon.push_str(k);
            canon.push('=');
            canon.push_str(v);
            canon.push('\n');
        }
        let digest = Sha256::digest(canon.as_bytes());
        digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }
}
