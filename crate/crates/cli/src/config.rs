//! Flat key = value configuration files with CLI-flag overrides.
//!
//! The file format is deliberately plain so resolved bundles stay diff-able:
//! one `key = value` per line, `#` comments, blank lines ignored. Flags win
//! over file values; defaults fill the rest. The fully resolved configuration
//! is echoed into every output bundle.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{CliError, CliResult};

#[derive(Debug, Default)]
pub struct FileConfig {
    values: BTreeMap<String, String>,
    consumed: std::cell::RefCell<std::collections::BTreeSet<String>>,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> CliResult<Self> {
        let Some(path) = path else {
            return Ok(FileConfig::default());
        };
        let body = std::fs::read_to_string(path)
            .map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
        let mut values = BTreeMap::new();
        for (lineno, raw) in body.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(CliError::config(format!(
                    "{}:{}: expected `key = value`, got `{raw}`",
                    path.display(),
                    lineno + 1
                )));
            };
            let key = key.trim().to_string();
            let value = value.trim().to_string();
            if values.insert(key.clone(), value).is_some() {
                return Err(CliError::config(format!(
                    "{}:{}: duplicate key `{key}`",
                    path.display(),
                    lineno + 1
                )));
            }
        }
        Ok(FileConfig {
            values,
            consumed: Default::default(),
        })
    }

    /// Typed lookup; records the key as known for the final unknown-key sweep.
    pub fn get<T: FromStr>(&self, key: &str) -> CliResult<Option<T>> {
        self.consumed.borrow_mut().insert(key.to_string());
        match self.values.get(key) {
            None => Ok(None),
            Some(raw) => raw.parse::<T>().map(Some).map_err(|_| {
                CliError::config(format!("config key `{key}`: cannot parse `{raw}`"))
            }),
        }
    }

    /// Reject keys the active command never asked about (typo protection).
    pub fn reject_unknown(&self) -> CliResult<()> {
        let consumed = self.consumed.borrow();
        let unknown: Vec<&String> = self
            .values
            .keys()
            .filter(|k| !consumed.contains(*k))
            .collect();
        if unknown.is_empty() {
            Ok(())
        } else {
            Err(CliError::config(format!(
                "unknown config keys: {}",
                unknown
                    .iter()
                    .map(|s| s.as_str())
                    .collect::<Vec<_>>()
                    .join(", ")
            )))
        }
    }
}

/// Resolve one setting: flag beats file beats default.
pub fn resolve<T: FromStr + Clone>(
    flag: Option<T>,
    file: &FileConfig,
    key: &str,
    default: T,
) -> CliResult<T> {
    if let Some(v) = flag {
        let _ = file.get::<T>(key)?; // mark known even when overridden
        return Ok(v);
    }
    Ok(file.get::<T>(key)?.unwrap_or(default))
}

/// Like [`resolve`] but with no default: the setting must come from a flag or
/// the file.
pub fn resolve_required<T: FromStr + Clone>(
    flag: Option<T>,
    file: &FileConfig,
    key: &str,
) -> CliResult<T> {
    if let Some(v) = flag {
        let _ = file.get::<T>(key)?;
        return Ok(v);
    }
    file.get::<T>(key)?
        .ok_or_else(|| CliError::config(format!("`{key}` must be set (flag or config file)")))
}

/// The fully resolved settings of a run, echoed into the output bundle.
#[derive(Debug, Default)]
pub struct ResolvedConfig {
    entries: Vec<(String, String)>,
}

impl ResolvedConfig {
    pub fn push(&mut self, key: &str, value: impl Display) {
        self.entries.push((key.to_string(), value.to_string()));
    }

    pub fn render(&self) -> String {
        let mut sorted = self.entries.clone();
        sorted.sort();
        let mut out = String::from("# resolved configuration (flags > config file > defaults)\n");
        for (k, v) in sorted {
            out.push_str(&format!("{k} = {v}\n"));
        }
        out
    }

    pub fn write_to(&self, dir: &Path) -> CliResult<PathBuf> {
        let path = dir.join("config.txt");
        std::fs::write(&path, self.render())
            .map_err(|e| CliError::runtime(format!("{}: {e}", path.display())))?;
        Ok(path)
    }
}
