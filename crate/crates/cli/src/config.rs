//! Flat key = value run configuration.
//!
//! One table per run; `#` starts a comment. Every getter records the
//! resolved value (explicit or default), so the manifest echoes the full
//! effective configuration byte-for-byte reproducibly.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

#[derive(Debug)]
pub struct ConfigError {
    pub field: String,
    pub reason: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "field={}: {}", self.field, self.reason)
    }
}

pub struct Config {
    raw: BTreeMap<String, String>,
    used: BTreeSet<String>,
    resolved: BTreeMap<String, String>,
}

impl Config {
    pub fn parse(text: &str) -> Result<Config, ConfigError> {
        let mut raw = BTreeMap::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = match line.find('#') {
                Some(pos) => &line[..pos],
                None => line,
            };
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(ConfigError {
                    field: format!("line {}", lineno + 1),
                    reason: format!("expected `key = value`, got `{line}`"),
                });
            };
            let key = key.trim().to_string();
            let value = value.trim().to_string();
            if key.is_empty() || value.is_empty() {
                return Err(ConfigError {
                    field: format!("line {}", lineno + 1),
                    reason: "empty key or value".into(),
                });
            }
            if raw.insert(key.clone(), value).is_some() {
                return Err(ConfigError {
                    field: key,
                    reason: "duplicate key".into(),
                });
            }
        }
        Ok(Config {
            raw,
            used: BTreeSet::new(),
            resolved: BTreeMap::new(),
        })
    }

    fn record(&mut self, key: &str, value: String) {
        self.used.insert(key.to_string());
        self.resolved.insert(key.to_string(), value);
    }

    pub fn require(&mut self, key: &str) -> Result<String, ConfigError> {
        match self.raw.get(key).cloned() {
            Some(v) => {
                self.record(key, v.clone());
                Ok(v)
            }
            None => Err(ConfigError {
                field: key.into(),
                reason: "missing required key".into(),
            }),
        }
    }

    pub fn get_or(&mut self, key: &str, default: &str) -> String {
        let v = self
            .raw
            .get(key)
            .cloned()
            .unwrap_or_else(|| default.to_string());
        self.record(key, v.clone());
        v
    }

    pub fn get_f64(&mut self, key: &str, default: f64) -> Result<f64, ConfigError> {
        let v = self.get_or(key, &format_default_f64(default));
        v.parse::<f64>().map_err(|_| ConfigError {
            field: key.into(),
            reason: format!("not a number: `{v}`"),
        })
    }

    pub fn get_usize(&mut self, key: &str, default: usize) -> Result<usize, ConfigError> {
        let v = self.get_or(key, &default.to_string());
        v.parse::<usize>().map_err(|_| ConfigError {
            field: key.into(),
            reason: format!("not a nonnegative integer: `{v}`"),
        })
    }

    pub fn get_u64(&mut self, key: &str, default: u64) -> Result<u64, ConfigError> {
        let v = self.get_or(key, &default.to_string());
        v.parse::<u64>().map_err(|_| ConfigError {
            field: key.into(),
            reason: format!("not a nonnegative integer: `{v}`"),
        })
    }

    /// Optional float: records "auto" when absent.
    pub fn get_f64_opt(&mut self, key: &str) -> Result<Option<f64>, ConfigError> {
        match self.raw.get(key).cloned() {
            None => {
                self.record(key, "auto".into());
                Ok(None)
            }
            Some(v) if v == "auto" => {
                self.record(key, "auto".into());
                Ok(None)
            }
            Some(v) => {
                self.record(key, v.clone());
                v.parse::<f64>().map(Some).map_err(|_| ConfigError {
                    field: key.into(),
                    reason: format!("not a number: `{v}`"),
                })
            }
        }
    }

    /// Rejects keys that no getter consumed (typo safety).
    pub fn finish(&self) -> Result<(), ConfigError> {
        for key in self.raw.keys() {
            if !self.used.contains(key) {
                return Err(ConfigError {
                    field: key.clone(),
                    reason: "unknown key for this subcommand".into(),
                });
            }
        }
        Ok(())
    }

    /// Fully resolved configuration (defaults materialized).
    pub fn resolved(&self) -> &BTreeMap<String, String> {
        &self.resolved
    }

    /// Overrides a resolved entry (used for environment overrides so the
    /// manifest reflects what actually happened).
    pub fn override_resolved(&mut self, key: &str, value: String) {
        self.resolved.insert(key.to_string(), value);
    }
}

fn format_default_f64(x: f64) -> String {
    if x == x.trunc() && x.abs() < 1e15 {
        format!("{x:.1}")
    } else {
        format!("{x}")
    }
}
