//! Plain-text run configuration: one `key = value` per line, `#` comments.

use std::collections::BTreeMap;
use std::path::Path;

use thiserror::Error;

use crate::convdec::ConvCodeError;
use crate::mimodet::MimoError;
use crate::nnet::{ModelFileError, NnetError};
use crate::ofdmasync::OfdmaError;

/// Anything the measurement rig can reject or fail on.
#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config line {line}: {msg}")]
    ConfigSyntax { line: usize, msg: String },
    #[error("config key `{key}`: {msg}")]
    ConfigValue { key: String, msg: String },
    #[error("missing required config key `{key}`")]
    MissingKey { key: String },
    #[error("unknown {what} `{name}`")]
    Unknown { what: &'static str, name: String },
    #[error("detector `{detector}` does not belong to task `{task}`")]
    DetectorTask { detector: String, task: String },
    #[error("model {path}: {msg}")]
    Model { path: String, msg: String },
    #[error("training diverged: {0}")]
    Diverged(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Nnet(#[from] NnetError),
    #[error(transparent)]
    ModelFile(#[from] ModelFileError),
    #[error(transparent)]
    ConvCode(#[from] ConvCodeError),
    #[error(transparent)]
    Mimo(#[from] MimoError),
    #[error(transparent)]
    Ofdma(#[from] OfdmaError),
}

impl HarnessError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        HarnessError::Io {
            path: path.display().to_string(),
            source,
        }
    }
}

/// Parsed key/value configuration with typed, defaulting accessors.
///
/// Keys are kept sorted so a canonical rendering (for content hashing) is
/// independent of declaration order.
#[derive(Debug, Clone, Default)]
pub struct ConfigMap {
    entries: BTreeMap<String, String>,
}

/// Parse configuration text: blank lines and `#` comments are skipped,
/// everything else must be `key = value`. Duplicate keys are rejected —
/// silently shadowed settings hide typos.
pub fn parse_config_text(text: &str) -> Result<ConfigMap, HarnessError> {
    let mut entries = BTreeMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or(HarnessError::ConfigSyntax {
            line: idx + 1,
            msg: format!("expected `key = value`, got `{line}`"),
        })?;
        let key = key.trim().to_string();
        let value = value.trim().to_string();
        if key.is_empty() {
            return Err(HarnessError::ConfigSyntax {
                line: idx + 1,
                msg: "empty key".into(),
            });
        }
        if entries.insert(key.clone(), value).is_some() {
            return Err(HarnessError::ConfigSyntax {
                line: idx + 1,
                msg: format!("duplicate key `{key}`"),
            });
        }
    }
    Ok(ConfigMap { entries })
}

/// Read and parse a configuration file.
pub fn parse_config_file(path: &Path) -> Result<ConfigMap, HarnessError> {
    let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
    parse_config_text(&text)
}

impl ConfigMap {
    pub fn from_pairs<I, K, V>(pairs: I) -> Self
    where
        I: IntoIterator<Item = (K, V)>,
        K: Into<String>,
        V: Into<String>,
    {
        ConfigMap {
            entries: pairs
                .into_iter()
                .map(|(k, v)| (k.into(), v.into()))
                .collect(),
        }
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    pub fn require(&self, key: &str) -> Result<&str, HarnessError> {
        self.get(key).ok_or(HarnessError::MissingKey {
            key: key.to_string(),
        })
    }

    fn parse<T: std::str::FromStr>(&self, key: &str, value: &str) -> Result<T, HarnessError> {
        value.parse().map_err(|_| HarnessError::ConfigValue {
            key: key.to_string(),
            msg: format!(
                "cannot parse `{value}` as {}",
                std::any::type_name::<T>()
            ),
        })
    }

    pub fn get_f64(&self, key: &str, default: f64) -> Result<f64, HarnessError> {
        match self.get(key) {
            None => Ok(default),
            Some(v) => self.parse(key, v),
        }
    }

    pub fn require_f64(&self, key: &str) -> Result<f64, HarnessError> {
        let v = self.require(key)?.to_string();
        self.parse(key, &v)
    }

    pub fn get_u64(&self, key: &str, default: u64) -> Result<u64, HarnessError> {
        match self.get(key) {
            None => Ok(default),
            Some(v) => self.parse(key, v),
        }
    }

    pub fn get_usize(&self, key: &str, default: usize) -> Result<usize, HarnessError> {
        match self.get(key) {
            None => Ok(default),
            Some(v) => self.parse(key, v),
        }
    }

    /// Comma-separated list of numbers, e.g. `hidden = 256, 128, 64`.
    pub fn get_list<T: std::str::FromStr>(
        &self,
        key: &str,
        default: &[T],
    ) -> Result<Vec<T>, HarnessError>
    where
        T: Clone,
    {
        match self.get(key) {
            None => Ok(default.to_vec()),
            Some(v) => v
                .split(',')
                .map(|part| self.parse(key, part.trim()))
                .collect(),
        }
    }

    /// Canonical `key = value` rendering in sorted key order.
    pub fn canonical(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.entries {
            out.push_str(k);
            out.push_str(" = ");
            out.push_str(v);
            out.push('\n');
        }
        out
    }

    /// Overlay `other`'s entries on top of this map.
    pub fn merged_with(&self, other: &ConfigMap) -> ConfigMap {
        let mut entries = self.entries.clone();
        for (k, v) in &other.entries {
            entries.insert(k.clone(), v.clone());
        }
        ConfigMap { entries }
    }
}

/// Config seed after the environment override: `PHYMODEM_SEED`, when set,
/// replaces whatever the file says.
pub fn effective_seed(config_seed: u64) -> Result<u64, HarnessError> {
    match std::env::var("PHYMODEM_SEED") {
        Err(_) => Ok(config_seed),
        Ok(text) => text.trim().parse().map_err(|_| HarnessError::ConfigValue {
            key: "PHYMODEM_SEED".into(),
            msg: format!("cannot parse `{text}` as u64"),
        }),
    }
}
