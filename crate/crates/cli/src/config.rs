//! Run configuration, read from flat `key = value` text or JSON.
//!
//! Keys mirror the JSON layout with nested sections joined by dots, e.g.
//! `scattering.q1 = 5` or `grid.c = 0.1,1,10,100`. Lines starting with `#`
//! are comments. Writing a config and reading it back is lossless.

use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use thiserror::Error;

use scatemo::{FeatureConfig, FeatureKind, GridSpec, MfccConfig, ScatteringConfig};

pub const SAMPLE_RATE_HZ: u32 = 16000;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read { path: String, source: std::io::Error },
    #[error("line {line}: {detail}")]
    Syntax { line: usize, detail: String },
    #[error("unknown key {0:?}")]
    UnknownKey(String),
    #[error("key {key:?}: {detail}")]
    Value { key: String, detail: String },
    #[error("invalid config: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub feature: FeatureKind,
    pub sample_rate_hz: u32,
    pub scattering: ScatteringConfig,
    pub mfcc: MfccConfig,
    pub grid: GridSpec,
    pub manifest: Option<PathBuf>,
    pub cache_dir: Option<PathBuf>,
    pub report_dir: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            feature: FeatureKind::Scatnet,
            sample_rate_hz: SAMPLE_RATE_HZ,
            scattering: ScatteringConfig::default(),
            mfcc: MfccConfig::default(),
            grid: GridSpec::default(),
            manifest: None,
            cache_dir: None,
            report_dir: None,
        }
    }
}

impl RunConfig {
    /// Reads a config file. Relative paths inside it are taken relative to the file.
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| ConfigError::Read { path: path.display().to_string(), source })?;
        let mut cfg: Self = parse(&text)?;
        let base = path.parent().unwrap_or(Path::new(""));
        for p in [&mut cfg.manifest, &mut cfg.cache_dir, &mut cfg.report_dir].into_iter().flatten() {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.sample_rate_hz != SAMPLE_RATE_HZ {
            return Err(ConfigError::Invalid(format!(
                "sample_rate_hz must be {SAMPLE_RATE_HZ}, got {}",
                self.sample_rate_hz
            )));
        }
        if self.grid.c.is_empty() || self.grid.gamma.is_empty() {
            return Err(ConfigError::Invalid("grid.c and grid.gamma must be non-empty".into()));
        }
        Ok(())
    }

    pub fn feature_config(&self) -> FeatureConfig {
        FeatureConfig { kind: self.feature, scattering: self.scattering.clone(), mfcc: self.mfcc.clone() }
    }
}

/// Parses JSON (if the text starts with `{`) or `key = value` lines into `T`.
///
/// Keys must exist in `T::default()`; unspecified keys keep their defaults.
pub fn parse<T: Serialize + DeserializeOwned + Default>(text: &str) -> Result<T, ConfigError> {
    let mut tree = serde_json::to_value(T::default()).expect("defaults serialize");
    if text.trim_start().starts_with('{') {
        let given: Value = serde_json::from_str(text)
            .map_err(|e| ConfigError::Syntax { line: e.line(), detail: e.to_string() })?;
        merge(&mut tree, given, "")?;
    } else {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| ConfigError::Syntax { line: i + 1, detail: format!("expected key = value, got {line:?}") })?;
            set_key(&mut tree, key.trim(), value.trim())?;
        }
    }
    serde_json::from_value(tree).map_err(|e| ConfigError::Invalid(e.to_string()))
}

fn merge(tree: &mut Value, given: Value, prefix: &str) -> Result<(), ConfigError> {
    let Value::Object(given) = given else {
        return Err(ConfigError::Invalid(format!("{} must be an object", if prefix.is_empty() { "config" } else { prefix })));
    };
    let Value::Object(slots) = tree else { unreachable!("merge target is an object") };
    for (k, v) in given {
        let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
        let slot = slots.get_mut(&k).ok_or_else(|| ConfigError::UnknownKey(key.clone()))?;
        if slot.is_object() {
            merge(slot, v, &key)?;
        } else {
            *slot = v;
        }
    }
    Ok(())
}

fn set_key(tree: &mut Value, key: &str, raw: &str) -> Result<(), ConfigError> {
    let mut slot = tree;
    for part in key.split('.') {
        slot = slot
            .as_object_mut()
            .and_then(|m| m.get_mut(part))
            .ok_or_else(|| ConfigError::UnknownKey(key.to_owned()))?;
    }
    let bad = |detail: String| ConfigError::Value { key: key.to_owned(), detail };
    *slot = match slot {
        Value::Object(_) => return Err(bad("is a section, not a value".into())),
        Value::Bool(_) => Value::Bool(raw.parse().map_err(|_| bad(format!("expected true or false, got {raw:?}")))?),
        Value::Number(_) => number(raw).map_err(bad)?,
        Value::Array(_) => Value::Array(
            raw.split(',')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(number)
                .collect::<Result<_, _>>()
                .map_err(bad)?,
        ),
        Value::String(_) => Value::String(raw.to_owned()),
        Value::Null if raw.is_empty() => Value::Null,
        Value::Null => Value::String(raw.to_owned()),
    };
    Ok(())
}

fn number(raw: &str) -> Result<Value, String> {
    match serde_json::from_str::<Value>(raw) {
        Ok(v @ Value::Number(_)) => Ok(v),
        _ => Err(format!("expected a number, got {raw:?}")),
    }
}

/// Renders `value` as `key = value` lines. Unset optional keys are omitted.
pub fn to_kv<T: Serialize>(value: &T) -> String {
    let mut out = String::new();
    if let Value::Object(m) = serde_json::to_value(value).expect("config serializes") {
        write_section(&mut out, &m, "");
    }
    out
}

fn write_section(out: &mut String, m: &Map<String, Value>, prefix: &str) {
    for (k, v) in m {
        let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
        let rendered = match v {
            Value::Null => continue,
            Value::Object(inner) => {
                write_section(out, inner, &key);
                continue;
            }
            Value::String(s) => s.clone(),
            Value::Array(items) => items.iter().map(Value::to_string).collect::<Vec<_>>().join(","),
            other => other.to_string(),
        };
        out.push_str(&format!("{key} = {rendered}\n"));
    }
}
