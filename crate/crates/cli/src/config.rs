//! Application configuration: defaults, a TOML or JSON file, then
//! `TENDERFORGE_` environment overrides.
//!
//! Environment keys map onto the config tree by lowercasing and splitting on
//! `__`, so `TENDERFORGE_RERANK__ALPHA=0.7` sets `rerank.alpha`.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

pub const ENV_PREFIX: &str = "TENDERFORGE_";

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("cannot parse {path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("environment override {key}: {message}")]
    Env { key: String, message: String },
    #[error("invalid config: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EmbeddingKind {
    Test,
    Http,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EmbeddingConfig {
    pub provider: EmbeddingKind,
    pub url: Option<String>,
    pub dimension: usize,
    pub timeout_ms: u64,
    pub retries: u32,
}

impl Default for EmbeddingConfig {
    fn default() -> Self {
        Self {
            provider: EmbeddingKind::Test,
            url: None,
            dimension: tenderforge_core::text_metrics::DEFAULT_DIMENSION,
            timeout_ms: 10_000,
            retries: 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LlmKind {
    Mock,
    Http,
    /// No model: generate tags become `[GEN:key]` placeholders.
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LlmConfig {
    pub provider: LlmKind,
    pub url: Option<String>,
    pub timeout_ms: u64,
    pub retries: u32,
}

impl Default for LlmConfig {
    fn default() -> Self {
        Self {
            provider: LlmKind::Mock,
            url: None,
            timeout_ms: 30_000,
            retries: 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RerankConfig {
    pub alpha: f64,
}

impl Default for RerankConfig {
    fn default() -> Self {
        Self {
            alpha: tenderforge_core::reranker::DEFAULT_ALPHA,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KbConfig {
    pub theta: f64,
}

impl Default for KbConfig {
    fn default() -> Self {
        Self {
            theta: tenderforge_core::knowledge_base::DEFAULT_THETA,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RetrieveConfig {
    pub k: usize,
}

impl Default for RetrieveConfig {
    fn default() -> Self {
        Self { k: 10 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ServerConfig {
    pub bind: String,
    /// JSONL file holding one session record per line.
    pub session_snapshot: Option<PathBuf>,
}

impl Default for ServerConfig {
    fn default() -> Self {
        Self {
            bind: "127.0.0.1:8080".into(),
            session_snapshot: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AppConfig {
    pub corpus_path: Option<PathBuf>,
    pub index_path: Option<PathBuf>,
    pub triples_path: Option<PathBuf>,
    pub taxonomy_path: Option<PathBuf>,
    pub embedding: EmbeddingConfig,
    pub llm: LlmConfig,
    pub rerank: RerankConfig,
    pub kb: KbConfig,
    pub retrieve: RetrieveConfig,
    pub server: ServerConfig,
    pub seed: u64,
}

impl AppConfig {
    /// Defaults, overlaid by `path` when given, then by the process
    /// environment.
    pub fn load(path: Option<&Path>) -> Result<Self, ConfigError> {
        Self::load_with_env(path, std::env::vars())
    }

    pub fn load_with_env(
        path: Option<&Path>,
        env: impl IntoIterator<Item = (String, String)>,
    ) -> Result<Self, ConfigError> {
        let mut tree = serde_json::to_value(Self::default()).expect("default config serializes");
        if let Some(path) = path {
            merge(&mut tree, read_file(path)?);
        }
        let mut overrides: Vec<(String, String)> = env
            .into_iter()
            .filter(|(k, _)| k.starts_with(ENV_PREFIX))
            .collect();
        overrides.sort();
        for (key, value) in overrides {
            apply_env(&mut tree, &key, &value)?;
        }
        let config: Self =
            serde_json::from_value(tree).map_err(|e| ConfigError::Invalid(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let invalid = |m: String| Err(ConfigError::Invalid(m));
        if !(self.rerank.alpha.is_finite() && self.rerank.alpha >= 0.0) {
            return invalid(format!(
                "rerank.alpha must be >= 0, got {}",
                self.rerank.alpha
            ));
        }
        if !(0.0..=1.0).contains(&self.kb.theta) {
            return invalid(format!(
                "kb.theta must lie in [0, 1], got {}",
                self.kb.theta
            ));
        }
        if self.retrieve.k < 1 {
            return invalid("retrieve.k must be >= 1".into());
        }
        if self.embedding.dimension < 8 {
            return invalid(format!(
                "embedding.dimension must be >= 8, got {}",
                self.embedding.dimension
            ));
        }
        if self.embedding.provider == EmbeddingKind::Http && self.embedding.url.is_none() {
            return invalid("embedding.url is required for the http provider".into());
        }
        if self.llm.provider == LlmKind::Http && self.llm.url.is_none() {
            return invalid("llm.url is required for the http provider".into());
        }
        Ok(())
    }
}

fn read_file(path: &Path) -> Result<Value, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
        path: path.to_path_buf(),
        source,
    })?;
    let parse_err = |message: String| ConfigError::Parse {
        path: path.to_path_buf(),
        message,
    };
    let is_toml = path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("toml"));
    if is_toml {
        let table: toml::Table = toml::from_str(&text).map_err(|e| parse_err(e.to_string()))?;
        serde_json::to_value(table).map_err(|e| parse_err(e.to_string()))
    } else {
        serde_json::from_str(&text).map_err(|e| parse_err(e.to_string()))
    }
}

fn merge(base: &mut Value, overlay: Value) {
    match (base, overlay) {
        (Value::Object(b), Value::Object(o)) => {
            for (k, v) in o {
                match b.get_mut(&k) {
                    Some(slot) => merge(slot, v),
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, v) => *slot = v,
    }
}

/// Sets one leaf. The value is parsed according to the type of the value it
/// replaces; unset optional leaves take the raw string.
fn apply_env(tree: &mut Value, key: &str, raw: &str) -> Result<(), ConfigError> {
    let err = |message: String| ConfigError::Env {
        key: key.to_string(),
        message,
    };
    let path: Vec<String> = key[ENV_PREFIX.len()..]
        .split("__")
        .map(str::to_lowercase)
        .collect();
    let mut node = tree;
    for (i, part) in path.iter().enumerate() {
        let Value::Object(map) = node else {
            return Err(err(format!("{} is not a section", path[..i].join("."))));
        };
        node = map
            .get_mut(part)
            .ok_or_else(|| err(format!("unknown key {}", path[..=i].join("."))))?;
    }
    *node = match node {
        Value::Number(_) => {
            let n: serde_json::Number = raw
                .trim()
                .parse()
                .map_err(|_| err(format!("expected a number, got {raw:?}")))?;
            Value::Number(n)
        }
        Value::Bool(_) => Value::Bool(
            raw.trim()
                .parse()
                .map_err(|_| err(format!("expected true or false, got {raw:?}")))?,
        ),
        Value::Object(_) | Value::Array(_) => {
            return Err(err("cannot override a whole section".into()))
        }
        Value::String(_) | Value::Null => Value::String(raw.to_string()),
    };
    Ok(())
}
