//! Layered configuration.
//!
//! Values are resolved from four layers, later ones winning: built-in
//! defaults, a TOML file, `PLANQL_<SECTION>_<KEY>` environment variables,
//! and explicit `section.key=value` overrides (command-line flags).
//!
//! ```toml
//! [llm]
//! endpoint = "https://api.openai.com/v1/chat/completions"
//! model = "gpt-4o-2024-05-13"
//! api_key_env = "PLANQL_API_KEY"
//! timeout_secs = 60
//! requests_per_minute = 60
//! retry = { attempts = 3, base_delay_ms = 500 }
//!
//! [embedder]
//! endpoint = "https://api.openai.com/v1/embeddings"
//! model = "thenlper/gte-large"
//!
//! [thresholds]
//! theta_t = 0.75
//! theta_c = 0.75
//! theta_l = 0.75
//! cluster_sim = 0.80
//!
//! [agent]
//! budget = 15
//! wide_table_threshold = 120
//! observation_cap = 8192
//! max_sample_rows = 5
//! max_cell_chars = 120
//!
//! [paths]
//! tables = "tables"
//! index = "index.json"
//! ```
//!
//! API keys are never read from the file; `api_key_env` names the variable
//! that holds the key.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use toml::{Table as TomlTable, Value as TomlValue};

use crate::agent::AgentConfig;
use crate::index::{Thresholds, DEFAULT_CLUSTER_SIM, DEFAULT_THRESHOLD};
use crate::providers::ProviderConfig;

/// Variable naming a config file to use when none is given explicitly.
pub const CONFIG_ENV: &str = "PLANQL_CONFIG";
const ENV_PREFIX: &str = "PLANQL_";
const OPTIONAL_KEYS: [&str; 2] = ["llm.requests_per_minute", "embedder.requests_per_minute"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ThresholdConfig {
    pub theta_t: f64,
    pub theta_c: f64,
    pub theta_l: f64,
    pub cluster_sim: f64,
}

impl Default for ThresholdConfig {
    fn default() -> Self {
        ThresholdConfig {
            theta_t: DEFAULT_THRESHOLD,
            theta_c: DEFAULT_THRESHOLD,
            theta_l: DEFAULT_THRESHOLD,
            cluster_sim: DEFAULT_CLUSTER_SIM,
        }
    }
}

impl ThresholdConfig {
    pub fn thresholds(&self) -> Thresholds {
        Thresholds {
            theta_t: self.theta_t,
            theta_c: self.theta_c,
            theta_l: self.theta_l,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PathsConfig {
    pub tables: PathBuf,
    pub index: PathBuf,
}

impl Default for PathsConfig {
    fn default() -> Self {
        PathsConfig {
            tables: PathBuf::from("tables"),
            index: PathBuf::from("index.json"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Config {
    pub llm: ProviderConfig,
    pub embedder: ProviderConfig,
    pub thresholds: ThresholdConfig,
    pub agent: AgentConfig,
    pub paths: PathsConfig,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            llm: ProviderConfig::chat_default(),
            embedder: ProviderConfig::embedding_default(),
            thresholds: ThresholdConfig::default(),
            agent: AgentConfig::default(),
            paths: PathsConfig::default(),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {reason}")]
    Read { path: String, reason: String },
    #[error("invalid config: {0}")]
    Invalid(String),
    #[error("unknown config key {0:?}")]
    UnknownKey(String),
    #[error("{0}: API keys must come from the environment variable named by api_key_env")]
    SecretInFile(String),
}

/// Sources for [`Config::resolve`].
#[derive(Debug, Default, Clone)]
pub struct Layers {
    /// Explicit config file; falls back to `PLANQL_CONFIG` from `env`.
    pub file: Option<PathBuf>,
    /// Environment snapshot, as `(name, value)` pairs.
    pub env: Vec<(String, String)>,
    /// `section.key` paths with raw values, highest precedence.
    pub overrides: Vec<(String, String)>,
}

impl Layers {
    pub fn from_process_env() -> Self {
        Layers {
            env: std::env::vars().collect(),
            ..Default::default()
        }
    }
}

fn defaults_tree() -> TomlTable {
    match TomlValue::try_from(Config::default()).expect("defaults serialize") {
        TomlValue::Table(t) => t,
        _ => unreachable!("a struct serializes to a table"),
    }
}

/// Every settable dotted key, longest first.
fn known_keys() -> Vec<String> {
    fn walk(prefix: &str, t: &TomlTable, out: &mut Vec<String>) {
        for (k, v) in t {
            let path = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
            match v {
                TomlValue::Table(sub) => walk(&path, sub, out),
                _ => out.push(path),
            }
        }
    }
    let mut out = Vec::new();
    walk("", &defaults_tree(), &mut out);
    out.extend(OPTIONAL_KEYS.iter().map(|s| s.to_string()));
    out.sort_by_key(|k| std::cmp::Reverse(k.len()));
    out
}

fn parse_raw(raw: &str) -> TomlValue {
    match toml::from_str::<TomlTable>(&format!("v = {raw}")) {
        Ok(mut t) => t.remove("v").expect("key present"),
        Err(_) => TomlValue::String(raw.to_string()),
    }
}

fn set_path(root: &mut TomlTable, path: &str, value: TomlValue) {
    let mut parts: Vec<&str> = path.split('.').collect();
    let last = parts.pop().expect("non-empty path");
    let mut cur = root;
    for p in parts {
        cur = cur
            .entry(p.to_string())
            .or_insert_with(|| TomlValue::Table(TomlTable::new()))
            .as_table_mut()
            .expect("intermediate config keys are tables");
    }
    cur.insert(last.to_string(), value);
}

fn merge(base: &mut TomlTable, top: TomlTable) {
    for (k, v) in top {
        match (base.get_mut(&k), v) {
            (Some(TomlValue::Table(b)), TomlValue::Table(t)) => merge(b, t),
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
}

fn reject_secrets(t: &TomlTable, prefix: &str) -> Result<(), ConfigError> {
    for (k, v) in t {
        let path = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
        if k == "api_key" || k == "key" || k == "token" {
            return Err(ConfigError::SecretInFile(path));
        }
        if let TomlValue::Table(sub) = v {
            reject_secrets(sub, &path)?;
        }
    }
    Ok(())
}

/// Maps `PLANQL_AGENT_BUDGET` to `agent.budget`.
fn env_key(name: &str, keys: &[String]) -> Option<String> {
    let rest = name.strip_prefix(ENV_PREFIX)?;
    keys.iter()
        .find(|k| k.replace('.', "_").to_ascii_uppercase() == rest)
        .cloned()
}

impl Config {
    pub fn from_toml_str(text: &str) -> Result<Config, ConfigError> {
        Config::resolve_with(Some(text), &Layers::default())
    }

    pub fn resolve(layers: &Layers) -> Result<Config, ConfigError> {
        let file = layers.file.clone().or_else(|| {
            layers
                .env
                .iter()
                .find(|(k, _)| k == CONFIG_ENV)
                .map(|(_, v)| PathBuf::from(v))
        });
        let text = match &file {
            Some(p) => Some(read_file(p)?),
            None => None,
        };
        Config::resolve_with(text.as_deref(), layers)
    }

    fn resolve_with(file_text: Option<&str>, layers: &Layers) -> Result<Config, ConfigError> {
        let keys = known_keys();
        let mut tree = defaults_tree();
        if let Some(text) = file_text {
            let file: TomlTable = toml::from_str(text).map_err(|e| ConfigError::Invalid(e.to_string()))?;
            reject_secrets(&file, "")?;
            merge(&mut tree, file);
        }
        let mut env: Vec<&(String, String)> = layers.env.iter().collect();
        env.sort();
        for (name, raw) in env {
            if let Some(key) = env_key(name, &keys) {
                set_path(&mut tree, &key, parse_raw(raw));
            }
        }
        for (key, raw) in &layers.overrides {
            if !keys.contains(key) {
                return Err(ConfigError::UnknownKey(key.clone()));
            }
            set_path(&mut tree, key, parse_raw(raw));
        }
        let cfg: Config = TomlValue::Table(tree)
            .try_into()
            .map_err(|e: toml::de::Error| ConfigError::Invalid(e.message().to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Range checks that hold regardless of which providers are used.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let invalid = |m: String| Err(ConfigError::Invalid(m));
        self.thresholds
            .thresholds()
            .validate()
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        if !(-1.0..=1.0).contains(&self.thresholds.cluster_sim) {
            return invalid(format!("cluster_sim {} outside [-1, 1]", self.thresholds.cluster_sim));
        }
        if self.agent.budget == 0 {
            return invalid("agent.budget must be at least 1".into());
        }
        if self.agent.observation_cap < 256 {
            return invalid("agent.observation_cap must be at least 256".into());
        }
        for (name, p) in [("llm", &self.llm), ("embedder", &self.embedder)] {
            if p.retry.attempts < 1 {
                return invalid(format!("{name}.retry.attempts must be at least 1"));
            }
            if !(p.timeout_secs > 0.0) {
                return invalid(format!("{name}.timeout_secs must be positive"));
            }
        }
        Ok(())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }
}

fn read_file(p: &Path) -> Result<String, ConfigError> {
    std::fs::read_to_string(p).map_err(|e| ConfigError::Read {
        path: p.display().to_string(),
        reason: e.to_string(),
    })
}
