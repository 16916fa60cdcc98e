//! Pipeline configuration: defaults, a flat `key = value` file format,
//! environment variables and command-line overrides, applied in that order.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::context::{SplitterConfig, DEFAULT_MAX_CONTEXT_CHARS};
use crate::inference::{DEFAULT_RUNS, DEFAULT_TEMPERATURE};

/// Environment variables and the configuration keys they set.
pub const ENV_KEYS: &[(&str, &str)] = &[
    ("SEARCH_API_KEY", "search.key"),
    ("SEARCH_API_URL", "search.url"),
    ("EMBED_API_URL", "embed.url"),
    ("EMBED_MODEL", "embed.model"),
    ("LLM_API_URL", "llm.url"),
    ("LLM_MODEL", "llm.model"),
    ("LLM_API_KEY", "llm.key"),
    ("MANICHECK_CACHE_DIR", "cache_dir"),
];

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ConfigError {
    #[error("{origin}: unknown configuration key {key:?}")]
    UnknownKey { origin: String, key: String },
    #[error("{origin}: bad value for {key}: {message}")]
    BadValue {
        origin: String,
        key: String,
        message: String,
    },
    #[error("{path}:{line}: expected `key = value`")]
    Syntax { path: String, line: usize },
    #[error("cannot read config file {path}: {message}")]
    Io { path: String, message: String },
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    #[default]
    Retrieval,
    Ablation,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum SearchSource {
    Mock { path: PathBuf },
    Live { endpoint: String, #[serde(skip)] api_key: Option<String> },
    Unset,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum EmbedSource {
    Mock16,
    Live { endpoint: String, model: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum LlmSource {
    Scripted { path: PathBuf },
    Live { endpoint: String, model: String, #[serde(skip)] api_key: Option<String> },
    Unset,
}

/// Where each provider comes from. API keys never serialize.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ProviderConfig {
    pub search: SearchSource,
    pub embedding: EmbedSource,
    pub llm: LlmSource,
    /// Fixture manifest served instead of the network when set.
    pub pages: Option<PathBuf>,
}

impl ProviderConfig {
    pub fn is_offline(&self) -> bool {
        !matches!(self.search, SearchSource::Live { .. })
            && !matches!(self.embedding, EmbedSource::Live { .. })
            && !matches!(self.llm, LlmSource::Live { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PipelineConfig {
    pub k_documents: usize,
    pub retrieved_chunks: usize,
    pub runs: usize,
    pub temperature: f64,
    pub splitter: SplitterConfig,
    pub max_context_chars: usize,
    pub mode: Mode,
    pub providers: ProviderConfig,
    pub cache_dir: Option<PathBuf>,
    pub no_fetch: bool,
    pub fetch_timeout_seconds: f64,
    pub template: Option<PathBuf>,
    /// Claims evaluated at once by `eval` and `benchmark`.
    pub parallel: usize,
    /// Explanation check reads only the runs that voted with the majority.
    pub explain_majority_runs_only: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            k_documents: 3,
            retrieved_chunks: 5,
            runs: DEFAULT_RUNS,
            temperature: DEFAULT_TEMPERATURE,
            splitter: SplitterConfig::default(),
            max_context_chars: DEFAULT_MAX_CONTEXT_CHARS,
            mode: Mode::Retrieval,
            providers: ProviderConfig {
                search: SearchSource::Unset,
                embedding: EmbedSource::Mock16,
                llm: LlmSource::Unset,
                pages: None,
            },
            cache_dir: None,
            no_fetch: false,
            fetch_timeout_seconds: 15.0,
            template: None,
            parallel: 4,
            explain_majority_runs_only: false,
        }
    }
}

/// One source of settings: key/value pairs plus a label for errors.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ConfigLayer {
    pub origin: String,
    pub values: BTreeMap<String, String>,
}

impl ConfigLayer {
    pub fn new(origin: impl Into<String>) -> Self {
        ConfigLayer {
            origin: origin.into(),
            values: BTreeMap::new(),
        }
    }

    pub fn set(&mut self, key: &str, value: impl Into<String>) -> &mut Self {
        self.values.insert(key.to_string(), value.into());
        self
    }

    /// Parses `key = value` lines. `#` starts a comment; values may be
    /// wrapped in double quotes.
    pub fn parse(text: &str, origin: &str) -> Result<Self, ConfigError> {
        let mut layer = ConfigLayer::new(origin);
        for (i, line) in text.lines().enumerate() {
            let line = strip_comment(line).trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or(ConfigError::Syntax {
                path: origin.to_string(),
                line: i + 1,
            })?;
            let key = key.trim();
            if key.is_empty() {
                return Err(ConfigError::Syntax {
                    path: origin.to_string(),
                    line: i + 1,
                });
            }
            let value = value.trim();
            let value = value
                .strip_prefix('"')
                .and_then(|v| v.strip_suffix('"'))
                .unwrap_or(value);
            layer.set(key, value);
        }
        Ok(layer)
    }

    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let text = fs::read_to_string(path).map_err(|e| ConfigError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        Self::parse(&text, &path.display().to_string())
    }

    /// The settings carried by the documented environment variables.
    pub fn from_env(lookup: impl Fn(&str) -> Option<String>) -> Self {
        let mut layer = ConfigLayer::new("environment");
        for (var, key) in ENV_KEYS {
            if let Some(v) = lookup(var).filter(|v| !v.is_empty()) {
                layer.set(key, v);
            }
        }
        layer
    }
}

fn strip_comment(line: &str) -> &str {
    let mut quoted = false;
    for (i, c) in line.char_indices() {
        match c {
            '"' => quoted = !quoted,
            '#' if !quoted => return &line[..i],
            _ => {}
        }
    }
    line
}

/// Raw provider settings collected across layers before they are resolved.
#[derive(Default)]
struct ProviderKeys {
    search_fixture: Option<String>,
    search_url: Option<String>,
    search_key: Option<String>,
    embed: Option<String>,
    embed_url: Option<String>,
    embed_model: Option<String>,
    llm_script: Option<String>,
    llm_url: Option<String>,
    llm_model: Option<String>,
    llm_key: Option<String>,
}

impl PipelineConfig {
    /// Applies layers over the defaults; later layers win.
    pub fn from_layers(layers: &[ConfigLayer]) -> Result<Self, ConfigError> {
        let mut cfg = PipelineConfig::default();
        let mut keys = ProviderKeys::default();
        for layer in layers {
            for (key, value) in &layer.values {
                cfg.apply(&layer.origin, key, value, &mut keys)?;
            }
        }
        cfg.providers.search = match (keys.search_fixture, keys.search_url) {
            (Some(path), _) => SearchSource::Mock { path: path.into() },
            (None, Some(endpoint)) => SearchSource::Live {
                endpoint,
                api_key: keys.search_key,
            },
            (None, None) => SearchSource::Unset,
        };
        let live_embed = match keys.embed.as_deref() {
            None => keys.embed_url.is_some(),
            Some("mock16") => false,
            Some("live") => true,
            Some(other) => {
                return Err(ConfigError::BadValue {
                    origin: "configuration".into(),
                    key: "embed".into(),
                    message: format!("expected mock16 or live, got {other:?}"),
                })
            }
        };
        cfg.providers.embedding = if live_embed {
            EmbedSource::Live {
                endpoint: keys
                    .embed_url
                    .ok_or_else(|| ConfigError::Invalid("live embedding needs embed.url (EMBED_API_URL)".into()))?,
                model: keys.embed_model.unwrap_or_default(),
            }
        } else {
            EmbedSource::Mock16
        };
        cfg.providers.llm = match (keys.llm_script, keys.llm_url) {
            (Some(path), _) => LlmSource::Scripted { path: path.into() },
            (None, Some(endpoint)) => LlmSource::Live {
                endpoint,
                model: keys.llm_model.unwrap_or_default(),
                api_key: keys.llm_key,
            },
            (None, None) => LlmSource::Unset,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn apply(&mut self, origin: &str, key: &str, value: &str, keys: &mut ProviderKeys) -> Result<(), ConfigError> {
        let bad = |message: String| ConfigError::BadValue {
            origin: origin.to_string(),
            key: key.to_string(),
            message,
        };
        let int = |v: &str| v.parse::<usize>().map_err(|e| bad(e.to_string()));
        let boolean = |v: &str| match v.to_ascii_lowercase().as_str() {
            "true" | "yes" | "1" | "on" => Ok(true),
            "false" | "no" | "0" | "off" => Ok(false),
            _ => Err(bad(format!("expected true or false, got {v:?}"))),
        };
        let text = || Some(value.to_string());
        match key {
            "k_documents" | "k" => self.k_documents = int(value)?,
            "retrieved_chunks" | "chunks" => self.retrieved_chunks = int(value)?,
            "runs" => self.runs = int(value)?,
            "temperature" => self.temperature = value.parse().map_err(|e: std::num::ParseFloatError| bad(e.to_string()))?,
            "chunk_size" => self.splitter.chunk_size = int(value)?,
            "chunk_overlap" => self.splitter.overlap = int(value)?,
            "max_context_chars" => self.max_context_chars = int(value)?,
            "mode" => {
                self.mode = match value {
                    "retrieval" => Mode::Retrieval,
                    "ablation" => Mode::Ablation,
                    _ => return Err(bad(format!("expected retrieval or ablation, got {value:?}"))),
                }
            }
            "parallel" => self.parallel = int(value)?,
            "explain_majority_runs_only" => self.explain_majority_runs_only = boolean(value)?,
            "cache_dir" => self.cache_dir = Some(value.into()),
            "no_fetch" => self.no_fetch = boolean(value)?,
            "fetch_timeout_seconds" => {
                self.fetch_timeout_seconds = value.parse().map_err(|e: std::num::ParseFloatError| bad(e.to_string()))?
            }
            "template" => self.template = Some(value.into()),
            "pages" => self.providers.pages = Some(value.into()),
            "search.fixture" => keys.search_fixture = text(),
            "search.url" => keys.search_url = text(),
            "search.key" => keys.search_key = text(),
            "embed" | "embedding.provider" => keys.embed = text(),
            "embed.url" | "embedding.url" => keys.embed_url = text(),
            "embed.model" | "embedding.model" => keys.embed_model = text(),
            "llm.script" => keys.llm_script = text(),
            "llm.url" => keys.llm_url = text(),
            "llm.model" => keys.llm_model = text(),
            "llm.key" => keys.llm_key = text(),
            _ => {
                return Err(ConfigError::UnknownKey {
                    origin: origin.to_string(),
                    key: key.to_string(),
                })
            }
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let invalid = |m: String| Err(ConfigError::Invalid(m));
        if self.k_documents == 0 {
            return invalid("k_documents must be at least 1".into());
        }
        if self.retrieved_chunks == 0 {
            return invalid("retrieved_chunks must be at least 1".into());
        }
        if self.runs == 0 || self.runs.is_multiple_of(2) {
            return invalid(format!("runs must be odd and positive, got {}", self.runs));
        }
        if !(0.0..=2.0).contains(&self.temperature) {
            return invalid(format!("temperature must be within [0, 2], got {}", self.temperature));
        }
        if self.max_context_chars == 0 {
            return invalid("max_context_chars must be at least 1".into());
        }
        if !(self.fetch_timeout_seconds > 0.0 && self.fetch_timeout_seconds.is_finite()) {
            return invalid("fetch_timeout_seconds must be positive".into());
        }
        self.splitter.validate().map_err(ConfigError::Invalid)
    }

    /// Hex SHA-256 of the configuration as JSON; secrets are not part of it.
    pub fn digest(&self) -> String {
        let json = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(&json))
    }
}
