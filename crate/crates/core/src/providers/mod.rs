//! Chat-completion and embedding clients, plus offline test doubles.
//!
//! All network access goes through this module. HTTP clients speak the
//! common chat-completions / embeddings JSON shapes, so switching models is
//! a config change. API keys are read from an environment variable named in
//! the config and are never stored in config files.

mod doubles;
mod http;
mod limit;

use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::index::Embedding;

pub use self::doubles::{EchoChat, ScriptedChat, StubEmbedder, STUB_DIM};
pub use self::http::{HttpChat, HttpEmbedder, HttpResponse, Transport, TransportError, UreqTransport};
pub use self::limit::TokenBucket;

pub const DEFAULT_API_KEY_ENV: &str = "PLANQL_API_KEY";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
    Assistant,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Message {
    pub role: Role,
    pub content: String,
}

impl Message {
    pub fn system(content: impl Into<String>) -> Self {
        Message {
            role: Role::System,
            content: content.into(),
        }
    }

    pub fn user(content: impl Into<String>) -> Self {
        Message {
            role: Role::User,
            content: content.into(),
        }
    }

    pub fn assistant(content: impl Into<String>) -> Self {
        Message {
            role: Role::Assistant,
            content: content.into(),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ProviderError {
    #[error("request timed out after {attempts} attempt(s)")]
    Timeout { attempts: u32 },
    #[error("authentication failed (HTTP {status}); check the {env} environment variable")]
    Auth { status: u16, env: String },
    #[error("giving up after {attempts} attempt(s): {last}")]
    ExhaustedRetries { attempts: u32, last: String },
    #[error("scripted trace exhausted after {consumed} turn(s)")]
    TraceExhausted { consumed: usize },
    #[error("embedding dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("unexpected response: {0}")]
    Protocol(String),
    #[error("invalid provider config: {0}")]
    Config(String),
    #[error("cannot read trace {path}: {reason}")]
    Trace { path: String, reason: String },
}

pub trait ChatProvider: Send + Sync {
    /// One completion for an ordered message list.
    fn complete(&self, messages: &[Message]) -> Result<String, ProviderError>;
}

pub trait EmbeddingProvider: Send + Sync {
    /// One vector per input, in input order, all of the same dimension.
    fn embed(&self, texts: &[String]) -> Result<Vec<Embedding>, ProviderError>;
}

impl<T: ChatProvider + ?Sized> ChatProvider for &T {
    fn complete(&self, messages: &[Message]) -> Result<String, ProviderError> {
        (**self).complete(messages)
    }
}

impl<T: ChatProvider + ?Sized> ChatProvider for Box<T> {
    fn complete(&self, messages: &[Message]) -> Result<String, ProviderError> {
        (**self).complete(messages)
    }
}

impl<T: EmbeddingProvider + ?Sized> EmbeddingProvider for &T {
    fn embed(&self, texts: &[String]) -> Result<Vec<Embedding>, ProviderError> {
        (**self).embed(texts)
    }
}

impl<T: EmbeddingProvider + ?Sized> EmbeddingProvider for Box<T> {
    fn embed(&self, texts: &[String]) -> Result<Vec<Embedding>, ProviderError> {
        (**self).embed(texts)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RetryPolicy {
    pub attempts: u32,
    /// Delay before the second attempt; doubles after each failure.
    pub base_delay_ms: u64,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy {
            attempts: 3,
            base_delay_ms: 500,
        }
    }
}

impl RetryPolicy {
    pub fn delay_before(&self, attempt: u32) -> Duration {
        // attempt is 1-based; no wait before the first.
        if attempt <= 1 {
            Duration::ZERO
        } else {
            Duration::from_millis(self.base_delay_ms.saturating_mul(1 << (attempt - 2).min(20)))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProviderConfig {
    /// Full URL of the chat-completions or embeddings endpoint.
    pub endpoint: String,
    pub model: String,
    /// Name of the environment variable holding the API key.
    pub api_key_env: String,
    pub timeout_secs: f64,
    pub retry: RetryPolicy,
    /// Client-side rate limit; absent means unlimited.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub requests_per_minute: Option<u32>,
}

impl Default for ProviderConfig {
    fn default() -> Self {
        ProviderConfig {
            endpoint: String::new(),
            model: String::new(),
            api_key_env: DEFAULT_API_KEY_ENV.to_string(),
            timeout_secs: 60.0,
            retry: RetryPolicy::default(),
            requests_per_minute: None,
        }
    }
}

impl ProviderConfig {
    pub fn chat_default() -> Self {
        ProviderConfig {
            endpoint: "https://api.openai.com/v1/chat/completions".into(),
            model: "gpt-4o-2024-05-13".into(),
            ..Default::default()
        }
    }

    pub fn embedding_default() -> Self {
        ProviderConfig {
            endpoint: "https://api.openai.com/v1/embeddings".into(),
            model: "thenlper/gte-large".into(),
            ..Default::default()
        }
    }

    /// Checks attempts, timeout and the TLS rule: plain `http` is only
    /// accepted for loopback hosts.
    pub fn validate(&self) -> Result<url::Url, ProviderError> {
        if self.retry.attempts < 1 {
            return Err(ProviderError::Config("retry.attempts must be at least 1".into()));
        }
        if !(self.timeout_secs > 0.0 && self.timeout_secs.is_finite()) {
            return Err(ProviderError::Config("timeout_secs must be positive".into()));
        }
        if self.model.is_empty() {
            return Err(ProviderError::Config("model is empty".into()));
        }
        let url = url::Url::parse(&self.endpoint)
            .map_err(|e| ProviderError::Config(format!("endpoint {:?}: {e}", self.endpoint)))?;
        match url.scheme() {
            "https" => {}
            "http" if is_loopback(&url) => {}
            "http" => {
                return Err(ProviderError::Config(format!(
                    "endpoint {} must use https (plain http is allowed only for localhost)",
                    self.endpoint
                )))
            }
            other => return Err(ProviderError::Config(format!("unsupported scheme {other:?}"))),
        }
        Ok(url)
    }

    pub fn timeout(&self) -> Duration {
        Duration::from_secs_f64(self.timeout_secs)
    }

    pub fn api_key(&self) -> Option<String> {
        std::env::var(&self.api_key_env).ok().filter(|k| !k.is_empty())
    }
}

fn is_loopback(url: &url::Url) -> bool {
    match url.host() {
        Some(url::Host::Domain(d)) => d.eq_ignore_ascii_case("localhost"),
        Some(url::Host::Ipv4(ip)) => ip.is_loopback(),
        Some(url::Host::Ipv6(ip)) => ip.is_loopback(),
        None => false,
    }
}
