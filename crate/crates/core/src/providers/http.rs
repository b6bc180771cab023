use std::time::Duration;

use serde_json::{json, Value as Json};

use super::{ChatProvider, EmbeddingProvider, Message, ProviderConfig, ProviderError, TokenBucket};
use crate::index::Embedding;

/// Raw HTTP response: status plus body text.
#[derive(Debug, Clone, PartialEq)]
pub struct HttpResponse {
    pub status: u16,
    pub body: String,
}

#[derive(Debug, Clone, thiserror::Error)]
pub enum TransportError {
    #[error("timed out")]
    Timeout,
    #[error("network error: {0}")]
    Network(String),
}

/// Minimal POST-JSON transport, swappable so retry logic can be tested
/// without a network.
pub trait Transport: Send + Sync {
    fn post_json(
        &self,
        url: &str,
        headers: &[(String, String)],
        body: &Json,
        timeout: Duration,
    ) -> Result<HttpResponse, TransportError>;
}

#[derive(Debug, Default)]
pub struct UreqTransport;

impl Transport for UreqTransport {
    fn post_json(
        &self,
        url: &str,
        headers: &[(String, String)],
        body: &Json,
        timeout: Duration,
    ) -> Result<HttpResponse, TransportError> {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .http_status_as_error(false)
            .build()
            .into();
        let mut req = agent.post(url);
        for (k, v) in headers {
            req = req.header(k.as_str(), v.as_str());
        }
        let map_err = |e: ureq::Error| match e {
            ureq::Error::Timeout(_) => TransportError::Timeout,
            other => TransportError::Network(other.to_string()),
        };
        let resp = req.send_json(body).map_err(map_err)?;
        let status = resp.status().as_u16();
        let body = resp.into_body().read_to_string().map_err(map_err)?;
        Ok(HttpResponse { status, body })
    }
}

enum Failure {
    Retry(String, bool),
    Fatal(ProviderError),
}

/// Shared request path: rate limit, auth header, retries with exponential
/// backoff. Auth failures and other 4xx responses are not retried.
struct Client {
    cfg: ProviderConfig,
    transport: Box<dyn Transport>,
    bucket: Option<TokenBucket>,
}

impl Client {
    fn new(cfg: ProviderConfig, transport: Box<dyn Transport>) -> Result<Self, ProviderError> {
        cfg.validate()?;
        let bucket = cfg.requests_per_minute.map(TokenBucket::per_minute);
        Ok(Client { cfg, transport, bucket })
    }

    fn post(&self, body: &Json) -> Result<Json, ProviderError> {
        let mut headers = vec![("Content-Type".to_string(), "application/json".to_string())];
        if let Some(key) = self.cfg.api_key() {
            headers.push(("Authorization".to_string(), format!("Bearer {key}")));
        }
        let attempts = self.cfg.retry.attempts;
        let mut all_timeouts = true;
        let mut last = String::new();
        for attempt in 1..=attempts {
            std::thread::sleep(self.cfg.retry.delay_before(attempt));
            if let Some(b) = &self.bucket {
                b.acquire();
            }
            let outcome = match self
                .transport
                .post_json(&self.cfg.endpoint, &headers, body, self.cfg.timeout())
            {
                Err(TransportError::Timeout) => Err(Failure::Retry("timed out".into(), true)),
                Err(TransportError::Network(e)) => Err(Failure::Retry(e, false)),
                Ok(r) => classify(r, &self.cfg.api_key_env),
            };
            match outcome {
                Ok(json) => return Ok(json),
                Err(Failure::Fatal(e)) => return Err(e),
                Err(Failure::Retry(reason, timeout)) => {
                    tracing::warn!(attempt, attempts, %reason, "provider request failed");
                    all_timeouts &= timeout;
                    last = reason;
                }
            }
        }
        if all_timeouts {
            Err(ProviderError::Timeout { attempts })
        } else {
            Err(ProviderError::ExhaustedRetries { attempts, last })
        }
    }
}

fn classify(r: HttpResponse, env: &str) -> Result<Json, Failure> {
    match r.status {
        200..=299 => serde_json::from_str(&r.body)
            .map_err(|e| Failure::Fatal(ProviderError::Protocol(format!("response is not JSON: {e}")))),
        401 | 403 => Err(Failure::Fatal(ProviderError::Auth {
            status: r.status,
            env: env.to_string(),
        })),
        408 | 429 | 500..=599 => Err(Failure::Retry(format!("HTTP {}: {}", r.status, excerpt(&r.body)), false)),
        s => Err(Failure::Fatal(ProviderError::Protocol(format!("HTTP {s}: {}", excerpt(&r.body))))),
    }
}

fn excerpt(s: &str) -> String {
    let mut e: String = s.chars().take(200).collect();
    if e.len() < s.len() {
        e.push('…');
    }
    e
}

/// Chat-completions client. Accepts either the OpenAI response shape
/// (`choices[0].message.content`) or a flat `{"content": …}`.
pub struct HttpChat {
    client: Client,
}

impl HttpChat {
    pub fn new(cfg: ProviderConfig) -> Result<Self, ProviderError> {
        Self::with_transport(cfg, Box::new(UreqTransport))
    }

    pub fn with_transport(cfg: ProviderConfig, transport: Box<dyn Transport>) -> Result<Self, ProviderError> {
        Ok(HttpChat {
            client: Client::new(cfg, transport)?,
        })
    }
}

impl ChatProvider for HttpChat {
    fn complete(&self, messages: &[Message]) -> Result<String, ProviderError> {
        if messages.is_empty() {
            return Err(ProviderError::Config("no messages to send".into()));
        }
        let body = json!({"model": self.client.cfg.model, "messages": messages});
        let resp = self.client.post(&body)?;
        let content = resp
            .pointer("/choices/0/message/content")
            .or_else(|| resp.get("content"))
            .and_then(Json::as_str)
            .ok_or_else(|| ProviderError::Protocol(format!("no completion text in {}", excerpt(&resp.to_string()))))?;
        Ok(content.to_string())
    }
}

/// Embeddings client. Accepts `{"data": [{"embedding": [...], "index": i}]}`
/// or `{"embeddings": [[...], ...]}`.
pub struct HttpEmbedder {
    client: Client,
}

impl HttpEmbedder {
    pub fn new(cfg: ProviderConfig) -> Result<Self, ProviderError> {
        Self::with_transport(cfg, Box::new(UreqTransport))
    }

    pub fn with_transport(cfg: ProviderConfig, transport: Box<dyn Transport>) -> Result<Self, ProviderError> {
        Ok(HttpEmbedder {
            client: Client::new(cfg, transport)?,
        })
    }
}

fn parse_vector(v: &Json) -> Result<Vec<f64>, ProviderError> {
    v.as_array()
        .ok_or_else(|| ProviderError::Protocol("embedding is not an array".into()))?
        .iter()
        .map(|x| x.as_f64().ok_or_else(|| ProviderError::Protocol("embedding holds a non-number".into())))
        .collect()
}

impl EmbeddingProvider for HttpEmbedder {
    fn embed(&self, texts: &[String]) -> Result<Vec<Embedding>, ProviderError> {
        if texts.is_empty() {
            return Err(ProviderError::Config("no texts to embed".into()));
        }
        let body = json!({"model": self.client.cfg.model, "input": texts});
        let resp = self.client.post(&body)?;
        let vectors: Vec<Vec<f64>> = if let Some(data) = resp.get("data").and_then(Json::as_array) {
            let mut indexed: Vec<(usize, Vec<f64>)> = data
                .iter()
                .enumerate()
                .map(|(i, d)| {
                    let idx = d.get("index").and_then(Json::as_u64).map_or(i, |x| x as usize);
                    let v = d
                        .get("embedding")
                        .ok_or_else(|| ProviderError::Protocol("data entry without embedding".into()))?;
                    Ok((idx, parse_vector(v)?))
                })
                .collect::<Result<_, ProviderError>>()?;
            indexed.sort_by_key(|(i, _)| *i);
            indexed.into_iter().map(|(_, v)| v).collect()
        } else if let Some(list) = resp.get("embeddings").and_then(Json::as_array) {
            list.iter().map(parse_vector).collect::<Result<_, _>>()?
        } else {
            return Err(ProviderError::Protocol("no embeddings in response".into()));
        };
        if vectors.len() != texts.len() {
            return Err(ProviderError::Protocol(format!(
                "sent {} texts, received {} vectors",
                texts.len(),
                vectors.len()
            )));
        }
        let dim = vectors[0].len();
        vectors
            .into_iter()
            .map(|v| {
                if v.len() != dim {
                    return Err(ProviderError::DimensionMismatch {
                        expected: dim,
                        got: v.len(),
                    });
                }
                Embedding::new(v).map_err(|e| ProviderError::Protocol(e.to_string()))
            })
            .collect()
    }
}
