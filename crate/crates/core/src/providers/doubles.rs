use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};

use super::{ChatProvider, EmbeddingProvider, Message, ProviderError, Role};
use crate::index::Embedding;

/// Replays a fixed list of turns, one per call, then fails with
/// [`ProviderError::TraceExhausted`].
#[derive(Debug)]
pub struct ScriptedChat {
    turns: Vec<String>,
    next: AtomicUsize,
}

impl ScriptedChat {
    pub fn new<S: Into<String>>(turns: impl IntoIterator<Item = S>) -> Self {
        ScriptedChat {
            turns: turns.into_iter().map(Into::into).collect(),
            next: AtomicUsize::new(0),
        }
    }

    /// Reads a trace file: a JSON array of strings.
    pub fn from_trace_file(path: impl AsRef<Path>) -> Result<Self, ProviderError> {
        let path = path.as_ref();
        let err = |reason: String| ProviderError::Trace {
            path: path.display().to_string(),
            reason,
        };
        let text = std::fs::read_to_string(path).map_err(|e| err(e.to_string()))?;
        let turns: Vec<String> = serde_json::from_str(&text).map_err(|e| err(e.to_string()))?;
        Ok(ScriptedChat::new(turns))
    }

    /// Turns handed out so far.
    pub fn consumed(&self) -> usize {
        self.next.load(Ordering::SeqCst).min(self.turns.len())
    }
}

impl ChatProvider for ScriptedChat {
    fn complete(&self, _messages: &[Message]) -> Result<String, ProviderError> {
        let i = self.next.fetch_add(1, Ordering::SeqCst);
        self.turns
            .get(i)
            .cloned()
            .ok_or(ProviderError::TraceExhausted {
                consumed: self.turns.len(),
            })
    }
}

/// Returns the content of the last user message.
#[derive(Debug, Default)]
pub struct EchoChat;

impl ChatProvider for EchoChat {
    fn complete(&self, messages: &[Message]) -> Result<String, ProviderError> {
        messages
            .iter()
            .rev()
            .find(|m| m.role == Role::User)
            .map(|m| m.content.clone())
            .ok_or_else(|| ProviderError::Protocol("no user message to echo".into()))
    }
}

pub const STUB_DIM: usize = 256;

/// Deterministic bag-of-words embedder: lowercased alphanumeric tokens are
/// hashed (FNV-1a) into [`STUB_DIM`] buckets and the counts L2-normalized.
#[derive(Debug, Clone, Copy, Default)]
pub struct StubEmbedder;

impl StubEmbedder {
    pub fn tokens(text: &str) -> Vec<String> {
        text.split(|c: char| !c.is_alphanumeric())
            .filter(|t| !t.is_empty())
            .map(str::to_lowercase)
            .collect()
    }

    pub fn bucket(token: &str) -> usize {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for b in token.bytes() {
            h ^= u64::from(b);
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
        (h % STUB_DIM as u64) as usize
    }

    pub fn embed_one(text: &str) -> Embedding {
        let mut v = vec![0.0; STUB_DIM];
        let mut tokens = Self::tokens(text);
        if tokens.is_empty() {
            tokens.push("<empty>".to_string());
        }
        for t in &tokens {
            v[Self::bucket(t)] += 1.0;
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        v.iter_mut().for_each(|x| *x /= norm);
        Embedding::new(v).expect("at least one bucket is non-zero")
    }
}

impl EmbeddingProvider for StubEmbedder {
    fn embed(&self, texts: &[String]) -> Result<Vec<Embedding>, ProviderError> {
        Ok(texts.iter().map(|t| Self::embed_one(t)).collect())
    }
}
