//! Chat-completion gateway with live, record and replay modes.

mod extract;
mod limiter;
mod provider;
mod store;

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::time::Duration;

use base64::Engine as _;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

pub use extract::{extract_turtle_block, NoTurtleFound};
pub use limiter::RateLimiter;
pub use provider::{AnthropicProvider, ChatProvider, OpenAiProvider, ProviderKind, ProviderReply};
pub use store::{RecordedResponse, RecordingStore};

pub const DEFAULT_MAX_TOKENS: u32 = 4096;
pub const MAX_RATE_LIMIT_RETRIES: u32 = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
    Assistant,
}

/// An image attached to a message. Serialized as base64.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImageBlob {
    pub mime: String,
    #[serde(with = "base64_bytes")]
    pub data: Vec<u8>,
}

impl ImageBlob {
    pub fn data_url(&self) -> String {
        format!(
            "data:{};base64,{}",
            self.mime,
            base64::engine::general_purpose::STANDARD.encode(&self.data)
        )
    }
}

mod base64_bytes {
    use base64::Engine as _;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(bytes: &[u8], s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&base64::engine::general_purpose::STANDARD.encode(bytes))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<u8>, D::Error> {
        let text = String::deserialize(d)?;
        base64::engine::general_purpose::STANDARD
            .decode(text)
            .map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Message {
    pub role: Role,
    pub text: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub images: Vec<ImageBlob>,
}

impl Message {
    pub fn system(text: impl Into<String>) -> Self {
        Self {
            role: Role::System,
            text: text.into(),
            images: Vec::new(),
        }
    }

    pub fn user(text: impl Into<String>) -> Self {
        Self {
            role: Role::User,
            text: text.into(),
            images: Vec::new(),
        }
    }

    pub fn assistant(text: impl Into<String>) -> Self {
        Self {
            role: Role::Assistant,
            text: text.into(),
            images: Vec::new(),
        }
    }

    pub fn with_image(mut self, image: ImageBlob) -> Self {
        self.images.push(image);
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatRequest {
    pub model_id: String,
    pub messages: Vec<Message>,
    pub temperature: f64,
    pub max_tokens: u32,
}

impl ChatRequest {
    /// Greedy decoding with the default token budget.
    pub fn new(model_id: impl Into<String>, messages: Vec<Message>) -> Self {
        Self {
            model_id: model_id.into(),
            messages,
            temperature: 0.0,
            max_tokens: DEFAULT_MAX_TOKENS,
        }
    }

    /// Replay key: SHA-256 over the canonical JSON of the request.
    pub fn key(&self) -> String {
        let canonical = serde_json::to_vec(self).expect("requests serialize");
        hex::encode(Sha256::digest(canonical))
    }

    /// All message text joined, for auditing what was sent.
    pub fn rendered_text(&self) -> String {
        let mut out = String::new();
        for m in &self.messages {
            let role = match m.role {
                Role::System => "system",
                Role::User => "user",
                Role::Assistant => "assistant",
            };
            out.push_str(&format!("### {role}\n{}\n", m.text));
            for image in &m.images {
                out.push_str(&format!("[image {} {} bytes]\n", image.mime, image.data.len()));
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Usage {
    pub input_tokens: u64,
    pub output_tokens: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ResponseMode {
    Live,
    Replayed,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatResponse {
    pub text: String,
    pub model_id: String,
    pub usage: Usage,
    pub mode: ResponseMode,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GatewayMode {
    Live,
    Record,
    Replay,
}

impl std::str::FromStr for GatewayMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "live" => Ok(GatewayMode::Live),
            "record" => Ok(GatewayMode::Record),
            "replay" => Ok(GatewayMode::Replay),
            other => Err(format!("unknown mode `{other}` (expected live, record or replay)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize, Deserialize)]
pub enum LlmError {
    #[error("authentication failed: {0}")]
    AuthError(String),
    #[error("rate limited (retry after {retry_after_ms:?} ms)")]
    RateLimited { retry_after_ms: Option<u64> },
    #[error("service error: {0}")]
    ServiceError(String),
    #[error("no recorded response for request {0}")]
    ReplayMiss(String),
    #[error("recording store: {0}")]
    Store(String),
    #[error("gateway misconfigured: {0}")]
    Config(String),
}

impl LlmError {
    pub fn code(&self) -> &'static str {
        match self {
            LlmError::AuthError(_) => "AuthError",
            LlmError::RateLimited { .. } => "RateLimited",
            LlmError::ServiceError(_) => "ServiceError",
            LlmError::ReplayMiss(_) => "ReplayMiss",
            LlmError::Store(_) => "StoreError",
            LlmError::Config(_) => "ConfigError",
        }
    }
}

/// Shared entry point for all model calls.
pub struct Gateway {
    mode: GatewayMode,
    provider: Option<Arc<dyn ChatProvider>>,
    store: Option<Arc<RecordingStore>>,
    limiter: Option<RateLimiter>,
    max_rate_limit_retries: u32,
    default_backoff: Duration,
    calls: AtomicUsize,
}

impl Gateway {
    pub fn new(mode: GatewayMode) -> Self {
        Self {
            mode,
            provider: None,
            store: None,
            limiter: None,
            max_rate_limit_retries: MAX_RATE_LIMIT_RETRIES,
            default_backoff: Duration::from_secs(1),
            calls: AtomicUsize::new(0),
        }
    }

    pub fn with_provider(mut self, provider: Arc<dyn ChatProvider>) -> Self {
        self.provider = Some(provider);
        self
    }

    pub fn with_store(mut self, store: Arc<RecordingStore>) -> Self {
        self.store = Some(store);
        self
    }

    pub fn with_limiter(mut self, limiter: RateLimiter) -> Self {
        self.limiter = Some(limiter);
        self
    }

    /// Wait used when a rate-limited reply carries no retry-after.
    pub fn with_default_backoff(mut self, backoff: Duration) -> Self {
        self.default_backoff = backoff;
        self
    }

    pub fn mode(&self) -> GatewayMode {
        self.mode
    }

    /// Number of provider calls made so far.
    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }

    pub fn complete(&self, req: &ChatRequest) -> Result<ChatResponse, LlmError> {
        match self.mode {
            GatewayMode::Replay => {
                let store = self.store()?;
                let key = req.key();
                let recorded = store.get(&key).ok_or(LlmError::ReplayMiss(key))?;
                Ok(ChatResponse {
                    text: recorded.text,
                    model_id: recorded.model_id,
                    usage: recorded.usage,
                    mode: ResponseMode::Replayed,
                })
            }
            GatewayMode::Live => self.call_live(req),
            GatewayMode::Record => {
                let store = self.store()?;
                let response = self.call_live(req)?;
                store
                    .put(RecordedResponse {
                        key: req.key(),
                        model_id: response.model_id.clone(),
                        text: response.text.clone(),
                        usage: response.usage,
                    })
                    .map_err(|e| LlmError::Store(e.to_string()))?;
                Ok(response)
            }
        }
    }

    fn store(&self) -> Result<&RecordingStore, LlmError> {
        self.store
            .as_deref()
            .ok_or_else(|| LlmError::Config("no recording store configured".into()))
    }

    fn call_live(&self, req: &ChatRequest) -> Result<ChatResponse, LlmError> {
        let provider = self
            .provider
            .as_ref()
            .ok_or_else(|| LlmError::Config("no provider configured".into()))?;
        let mut retries = 0;
        loop {
            if let Some(limiter) = &self.limiter {
                limiter.acquire();
            }
            self.calls.fetch_add(1, Ordering::SeqCst);
            match provider.send(req) {
                Ok(reply) => {
                    return Ok(ChatResponse {
                        text: reply.text,
                        model_id: req.model_id.clone(),
                        usage: reply.usage,
                        mode: ResponseMode::Live,
                    })
                }
                Err(LlmError::RateLimited { retry_after_ms }) if retries < self.max_rate_limit_retries => {
                    retries += 1;
                    let wait = retry_after_ms
                        .map(Duration::from_millis)
                        .unwrap_or(self.default_backoff * 2u32.pow(retries - 1));
                    std::thread::sleep(wait);
                }
                Err(e) => return Err(e),
            }
        }
    }
}
