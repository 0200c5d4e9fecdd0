use std::sync::Arc;
use std::time::Duration;

use base64::Engine as _;
use serde_json::{json, Value};

use super::{ChatRequest, LlmError, Role, Usage};
use crate::http::{HttpClient, HttpReply};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProviderReply {
    pub text: String,
    pub usage: Usage,
}

/// Translates a [`ChatRequest`] into one vendor's wire format.
pub trait ChatProvider: Send + Sync {
    fn send(&self, req: &ChatRequest) -> Result<ProviderReply, LlmError>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProviderKind {
    OpenAi,
    Anthropic,
}

impl std::str::FromStr for ProviderKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "openai" => Ok(ProviderKind::OpenAi),
            "anthropic" => Ok(ProviderKind::Anthropic),
            other => Err(format!("unknown provider `{other}` (expected openai or anthropic)")),
        }
    }
}

impl ProviderKind {
    pub fn build(self, base_url: &str, api_key: &str) -> Arc<dyn ChatProvider> {
        match self {
            ProviderKind::OpenAi => Arc::new(OpenAiProvider::new(base_url, api_key)),
            ProviderKind::Anthropic => Arc::new(AnthropicProvider::new(base_url, api_key)),
        }
    }

    /// Builds a provider from `LLM_API_KEY` and, unless given, `LLM_BASE_URL`.
    pub fn from_env(self, base_url: Option<&str>) -> Result<Arc<dyn ChatProvider>, LlmError> {
        let key = std::env::var("LLM_API_KEY").map_err(|_| LlmError::Config("LLM_API_KEY is not set".into()))?;
        let base = match base_url {
            Some(b) => b.to_string(),
            None => std::env::var("LLM_BASE_URL").map_err(|_| LlmError::Config("LLM_BASE_URL is not set".into()))?,
        };
        Ok(self.build(&base, &key))
    }
}

fn classify(reply: HttpReply) -> Result<Value, LlmError> {
    match reply.status {
        200..=299 => serde_json::from_str(&reply.body)
            .map_err(|e| LlmError::ServiceError(format!("malformed response body: {e}"))),
        401 | 403 => Err(LlmError::AuthError(excerpt(&reply.body))),
        429 => Err(LlmError::RateLimited {
            retry_after_ms: reply.retry_after.map(|d| d.as_millis() as u64),
        }),
        status => Err(LlmError::ServiceError(format!("HTTP {status}: {}", excerpt(&reply.body)))),
    }
}

fn excerpt(body: &str) -> String {
    body.chars().take(200).collect()
}

fn join_url(base: &str, path: &str) -> String {
    format!("{}/{}", base.trim_end_matches('/'), path)
}

const TIMEOUT: Duration = Duration::from_secs(300);

/// OpenAI-style `chat/completions`; images travel as data-URL parts.
pub struct OpenAiProvider {
    url: String,
    auth: String,
    http: HttpClient,
}

impl OpenAiProvider {
    pub fn new(base_url: &str, api_key: &str) -> Self {
        Self {
            url: join_url(base_url, "chat/completions"),
            auth: format!("Bearer {api_key}"),
            http: HttpClient::new(TIMEOUT),
        }
    }

    pub fn body(req: &ChatRequest) -> Value {
        let messages: Vec<Value> = req
            .messages
            .iter()
            .map(|m| {
                let role = match m.role {
                    Role::System => "system",
                    Role::User => "user",
                    Role::Assistant => "assistant",
                };
                if m.images.is_empty() {
                    return json!({ "role": role, "content": m.text });
                }
                let mut parts = vec![json!({ "type": "text", "text": m.text })];
                parts.extend(
                    m.images
                        .iter()
                        .map(|i| json!({ "type": "image_url", "image_url": { "url": i.data_url() } })),
                );
                json!({ "role": role, "content": parts })
            })
            .collect();
        json!({
            "model": req.model_id,
            "messages": messages,
            "temperature": req.temperature,
            "max_tokens": req.max_tokens,
        })
    }
}

impl ChatProvider for OpenAiProvider {
    fn send(&self, req: &ChatRequest) -> Result<ProviderReply, LlmError> {
        let reply = self
            .http
            .post(
                &self.url,
                &[("Content-Type", "application/json"), ("Authorization", &self.auth)],
                Self::body(req).to_string(),
            )
            .map_err(LlmError::ServiceError)?;
        let v = classify(reply)?;
        let text = v["choices"][0]["message"]["content"]
            .as_str()
            .ok_or_else(|| LlmError::ServiceError("response has no choices[0].message.content".into()))?;
        Ok(ProviderReply {
            text: text.to_string(),
            usage: Usage {
                input_tokens: v["usage"]["prompt_tokens"].as_u64().unwrap_or(0),
                output_tokens: v["usage"]["completion_tokens"].as_u64().unwrap_or(0),
            },
        })
    }
}

/// Anthropic `messages` API. System messages move to the top-level field.
pub struct AnthropicProvider {
    url: String,
    api_key: String,
    http: HttpClient,
}

impl AnthropicProvider {
    pub fn new(base_url: &str, api_key: &str) -> Self {
        Self {
            url: join_url(base_url, "messages"),
            api_key: api_key.to_string(),
            http: HttpClient::new(TIMEOUT),
        }
    }

    pub fn body(req: &ChatRequest) -> Value {
        let system: Vec<&str> = req
            .messages
            .iter()
            .filter(|m| m.role == Role::System)
            .map(|m| m.text.as_str())
            .collect();
        let messages: Vec<Value> = req
            .messages
            .iter()
            .filter(|m| m.role != Role::System)
            .map(|m| {
                let mut parts: Vec<Value> = m
                    .images
                    .iter()
                    .map(|i| {
                        json!({
                            "type": "image",
                            "source": {
                                "type": "base64",
                                "media_type": i.mime,
                                "data": base64::engine::general_purpose::STANDARD.encode(&i.data),
                            }
                        })
                    })
                    .collect();
                parts.push(json!({ "type": "text", "text": m.text }));
                let role = if m.role == Role::Assistant { "assistant" } else { "user" };
                json!({ "role": role, "content": parts })
            })
            .collect();
        let mut body = json!({
            "model": req.model_id,
            "messages": messages,
            "temperature": req.temperature,
            "max_tokens": req.max_tokens,
        });
        if !system.is_empty() {
            body["system"] = Value::String(system.join("\n\n"));
        }
        body
    }
}

impl ChatProvider for AnthropicProvider {
    fn send(&self, req: &ChatRequest) -> Result<ProviderReply, LlmError> {
        let reply = self
            .http
            .post(
                &self.url,
                &[
                    ("Content-Type", "application/json"),
                    ("x-api-key", &self.api_key),
                    ("anthropic-version", "2023-06-01"),
                ],
                Self::body(req).to_string(),
            )
            .map_err(LlmError::ServiceError)?;
        let v = classify(reply)?;
        let blocks = v["content"]
            .as_array()
            .ok_or_else(|| LlmError::ServiceError("response has no content array".into()))?;
        let text: String = blocks
            .iter()
            .filter(|b| b["type"] == "text")
            .filter_map(|b| b["text"].as_str())
            .collect();
        Ok(ProviderReply {
            text,
            usage: Usage {
                input_tokens: v["usage"]["input_tokens"].as_u64().unwrap_or(0),
                output_tokens: v["usage"]["output_tokens"].as_u64().unwrap_or(0),
            },
        })
    }
}
