//! Client for the external text-to-graph service, with a content-addressed
//! cache, and the image captioning step that feeds it.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::time::Duration;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::fsutil::write_atomic;
use crate::http::HttpClient;
use crate::llm::{ChatRequest, Gateway, ImageBlob, LlmError, Message};
use crate::rdf::{parse_turtle, Graph, PrefixMap};

pub const MAX_TEXT_CHARS: usize = 2000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CachePolicy {
    Live,
    CacheFirst,
    ReplayOnly,
}

impl std::str::FromStr for CachePolicy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "live" => Ok(CachePolicy::Live),
            "cache-first" => Ok(CachePolicy::CacheFirst),
            "replay-only" => Ok(CachePolicy::ReplayOnly),
            other => Err(format!("unknown cache policy `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SkgRequest {
    pub text: String,
    pub service_url: String,
    pub cache_policy: CachePolicy,
}

impl SkgRequest {
    pub fn new(text: impl Into<String>, service_url: impl Into<String>, cache_policy: CachePolicy) -> Result<Self, SkgError> {
        let text = text.into();
        if text.trim().is_empty() {
            return Err(SkgError::InvalidRequest("text is empty".into()));
        }
        let chars = text.chars().count();
        if chars > MAX_TEXT_CHARS {
            return Err(SkgError::InvalidRequest(format!(
                "text has {chars} characters, limit is {MAX_TEXT_CHARS}"
            )));
        }
        Ok(Self {
            text,
            service_url: service_url.into(),
            cache_policy,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize, Deserialize)]
pub enum SkgError {
    #[error("graph service unavailable: {0}")]
    ServiceUnavailable(String),
    #[error("graph service returned an unusable response: {0}")]
    BadServiceResponse(String),
    #[error("no cached graph for `{0}`")]
    CacheMiss(String),
    #[error("invalid request: {0}")]
    InvalidRequest(String),
    #[error("cache I/O: {0}")]
    Cache(String),
}

impl SkgError {
    pub fn code(&self) -> &'static str {
        match self {
            SkgError::ServiceUnavailable(_) => "ServiceUnavailable",
            SkgError::BadServiceResponse(_) => "BadServiceResponse",
            SkgError::CacheMiss(_) => "CacheMiss",
            SkgError::InvalidRequest(_) => "InvalidRequest",
            SkgError::Cache(_) => "CacheError",
        }
    }
}

/// SHA-256 over the length-prefixed URL and the text.
pub fn cache_key(service_url: &str, text: &str) -> String {
    let mut h = Sha256::new();
    h.update((service_url.len() as u64).to_be_bytes());
    h.update(service_url.as_bytes());
    h.update(text.as_bytes());
    hex::encode(h.finalize())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CacheEntry {
    pub key: String,
    pub service_url: String,
    pub text: String,
    pub turtle: String,
    pub fetched_at: DateTime<Utc>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndexEntry {
    pub service_url: String,
    pub text: String,
    pub fetched_at: DateTime<Utc>,
}

/// `<key>.ttl` files plus `index.json` mapping keys to their inputs.
pub struct SkgCache {
    dir: PathBuf,
    index_lock: Mutex<()>,
}

impl SkgCache {
    pub const INDEX: &'static str = "index.json";

    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Self {
            dir: dir.into(),
            index_lock: Mutex::new(()),
        }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn body_path(&self, key: &str) -> PathBuf {
        self.dir.join(format!("{key}.ttl"))
    }

    pub fn index(&self) -> Result<BTreeMap<String, IndexEntry>, SkgError> {
        match std::fs::read_to_string(self.dir.join(Self::INDEX)) {
            Ok(text) => serde_json::from_str(&text).map_err(|e| SkgError::Cache(format!("index: {e}"))),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(BTreeMap::new()),
            Err(e) => Err(SkgError::Cache(e.to_string())),
        }
    }

    pub fn get(&self, service_url: &str, text: &str) -> Result<Option<CacheEntry>, SkgError> {
        let key = cache_key(service_url, text);
        let turtle = match std::fs::read_to_string(self.body_path(&key)) {
            Ok(t) => t,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
            Err(e) => return Err(SkgError::Cache(e.to_string())),
        };
        let fetched_at = self
            .index()?
            .get(&key)
            .map(|e| e.fetched_at)
            .unwrap_or(DateTime::<Utc>::UNIX_EPOCH);
        Ok(Some(CacheEntry {
            key,
            service_url: service_url.to_string(),
            text: text.to_string(),
            turtle,
            fetched_at,
        }))
    }

    pub fn put(&self, entry: &CacheEntry) -> Result<(), SkgError> {
        let io = |e: std::io::Error| SkgError::Cache(e.to_string());
        write_atomic(&self.body_path(&entry.key), entry.turtle.as_bytes()).map_err(io)?;
        let _guard = self.index_lock.lock().expect("index lock");
        let mut index = self.index()?;
        index.insert(
            entry.key.clone(),
            IndexEntry {
                service_url: entry.service_url.clone(),
                text: entry.text.clone(),
                fetched_at: entry.fetched_at,
            },
        );
        let json = serde_json::to_string_pretty(&index).expect("index serializes");
        write_atomic(&self.dir.join(Self::INDEX), json.as_bytes()).map_err(io)
    }

    /// Deletes body files not referenced by the index and index entries
    /// without a body. Returns the number of removed items.
    pub fn prune(&self) -> Result<usize, SkgError> {
        let io = |e: std::io::Error| SkgError::Cache(e.to_string());
        let _guard = self.index_lock.lock().expect("index lock");
        let mut index = self.index()?;
        let mut removed = 0;
        let before = index.len();
        index.retain(|key, _| self.body_path(key).exists());
        removed += before - index.len();
        if self.dir.exists() {
            for entry in std::fs::read_dir(&self.dir).map_err(io)? {
                let path = entry.map_err(io)?.path();
                let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or_default();
                if path.extension().is_some_and(|e| e == "ttl") && !index.contains_key(stem) {
                    std::fs::remove_file(&path).map_err(io)?;
                    removed += 1;
                }
            }
        }
        let json = serde_json::to_string_pretty(&index).expect("index serializes");
        write_atomic(&self.dir.join(Self::INDEX), json.as_bytes()).map_err(io)?;
        Ok(removed)
    }
}

pub enum TransportError {
    /// Network failure or 5xx: worth retrying.
    Transient(String),
    /// Any other non-success status.
    Rejected(String),
}

/// Sends the text to the service and returns the response body.
pub trait SkgTransport: Send + Sync {
    fn fetch(&self, service_url: &str, text: &str) -> Result<String, TransportError>;
}

/// `POST {"text": ...}`, accepting `text/turtle`.
pub struct HttpTransport {
    http: HttpClient,
}

impl HttpTransport {
    pub fn new(timeout: Duration) -> Self {
        Self {
            http: HttpClient::new(timeout),
        }
    }
}

impl Default for HttpTransport {
    fn default() -> Self {
        Self::new(Duration::from_secs(120))
    }
}

impl SkgTransport for HttpTransport {
    fn fetch(&self, service_url: &str, text: &str) -> Result<String, TransportError> {
        let body = serde_json::json!({ "text": text }).to_string();
        let reply = self
            .http
            .post(
                service_url,
                &[("Content-Type", "application/json"), ("Accept", "text/turtle")],
                body,
            )
            .map_err(TransportError::Transient)?;
        match reply.status {
            200..=299 => Ok(reply.body),
            500..=599 => Err(TransportError::Transient(format!("HTTP {}", reply.status))),
            s => Err(TransportError::Rejected(format!("HTTP {s}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RetryPolicy {
    pub attempts: u32,
    pub initial_backoff_ms: u64,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self {
            attempts: 3,
            initial_backoff_ms: 500,
        }
    }
}

pub struct SkgClient {
    transport: Arc<dyn SkgTransport>,
    cache: Option<SkgCache>,
    retry: RetryPolicy,
    prefixes: PrefixMap,
    calls: AtomicUsize,
}

impl SkgClient {
    pub fn new(transport: Arc<dyn SkgTransport>) -> Self {
        Self {
            transport,
            cache: None,
            retry: RetryPolicy::default(),
            prefixes: PrefixMap::defaults(),
            calls: AtomicUsize::new(0),
        }
    }

    pub fn http() -> Self {
        Self::new(Arc::new(HttpTransport::default()))
    }

    pub fn with_cache(mut self, cache: SkgCache) -> Self {
        self.cache = Some(cache);
        self
    }

    pub fn with_retry(mut self, retry: RetryPolicy) -> Self {
        self.retry = retry;
        self
    }

    pub fn with_prefixes(mut self, prefixes: PrefixMap) -> Self {
        self.prefixes = prefixes;
        self
    }

    pub fn cache(&self) -> Option<&SkgCache> {
        self.cache.as_ref()
    }

    pub fn retry(&self) -> RetryPolicy {
        self.retry
    }

    /// Network calls made so far, retries included.
    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }

    pub fn fetch_skg(&self, req: &SkgRequest) -> Result<Graph, SkgError> {
        if req.cache_policy != CachePolicy::Live {
            let cached = match &self.cache {
                Some(cache) => cache.get(&req.service_url, &req.text)?,
                None => None,
            };
            match (cached, req.cache_policy) {
                (Some(entry), _) => return self.parse(&entry.turtle),
                (None, CachePolicy::ReplayOnly) => return Err(SkgError::CacheMiss(req.text.clone())),
                (None, _) => {}
            }
        }
        let body = self.fetch_with_retries(&req.service_url, &req.text)?;
        let graph = self.parse(&body)?;
        if req.cache_policy == CachePolicy::CacheFirst {
            if let Some(cache) = &self.cache {
                cache.put(&CacheEntry {
                    key: cache_key(&req.service_url, &req.text),
                    service_url: req.service_url.clone(),
                    text: req.text.clone(),
                    turtle: body,
                    fetched_at: Utc::now(),
                })?;
            }
        }
        Ok(graph)
    }

    fn parse(&self, body: &str) -> Result<Graph, SkgError> {
        parse_turtle(body, &self.prefixes).map_err(|e| SkgError::BadServiceResponse(e.to_string()))
    }

    fn fetch_with_retries(&self, url: &str, text: &str) -> Result<String, SkgError> {
        let mut backoff = Duration::from_millis(self.retry.initial_backoff_ms);
        let mut last = String::new();
        for attempt in 0..self.retry.attempts.max(1) {
            if attempt > 0 {
                std::thread::sleep(backoff);
                backoff *= 2;
            }
            self.calls.fetch_add(1, Ordering::SeqCst);
            match self.transport.fetch(url, text) {
                Ok(body) => return Ok(body),
                Err(TransportError::Rejected(msg)) => return Err(SkgError::BadServiceResponse(msg)),
                Err(TransportError::Transient(msg)) => last = msg,
            }
        }
        Err(SkgError::ServiceUnavailable(last))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CaptionError {
    #[error("image does not decode as PNG or JPEG: {0}")]
    Decode(String),
    #[error(transparent)]
    Gateway(#[from] LlmError),
    #[error("model returned an empty caption")]
    EmptyCaption,
}

/// Checks that `bytes` decode as PNG or JPEG and wraps them for a request.
pub fn image_blob(bytes: &[u8]) -> Result<ImageBlob, CaptionError> {
    let format = image::guess_format(bytes).map_err(|e| CaptionError::Decode(e.to_string()))?;
    let mime = match format {
        image::ImageFormat::Png => "image/png",
        image::ImageFormat::Jpeg => "image/jpeg",
        other => return Err(CaptionError::Decode(format!("unsupported format {other:?}"))),
    };
    image::load_from_memory_with_format(bytes, format).map_err(|e| CaptionError::Decode(e.to_string()))?;
    Ok(ImageBlob {
        mime: mime.to_string(),
        data: bytes.to_vec(),
    })
}

/// The request used to describe an image in natural language.
pub fn caption_request(image: ImageBlob, model_id: &str, caption_prompt: &str) -> ChatRequest {
    ChatRequest::new(model_id, vec![Message::user(caption_prompt).with_image(image)])
}

pub fn caption_image(image: &[u8], llm: &Gateway, model_id: &str, caption_prompt: &str) -> Result<String, CaptionError> {
    let blob = image_blob(image)?;
    let response = llm.complete(&caption_request(blob, model_id, caption_prompt))?;
    let caption = response.text.trim();
    if caption.is_empty() {
        return Err(CaptionError::EmptyCaption);
    }
    Ok(caption.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn request_limits() {
        assert!(SkgRequest::new("", "http://s", CachePolicy::Live).is_err());
        assert!(SkgRequest::new("x".repeat(2000), "http://s", CachePolicy::Live).is_ok());
        assert!(SkgRequest::new("x".repeat(2001), "http://s", CachePolicy::Live).is_err());
    }

    #[test]
    fn key_separates_url_from_text() {
        assert_ne!(cache_key("http://a/", "bc"), cache_key("http://a/b", "c"));
        assert_eq!(cache_key("u", "t"), cache_key("u", "t"));
    }

    #[test]
    fn empty_blob_fails_to_decode() {
        assert!(matches!(image_blob(&[]), Err(CaptionError::Decode(_))));
    }
}
