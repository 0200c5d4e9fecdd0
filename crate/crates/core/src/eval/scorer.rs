use std::collections::HashMap;
use std::time::Duration;

use super::{majority_vote, AnnotationMatrix, EvalError};
use crate::http::HttpClient;

/// Semantic similarity between a predicted and a gold domain label. A
/// strictly positive score counts as a match. `item` and `slot`
/// (`"source"` or `"target"`) identify the pair for scorers that look
/// judgements up instead of computing them.
pub trait Scorer: Send + Sync {
    fn score(&self, item: &str, slot: &str, candidate: &str, reference: &str) -> Result<f64, EvalError>;
}

/// 1 when the trimmed, lowercased strings are equal, else -1.
#[derive(Debug, Clone, Copy, Default)]
pub struct ExactScorer;

fn normalize(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ").to_lowercase()
}

impl Scorer for ExactScorer {
    fn score(&self, _item: &str, _slot: &str, candidate: &str, reference: &str) -> Result<f64, EvalError> {
        Ok(if normalize(candidate) == normalize(reference) { 1.0 } else { -1.0 })
    }
}

/// POSTs `{"candidate", "reference"}` and reads `{"score"}` from the reply.
pub struct HttpScorer {
    url: String,
    client: HttpClient,
}

impl HttpScorer {
    pub fn new(url: impl Into<String>) -> Self {
        Self {
            url: url.into(),
            client: HttpClient::new(Duration::from_secs(60)),
        }
    }
}

impl Scorer for HttpScorer {
    fn score(&self, _item: &str, _slot: &str, candidate: &str, reference: &str) -> Result<f64, EvalError> {
        let body = serde_json::json!({ "candidate": candidate, "reference": reference }).to_string();
        let reply = self
            .client
            .post(&self.url, &[("Content-Type", "application/json")], body)
            .map_err(|e| EvalError::ScorerError(format!("{}: {e}", self.url)))?;
        if !(200..300).contains(&reply.status) {
            return Err(EvalError::ScorerError(format!("{} returned HTTP {}", self.url, reply.status)));
        }
        let value: serde_json::Value = serde_json::from_str(&reply.body)
            .map_err(|e| EvalError::ScorerError(format!("bad scorer reply: {e}")))?;
        value
            .get("score")
            .and_then(|s| s.as_f64())
            .ok_or_else(|| EvalError::ScorerError("scorer reply has no numeric `score`".into()))
    }
}

/// Human judgements: items are `<instance id>/source` and
/// `<instance id>/target`; the majority label `1` scores +1, anything else -1.
#[derive(Debug, Clone)]
pub struct AnnotationScorer {
    verdicts: HashMap<String, bool>,
}

impl AnnotationScorer {
    pub fn from_matrix(m: &AnnotationMatrix) -> Result<Self, EvalError> {
        let labels = majority_vote(m)?;
        let verdicts = m
            .items()
            .iter()
            .zip(labels)
            .map(|(item, label)| (item.clone(), is_positive(&label)))
            .collect();
        Ok(Self { verdicts })
    }
}

fn is_positive(label: &str) -> bool {
    matches!(label.trim().to_ascii_lowercase().as_str(), "1" | "true" | "yes" | "correct")
}

impl Scorer for AnnotationScorer {
    fn score(&self, item: &str, slot: &str, _candidate: &str, _reference: &str) -> Result<f64, EvalError> {
        let key = format!("{item}/{slot}");
        match self.verdicts.get(&key) {
            Some(true) => Ok(1.0),
            Some(false) => Ok(-1.0),
            None => Err(EvalError::ScorerError(format!("no annotation for `{key}`"))),
        }
    }
}
