#![allow(dead_code)]

use std::collections::HashMap;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};

use blendkg_core::llm::{ChatProvider, ChatRequest, Gateway, GatewayMode, LlmError, ProviderReply, RecordingStore, Role, Usage};
use blendkg_core::prompt::PromptEngine;
use blendkg_core::skg::{CachePolicy, RetryPolicy, SkgClient, SkgTransport, TransportError};
use blendkg_core::pipeline::Services;

pub const SKG_URL: &str = "http://skg.test/graph";
pub const MODEL: &str = "stub-model";

/// Graph service answering from a table, with a fallback graph built from
/// the text.
#[derive(Default)]
pub struct TableSkg {
    pub graphs: HashMap<String, String>,
    pub calls: AtomicUsize,
}

impl TableSkg {
    pub fn with(mut self, text: &str, turtle: &str) -> Self {
        self.graphs.insert(text.to_string(), turtle.to_string());
        self
    }
}

/// One triple per word, so every sentence gets a distinct small graph.
pub fn word_graph(text: &str) -> String {
    let mut out = String::from("@prefix fred: <http://www.ontologydesignpatterns.org/ont/fred/domain.owl#> .\n");
    for (i, w) in text.split_whitespace().enumerate() {
        let w: String = w.chars().filter(|c| c.is_ascii_alphanumeric()).collect::<String>().to_lowercase();
        if !w.is_empty() {
            out.push_str(&format!("fred:sentence fred:word{i} fred:{w}_1 .\n"));
        }
    }
    out
}

impl SkgTransport for TableSkg {
    fn fetch(&self, _url: &str, text: &str) -> Result<String, TransportError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        Ok(self.graphs.get(text).cloned().unwrap_or_else(|| word_graph(text)))
    }
}

type Responder = dyn Fn(&ChatRequest) -> Result<String, LlmError> + Send + Sync;

/// Model stub driven by a closure over the request.
pub struct FnProvider {
    respond: Box<Responder>,
    pub calls: AtomicUsize,
    pub seen: Mutex<Vec<ChatRequest>>,
}

impl FnProvider {
    pub fn new(respond: impl Fn(&ChatRequest) -> Result<String, LlmError> + Send + Sync + 'static) -> Self {
        Self {
            respond: Box::new(respond),
            calls: AtomicUsize::new(0),
            seen: Mutex::new(Vec::new()),
        }
    }
}

impl ChatProvider for FnProvider {
    fn send(&self, req: &ChatRequest) -> Result<ProviderReply, LlmError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        self.seen.lock().unwrap().push(req.clone());
        (self.respond)(req).map(|text| ProviderReply {
            text,
            usage: Usage {
                input_tokens: 10,
                output_tokens: 20,
            },
        })
    }
}

/// The quoted sentence of the last user turn that carries one.
pub fn sentence_of(req: &ChatRequest) -> Option<String> {
    req.messages
        .iter()
        .rev()
        .filter(|m| m.role == Role::User)
        .find_map(|m| {
            let start = m.text.rfind("Sentence: \"")? + "Sentence: \"".len();
            let rest = &m.text[start..];
            let end = rest.find("\"\n").or_else(|| rest.rfind('"'))?;
            Some(rest[..end].to_string())
        })
}

/// Whether the request asks for an image description.
pub fn is_caption_request(req: &ChatRequest) -> bool {
    req.messages.len() == 1 && !req.messages[0].images.is_empty()
}

/// A Strict-valid extended graph naming the two input frames.
pub fn blend_answer(source: &str, target: &str, property: &str) -> String {
    format!(
        r#"```turtle
@prefix bl: <https://w3id.org/blending/ontology#> .
@prefix cp: <http://www.ontologydesignpatterns.org/ont/persp/perspectivisation.owl#> .
@prefix metanet: <https://w3id.org/framester/metanet/schema/> .
@prefix ex: <http://example.org/> .
@prefix rdfs: <http://www.w3.org/2000/01/rdf-schema#> .

ex:TheBlend a bl:Blend .
ex:Mapping a bl:Blending ;
    rdfs:label "{property}" ;
    bl:blendingComponent ex:SharedRole ;
    bl:enablesBlending ex:Merged .
ex:SourceFrame a bl:Blendable ;
    rdfs:label "{source}" ;
    ex:hasBlendableRole "source" ;
    bl:blendableComponent ex:SourceRole .
ex:SourceRole bl:inheritsRoleFrom ex:SharedRole .
ex:TargetFrame a bl:Blendable ;
    rdfs:label "{target}" ;
    ex:hasBlendableRole "target" ;
    bl:blendableComponent ex:TargetRole .
ex:TargetRole bl:inheritsRoleFrom ex:SharedRole .
ex:Merged a bl:Blended ;
    rdfs:label "{target} as {source}" ;
    bl:blendedComponent ex:MergedRole .
ex:MergedRole bl:inheritsRoleFrom ex:SourceRole .
ex:View a cp:Lens ; rdfs:label "view" .
ex:Stance a cp:Attitude ; rdfs:label "stance" .
ex:sentence metanet:isMetaphorical true .
```"#
    )
}

pub fn literal_answer() -> String {
    "```turtle\n@prefix metanet: <https://w3id.org/framester/metanet/schema/> .\n\
     @prefix ex: <http://example.org/> .\nex:sentence metanet:isMetaphorical false .\n```"
        .to_string()
}

pub fn live_gateway(provider: Arc<FnProvider>) -> Gateway {
    Gateway::new(GatewayMode::Live).with_provider(provider)
}

pub fn services(llm: Gateway, skg: Arc<TableSkg>) -> Services {
    Services {
        skg: Arc::new(SkgClient::new(skg).with_retry(RetryPolicy {
            attempts: 1,
            initial_backoff_ms: 0,
        })),
        llm: Arc::new(llm),
        engine: Arc::new(PromptEngine::builtin(MODEL)),
        skg_url: SKG_URL.to_string(),
        cache_policy: CachePolicy::Live,
    }
}

pub fn replay_gateway(store: Arc<RecordingStore>) -> Gateway {
    Gateway::new(GatewayMode::Replay).with_store(store)
}
