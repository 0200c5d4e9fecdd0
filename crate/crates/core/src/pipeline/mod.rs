//! End-to-end processing of one instance and of whole datasets.

mod run;
mod score;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::eval::{DatasetInstance, Modality, Prediction};
use crate::llm::{ChatRequest, Gateway, ImageBlob, Message};
use crate::ontology::{
    extract_blend, extract_verdict, label_of, validate_xkg, vocab, BlendStructure, Level, MetaphoricityVerdict,
    ValidationReport,
};
use crate::prompt::{Preset, PromptConfig, PromptEngine, TaskKind};
use crate::rdf::{merge, parse_turtle, serialize_turtle, Graph, PrefixMap, Term};
use crate::skg::{caption_image, image_blob, CachePolicy, CaptionError, SkgClient, SkgRequest};

pub use run::{load_manifest, load_records, run_dataset, RunManifest, RunOptions, RunSummary, MANIFEST, RECORDS};
pub use score::{load_scores, score_run, write_scores, REPORTS};

/// Extra model calls made when the answer holds no parseable Turtle.
pub const REPAIR_RETRIES: u32 = 2;
pub const REPAIR_INSTRUCTION: &str = "Your previous output was not valid Turtle; emit only a fenced turtle block";

/// A prompting method: an ablation preset or a plain k-shot baseline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Method {
    Preset(Preset),
    FewShot(usize),
}

impl Method {
    pub fn name(&self) -> String {
        match self {
            Method::Preset(p) => p.name().to_string(),
            Method::FewShot(0) => "ZeroShot".to_string(),
            Method::FewShot(k) => format!("FewShot-{k}"),
        }
    }

    /// Whether the method feeds the sentence graph to the model.
    pub fn uses_graph(&self) -> bool {
        matches!(self, Method::Preset(p) if p.config().include_graph)
    }

    fn uses_blending(&self) -> bool {
        matches!(self, Method::Preset(p) if p.config().include_blending)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

impl FromStr for Method {
    type Err = String;

    /// Preset names, `zero-shot`, or `few-shot-<k>` (also `fewshot<k>`).
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm: String = s.chars().filter(|c| c.is_alphanumeric()).collect::<String>().to_lowercase();
        if norm == "zeroshot" {
            return Ok(Method::FewShot(0));
        }
        if let Some(k) = norm.strip_prefix("fewshot") {
            return k
                .parse()
                .map(Method::FewShot)
                .map_err(|_| format!("few-shot method `{s}` needs an example count, e.g. few-shot-3"));
        }
        s.parse().map(Method::Preset)
    }
}

/// Clients shared by every worker of a run.
#[derive(Clone)]
pub struct Services {
    pub skg: Arc<SkgClient>,
    pub llm: Arc<Gateway>,
    pub engine: Arc<PromptEngine>,
    pub skg_url: String,
    pub cache_policy: CachePolicy,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct RecordInput {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sentence: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub image_ref: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub caption: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageError {
    pub stage: String,
    pub code: String,
    pub message: String,
}

impl StageError {
    fn new(stage: &str, code: &str, message: impl fmt::Display) -> Self {
        Self {
            stage: stage.to_string(),
            code: code.to_string(),
            message: message.to_string(),
        }
    }
}

/// Everything produced for one instance. Graphs are stored as Turtle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineRecord {
    pub instance_id: String,
    pub task: TaskKind,
    pub method: String,
    pub template_version: String,
    pub model_id: String,
    pub input: RecordInput,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub skg: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prompt_hash: Option<String>,
    #[serde(default)]
    pub raw_response: String,
    /// Model calls for the answer, repair retries included.
    #[serde(default)]
    pub attempts: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub xkg: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub validation: Option<ValidationReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verdict: Option<MetaphoricityVerdict>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub blend: Option<BlendStructure>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<StageError>,
    /// Wall-clock milliseconds per stage.
    #[serde(default)]
    pub timings_ms: BTreeMap<String, u64>,
}

impl PipelineRecord {
    pub fn prediction(&self) -> Prediction {
        let v = self.verdict.as_ref();
        Prediction {
            instance_id: self.instance_id.clone(),
            metaphorical: v.map(|v| v.metaphorical),
            source: v.and_then(|v| v.source_label.clone()),
            target: v.and_then(|v| v.target_label.clone()),
            property: v.and_then(|v| v.property_label.clone()),
        }
    }

    pub fn skg_graph(&self) -> Option<Graph> {
        self.skg.as_deref().and_then(|t| parse_turtle(t, &PrefixMap::empty()).ok())
    }

    pub fn xkg_graph(&self) -> Option<Graph> {
        self.xkg.as_deref().and_then(|t| parse_turtle(t, &PrefixMap::empty()).ok())
    }

    /// Same record with timings cleared, for comparing runs.
    pub fn without_timings(&self) -> Self {
        Self {
            timings_ms: BTreeMap::new(),
            ..self.clone()
        }
    }
}

struct Timer(BTreeMap<String, u64>);

impl Timer {
    fn time<T>(&mut self, stage: &str, f: impl FnOnce() -> T) -> T {
        let start = Instant::now();
        let out = f();
        *self.0.entry(stage.to_string()).or_default() += start.elapsed().as_millis() as u64;
        out
    }
}

/// Runs every stage for one instance. Failures end up in `record.error`.
pub fn run_instance(
    instance: &DatasetInstance,
    task: TaskKind,
    method: &Method,
    services: &Services,
) -> PipelineRecord {
    process(instance, task, method, services).0
}

/// The record plus the rendered prompt text, when one was built.
pub(crate) fn process(
    instance: &DatasetInstance,
    task: TaskKind,
    method: &Method,
    services: &Services,
) -> (PipelineRecord, Option<String>) {
    let engine = &services.engine;
    let mut record = PipelineRecord {
        instance_id: instance.id.clone(),
        task,
        method: method.name(),
        template_version: engine.template_version().to_string(),
        model_id: engine.model_id().to_string(),
        input: RecordInput {
            sentence: instance.text.clone(),
            image_ref: instance.image_ref.as_ref().map(|p| p.display().to_string()),
            caption: None,
        },
        skg: None,
        prompt_hash: None,
        raw_response: String::new(),
        attempts: 0,
        xkg: None,
        validation: None,
        verdict: None,
        blend: None,
        error: None,
        timings_ms: BTreeMap::new(),
    };
    let mut timer = Timer(BTreeMap::new());
    let mut prompt = None;
    if let Err(e) = stages(instance, task, method, services, &mut record, &mut timer, &mut prompt) {
        record.error = Some(e);
    }
    record.timings_ms = timer.0;
    (record, prompt)
}

fn stages(
    instance: &DatasetInstance,
    task: TaskKind,
    method: &Method,
    services: &Services,
    record: &mut PipelineRecord,
    timer: &mut Timer,
    prompt: &mut Option<String>,
) -> Result<(), StageError> {
    let engine = &services.engine;
    let visual = task == TaskKind::VisualUnderstanding;

    // Input
    let image = if visual {
        if instance.modality != Modality::Image {
            return Err(StageError::new("input", "MissingInput", "visual task needs an image instance"));
        }
        let path = instance
            .image_ref
            .as_ref()
            .ok_or_else(|| StageError::new("input", "MissingInput", "instance has no image"))?;
        let bytes = timer
            .time("input", || std::fs::read(path))
            .map_err(|e| StageError::new("input", "ImageUnreadable", format!("{}: {e}", path.display())))?;
        let blob = image_blob(&bytes).map_err(|e| StageError::new("input", "ImageDecodeError", e))?;
        Some((bytes, blob))
    } else {
        if instance.text.as_deref().is_none_or(|t| t.trim().is_empty()) {
            return Err(StageError::new("input", "MissingInput", "instance has no sentence"));
        }
        None
    };

    // Caption
    let mut cfg = prompt_config(engine, method, visual);
    if !visual {
        cfg.target_word = instance.target_word.clone();
    }
    let text_for_graph = match &image {
        Some((bytes, _)) => {
            let caption = if cfg.include_sentence || cfg.include_graph {
                let prompt = engine
                    .caption_prompt()
                    .map_err(|e| StageError::new("caption", "TemplateError", e))?;
                let caption = timer
                    .time("caption", || caption_image(bytes, &services.llm, engine.model_id(), &prompt))
                    .map_err(|e| {
                        let code = match &e {
                            CaptionError::Decode(_) => "ImageDecodeError",
                            CaptionError::Gateway(g) => g.code(),
                            CaptionError::EmptyCaption => "EmptyCaption",
                        };
                        StageError::new("caption", code, e)
                    })?;
                Some(caption)
            } else {
                None
            };
            record.input.caption = caption.clone();
            caption
        }
        None => instance.text.clone(),
    };

    // SKG
    let skg = if method.uses_graph() {
        let text = text_for_graph.clone().unwrap_or_default();
        let graph = timer.time("skg", || {
            SkgRequest::new(text, &services.skg_url, services.cache_policy).and_then(|req| services.skg.fetch_skg(&req))
        });
        let graph = graph.map_err(|e| StageError::new("skg", e.code(), e))?;
        record.skg = Some(serialize_turtle(&graph));
        Some(graph)
    } else {
        None
    };

    // Prompt
    let request = build_request(engine, task, method, instance, &cfg, image.as_ref().map(|(_, b)| b), record, skg.as_ref())
        .map_err(|e| {
            let code = match e {
                crate::prompt::PromptError::ConfigError(_) => "ConfigError",
                crate::prompt::PromptError::Template(_) => "TemplateError",
            };
            StageError::new("prompt", code, e)
        })?;
    record.prompt_hash = Some(request.key());
    *prompt = Some(request.rendered_text());

    // LLM + extract, with repair retries
    let prefixes = PrefixMap::defaults();
    let mut conversation = request;
    let mut answer = None;
    for attempt in 0..=REPAIR_RETRIES {
        record.attempts = attempt + 1;
        let response = timer
            .time("llm", || services.llm.complete(&conversation))
            .map_err(|e| StageError::new("llm", e.code(), e))?;
        record.raw_response = response.text.clone();
        let block = timer.time("extract", || crate::llm::extract_turtle_block(&response.text, &prefixes));
        match block.ok().and_then(|b| parse_turtle(&b, &prefixes).ok()) {
            Some(g) => {
                answer = Some(g);
                break;
            }
            None => {
                conversation.messages.push(Message::assistant(response.text));
                conversation.messages.push(Message::user(REPAIR_INSTRUCTION));
            }
        }
    }
    let answer = answer.ok_or_else(|| {
        StageError::new(
            "extract",
            "NoTurtleFound",
            format!("no parseable Turtle after {} attempts", REPAIR_RETRIES + 1),
        )
    })?;

    // Merge + validate
    let xkg = match &skg {
        Some(s) => merge(s, &answer),
        None => answer,
    };
    record.xkg = Some(serialize_turtle(&xkg));
    let level = if method.uses_blending() { Level::Strict } else { Level::Lenient };
    let report = timer.time("validate", || validate_xkg(&xkg, level));
    let strict_ok = level == Level::Strict && report.passed;
    record.validation = Some(report);

    // Verdict
    let mut verdict = extract_verdict(&xkg).map_err(|e| StageError::new("verdict", e.code(), e))?;
    if verdict.metaphorical {
        if strict_ok {
            record.blend = extract_blend(&xkg).ok();
        }
        let evidence = verdict.evidence_node.clone();
        if verdict.source_label.is_none() {
            verdict.source_label = domain_label(&xkg, &evidence, vocab::SOURCE_DOMAIN);
        }
        if verdict.target_label.is_none() {
            verdict.target_label = domain_label(&xkg, &evidence, vocab::TARGET_DOMAIN);
        }
    }
    record.verdict = Some(verdict);
    Ok(())
}

fn prompt_config(engine: &PromptEngine, method: &Method, visual: bool) -> PromptConfig {
    match method {
        Method::Preset(p) if visual => PromptConfig {
            few_shot: engine.bank().visual.clone(),
            ..engine.preset_config(*p)
        },
        Method::Preset(p) => engine.preset_config(*p),
        Method::FewShot(_) if visual => PromptConfig {
            include_graph: false,
            include_blending: false,
            include_sentence: true,
            include_image: true,
            few_shot: engine.bank().visual.clone(),
            target_word: None,
        },
        Method::FewShot(_) => PromptConfig {
            include_graph: false,
            include_blending: false,
            include_sentence: true,
            include_image: false,
            few_shot: Vec::new(),
            target_word: None,
        },
    }
}

#[allow(clippy::too_many_arguments)]
fn build_request(
    engine: &PromptEngine,
    task: TaskKind,
    method: &Method,
    instance: &DatasetInstance,
    cfg: &PromptConfig,
    image: Option<&ImageBlob>,
    record: &PipelineRecord,
    skg: Option<&Graph>,
) -> Result<ChatRequest, crate::prompt::PromptError> {
    let sentence = instance.text.as_deref().unwrap_or_default();
    match (task, method) {
        (TaskKind::VisualUnderstanding, Method::FewShot(k)) if *k != 3 => Err(crate::prompt::PromptError::ConfigError(
            format!("visual baseline uses the 3 bank examples, {k} requested"),
        )),
        (TaskKind::VisualUnderstanding, _) => {
            engine.build_visual_prompt(image, record.input.caption.as_deref(), skg, cfg)
        }
        (_, Method::FewShot(k)) => engine.build_fewshot_baseline(sentence, *k),
        (_, Method::Preset(_)) => engine.build_text_prompt(task, sentence, skg, cfg),
    }
}

/// Value of `property` on the verdict node, or on any node if the verdict
/// node has none.
fn domain_label(g: &Graph, evidence: &Term, property: &str) -> Option<String> {
    let p = Term::Iri(property.to_string());
    let value = g
        .objects(evidence, &p)
        .next()
        .or_else(|| g.matching(None, Some(&p), None).first().map(|t| &t.object))?;
    let label = match value {
        Term::Literal(l) => l.lexical.trim().to_string(),
        other => label_of(g, other),
    };
    (!label.is_empty()).then_some(label)
}
