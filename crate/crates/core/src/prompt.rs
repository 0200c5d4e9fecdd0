//! Rendering of every prompt variant from versioned plain-text templates.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::llm::{ChatRequest, ImageBlob, Message};
use crate::rdf::{serialize_turtle_minimal, Graph};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TaskKind {
    Detection,
    ConceptualUnderstanding,
    VisualUnderstanding,
}

impl TaskKind {
    pub fn name(self) -> &'static str {
        match self {
            TaskKind::Detection => "detection",
            TaskKind::ConceptualUnderstanding => "understanding",
            TaskKind::VisualUnderstanding => "visual",
        }
    }
}

impl std::str::FromStr for TaskKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "detection" => Ok(TaskKind::Detection),
            "understanding" | "conceptual-understanding" => Ok(TaskKind::ConceptualUnderstanding),
            "visual" | "visual-understanding" => Ok(TaskKind::VisualUnderstanding),
            other => Err(format!("unknown task `{other}` (expected detection, understanding or visual)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Preset {
    Lag,
    NoBlending,
    NoGraph,
    SentImg,
    NoSent,
    NoImg,
}

impl Preset {
    pub const ALL: [Preset; 6] = [
        Preset::Lag,
        Preset::NoBlending,
        Preset::NoGraph,
        Preset::SentImg,
        Preset::NoSent,
        Preset::NoImg,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Preset::Lag => "LAG",
            Preset::NoBlending => "NoBlending",
            Preset::NoGraph => "NoGraph",
            Preset::SentImg => "SentImg",
            Preset::NoSent => "NoSent",
            Preset::NoImg => "NoImg",
        }
    }

    pub fn is_visual(self) -> bool {
        matches!(self, Preset::SentImg | Preset::NoSent | Preset::NoImg)
    }

    /// Channel flags only; visual presets still need their examples attached.
    pub fn config(self) -> PromptConfig {
        let (include_graph, include_blending, include_sentence, include_image) = match self {
            Preset::Lag => (true, true, true, false),
            Preset::NoBlending => (true, false, true, false),
            Preset::NoGraph => (false, true, true, false),
            Preset::SentImg => (true, true, true, true),
            Preset::NoSent => (true, true, false, true),
            Preset::NoImg => (true, true, true, false),
        };
        PromptConfig {
            include_graph,
            include_blending,
            include_sentence,
            include_image,
            few_shot: Vec::new(),
            target_word: None,
        }
    }
}

impl std::str::FromStr for Preset {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm: String = s.chars().filter(|c| c.is_alphanumeric()).collect::<String>().to_lowercase();
        Preset::ALL
            .into_iter()
            .find(|p| p.name().to_lowercase() == norm)
            .ok_or_else(|| format!("unknown preset `{s}` (expected one of LAG, NoBlending, NoGraph, SentImg, NoSent, NoImg)"))
    }
}

impl std::fmt::Display for Preset {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// An annotated in-context example for the visual task.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Example {
    pub text: Option<String>,
    pub image: Option<ImageBlob>,
    pub source: String,
    pub target: String,
    pub property: Option<String>,
    /// The Turtle answer shown to the model.
    pub answer: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FewShotExample {
    pub sentence: String,
    pub metaphorical: bool,
    pub answer: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptConfig {
    pub include_graph: bool,
    pub include_blending: bool,
    pub include_sentence: bool,
    pub include_image: bool,
    pub few_shot: Vec<Example>,
    pub target_word: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PromptError {
    #[error("prompt configuration error: {0}")]
    ConfigError(String),
    #[error("template error: {0}")]
    Template(String),
}

fn config_error<T>(msg: impl Into<String>) -> Result<T, PromptError> {
    Err(PromptError::ConfigError(msg.into()))
}

/// Names of the files every template version must provide.
pub const TEMPLATE_FILES: &[&str] = &[
    "system",
    "task_detection",
    "task_understanding",
    "task_visual",
    "target_word",
    "caption",
    "graph",
    "blending",
    "example",
    "example_blend",
    "example_prefixes",
    "output_text",
    "output_visual",
    "visual_query",
    "visual_caption",
    "fewshot",
];

macro_rules! builtin_files {
    ($($name:literal),* $(,)?) => {
        &[$(($name, include_str!(concat!("../templates/v1/", $name, ".txt")))),*]
    };
}

const BUILTIN_V1: &[(&str, &str)] = builtin_files!(
    "system",
    "task_detection",
    "task_understanding",
    "task_visual",
    "target_word",
    "caption",
    "graph",
    "blending",
    "example",
    "example_blend",
    "example_prefixes",
    "output_text",
    "output_visual",
    "visual_query",
    "visual_caption",
    "fewshot",
);

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Templates {
    version: String,
    files: BTreeMap<String, String>,
}

impl Templates {
    pub const BUILTIN_VERSION: &'static str = "v1";

    pub fn builtin() -> Self {
        Self {
            version: Self::BUILTIN_VERSION.to_string(),
            files: BUILTIN_V1
                .iter()
                .map(|(k, v)| (k.to_string(), v.to_string()))
                .collect(),
        }
    }

    /// Loads `<root>/<version>/<name>.txt` for every required name.
    pub fn load(root: &Path, version: &str) -> Result<Self, PromptError> {
        let dir = root.join(version);
        let mut files = BTreeMap::new();
        for name in TEMPLATE_FILES {
            let path = dir.join(format!("{name}.txt"));
            let text = std::fs::read_to_string(&path)
                .map_err(|e| PromptError::Template(format!("{}: {e}", path.display())))?;
            files.insert(name.to_string(), text);
        }
        Ok(Self {
            version: version.to_string(),
            files,
        })
    }

    pub fn version(&self) -> &str {
        &self.version
    }

    pub fn raw(&self, name: &str) -> Result<&str, PromptError> {
        self.files
            .get(name)
            .map(String::as_str)
            .ok_or_else(|| PromptError::Template(format!("missing template `{name}`")))
    }

    /// Substitutes `{{key}}` placeholders in one pass; inserted values are
    /// not rescanned. Trailing whitespace is trimmed.
    pub fn render(&self, name: &str, vars: &[(&str, &str)]) -> Result<String, PromptError> {
        let template = self.raw(name)?;
        let mut out = String::with_capacity(template.len());
        let mut rest = template;
        while let Some(start) = rest.find("{{") {
            out.push_str(&rest[..start]);
            let after = &rest[start + 2..];
            let end = after
                .find("}}")
                .ok_or_else(|| PromptError::Template(format!("unclosed placeholder in `{name}`")))?;
            let key = after[..end].trim();
            let value = vars
                .iter()
                .find(|(k, _)| *k == key)
                .map(|(_, v)| *v)
                .ok_or_else(|| PromptError::Template(format!("no value for `{{{{{key}}}}}` in `{name}`")))?;
            out.push_str(value);
            rest = &after[end + 2..];
        }
        out.push_str(rest);
        Ok(out.trim_end().to_string())
    }
}

#[derive(Debug, Deserialize)]
struct VisualEntry {
    image: String,
    caption: String,
    source: String,
    target: String,
    property: Option<String>,
    answer: String,
}

/// Frozen example sets: few-shot baseline examples and the visual examples.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExampleBank {
    pub fewshot: Vec<FewShotExample>,
    pub visual: Vec<Example>,
}

impl ExampleBank {
    pub fn builtin() -> Self {
        let fewshot = serde_json::from_str(include_str!("../templates/examples/fewshot.json"))
            .expect("bundled few-shot bank parses");
        let entries: Vec<VisualEntry> = serde_json::from_str(include_str!("../templates/examples/visual.json"))
            .expect("bundled visual bank parses");
        let images: [(&str, &[u8]); 3] = [
            ("visual_1.png", include_bytes!("../templates/examples/visual_1.png")),
            ("visual_2.png", include_bytes!("../templates/examples/visual_2.png")),
            ("visual_3.png", include_bytes!("../templates/examples/visual_3.png")),
        ];
        let visual = entries
            .into_iter()
            .map(|e| {
                let bytes = images
                    .iter()
                    .find(|(n, _)| *n == e.image)
                    .map(|(_, b)| b.to_vec())
                    .expect("bundled visual example image");
                visual_example(e, bytes)
            })
            .collect();
        Self { fewshot, visual }
    }

    /// Loads `fewshot.json`, `visual.json` and the images it names from `dir`.
    pub fn load(dir: &Path) -> Result<Self, PromptError> {
        let read = |name: &str| {
            std::fs::read(dir.join(name)).map_err(|e| PromptError::Template(format!("{}: {e}", dir.join(name).display())))
        };
        let fewshot = serde_json::from_slice(&read("fewshot.json")?)
            .map_err(|e| PromptError::Template(format!("fewshot.json: {e}")))?;
        let entries: Vec<VisualEntry> = serde_json::from_slice(&read("visual.json")?)
            .map_err(|e| PromptError::Template(format!("visual.json: {e}")))?;
        let mut visual = Vec::new();
        for e in entries {
            let bytes = read(&e.image)?;
            visual.push(visual_example(e, bytes));
        }
        Ok(Self { fewshot, visual })
    }
}

fn visual_example(e: VisualEntry, bytes: Vec<u8>) -> Example {
    let mime = if bytes.starts_with(&[0xFF, 0xD8]) { "image/jpeg" } else { "image/png" };
    Example {
        text: Some(e.caption),
        image: Some(ImageBlob {
            mime: mime.to_string(),
            data: bytes,
        }),
        source: e.source,
        target: e.target,
        property: e.property,
        answer: e.answer,
    }
}

/// Builds chat requests for one model from a template set and example bank.
#[derive(Debug, Clone)]
pub struct PromptEngine {
    templates: Templates,
    bank: ExampleBank,
    model_id: String,
}

impl PromptEngine {
    pub fn new(templates: Templates, bank: ExampleBank, model_id: impl Into<String>) -> Self {
        Self {
            templates,
            bank,
            model_id: model_id.into(),
        }
    }

    pub fn builtin(model_id: impl Into<String>) -> Self {
        Self::new(Templates::builtin(), ExampleBank::builtin(), model_id)
    }

    pub fn templates(&self) -> &Templates {
        &self.templates
    }

    pub fn bank(&self) -> &ExampleBank {
        &self.bank
    }

    pub fn model_id(&self) -> &str {
        &self.model_id
    }

    pub fn template_version(&self) -> &str {
        self.templates.version()
    }

    /// The preset's config with the visual examples attached when needed.
    pub fn preset_config(&self, preset: Preset) -> PromptConfig {
        let mut cfg = preset.config();
        if preset.is_visual() {
            cfg.few_shot = self.bank.visual.clone();
        }
        cfg
    }

    pub fn caption_prompt(&self) -> Result<String, PromptError> {
        self.templates.render("caption", &[])
    }

    fn system(&self) -> Result<Message, PromptError> {
        Ok(Message::system(self.templates.render("system", &[])?))
    }

    fn graph_section(&self, skg: &Graph) -> Result<String, PromptError> {
        let turtle = serialize_turtle_minimal(skg);
        self.templates.render("graph", &[("skg", turtle.trim_end())])
    }

    fn example_section(&self, with_blend: bool) -> Result<String, PromptError> {
        let (prefixes, blend) = if with_blend {
            (
                self.templates.render("example_prefixes", &[])? + "\n",
                self.templates.render("example_blend", &[])? + "\n",
            )
        } else {
            (String::new(), String::new())
        };
        self.templates
            .render("example", &[("example_prefixes", &prefixes), ("example_blend", &blend)])
    }

    pub fn build_text_prompt(
        &self,
        task: TaskKind,
        sentence: &str,
        skg: Option<&Graph>,
        cfg: &PromptConfig,
    ) -> Result<ChatRequest, PromptError> {
        let task_template = match task {
            TaskKind::Detection => "task_detection",
            TaskKind::ConceptualUnderstanding => "task_understanding",
            TaskKind::VisualUnderstanding => return config_error("visual task needs build_visual_prompt"),
        };
        if cfg.include_graph && skg.is_none() {
            return config_error("configuration includes the graph but no graph was given");
        }
        let mut sections = vec![self.templates.render(task_template, &[("sentence", sentence)])?];
        if let Some(word) = &cfg.target_word {
            sections.push(self.templates.render("target_word", &[("word", word)])?);
        }
        if let (true, Some(g)) = (cfg.include_graph, skg) {
            sections.push(self.graph_section(g)?);
        }
        if cfg.include_blending {
            sections.push(self.templates.render("blending", &[])?);
        }
        sections.push(self.example_section(cfg.include_blending)?);
        sections.push(self.templates.render("output_text", &[])?);
        Ok(ChatRequest::new(
            &self.model_id,
            vec![self.system()?, Message::user(sections.join("\n\n"))],
        ))
    }

    pub fn build_visual_prompt(
        &self,
        image: Option<&ImageBlob>,
        caption: Option<&str>,
        skg: Option<&Graph>,
        cfg: &PromptConfig,
    ) -> Result<ChatRequest, PromptError> {
        if !cfg.include_image && !cfg.include_sentence {
            return config_error("visual prompts need the image, the description, or both");
        }
        if cfg.few_shot.len() != 3 {
            return config_error(format!("visual prompts take exactly 3 examples, got {}", cfg.few_shot.len()));
        }
        if cfg.include_image && image.is_none() {
            return config_error("configuration includes the image but none was given");
        }
        if cfg.include_sentence && caption.is_none() {
            return config_error("configuration includes the description but none was given");
        }
        if cfg.include_graph && skg.is_none() {
            return config_error("configuration includes the graph but no graph was given");
        }

        let mut instructions = vec![self.templates.render("task_visual", &[])?];
        if cfg.include_blending {
            instructions.push(self.templates.render("blending", &[])?);
        }
        instructions.push(self.templates.render("output_visual", &[])?);
        let mut messages = vec![self.system()?, Message::user(instructions.join("\n\n"))];

        for (i, ex) in cfg.few_shot.iter().enumerate() {
            let mut parts = vec![format!("Example {}.", i + 1)];
            if let (true, Some(text)) = (cfg.include_sentence, &ex.text) {
                parts.push(self.templates.render("visual_caption", &[("caption", text)])?);
            }
            let mut msg = Message::user(parts.join("\n"));
            if let (true, Some(img)) = (cfg.include_image, &ex.image) {
                msg = msg.with_image(img.clone());
            }
            messages.push(msg);
            messages.push(Message::assistant(format!("```turtle\n{}\n```", ex.answer.trim_end())));
        }

        let mut query = vec![self.templates.render("visual_query", &[])?];
        if let (true, Some(text)) = (cfg.include_sentence, caption) {
            query.push(self.templates.render("visual_caption", &[("caption", text)])?);
        }
        if let (true, Some(g)) = (cfg.include_graph, skg) {
            query.push(self.graph_section(g)?);
        }
        let mut msg = Message::user(query.join("\n\n"));
        if let (true, Some(img)) = (cfg.include_image, image) {
            msg = msg.with_image(img.clone());
        }
        messages.push(msg);
        Ok(ChatRequest::new(&self.model_id, messages))
    }

    /// Plain prompt with the first `k` bank examples; `k = 0` is zero-shot.
    pub fn build_fewshot_baseline(&self, sentence: &str, k: usize) -> Result<ChatRequest, PromptError> {
        if self.bank.fewshot.len() < k {
            return config_error(format!("bank has {} examples, {k} requested", self.bank.fewshot.len()));
        }
        let mut sections = vec![self.templates.render("fewshot", &[])?];
        for (i, ex) in self.bank.fewshot.iter().take(k).enumerate() {
            sections.push(format!(
                "Example {}:\nSentence: \"{}\"\nAnswer:\n```turtle\n{}\n```",
                i + 1,
                ex.sentence,
                ex.answer.trim_end()
            ));
        }
        sections.push(format!("Sentence: \"{sentence}\"\nAnswer:"));
        Ok(ChatRequest::new(
            &self.model_id,
            vec![self.system()?, Message::user(sections.join("\n\n"))],
        ))
    }
}
