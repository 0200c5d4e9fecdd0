//! Command-line entry point: single-sentence detection and understanding,
//! visual metaphors, dataset runs, scoring, validation, reports and cache
//! maintenance.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 operational
//! failure (including a pipeline error record).

mod config;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use blendkg_core::eval::tables::{build_table, summary_block, TABLES};
use blendkg_core::eval::{
    balanced_sample, load_annotations, load_dataset, render_csv, render_text, DatasetFormat, DatasetInstance,
    ExactScorer, HttpScorer, Modality, Scorer,
};
use blendkg_core::llm::{Gateway, GatewayMode, RecordingStore};
use blendkg_core::ontology::{validate_xkg, vocab, Level};
use blendkg_core::pipeline::{
    load_manifest, load_records, load_scores, run_dataset, run_instance, score_run, write_scores, Method,
    PipelineRecord, RunOptions, Services,
};
use blendkg_core::prompt::{ExampleBank, PromptEngine, TaskKind, Templates};
use blendkg_core::rdf::{parse_turtle, PrefixMap};
use blendkg_core::skg::{CachePolicy, SkgCache, SkgClient};
use clap::{Args, Parser, Subcommand, ValueEnum};
use config::{AppConfig, FileConfig, Overrides};

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Failed(String),
}

impl CliError {
    fn failed(e: impl std::fmt::Display) -> Self {
        CliError::Failed(e.to_string())
    }
}

#[derive(Parser)]
#[command(name = "blendkg", version, about = "Metaphor detection and understanding with blending knowledge graphs")]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct GlobalArgs {
    /// TOML settings file; flags and environment variables override it.
    #[arg(long, global = true, env = "BLENDKG_CONFIG")]
    config: Option<PathBuf>,
    /// Semantic graph service endpoint.
    #[arg(long, global = true, env = "BLENDKG_SKG_URL")]
    skg_url: Option<String>,
    /// Base URL of the chat completion API.
    #[arg(long, global = true, env = "LLM_BASE_URL")]
    llm_base_url: Option<String>,
    /// Chat API flavour: openai or anthropic.
    #[arg(long, global = true, env = "LLM_PROVIDER")]
    llm_provider: Option<String>,
    /// Model identifier sent with every request.
    #[arg(long = "model", global = true, env = "LLM_MODEL")]
    model_id: Option<String>,
    /// Directory of cached semantic graphs.
    #[arg(long, global = true, env = "BLENDKG_CACHE_DIR")]
    cache_dir: Option<PathBuf>,
    /// Recorded model responses used by record and replay modes.
    #[arg(long, global = true, env = "BLENDKG_RECORDINGS")]
    recordings: Option<PathBuf>,
    /// Template root holding `<version>/` and `examples/`; built-in templates otherwise.
    #[arg(long, global = true, env = "BLENDKG_TEMPLATES")]
    templates_dir: Option<PathBuf>,
    #[arg(long, global = true, env = "BLENDKG_TEMPLATE_VERSION")]
    template_version: Option<String>,
    /// Preset used when a command does not name a method.
    #[arg(long, global = true, env = "BLENDKG_PRESET")]
    default_preset: Option<String>,
    #[arg(long, global = true, env = "BLENDKG_PARALLELISM")]
    parallelism: Option<usize>,
    /// live, record or replay.
    #[arg(long, global = true, env = "BLENDKG_MODE")]
    mode: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Decide whether a sentence is metaphorical and name its domains.
    Detect(DetectArgs),
    /// Explain a visual metaphor given an image.
    Visual(VisualArgs),
    /// Process a dataset into a run directory.
    Run(RunArgs),
    /// Score a run directory against its gold data.
    Eval(EvalArgs),
    /// Check a Turtle graph against the blending rules.
    Validate(ValidateArgs),
    /// Render result tables from scored runs.
    Report(ReportArgs),
    /// Inspect or prune the semantic graph cache.
    Cache(CacheArgs),
}

#[derive(Args)]
struct DetectArgs {
    sentence: String,
    /// detection or understanding.
    #[arg(long, default_value = "detection")]
    task: TaskKind,
    /// Preset name, zero-shot or few-shot-<k>; defaults to the configured preset.
    #[arg(long)]
    method: Option<String>,
    #[arg(long)]
    target_word: Option<String>,
    /// Directory for the extended graph.
    #[arg(long, default_value = "xkg")]
    out: PathBuf,
    /// Print the full record as JSON instead of the summary.
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct VisualArgs {
    image: PathBuf,
    #[arg(long)]
    sentence: Option<String>,
    /// SentImg, NoSent, NoImg or few-shot-3; defaults to SentImg.
    #[arg(long)]
    method: Option<String>,
    #[arg(long, default_value = "xkg")]
    out: PathBuf,
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    dataset: PathBuf,
    /// Dataset layout; inferred from the file name when omitted.
    #[arg(long)]
    format: Option<DatasetFormat>,
    #[arg(long, default_value = "detection")]
    task: TaskKind,
    #[arg(long, alias = "preset")]
    method: Option<String>,
    /// Run directory; resumed when it already holds records.
    #[arg(long)]
    out: PathBuf,
    /// Balanced sample of this many instances.
    #[arg(long)]
    sample: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    save_prompts: bool,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    run: PathBuf,
    /// Gold data; defaults to the dataset recorded in the run manifest.
    #[arg(long)]
    dataset: Option<PathBuf>,
    #[arg(long)]
    format: Option<DatasetFormat>,
    /// exact, or http:<url> (or a bare http(s) URL) for a similarity service.
    #[arg(long, default_value = "exact")]
    scorer: String,
    /// Human judgements (item_id, annotator_id, label) replacing the scorer.
    #[arg(long)]
    annotations: Option<PathBuf>,
}

#[derive(Args)]
struct ValidateArgs {
    file: PathBuf,
    /// Apply every blending rule instead of the verdict check alone.
    #[arg(long)]
    strict: bool,
    /// Ontology graph to check the bundled vocabulary against.
    #[arg(long)]
    ontology: Option<PathBuf>,
    #[arg(long)]
    json: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum ReportFormat {
    Text,
    Csv,
}

#[derive(Args)]
struct ReportArgs {
    /// Result table number (2 to 7); a per-run summary when omitted.
    #[arg(long)]
    table: Option<u8>,
    /// Scored run directories.
    #[arg(long = "run", required = true, num_args = 1..)]
    runs: Vec<PathBuf>,
    #[arg(long, value_enum, default_value = "text")]
    format: ReportFormat,
}

#[derive(Args)]
struct CacheArgs {
    #[command(subcommand)]
    action: CacheAction,
}

#[derive(Subcommand)]
enum CacheAction {
    /// List cached graphs.
    List,
    /// Remove orphaned bodies and dangling index entries.
    Prune,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(CliError::Failed(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn resolve_config(g: GlobalArgs) -> Result<AppConfig, CliError> {
    let file = match &g.config {
        Some(p) => FileConfig::load(p)?,
        None => FileConfig::default(),
    };
    AppConfig::resolve(
        file,
        Overrides {
            skg_url: g.skg_url,
            llm_base_url: g.llm_base_url,
            llm_provider: g.llm_provider,
            model_id: g.model_id,
            cache_dir: g.cache_dir,
            recordings: g.recordings,
            templates_dir: g.templates_dir,
            template_version: g.template_version,
            default_preset: g.default_preset,
            parallelism: g.parallelism,
            mode: g.mode,
        },
    )
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    let cfg = resolve_config(cli.global)?;
    match cli.command {
        Command::Detect(a) => cmd_detect(&cfg, a),
        Command::Visual(a) => cmd_visual(&cfg, a),
        Command::Run(a) => cmd_run(&cfg, a),
        Command::Eval(a) => cmd_eval(a),
        Command::Validate(a) => cmd_validate(a),
        Command::Report(a) => cmd_report(a),
        Command::Cache(a) => cmd_cache(&cfg, a),
    }
}

fn services(cfg: &AppConfig) -> Result<Services, CliError> {
    let skg_url = cfg
        .skg_url
        .clone()
        .ok_or_else(|| CliError::Usage("no semantic graph service configured; pass --skg-url".into()))?;
    let model = cfg
        .model_id
        .clone()
        .ok_or_else(|| CliError::Usage("no model configured; pass --model".into()))?;
    let engine = match &cfg.templates_dir {
        Some(dir) => {
            let templates = Templates::load(dir, &cfg.template_version).map_err(|e| CliError::Usage(e.to_string()))?;
            let bank = ExampleBank::load(&dir.join("examples")).map_err(|e| CliError::Usage(e.to_string()))?;
            PromptEngine::new(templates, bank, model)
        }
        None if cfg.template_version == Templates::BUILTIN_VERSION => PromptEngine::builtin(model),
        None => {
            return Err(CliError::Usage(format!(
                "template version {} needs --templates-dir",
                cfg.template_version
            )))
        }
    };
    let mut llm = Gateway::new(cfg.mode);
    if cfg.mode != GatewayMode::Replay {
        let provider = cfg
            .llm_provider
            .from_env(cfg.llm_base_url.as_deref())
            .map_err(|e| CliError::Usage(e.to_string()))?;
        llm = llm.with_provider(provider);
    }
    if cfg.mode != GatewayMode::Live {
        let store = RecordingStore::open(&cfg.recordings).map_err(|e| CliError::failed(format!("{}: {e}", cfg.recordings.display())))?;
        llm = llm.with_store(Arc::new(store));
    }
    let cache_policy = match cfg.mode {
        GatewayMode::Live => CachePolicy::Live,
        GatewayMode::Record => CachePolicy::CacheFirst,
        GatewayMode::Replay => CachePolicy::ReplayOnly,
    };
    Ok(Services {
        skg: Arc::new(SkgClient::http().with_cache(SkgCache::new(&cfg.cache_dir))),
        llm: Arc::new(llm),
        engine: Arc::new(engine),
        skg_url,
        cache_policy,
    })
}

fn parse_method(given: Option<&str>, fallback: blendkg_core::prompt::Preset) -> Result<Method, CliError> {
    match given {
        Some(m) => m.parse().map_err(CliError::Usage),
        None => Ok(Method::Preset(fallback)),
    }
}

/// Writes the extended graph and prints the record summary. A record
/// carrying a stage error is reported and turned into exit code 2.
fn finish_single(record: &PipelineRecord, out: &Path, json: bool) -> Result<(), CliError> {
    let xkg_path = match (&record.xkg, &record.prompt_hash) {
        (Some(xkg), Some(hash)) => {
            std::fs::create_dir_all(out).map_err(|e| CliError::failed(format!("{}: {e}", out.display())))?;
            let path = out.join(format!("{}.ttl", &hash[..16.min(hash.len())]));
            std::fs::write(&path, xkg).map_err(|e| CliError::failed(format!("{}: {e}", path.display())))?;
            Some(path)
        }
        _ => None,
    };
    let mut stdout = std::io::stdout().lock();
    if json {
        let text = serde_json::to_string_pretty(record).map_err(CliError::failed)?;
        let _ = writeln!(stdout, "{text}");
    } else if let Some(v) = &record.verdict {
        let _ = writeln!(stdout, "metaphorical: {}", v.metaphorical);
        if v.metaphorical || record.task != TaskKind::Detection {
            for (name, value) in [("source", &v.source_label), ("target", &v.target_label), ("property", &v.property_label)] {
                if let Some(value) = value {
                    let _ = writeln!(stdout, "{name}: {value}");
                }
            }
        }
        if let Some(report) = &record.validation {
            let level = if report.level == Level::Strict { "strict" } else { "lenient" };
            let _ = writeln!(stdout, "valid: {} ({level})", report.passed);
        }
    }
    if let Some(path) = &xkg_path {
        if !json {
            let _ = writeln!(stdout, "xkg: {}", path.display());
        }
    }
    match &record.error {
        Some(e) => Err(CliError::Failed(format!("stage={} code={}: {}", e.stage, e.code, e.message))),
        None => Ok(()),
    }
}

fn cmd_detect(cfg: &AppConfig, a: DetectArgs) -> Result<(), CliError> {
    if a.task == TaskKind::VisualUnderstanding {
        return Err(CliError::Usage("use `blendkg visual` for images".into()));
    }
    let method = parse_method(a.method.as_deref(), cfg.default_preset)?;
    let svc = services(cfg)?;
    let mut instance = DatasetInstance::text("cli", a.sentence);
    instance.target_word = a.target_word;
    let record = run_instance(&instance, a.task, &method, &svc);
    finish_single(&record, &a.out, a.json)
}

fn cmd_visual(cfg: &AppConfig, a: VisualArgs) -> Result<(), CliError> {
    let fallback = if cfg.default_preset.is_visual() {
        cfg.default_preset
    } else {
        blendkg_core::prompt::Preset::SentImg
    };
    let method = parse_method(a.method.as_deref(), fallback)?;
    let svc = services(cfg)?;
    let mut instance = DatasetInstance::text("cli", a.sentence.unwrap_or_default());
    if instance.text.as_deref() == Some("") {
        instance.text = None;
    }
    instance.modality = Modality::Image;
    instance.image_ref = Some(a.image);
    let record = run_instance(&instance, TaskKind::VisualUnderstanding, &method, &svc);
    finish_single(&record, &a.out, a.json)
}

fn infer_format(path: &Path, given: Option<DatasetFormat>) -> Result<DatasetFormat, CliError> {
    if let Some(f) = given {
        return Ok(f);
    }
    if path.extension().is_some_and(|e| e == "json") {
        return Ok(DatasetFormat::Visual);
    }
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or_default().to_lowercase();
    for (key, format) in [
        ("moh", DatasetFormat::Mohx),
        ("trofi", DatasetFormat::Trofi),
        ("bcmtd", DatasetFormat::Bcmtd),
        ("wg", DatasetFormat::Wg),
    ] {
        if name.contains(key) {
            return Ok(format);
        }
    }
    Err(CliError::Usage(format!("cannot tell the layout of {}; pass --format", path.display())))
}

fn cmd_run(cfg: &AppConfig, a: RunArgs) -> Result<(), CliError> {
    let format = infer_format(&a.dataset, a.format)?;
    let method = parse_method(a.method.as_deref(), cfg.default_preset)?;
    let mut instances = load_dataset(&a.dataset, format).map_err(CliError::failed)?;
    if let Some(n) = a.sample {
        instances = balanced_sample(&instances, n, a.seed).map_err(|e| CliError::Usage(e.to_string()))?;
    }
    let svc = services(cfg)?;
    let opts = RunOptions {
        dir: a.out.clone(),
        dataset_id: a.dataset.display().to_string(),
        parallelism: cfg.parallelism,
        seed: a.sample.map(|_| a.seed),
        save_prompts: a.save_prompts,
        config: Some(serde_json::to_value(cfg).map_err(CliError::failed)?),
    };
    let summary = run_dataset(&instances, a.task, &method, &svc, &opts).map_err(CliError::failed)?;
    println!("run: {}", a.out.display());
    println!("records: {}", summary.manifest.record_count);
    println!("processed: {}", summary.processed);
    println!("skipped: {}", summary.skipped);
    println!("errors: {}", summary.manifest.error_count);
    Ok(())
}

fn cmd_eval(a: EvalArgs) -> Result<(), CliError> {
    let manifest = load_manifest(&a.run).map_err(CliError::failed)?;
    let records = load_records(&a.run).map_err(CliError::failed)?;
    let dataset = a.dataset.unwrap_or_else(|| PathBuf::from(&manifest.dataset_id));
    let format = infer_format(&dataset, a.format)?;
    let gold = load_dataset(&dataset, format).map_err(CliError::failed)?;
    let scorer: Box<dyn Scorer> = match a.scorer.as_str() {
        "exact" => Box::new(ExactScorer),
        s if s.starts_with("http://") || s.starts_with("https://") => Box::new(HttpScorer::new(s)),
        s => match s.strip_prefix("http:") {
            Some(url) if !url.is_empty() => Box::new(HttpScorer::new(url)),
            _ => return Err(CliError::Usage(format!("unknown scorer `{s}` (expected exact or http:<url>)"))),
        },
    };
    let matrix = match &a.annotations {
        Some(p) => Some(load_annotations(p).map_err(CliError::failed)?),
        None => None,
    };
    let scores = score_run(&records, &manifest, &gold, format, Some(scorer.as_ref()), matrix.as_ref()).map_err(CliError::failed)?;
    write_scores(&a.run, &scores).map_err(CliError::failed)?;
    print!("{}", render_text(&[summary_block(&scores)]));
    Ok(())
}

fn cmd_validate(a: ValidateArgs) -> Result<(), CliError> {
    let text = std::fs::read_to_string(&a.file).map_err(|e| CliError::failed(format!("{}: {e}", a.file.display())))?;
    let g = parse_turtle(&text, &PrefixMap::defaults()).map_err(|e| CliError::failed(format!("{}: {e}", a.file.display())))?;
    let level = if a.strict { Level::Strict } else { Level::Lenient };
    let report = validate_xkg(&g, level);
    let mut missing = Vec::new();
    if let Some(path) = &a.ontology {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::failed(format!("{}: {e}", path.display())))?;
        let onto = parse_turtle(&text, &PrefixMap::defaults()).map_err(|e| CliError::failed(format!("{}: {e}", path.display())))?;
        missing = vocab::missing_from(&onto);
    }
    let mut stdout = std::io::stdout().lock();
    if a.json {
        let text = serde_json::to_string_pretty(&report).map_err(CliError::failed)?;
        let _ = writeln!(stdout, "{text}");
    } else {
        for f in &report.findings {
            let _ = writeln!(stdout, "{f}");
        }
    }
    for term in &missing {
        eprintln!("warning: {term} is not declared by the given ontology");
    }
    let errors = report.errors().count();
    eprintln!(
        "{}: {} ({} errors, {} warnings)",
        a.file.display(),
        if report.passed { "passed" } else { "failed" },
        errors,
        report.findings.len() - errors
    );
    if report.passed {
        Ok(())
    } else {
        Err(CliError::Failed(format!("{} does not satisfy the blending rules", a.file.display())))
    }
}

fn cmd_report(a: ReportArgs) -> Result<(), CliError> {
    let runs = a
        .runs
        .iter()
        .map(|dir| {
            load_scores(dir).map_err(|e| CliError::failed(format!("{e}; score the run with `blendkg eval` first")))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let blocks = match a.table {
        Some(t) if !TABLES.contains(&t) => {
            return Err(CliError::Usage(format!("unknown table {t} (expected one of {TABLES:?})")))
        }
        Some(t) => vec![build_table(t, &runs).map_err(CliError::failed)?],
        None => runs.iter().map(summary_block).collect(),
    };
    match a.format {
        ReportFormat::Text => print!("{}", render_text(&blocks)),
        ReportFormat::Csv => print!("{}", render_csv(&blocks)),
    }
    Ok(())
}

fn cmd_cache(cfg: &AppConfig, a: CacheArgs) -> Result<(), CliError> {
    let cache = SkgCache::new(&cfg.cache_dir);
    match a.action {
        CacheAction::List => {
            let index = cache.index().map_err(CliError::failed)?;
            let mut stdout = std::io::stdout().lock();
            for (key, e) in &index {
                let _ = writeln!(stdout, "{key}\t{}\t{}\t{}", e.fetched_at.to_rfc3339(), e.service_url, e.text);
            }
            eprintln!("{} cached graphs in {}", index.len(), cfg.cache_dir.display());
        }
        CacheAction::Prune => {
            let removed = cache.prune().map_err(CliError::failed)?;
            println!("removed: {removed}");
        }
    }
    Ok(())
}
