use std::collections::{BTreeMap, HashSet};
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::mpsc;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use super::{process, Method, PipelineRecord, Services, REPAIR_INSTRUCTION, REPAIR_RETRIES};
use crate::eval::DatasetInstance;
use crate::fsutil::write_atomic;
use crate::llm::GatewayMode;
use crate::prompt::TaskKind;
use crate::skg::{CachePolicy, RetryPolicy};

pub const MANIFEST: &str = "manifest.json";
pub const RECORDS: &str = "records.jsonl";
pub const PROMPTS: &str = "prompts";

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub dir: PathBuf,
    pub dataset_id: String,
    pub parallelism: usize,
    pub seed: Option<u64>,
    /// Write every rendered prompt under `prompts/<hash>.txt`.
    pub save_prompts: bool,
    /// Resolved application settings, echoed into the manifest.
    pub config: Option<serde_json::Value>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RetrySettings {
    pub repair_retries: u32,
    pub repair_instruction: String,
    pub skg: RetryPolicy,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunManifest {
    pub dataset_id: String,
    pub task: TaskKind,
    pub method: String,
    pub model_id: String,
    pub template_version: String,
    pub skg_service_url: String,
    pub cache_mode: CachePolicy,
    pub llm_mode: GatewayMode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub retries: RetrySettings,
    pub started_at: DateTime<Utc>,
    pub record_count: usize,
    pub error_count: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config: Option<serde_json::Value>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunSummary {
    pub manifest: RunManifest,
    /// Records written by this invocation.
    pub processed: usize,
    /// Records found from an earlier invocation.
    pub skipped: usize,
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> std::io::Error {
    std::io::Error::other(format!("{}: {e}", path.display()))
}

pub fn load_manifest(dir: &Path) -> std::io::Result<RunManifest> {
    let path = dir.join(MANIFEST);
    let text = std::fs::read_to_string(&path).map_err(|e| io_err(&path, e))?;
    serde_json::from_str(&text).map_err(|e| io_err(&path, e))
}

/// Reads `records.jsonl`. A torn final line from an interrupted run is
/// dropped; a malformed line elsewhere is an error.
pub fn load_records(dir: &Path) -> std::io::Result<Vec<PipelineRecord>> {
    let path = dir.join(RECORDS);
    let file = match File::open(&path) {
        Ok(f) => f,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
        Err(e) => return Err(io_err(&path, e)),
    };
    let lines: Vec<String> = BufReader::new(file).lines().collect::<Result<_, _>>()?;
    let mut out = Vec::with_capacity(lines.len());
    for (i, line) in lines.iter().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str(line) {
            Ok(r) => out.push(r),
            Err(_) if i + 1 == lines.len() => break,
            Err(e) => return Err(io_err(&path, format!("line {}: {e}", i + 1))),
        }
    }
    Ok(out)
}

/// Rewrites `records.jsonl` with only complete lines so appends start clean.
fn truncate_to_records(path: &Path, records: &[PipelineRecord]) -> std::io::Result<()> {
    let mut body = String::new();
    for r in records {
        body.push_str(&serde_json::to_string(r).map_err(|e| io_err(path, e))?);
        body.push('\n');
    }
    write_atomic(path, body.as_bytes()).map_err(|e| io_err(path, e))
}

/// Processes every instance not already recorded in `opts.dir`. Records are
/// appended in instance order; the manifest is rewritten at the end.
pub fn run_dataset(
    instances: &[DatasetInstance],
    task: TaskKind,
    method: &Method,
    services: &Services,
    opts: &RunOptions,
) -> std::io::Result<RunSummary> {
    if opts.parallelism == 0 {
        return Err(std::io::Error::new(std::io::ErrorKind::InvalidInput, "parallelism must be at least 1"));
    }
    std::fs::create_dir_all(&opts.dir).map_err(|e| io_err(&opts.dir, e))?;
    let manifest_path = opts.dir.join(MANIFEST);
    let records_path = opts.dir.join(RECORDS);

    let previous: Option<RunManifest> = match std::fs::read_to_string(&manifest_path) {
        Ok(text) => Some(serde_json::from_str(&text).map_err(|e| io_err(&manifest_path, e))?),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => None,
        Err(e) => return Err(io_err(&manifest_path, e)),
    };
    if let Some(prev) = &previous {
        if prev.task != task || prev.method != method.name() || prev.dataset_id != opts.dataset_id {
            return Err(io_err(
                &manifest_path,
                format!(
                    "directory holds a {} {} run over `{}`",
                    prev.method,
                    prev.task.name(),
                    prev.dataset_id
                ),
            ));
        }
    }

    let existing = load_records(&opts.dir)?;
    truncate_to_records(&records_path, &existing)?;
    let done: HashSet<&str> = existing.iter().map(|r| r.instance_id.as_str()).collect();
    let pending: Vec<&DatasetInstance> = instances.iter().filter(|i| !done.contains(i.id.as_str())).collect();

    let mut manifest = RunManifest {
        dataset_id: opts.dataset_id.clone(),
        task,
        method: method.name(),
        model_id: services.engine.model_id().to_string(),
        template_version: services.engine.template_version().to_string(),
        skg_service_url: services.skg_url.clone(),
        cache_mode: services.cache_policy,
        llm_mode: services.llm.mode(),
        seed: opts.seed,
        retries: RetrySettings {
            repair_retries: REPAIR_RETRIES,
            repair_instruction: REPAIR_INSTRUCTION.to_string(),
            skg: services.skg.retry(),
        },
        started_at: previous.as_ref().map_or_else(Utc::now, |p| p.started_at),
        record_count: existing.len(),
        error_count: existing.iter().filter(|r| r.error.is_some()).count(),
        config: opts.config.clone(),
    };
    write_manifest(&manifest_path, &manifest)?;

    let mut sink = OpenOptions::new()
        .append(true)
        .create(true)
        .open(&records_path)
        .map_err(|e| io_err(&records_path, e))?;
    if opts.save_prompts {
        std::fs::create_dir_all(opts.dir.join(PROMPTS)).map_err(|e| io_err(&opts.dir, e))?;
    }

    let next = AtomicUsize::new(0);
    let abort = AtomicBool::new(false);
    let mut written = 0;
    let mut errors = 0;
    let outcome: std::io::Result<()> = std::thread::scope(|scope| {
        let (tx, rx) = mpsc::channel::<(usize, PipelineRecord, Option<String>)>();
        for _ in 0..opts.parallelism.min(pending.len().max(1)) {
            let tx = tx.clone();
            let (next, abort, pending) = (&next, &abort, &pending);
            scope.spawn(move || loop {
                if abort.load(Ordering::SeqCst) {
                    break;
                }
                let i = next.fetch_add(1, Ordering::SeqCst);
                let Some(instance) = pending.get(i) else { break };
                let (record, prompt) = process(instance, task, method, services);
                if tx.send((i, record, prompt)).is_err() {
                    break;
                }
            });
        }
        drop(tx);

        let mut buffer: BTreeMap<usize, (PipelineRecord, Option<String>)> = BTreeMap::new();
        let mut expected = 0;
        for (i, record, prompt) in rx {
            buffer.insert(i, (record, prompt));
            while let Some((record, prompt)) = buffer.remove(&expected) {
                if let Err(e) = append(&mut sink, &records_path, &record, prompt.as_deref(), opts) {
                    abort.store(true, Ordering::SeqCst);
                    return Err(e);
                }
                written += 1;
                errors += usize::from(record.error.is_some());
                expected += 1;
            }
        }
        Ok(())
    });
    outcome?;

    manifest.record_count += written;
    manifest.error_count += errors;
    write_manifest(&manifest_path, &manifest)?;
    Ok(RunSummary {
        manifest,
        processed: written,
        skipped: existing.len(),
    })
}

fn append(
    sink: &mut File,
    path: &Path,
    record: &PipelineRecord,
    prompt: Option<&str>,
    opts: &RunOptions,
) -> std::io::Result<()> {
    let mut line = serde_json::to_string(record).map_err(|e| io_err(path, e))?;
    line.push('\n');
    sink.write_all(line.as_bytes()).map_err(|e| io_err(path, e))?;
    sink.flush().map_err(|e| io_err(path, e))?;
    if let (true, Some(hash), Some(text)) = (opts.save_prompts, &record.prompt_hash, prompt) {
        let prompt_path = opts.dir.join(PROMPTS).join(format!("{hash}.txt"));
        if !prompt_path.exists() {
            write_atomic(&prompt_path, text.as_bytes()).map_err(|e| io_err(&prompt_path, e))?;
        }
    }
    Ok(())
}

fn write_manifest(path: &Path, manifest: &RunManifest) -> std::io::Result<()> {
    let mut text = serde_json::to_string_pretty(manifest).map_err(|e| io_err(path, e))?;
    text.push('\n');
    write_atomic(path, text.as_bytes()).map_err(|e| io_err(path, e))
}
