//! Regenerates the synthetic datasets, run directories, annotations and
//! replay recordings under `fixtures/`. The model and the graph service are
//! stubs whose answers follow a fixed per-instance plan; the pipeline,
//! storage and scoring code paths are the real ones.
//!
//! Run from `crates/core`: `cargo run --example build_fixtures`.

#[path = "../tests/common/stubs.rs"]
mod stubs;

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use blendkg_core::eval::tables::RunScores;
use blendkg_core::eval::{load_annotations, load_dataset, DatasetFormat, DatasetInstance};
use blendkg_core::llm::{Gateway, GatewayMode, LlmError, RecordingStore};
use blendkg_core::pipeline::{load_manifest, load_records, run_dataset, score_run, write_scores, Method, RunOptions};
use blendkg_core::prompt::{Preset, TaskKind};
use blendkg_core::skg::{CachePolicy, SkgCache, SkgClient};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use stubs::{blend_answer, is_caption_request, literal_answer, sentence_of, FnProvider, TableSkg};

const MODEL: &str = "synthetic-fixture";
const SKG_URL: &str = "http://localhost:8080/skg";
const CRIME: &str = "Crime has infected communities everywhere";

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum Outcome {
    Tp,
    Fp,
    Tn,
    Fn,
    /// Gold metaphorical, answer never parses.
    FnError,
}

#[derive(Clone)]
enum Answer {
    Blend(String, String, String),
    Literal,
    Prose,
}

fn answer_text(a: &Answer) -> String {
    match a {
        Answer::Blend(s, t, p) => blend_answer(s, t, p),
        Answer::Literal => literal_answer(),
        Answer::Prose => "The sentence seems figurative, but I cannot produce a graph for it.".to_string(),
    }
}

const SUBJECTS: &[&str] = &[
    "The committee", "Her argument", "The market", "His temper", "The rumour", "Our budget", "The city", "The old \
     theory", "The new policy", "The debate", "Their friendship", "The economy",
];
const MET_PREDICATES: &[(&str, &str)] = &[
    ("devoured", "devoured the proposal"),
    ("collapsed", "collapsed under the weight of doubt"),
    ("boiled", "boiled over by noon"),
    ("spread", "spread like wildfire"),
    ("drowned", "drowned in paperwork"),
    ("blossomed", "blossomed after the winter"),
    ("crumbled", "crumbled at the first question"),
    ("fueled", "fueled the quarrel"),
    ("swallowed", "swallowed the bad news"),
    ("attacked", "attacked every weak point"),
    ("built", "built a wall of silence"),
    ("sailed", "sailed through the audit"),
    ("froze", "froze the conversation"),
    ("planted", "planted a doubt"),
    ("wrestled", "wrestled with the numbers"),
];
const LIT_PREDICATES: &[(&str, &str)] = &[
    ("met", "met on Tuesday"),
    ("published", "published a report"),
    ("opened", "opened a new office"),
    ("counted", "counted the votes"),
    ("moved", "moved to the second floor"),
    ("signed", "signed the contract"),
    ("hired", "hired two clerks"),
    ("closed", "closed at six"),
    ("printed", "printed the agenda"),
    ("paid", "paid the invoice"),
    ("listed", "listed the items"),
    ("delayed", "delayed the meeting"),
    ("ordered", "ordered new chairs"),
    ("visited", "visited the harbour"),
    ("repaired", "repaired the roof"),
];
const ADVERBIALS: &[&str] = &["", " yesterday", " again", " last spring"];
const DOMAINS: &[(&str, &str, &str)] = &[
    ("food", "ideas", "consumption"),
    ("building", "argument", "structure"),
    ("heat", "anger", "intensity"),
    ("fire", "information", "propagation"),
    ("water", "work", "excess"),
    ("plant", "relationship", "growth"),
    ("war", "argument", "conflict"),
    ("journey", "life", "progress"),
    ("money", "time", "value"),
    ("disease", "crime", "contamination"),
];

/// Unique synthetic sentences; each (subject, predicate, adverbial) triple
/// is used once.
fn sentences(n: usize, metaphorical: bool, rng: &mut ChaCha8Rng, used: &mut std::collections::HashSet<String>) -> Vec<(String, String)> {
    let preds = if metaphorical { MET_PREDICATES } else { LIT_PREDICATES };
    let mut out = Vec::new();
    while out.len() < n {
        let s = SUBJECTS[rng.random_range(0..SUBJECTS.len())];
        let (word, p) = preds[rng.random_range(0..preds.len())];
        let a = ADVERBIALS[rng.random_range(0..ADVERBIALS.len())];
        let text = format!("{s} {p}{a}.");
        if used.insert(text.clone()) {
            out.push((text, word.to_string()));
        }
    }
    out
}

struct Plan {
    rows: Vec<(String, String, String, Outcome)>, // id, sentence, target word, outcome
}

fn detection_plan(prefix: &str, counts: [(Outcome, usize); 5], seed: u64) -> Plan {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut outcomes: Vec<Outcome> = counts.iter().flat_map(|(o, n)| std::iter::repeat_n(*o, *n)).collect();
    outcomes.shuffle(&mut rng);
    let mut used = std::collections::HashSet::new();
    let gold_met = outcomes.iter().filter(|o| matches!(o, Outcome::Tp | Outcome::Fn | Outcome::FnError)).count();
    let mut met = sentences(gold_met, true, &mut rng, &mut used).into_iter();
    let mut lit = sentences(outcomes.len() - gold_met, false, &mut rng, &mut used).into_iter();
    let rows = outcomes
        .iter()
        .enumerate()
        .map(|(i, o)| {
            let (text, word) = match o {
                Outcome::Tp | Outcome::Fn | Outcome::FnError => met.next().unwrap(),
                Outcome::Fp | Outcome::Tn => lit.next().unwrap(),
            };
            (format!("{prefix}-{:03}", i + 1), text, word, *o)
        })
        .collect();
    Plan { rows }
}

fn detection_answer(o: Outcome, i: usize) -> Answer {
    let (s, t, p) = DOMAINS[i % DOMAINS.len()];
    match o {
        Outcome::Tp | Outcome::Fp => Answer::Blend(s.into(), t.into(), p.into()),
        Outcome::Tn | Outcome::Fn => Answer::Literal,
        Outcome::FnError => Answer::Prose,
    }
}

fn provider(answers: HashMap<String, Answer>) -> Arc<FnProvider> {
    Arc::new(FnProvider::new(move |req| {
        let key = sentence_of(req).unwrap_or_default();
        answers
            .get(&key)
            .map(answer_text)
            .ok_or_else(|| LlmError::ServiceError(format!("no planned answer for `{key}`")))
    }))
}

fn services(provider: Arc<FnProvider>, skg: Arc<TableSkg>) -> blendkg_core::pipeline::Services {
    blendkg_core::pipeline::Services {
        skg: Arc::new(SkgClient::new(skg)),
        llm: Arc::new(Gateway::new(GatewayMode::Live).with_provider(provider)),
        engine: Arc::new(blendkg_core::prompt::PromptEngine::builtin(MODEL)),
        skg_url: SKG_URL.into(),
        cache_policy: CachePolicy::Live,
    }
}

fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) {
    let mut w = csv::Writer::from_path(path).unwrap();
    w.write_record(header).unwrap();
    for r in rows {
        w.write_record(r).unwrap();
    }
    w.flush().unwrap();
}

fn fresh_dir(path: &Path) {
    if path.exists() {
        std::fs::remove_dir_all(path).unwrap();
    }
    std::fs::create_dir_all(path).unwrap();
}

fn run(
    name: &str,
    dataset: &Path,
    format: DatasetFormat,
    task: TaskKind,
    method: Method,
    provider: Arc<FnProvider>,
    annotations: Option<&Path>,
) -> RunScores {
    let dir = PathBuf::from("fixtures/runs").join(name);
    fresh_dir(&dir);
    let instances = load_dataset(dataset, format).unwrap();
    let svc = services(provider, Arc::new(TableSkg::default()));
    let opts = RunOptions {
        dir: dir.clone(),
        dataset_id: dataset.display().to_string(),
        parallelism: 4,
        seed: Some(7),
        save_prompts: false,
        config: None,
    };
    run_dataset(&instances, task, &method, &svc, &opts).unwrap();
    let records = load_records(&dir).unwrap();
    let manifest = load_manifest(&dir).unwrap();
    let matrix = annotations.map(|p| load_annotations(p).unwrap());
    let scores = score_run(&records, &manifest, &instances, format, None, matrix.as_ref()).unwrap();
    write_scores(&dir, &scores).unwrap();
    scores
}

fn build_detection(name: &str, format: DatasetFormat, plan: &Plan, with_category: bool) -> RunScores {
    let path = PathBuf::from("fixtures/datasets").join(format!("{name}.csv"));
    let mut answers = HashMap::new();
    let mut rows = Vec::new();
    for (i, (id, text, word, o)) in plan.rows.iter().enumerate() {
        answers.insert(text.clone(), detection_answer(*o, i));
        let gold = matches!(o, Outcome::Tp | Outcome::Fn | Outcome::FnError);
        if with_category {
            let (s, t, _) = DOMAINS[i % DOMAINS.len()];
            let category = if !gold {
                "literal"
            } else if i % 4 == 0 {
                "scientific"
            } else {
                "generic_conceptual"
            };
            let (s, t) = if gold { (s, t) } else { ("", "") };
            rows.push(vec![id.clone(), text.clone(), category.into(), u8::from(gold).to_string(), s.into(), t.into()]);
        } else {
            rows.push(vec![id.clone(), text.clone(), word.clone(), u8::from(gold).to_string()]);
        }
    }
    let header: &[&str] = if with_category {
        &["id", "sentence", "category", "label", "source", "target"]
    } else {
        &["id", "sentence", "target_word", "label"]
    };
    write_csv(&path, header, &rows);
    run(&format!("{name}_lag"), &path, format, TaskKind::Detection, Method::Preset(Preset::Lag), provider(answers), None)
}

fn png(seed: u8) -> Vec<u8> {
    let img = image::RgbImage::from_fn(8, 8, |x, y| image::Rgb([seed.wrapping_mul(40), (x * 30) as u8, (y * 30) as u8]));
    let mut out = std::io::Cursor::new(Vec::new());
    img.write_to(&mut out, image::ImageFormat::Png).unwrap();
    out.into_inner()
}

/// Votes of three annotators; `correct` decides the majority.
fn votes(correct: bool, rng: &mut ChaCha8Rng) -> [u8; 3] {
    let dissent = rng.random_bool(0.35);
    let v = u8::from(correct);
    let mut out = [v; 3];
    if dissent {
        out[rng.random_range(0..3)] = 1 - v;
    }
    out
}

fn build_visual() -> RunScores {
    let root = PathBuf::from("fixtures/datasets/visual");
    fresh_dir(&root);
    std::fs::create_dir_all(root.join("images")).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut captions = HashMap::new();
    let mut manifest = Vec::new();
    let mut correct: Vec<bool> = (0..100).map(|i| i < 67).collect();
    correct.shuffle(&mut rng);
    let mut ann = Vec::new();
    for i in 0..100usize {
        let id = format!("vis-{:03}", i + 1);
        let bytes = png(i as u8);
        let file = format!("images/{id}.png");
        std::fs::write(root.join(&file), &bytes).unwrap();
        let (s, t, p) = DOMAINS[i % DOMAINS.len()];
        captions.insert(bytes.clone(), format!("A picture that shows {t} drawn as {s}, item {}.", i + 1));
        manifest.push(serde_json::json!({
            "id": id, "image_path": file, "gold_source": s, "gold_target": t, "gold_property": p,
        }));
        for (a, v) in ["ann1", "ann2", "ann3"].iter().zip(votes(correct[i], &mut rng)) {
            ann.push(vec![id.clone(), a.to_string(), v.to_string()]);
        }
    }
    std::fs::write(root.join("manifest.json"), serde_json::to_string_pretty(&manifest).unwrap() + "\n").unwrap();
    let ann_path = PathBuf::from("fixtures/annotations/visual_no_sent.csv");
    write_csv(&ann_path, &["item_id", "annotator_id", "label"], &ann);
    // Visual queries carry no quoted sentence; answers are keyed by the
    // query image instead.
    let by_image: HashMap<Vec<u8>, Answer> = (0..100usize)
        .map(|i| {
            let (s, t, p) = DOMAINS[i % DOMAINS.len()];
            let a = if correct[i] {
                Answer::Blend(s.into(), t.into(), p.into())
            } else {
                Answer::Blend(t.into(), s.into(), "appearance".into())
            };
            (png(i as u8), a)
        })
        .collect();
    let caps = captions;
    let provider = Arc::new(FnProvider::new(move |req| {
        if is_caption_request(req) {
            return caps
                .get(&req.messages[0].images[0].data)
                .cloned()
                .ok_or_else(|| LlmError::ServiceError("unknown image".into()));
        }
        let query = req.messages.last().unwrap();
        let image = query.images.first().ok_or_else(|| LlmError::ServiceError("query has no image".into()))?;
        by_image
            .get(&image.data)
            .map(answer_text)
            .ok_or_else(|| LlmError::ServiceError("no planned answer".into()))
    }));
    run(
        "visual_no_sent",
        &root.join("manifest.json"),
        DatasetFormat::Visual,
        TaskKind::VisualUnderstanding,
        Method::Preset(Preset::NoSent),
        provider,
        Some(&ann_path),
    )
}

fn build_wg() -> RunScores {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let mut used = std::collections::HashSet::new();
    let texts = sentences(125, true, &mut rng, &mut used);
    // 32 both right, 40 source only, 28 target only, 25 neither.
    let mut kinds: Vec<(bool, bool)> = [((true, true), 32), ((true, false), 40), ((false, true), 28), ((false, false), 25)]
        .iter()
        .flat_map(|(k, n)| std::iter::repeat_n(*k, *n))
        .collect();
    kinds.shuffle(&mut rng);
    let mut rows = Vec::new();
    let mut answers = HashMap::new();
    let mut ann = Vec::new();
    for (i, ((text, _), (src_ok, tgt_ok))) in texts.iter().zip(&kinds).enumerate() {
        let id = format!("wg-{:03}", i + 1);
        let (s, t, p) = DOMAINS[i % DOMAINS.len()];
        rows.push(vec![id.clone(), text.clone(), s.to_string(), t.to_string()]);
        let (ps, pt) = (
            if *src_ok { s.to_string() } else { format!("{s} object") },
            if *tgt_ok { t.to_string() } else { format!("{t} event") },
        );
        answers.insert(text.clone(), Answer::Blend(ps, pt, p.into()));
        for (slot, ok) in [("source", src_ok), ("target", tgt_ok)] {
            for (a, v) in ["ann1", "ann2", "ann3"].iter().zip(votes(*ok, &mut rng)) {
                ann.push(vec![format!("{id}/{slot}"), a.to_string(), v.to_string()]);
            }
        }
    }
    let path = PathBuf::from("fixtures/datasets/wg_sample.csv");
    write_csv(&path, &["id", "sentence", "source", "target"], &rows);
    let ann_path = PathBuf::from("fixtures/annotations/wg_lag.csv");
    write_csv(&ann_path, &["item_id", "annotator_id", "label"], &ann);
    run(
        "wg_lag",
        &path,
        DatasetFormat::Wg,
        TaskKind::ConceptualUnderstanding,
        Method::Preset(Preset::Lag),
        provider(answers),
        Some(&ann_path),
    )
}

fn build_error_tags() {
    let counts = [
        ("WrongSubelementMapping", 122),
        ("TooSpecific", 51),
        ("TooGeneral", 21),
        ("SwitchedSourceTarget", 7),
        ("LiteralAsMetaphor", 15),
    ];
    let mut tags: Vec<&str> = counts.iter().flat_map(|(c, n)| std::iter::repeat_n(*c, *n)).collect();
    tags.shuffle(&mut ChaCha8Rng::seed_from_u64(31));
    let rows: Vec<Vec<String>> = tags
        .iter()
        .enumerate()
        .map(|(i, c)| vec![format!("wg-{:03}", i + 1), c.to_string()])
        .collect();
    write_csv(Path::new("fixtures/annotations/wg_error_tags.csv"), &["instance_id", "category"], &rows);
}

/// Ten detection instances recorded for offline replay, the crime sentence
/// among them.
fn build_replay() {
    let root = PathBuf::from("fixtures/replay");
    fresh_dir(&root);
    let plan = detection_plan("rp", [(Outcome::Tp, 4), (Outcome::Fp, 1), (Outcome::Tn, 3), (Outcome::Fn, 1), (Outcome::FnError, 0)], 41);
    let mut rows = vec![vec!["rp-000".to_string(), CRIME.to_string(), String::new(), "1".to_string()]];
    let mut answers = HashMap::new();
    answers.insert(CRIME.to_string(), Answer::Literal);
    for (i, (id, text, word, o)) in plan.rows.iter().enumerate() {
        answers.insert(text.clone(), detection_answer(*o, i));
        let gold = matches!(o, Outcome::Tp | Outcome::Fn);
        rows.push(vec![id.clone(), text.clone(), word.clone(), u8::from(gold).to_string()]);
    }
    let data = root.join("instances.csv");
    write_csv(&data, &["id", "sentence", "target_word", "label"], &rows);

    let crime_xkg = std::fs::read_to_string("fixtures/crime_xkg.ttl").unwrap();
    let crime_skg = std::fs::read_to_string("fixtures/crime_skg.ttl").unwrap();
    let base = provider(answers);
    let inner = base.clone();
    let provider = Arc::new(FnProvider::new(move |req| {
        if sentence_of(req).as_deref() == Some(CRIME) {
            return Ok(format!("```turtle\n{crime_xkg}```"));
        }
        blendkg_core::llm::ChatProvider::send(inner.as_ref(), req).map(|r| r.text)
    }));
    let store = Arc::new(RecordingStore::open(root.join("recordings.json")).unwrap());
    let skg = Arc::new(TableSkg::default().with(CRIME, &crime_skg));
    let svc = blendkg_core::pipeline::Services {
        skg: Arc::new(SkgClient::new(skg).with_cache(SkgCache::new(root.join("skg_cache")))),
        llm: Arc::new(Gateway::new(GatewayMode::Record).with_provider(provider).with_store(store)),
        engine: Arc::new(blendkg_core::prompt::PromptEngine::builtin(MODEL)),
        skg_url: SKG_URL.into(),
        cache_policy: CachePolicy::CacheFirst,
    };
    let instances: Vec<DatasetInstance> = load_dataset(&data, DatasetFormat::Mohx).unwrap();
    let tmp = tempfile::tempdir().unwrap();
    let opts = RunOptions {
        dir: tmp.path().to_path_buf(),
        dataset_id: data.display().to_string(),
        parallelism: 1,
        seed: None,
        save_prompts: false,
        config: None,
    };
    let summary = run_dataset(&instances, TaskKind::Detection, &Method::Preset(Preset::Lag), &svc, &opts).unwrap();
    assert_eq!(summary.manifest.error_count, 0);
    std::fs::write(
        root.join("blendkg.toml"),
        format!(
            "# Offline configuration for the recorded fixtures in this directory.\n\
             mode = \"replay\"\nskg_url = \"{SKG_URL}\"\nmodel_id = \"{MODEL}\"\n\
             cache_dir = \"skg_cache\"\nrecordings = \"recordings.json\"\n"
        ),
    )
    .unwrap();
}

fn check(name: &str, got: f64, want: &str) {
    let shown = blendkg_core::eval::format_percent(got);
    assert_eq!(shown, want, "{name}");
    println!("{name}: {shown}");
}

fn main() {
    let manifest_dir = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    std::env::set_current_dir(&manifest_dir).unwrap();
    for d in ["fixtures/datasets", "fixtures/annotations", "fixtures/runs"] {
        std::fs::create_dir_all(d).unwrap();
    }

    use Outcome::*;
    let mohx = detection_plan("mohx", [(Tp, 165), (Fp, 19), (Tn, 97), (Fn, 17), (FnError, 2)], 1);
    let s = build_detection("mohx_sample", DatasetFormat::Mohx, &mohx, false);
    let d = s.detection.as_ref().unwrap();
    check("MOH-X F1", d.f1, "89.7");
    check("MOH-X Acc", d.accuracy, "87.3");

    let trofi = detection_plan("trofi", [(Tp, 200), (Fp, 23), (Tn, 53), (Fn, 22), (FnError, 1)], 2);
    let s = build_detection("trofi_sample", DatasetFormat::Trofi, &trofi, false);
    let d = s.detection.as_ref().unwrap();
    check("TroFi F1", d.f1, "89.7");
    check("TroFi Acc", d.accuracy, "84.6");

    let bcmtd = detection_plan("bcmtd", [(Tp, 82), (Fp, 17), (Tn, 43), (Fn, 14), (FnError, 0)], 3);
    let s = build_detection("bcmtd_sample", DatasetFormat::Bcmtd, &bcmtd, true);
    let d = s.detection.as_ref().unwrap();
    check("BCMTD Acc", d.accuracy, "80.1");
    check("BCMTD F1", d.f1, "84.1");

    let s = build_visual();
    check("Visual LAG no sent", s.human.as_ref().unwrap().rate, "67");

    let s = build_wg();
    check("WG both domains", s.understanding.as_ref().unwrap().success_rate, "25.6");

    build_error_tags();
    build_replay();
    println!("fixtures written under {}", manifest_dir.join("fixtures").display());
}
