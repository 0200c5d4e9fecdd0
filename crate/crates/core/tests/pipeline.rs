mod common;

use std::sync::atomic::Ordering;
use std::sync::Arc;

use blendkg_core::eval::DatasetInstance;
use blendkg_core::llm::{Gateway, GatewayMode, RecordingStore};
use blendkg_core::ontology::{extract_blend, validate_xkg, Level};
use blendkg_core::pipeline::{load_records, run_dataset, run_instance, Method, RunOptions, REPAIR_INSTRUCTION};
use blendkg_core::prompt::{Preset, TaskKind};
use blendkg_core::rdf::{parse_turtle, PrefixMap};
use blendkg_core::skg::{CachePolicy, SkgCache};
use common::stubs::{
    blend_answer, is_caption_request, literal_answer, live_gateway, replay_gateway, sentence_of, services, FnProvider,
    TableSkg,
};
use common::{read_fixture, stubs};

const CRIME: &str = "Crime has infected communities everywhere";

fn crime_provider() -> Arc<FnProvider> {
    Arc::new(FnProvider::new(|req| {
        let sentence = sentence_of(req).unwrap_or_default();
        if sentence == CRIME {
            Ok(format!("Here is the graph.\n```turtle\n{}```\n", read_fixture("crime_xkg.ttl")))
        } else if sentence.contains("literal") {
            Ok(literal_answer())
        } else {
            Ok(blend_answer("journey", "life", "progress"))
        }
    }))
}

fn crime_skg() -> Arc<TableSkg> {
    Arc::new(TableSkg::default().with(CRIME, &read_fixture("crime_skg.ttl")))
}

fn instances(n: usize) -> Vec<DatasetInstance> {
    (0..n)
        .map(|i| {
            let text = if i % 3 == 0 {
                format!("Sentence {i} is literal.")
            } else {
                format!("Sentence {i} walks a long road.")
            };
            DatasetInstance::text(format!("s{i:02}"), text)
        })
        .collect()
}

#[test]
fn crime_sentence_through_replay() {
    let dir = tempfile::tempdir().unwrap();
    let store_path = dir.path().join("recordings.json");
    let cache_dir = dir.path().join("skg");
    let instance = DatasetInstance::text("crime", CRIME);

    // Record once against stubs, then replay with no providers at all.
    let store = Arc::new(RecordingStore::open(&store_path).unwrap());
    let recording = Gateway::new(GatewayMode::Record).with_provider(crime_provider()).with_store(store);
    let mut svc = services(recording, crime_skg());
    svc.skg = Arc::new(blendkg_core::skg::SkgClient::new(crime_skg()).with_cache(SkgCache::new(&cache_dir)));
    svc.cache_policy = CachePolicy::CacheFirst;
    let recorded = run_instance(&instance, TaskKind::Detection, &Method::Preset(Preset::Lag), &svc);
    assert!(recorded.error.is_none(), "{:?}", recorded.error);

    let store = Arc::new(RecordingStore::open(&store_path).unwrap());
    let mut svc = services(replay_gateway(store), Arc::new(TableSkg::default()));
    svc.skg = Arc::new(blendkg_core::skg::SkgClient::new(Arc::new(TableSkg::default())).with_cache(SkgCache::new(&cache_dir)));
    svc.cache_policy = CachePolicy::ReplayOnly;
    let record = run_instance(&instance, TaskKind::Detection, &Method::Preset(Preset::Lag), &svc);
    assert!(record.error.is_none(), "{:?}", record.error);
    let verdict = record.verdict.as_ref().unwrap();
    assert!(verdict.metaphorical);
    assert_eq!(verdict.source_label.as_deref(), Some("Disease"));
    assert_eq!(verdict.target_label.as_deref(), Some("Crime"));
    assert!(record.validation.as_ref().unwrap().passed);
    assert!(record.blend.is_some());
    assert_eq!(record.without_timings(), recorded.without_timings());

    let skg = record.skg_graph().unwrap();
    assert_eq!(skg.len(), 12);
    assert!(skg.is_subgraph_of(&record.xkg_graph().unwrap()));
}

#[test]
fn prose_three_times_is_an_extract_error() {
    let provider = Arc::new(FnProvider::new(|_| Ok("I think it is a metaphor.".to_string())));
    let svc = services(live_gateway(provider.clone()), crime_skg());
    let record = run_instance(&DatasetInstance::text("p", CRIME), TaskKind::Detection, &Method::Preset(Preset::Lag), &svc);
    let err = record.error.as_ref().unwrap();
    assert_eq!((err.stage.as_str(), err.code.as_str()), ("extract", "NoTurtleFound"));
    assert!(record.verdict.is_none());
    assert_eq!(record.attempts, 3);
    assert_eq!(provider.calls.load(Ordering::SeqCst), 3);
    let seen = provider.seen.lock().unwrap();
    let last = seen.last().unwrap();
    assert_eq!(last.messages.last().unwrap().text, REPAIR_INSTRUCTION);
    assert_eq!(last.messages.len(), seen[0].messages.len() + 4);
}

#[test]
fn repair_retry_recovers() {
    let provider = Arc::new(FnProvider::new(|req| {
        if req.messages.last().unwrap().text == REPAIR_INSTRUCTION {
            Ok(literal_answer())
        } else {
            Ok("```turtle\nthis is not turtle\n```".to_string())
        }
    }));
    let svc = services(live_gateway(provider.clone()), crime_skg());
    let record = run_instance(&DatasetInstance::text("p", "x"), TaskKind::Detection, &Method::Preset(Preset::NoBlending), &svc);
    assert!(record.error.is_none());
    assert_eq!(record.attempts, 2);
    assert!(!record.verdict.unwrap().metaphorical);
}

#[test]
fn no_graph_preset_skips_the_service() {
    let provider = crime_provider();
    let skg = crime_skg();
    let svc = services(live_gateway(provider), skg.clone());
    let record = run_instance(&DatasetInstance::text("c", CRIME), TaskKind::Detection, &Method::Preset(Preset::NoGraph), &svc);
    assert!(record.skg.is_none());
    assert_eq!(skg.calls.load(Ordering::SeqCst), 0);
    let answer = parse_turtle(&read_fixture("crime_xkg.ttl"), &PrefixMap::defaults()).unwrap();
    assert_eq!(record.xkg_graph().unwrap().triples(), answer.triples());
}

#[test]
fn service_failures_are_recorded_by_stage() {
    let svc = services(live_gateway(crime_provider()), crime_skg());
    let dir = tempfile::tempdir().unwrap();
    let empty_store = Arc::new(RecordingStore::open(dir.path().join("none.json")).unwrap());
    let mut replay = services(replay_gateway(empty_store), crime_skg());
    replay.cache_policy = CachePolicy::Live;
    let r = run_instance(&DatasetInstance::text("c", CRIME), TaskKind::Detection, &Method::Preset(Preset::Lag), &replay);
    let e = r.error.unwrap();
    assert_eq!((e.stage.as_str(), e.code.as_str()), ("llm", "ReplayMiss"));

    let empty = DatasetInstance::text("e", "  ");
    let e = run_instance(&empty, TaskKind::Detection, &Method::Preset(Preset::Lag), &svc).error.unwrap();
    assert_eq!(e.stage, "input");

    let mut miss = services(live_gateway(crime_provider()), crime_skg());
    miss.cache_policy = CachePolicy::ReplayOnly;
    let e = run_instance(&DatasetInstance::text("c", CRIME), TaskKind::Detection, &Method::Preset(Preset::Lag), &miss)
        .error
        .unwrap();
    assert_eq!((e.stage.as_str(), e.code.as_str()), ("skg", "CacheMiss"));
}

#[test]
fn understanding_falls_back_to_domain_properties() {
    let provider = Arc::new(FnProvider::new(|_| {
        Ok("```turtle\n@prefix ex: <http://example.org/> .\n\
            @prefix metanet: <https://w3id.org/framester/metanet/schema/> .\n\
            ex:s metanet:isMetaphorical true ; ex:sourceDomain \"war\" ; ex:targetDomain \"argument\" .\n```"
            .to_string())
    }));
    let svc = services(live_gateway(provider), crime_skg());
    let r = run_instance(
        &DatasetInstance::text("w", "He attacked every weak point in my argument."),
        TaskKind::ConceptualUnderstanding,
        &Method::FewShot(3),
        &svc,
    );
    let p = r.prediction();
    assert_eq!((p.source.as_deref(), p.target.as_deref()), (Some("war"), Some("argument")));
    assert_eq!(r.method, "FewShot-3");
    assert!(r.skg.is_none());
}

#[test]
fn visual_instance_captions_then_prompts() {
    let provider = Arc::new(FnProvider::new(|req| {
        if is_caption_request(req) {
            Ok("A melting clock hangs on a branch.".to_string())
        } else {
            Ok(blend_answer("ice", "time", "melting"))
        }
    }));
    let skg = Arc::new(TableSkg::default());
    let svc = services(live_gateway(provider.clone()), skg.clone());
    let image = std::path::PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("templates/examples/visual_1.png");
    let instance = DatasetInstance {
        image_ref: Some(image),
        modality: blendkg_core::eval::Modality::Image,
        text: None,
        ..DatasetInstance::text("v1", "")
    };
    let r = run_instance(&instance, TaskKind::VisualUnderstanding, &Method::Preset(Preset::NoSent), &svc);
    assert!(r.error.is_none(), "{:?}", r.error);
    assert_eq!(r.input.caption.as_deref(), Some("A melting clock hangs on a branch."));
    assert_eq!(skg.calls.load(Ordering::SeqCst), 1);
    assert_eq!(r.prediction().property.as_deref(), Some("melting"));
    let seen = provider.seen.lock().unwrap();
    let prompt = seen.last().unwrap();
    assert!(!prompt.rendered_text().contains("A melting clock"));
    assert!(!prompt.messages.last().unwrap().images.is_empty());

    let missing = DatasetInstance {
        image_ref: Some("/nonexistent.png".into()),
        ..instance
    };
    let e = run_instance(&missing, TaskKind::VisualUnderstanding, &Method::Preset(Preset::NoSent), &svc).error.unwrap();
    assert_eq!((e.stage.as_str(), e.code.as_str()), ("input", "ImageUnreadable"));
}

fn run_opts(dir: &std::path::Path, parallelism: usize) -> RunOptions {
    RunOptions {
        dir: dir.to_path_buf(),
        dataset_id: "fixture".into(),
        parallelism,
        seed: None,
        save_prompts: true,
        config: None,
    }
}

#[test]
fn dataset_run_is_exactly_once_and_ordered() {
    let dir = tempfile::tempdir().unwrap();
    let data = instances(10);
    let svc = services(live_gateway(crime_provider()), crime_skg());
    let summary = run_dataset(&data, TaskKind::Detection, &Method::Preset(Preset::Lag), &svc, &run_opts(dir.path(), 4)).unwrap();
    assert_eq!(summary.processed, 10);
    assert_eq!(summary.manifest.record_count, 10);
    assert_eq!(summary.manifest.retries.repair_retries, 2);
    let records = load_records(dir.path()).unwrap();
    let ids: Vec<&str> = records.iter().map(|r| r.instance_id.as_str()).collect();
    let expected: Vec<&str> = data.iter().map(|d| d.id.as_str()).collect();
    assert_eq!(ids, expected);
    for r in &records {
        assert!(r.error.is_some() != r.verdict.is_some());
        let hash = r.prompt_hash.as_ref().unwrap();
        assert!(dir.path().join("prompts").join(format!("{hash}.txt")).exists());
    }
    let manifests = std::fs::read_dir(dir.path())
        .unwrap()
        .filter(|e| e.as_ref().unwrap().file_name().to_string_lossy().ends_with(".json"))
        .count();
    assert_eq!(manifests, 1);
}

#[test]
fn resumed_run_only_processes_missing_instances() {
    let dir = tempfile::tempdir().unwrap();
    let data = instances(10);
    let method = Method::Preset(Preset::Lag);
    let first = services(live_gateway(crime_provider()), crime_skg());
    run_dataset(&data[..6], TaskKind::Detection, &method, &first, &run_opts(dir.path(), 2)).unwrap();

    // Simulate a crash mid-write.
    let records = dir.path().join("records.jsonl");
    let mut text = std::fs::read_to_string(&records).unwrap();
    text.push_str("{\"instance_id\": \"s0");
    std::fs::write(&records, text).unwrap();

    let provider = crime_provider();
    let skg = crime_skg();
    let second = services(live_gateway(provider.clone()), skg.clone());
    let summary = run_dataset(&data, TaskKind::Detection, &method, &second, &run_opts(dir.path(), 3)).unwrap();
    assert_eq!((summary.skipped, summary.processed), (6, 4));
    assert_eq!(provider.calls.load(Ordering::SeqCst), 4);
    assert_eq!(skg.calls.load(Ordering::SeqCst), 4);
    let ids: Vec<String> = load_records(dir.path()).unwrap().into_iter().map(|r| r.instance_id).collect();
    assert_eq!(ids, data.iter().map(|d| d.id.clone()).collect::<Vec<_>>());

    let other = run_dataset(&data, TaskKind::Detection, &Method::Preset(Preset::NoGraph), &second, &run_opts(dir.path(), 1));
    assert!(other.is_err());
}

#[test]
fn replay_runs_match_across_parallelism() {
    let dir = tempfile::tempdir().unwrap();
    let store_path = dir.path().join("rec.json");
    let data = instances(10);
    let method = Method::Preset(Preset::Lag);
    let store = Arc::new(RecordingStore::open(&store_path).unwrap());
    let rec = Gateway::new(GatewayMode::Record).with_provider(crime_provider()).with_store(store);
    run_dataset(&data, TaskKind::Detection, &method, &services(rec, crime_skg()), &run_opts(&dir.path().join("rec"), 4)).unwrap();

    let mut outputs = Vec::new();
    for p in [1, 4] {
        let store = Arc::new(RecordingStore::open(&store_path).unwrap());
        let svc = services(replay_gateway(store), crime_skg());
        let out = dir.path().join(format!("p{p}"));
        run_dataset(&data, TaskKind::Detection, &method, &svc, &run_opts(&out, p)).unwrap();
        outputs.push(load_records(&out).unwrap().iter().map(|r| r.without_timings()).collect::<Vec<_>>());
    }
    assert_eq!(outputs[0], outputs[1]);
}

#[test]
fn strict_metaphorical_records_carry_a_blend() {
    let svc = services(live_gateway(crime_provider()), crime_skg());
    for inst in instances(6).iter().chain([DatasetInstance::text("c", CRIME)].iter()) {
        let r = run_instance(inst, TaskKind::Detection, &Method::Preset(Preset::Lag), &svc);
        let xkg = r.xkg_graph().unwrap();
        if r.verdict.as_ref().unwrap().metaphorical && validate_xkg(&xkg, Level::Strict).passed {
            assert!(extract_blend(&xkg).is_ok());
            assert!(r.blend.is_some());
        }
        assert!(r.skg_graph().unwrap().is_subgraph_of(&xkg));
    }
}

#[test]
fn blend_answer_stub_is_strict_valid() {
    let text = blend_answer("a", "b", "c");
    let body = text.trim_start_matches("```turtle").trim_end_matches("```");
    let g = parse_turtle(body, &PrefixMap::defaults()).unwrap();
    let report = validate_xkg(&g, Level::Strict);
    assert!(report.passed, "{:?}", report.findings);
    let _ = stubs::MODEL;
}
