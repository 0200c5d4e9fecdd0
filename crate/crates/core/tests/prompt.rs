mod common;

use std::collections::BTreeSet;

use blendkg_core::llm::{extract_turtle_block, ChatRequest, ImageBlob};
use blendkg_core::ontology::{extract_blend, extract_verdict, source_target, validate_xkg, Level};
use blendkg_core::prompt::{PromptEngine, Preset, TaskKind};
use blendkg_core::rdf::{parse_turtle, serialize_turtle_minimal, PrefixMap};
use common::parse_fixture;

const ELEMENTS: [&str; 6] = [
    "bl:Blending",
    "bl:Blendable",
    "bl:Blended",
    "cp:Attitude",
    "cp:Lens",
    "metanet:isMetaphorical",
];
const SENTENCE: &str = "Crime has infected communities everywhere";

fn text(req: &ChatRequest) -> String {
    req.messages.iter().map(|m| m.text.as_str()).collect::<Vec<_>>().join("\n")
}

fn tokens(s: &str) -> BTreeSet<&str> {
    s.split_whitespace().collect()
}

fn engine() -> PromptEngine {
    PromptEngine::builtin("test-model")
}

fn render(task: TaskKind, preset: Preset) -> String {
    let skg = parse_fixture("crime_skg.ttl");
    let req = engine()
        .build_text_prompt(task, SENTENCE, Some(&skg), &preset.config())
        .unwrap();
    text(&req)
}

#[test]
fn rendering_is_deterministic() {
    let a = render(TaskKind::Detection, Preset::Lag);
    let b = render(TaskKind::Detection, Preset::Lag);
    assert_eq!(a, b);
    let skg = parse_fixture("crime_skg.ttl");
    let cfg = Preset::Lag.config();
    let r1 = engine().build_text_prompt(TaskKind::Detection, SENTENCE, Some(&skg), &cfg).unwrap();
    let r2 = engine().build_text_prompt(TaskKind::Detection, SENTENCE, Some(&skg), &cfg).unwrap();
    assert_eq!(r1.key(), r2.key());
    assert_eq!(r1.temperature, 0.0);
}

#[test]
fn required_elements_by_preset() {
    for task in [TaskKind::Detection, TaskKind::ConceptualUnderstanding] {
        let lag = render(task, Preset::Lag);
        for e in ELEMENTS {
            assert!(lag.contains(e), "LAG lacks {e}");
        }
        let no_blending = render(task, Preset::NoBlending);
        let present: Vec<_> = ELEMENTS.iter().filter(|e| no_blending.contains(*e)).collect();
        assert_eq!(present, [&"metanet:isMetaphorical"]);
        assert!(!no_blending.contains("bl:"));
    }
}

#[test]
fn no_graph_prompt_carries_no_skg() {
    let skg = parse_fixture("crime_skg.ttl");
    let prompt = render(TaskKind::Detection, Preset::NoGraph);
    let serialized = serialize_turtle_minimal(&skg);
    for line in serialized.lines().filter(|l| !l.trim().is_empty() && !l.starts_with("@prefix")) {
        assert!(!prompt.contains(line.trim()), "NoGraph prompt contains `{line}`");
    }
    assert!(!prompt.contains("fred:"));
    let lag = render(TaskKind::Detection, Preset::Lag);
    assert!(lag.contains("fred:crime_1"));
}

#[test]
fn lag_tokens_cover_both_ablations() {
    for task in [TaskKind::Detection, TaskKind::ConceptualUnderstanding] {
        let lag = render(task, Preset::Lag);
        let no_blending = render(task, Preset::NoBlending);
        let no_graph = render(task, Preset::NoGraph);
        let lag_tokens = tokens(&lag);
        let union: BTreeSet<&str> = tokens(&no_blending).union(&tokens(&no_graph)).copied().collect();
        let missing: Vec<_> = union.difference(&lag_tokens).collect();
        assert!(missing.is_empty(), "missing from LAG: {missing:?}");
        assert!(lag.len() > no_blending.len() && lag.len() > no_graph.len());
    }
}

#[test]
fn graph_preset_without_graph_is_a_config_error() {
    let err = engine().build_text_prompt(TaskKind::Detection, SENTENCE, None, &Preset::Lag.config());
    assert!(err.is_err());
    assert!(engine()
        .build_text_prompt(TaskKind::Detection, SENTENCE, None, &Preset::NoGraph.config())
        .is_ok());
}

#[test]
fn target_word_clause() {
    let skg = parse_fixture("crime_skg.ttl");
    let mut cfg = Preset::Lag.config();
    cfg.target_word = Some("infected".into());
    let prompt = text(&engine().build_text_prompt(TaskKind::Detection, SENTENCE, Some(&skg), &cfg).unwrap());
    assert!(prompt.contains("Focus on the word \"infected\"."));
    assert!(!render(TaskKind::Detection, Preset::Lag).contains("Focus on the word"));
}

#[test]
fn worked_examples_are_valid_graphs() {
    let prefixes = PrefixMap::defaults();
    let lag = render(TaskKind::Detection, Preset::Lag);
    let start = lag.find("An example output graph").unwrap();
    let block = extract_turtle_block(&lag[start..], &prefixes).unwrap();
    let g = parse_turtle(&block, &PrefixMap::empty()).unwrap();
    assert!(validate_xkg(&g, Level::Strict).passed);
    let blend = extract_blend(&g).unwrap();
    assert_eq!(source_target(&blend).unwrap(), ("eating".into(), "news".into()));

    let plain = render(TaskKind::Detection, Preset::NoBlending);
    let start = plain.find("An example output graph").unwrap();
    let block = extract_turtle_block(&plain[start..], &prefixes).unwrap();
    let g = parse_turtle(&block, &PrefixMap::empty()).unwrap();
    assert!(validate_xkg(&g, Level::Lenient).passed);
}

#[test]
fn bank_answers_agree_with_their_annotations() {
    let bank = engine().bank().clone();
    for ex in &bank.fewshot {
        let g = parse_turtle(&ex.answer, &PrefixMap::empty()).unwrap();
        assert_eq!(extract_verdict(&g).unwrap().metaphorical, ex.metaphorical, "{}", ex.sentence);
    }
    for ex in &bank.visual {
        let g = parse_turtle(&ex.answer, &PrefixMap::empty()).unwrap();
        assert!(validate_xkg(&g, Level::Strict).passed);
        let v = extract_verdict(&g).unwrap();
        assert_eq!(v.source_label.as_deref(), Some(ex.source.as_str()));
        assert_eq!(v.target_label.as_deref(), Some(ex.target.as_str()));
        assert_eq!(v.property_label, ex.property);
    }
}

fn query_image() -> ImageBlob {
    ImageBlob {
        mime: "image/png".into(),
        data: std::fs::read(concat!(env!("CARGO_MANIFEST_DIR"), "/templates/examples/visual_1.png")).unwrap(),
    }
}

#[test]
fn visual_presets_select_channels() {
    let e = engine();
    let skg = parse_fixture("crime_skg.ttl");
    let caption = "A QUERY CAPTION about a jet shoe";
    let image = query_image();

    let no_sent = e
        .build_visual_prompt(Some(&image), Some(caption), Some(&skg), &e.preset_config(Preset::NoSent))
        .unwrap();
    let last = no_sent.messages.last().unwrap();
    assert_eq!(last.images.len(), 1);
    assert!(!text(&no_sent).contains(caption));
    assert!(!text(&no_sent).contains("Accompanying description"));

    let no_img = e
        .build_visual_prompt(None, Some(caption), Some(&skg), &e.preset_config(Preset::NoImg))
        .unwrap();
    assert!(no_img.messages.iter().all(|m| m.images.is_empty()));
    assert!(text(&no_img).contains(caption));
    assert!(text(&no_img).contains("fred:crime_1"));

    let both = e
        .build_visual_prompt(Some(&image), Some(caption), Some(&skg), &e.preset_config(Preset::SentImg))
        .unwrap();
    assert_eq!(both.messages.iter().map(|m| m.images.len()).sum::<usize>(), 4);
    assert!(text(&both).contains(caption));
    for word in ["source", "target", "property"] {
        assert!(text(&both).contains(word));
    }
}

#[test]
fn visual_prompt_requires_three_examples() {
    let e = engine();
    let mut cfg = e.preset_config(Preset::SentImg);
    cfg.few_shot.truncate(2);
    let image = query_image();
    let skg = parse_fixture("crime_skg.ttl");
    assert!(e.build_visual_prompt(Some(&image), Some("c"), Some(&skg), &cfg).is_err());
    let mut cfg = e.preset_config(Preset::SentImg);
    cfg.include_image = false;
    cfg.include_sentence = false;
    assert!(e.build_visual_prompt(Some(&image), Some("c"), Some(&skg), &cfg).is_err());
}

fn example_blocks(req: &ChatRequest) -> Vec<String> {
    let t = text(req);
    // Each block runs from its heading to the closing fence.
    t.match_indices("Example ")
        .filter(|(i, _)| *i == 0 || t[..*i].ends_with("\n\n"))
        .map(|(i, _)| {
            let end = t[i..].find("\n```\n").map(|e| i + e + 4).unwrap_or(t.len());
            t[i..end].to_string()
        })
        .collect()
}

#[test]
fn fewshot_baselines() {
    let e = engine();
    let zero = e.build_fewshot_baseline(SENTENCE, 0).unwrap();
    assert!(example_blocks(&zero).is_empty());
    assert_eq!(example_blocks(&e.build_fewshot_baseline(SENTENCE, 3).unwrap()).len(), 3);
    let six = example_blocks(&e.build_fewshot_baseline(SENTENCE, 6).unwrap());
    let twelve = example_blocks(&e.build_fewshot_baseline(SENTENCE, 12).unwrap());
    assert_eq!(twelve.len(), 12);
    assert_eq!(&twelve[..6], &six[..]);
    let plain = text(&zero);
    assert!(!plain.contains("bl:") && !plain.contains("fred:"));
    assert!(e.build_fewshot_baseline(SENTENCE, 13).is_err());
}
