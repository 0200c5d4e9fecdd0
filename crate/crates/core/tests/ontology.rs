mod common;

use blendkg_core::ontology::{
    extract_blend, extract_verdict, source_target, validate_xkg, FindingCode, Level, OntologyError,
};
use blendkg_core::rdf::{parse_turtle, Graph, Literal, PrefixMap, Term, Triple};
use common::{crime_rule_deletions, parse_fixture, triple};
use proptest::prelude::*;

#[test]
fn crime_fixture_is_strict_valid() {
    let g = parse_fixture("crime_xkg.ttl");
    let report = validate_xkg(&g, Level::Strict);
    assert!(report.passed, "{:?}", report.findings);
    assert!(report.error_codes().is_empty());
    assert!(report.findings.is_empty());
}

#[test]
fn each_rule_deletion_yields_its_code() {
    let g = parse_fixture("crime_xkg.ttl");
    for (t, code) in crime_rule_deletions() {
        let mut mutant = g.clone();
        assert!(mutant.remove(&t), "fixture lacks {t}");
        let report = validate_xkg(&mutant, Level::Strict);
        assert!(!report.passed);
        assert_eq!(report.error_codes(), vec![code], "deleting {t}");
    }
}

#[test]
fn required_triple_mutations_all_fail() {
    let g = parse_fixture("crime_xkg.ttl");
    let required = [
        triple("ex:Disease", "rdf:type", "bl:Blendable"),
        triple("ex:Disease", "bl:blendableComponent", "ex:Pathogen"),
        triple("ex:Crime", "bl:blendableComponent", "ex:Criminality"),
        triple("ex:Criminality", "bl:inheritsRoleFrom", "ex:Contaminant"),
        triple("ex:Contamination", "bl:blendingComponent", "ex:Contaminant"),
    ];
    for t in crime_rule_deletions().into_iter().map(|(t, _)| t).chain(required) {
        let mut mutant = g.clone();
        assert!(mutant.remove(&t), "fixture lacks {t}");
        assert!(validate_xkg(&mutant, Level::Strict).errors().count() >= 1, "deleting {t}");
    }
}

#[test]
fn crime_blend_extraction() {
    let g = parse_fixture("crime_xkg.ttl");
    let blend = extract_blend(&g).unwrap();
    let mut labels: Vec<_> = blend.blendables.iter().map(|b| b.label.as_str()).collect();
    labels.sort();
    assert_eq!(labels, ["Crime", "Disease"]);
    assert_eq!(blend.blending_property.as_deref(), Some("Contamination"));
    assert_eq!(blend.lens.as_ref().unwrap().label, "public health");
    assert_eq!(blend.attitude.as_ref().unwrap().label, "alarm");
    assert!(blend.metaphorical);
    assert_eq!(source_target(&blend).unwrap(), ("Disease".into(), "Crime".into()));
    let contaminant = triple("ex:a", "ex:b", "ex:Contaminant").object;
    for b in &blend.blendables {
        let inherited: Vec<_> = b.roles.iter().filter_map(|r| r.inherits_from.as_ref()).collect();
        assert_eq!(inherited, vec![&contaminant]);
    }
    assert_eq!(blend.blended.inherited_roles.len(), 2);
    assert!(blend.blended.inherited_roles.iter().all(|r| r.source_blendable.is_some()));

    let verdict = extract_verdict(&g).unwrap();
    assert!(verdict.metaphorical);
    assert_eq!(verdict.evidence_node, triple("fred:infect_1", "ex:p", "ex:o").subject);
    assert_eq!(verdict.source_label.as_deref(), Some("Disease"));
    assert_eq!(verdict.target_label.as_deref(), Some("Crime"));
    assert_eq!(verdict.property_label.as_deref(), Some("Contamination"));
}

#[test]
fn ideas_are_food() {
    let g = parse_fixture("ideas_food_xkg.ttl");
    assert!(validate_xkg(&g, Level::Strict).passed);
    let blend = extract_blend(&g).unwrap();
    assert_eq!(blend.blending_property.as_deref(), Some("internalization"));
    assert_eq!(source_target(&blend).unwrap(), ("Food".into(), "Ideas".into()));
}

#[test]
fn swapped_role_annotations_swap_labels() {
    let text = std::fs::read_to_string(common::fixture_path("crime_xkg.ttl"))
        .unwrap()
        .replace("\"source\"", "\"__tmp\"")
        .replace("\"target\"", "\"source\"")
        .replace("\"__tmp\"", "\"target\"");
    let g = parse_turtle(&text, &PrefixMap::defaults()).unwrap();
    let blend = extract_blend(&g).unwrap();
    assert_eq!(source_target(&blend).unwrap(), ("Crime".into(), "Disease".into()));
}

#[test]
fn three_blendables_is_a_structure_error() {
    let mut g = parse_fixture("crime_xkg.ttl");
    g.insert(triple("ex:Weather", "rdf:type", "bl:Blendable"));
    assert_eq!(
        extract_blend(&g),
        Err(OntologyError::StructureError(FindingCode::BlendableCount))
    );
}

#[test]
fn blend_node_absence_is_only_a_warning() {
    let mut g = parse_fixture("crime_xkg.ttl");
    g.remove(&triple("ex:CrimeIsDisease", "rdf:type", "bl:Blend"));
    let report = validate_xkg(&g, Level::Strict);
    assert!(report.passed);
    assert_eq!(report.findings.len(), 1);
    assert_eq!(report.findings[0].code, FindingCode::MissingBlend);
}

/// Emits a well-formed blend graph with random names and role counts.
fn blend_graph() -> impl Strategy<Value = Graph> {
    (
        "[A-Z][a-z]{2,8}",
        proptest::collection::vec("[A-Z][a-z]{2,6}", 2..3),
        1usize..4,
        any::<bool>(),
        any::<bool>(),
    )
        .prop_map(|(blending, frames, roles, frame_level, annotate)| {
            let ex = |s: &str| Term::Iri(format!("http://example.org/{s}"));
            let c = |s: &str| Term::Iri(PrefixMap::defaults().expand(s).unwrap());
            let mut g = Graph::with_default_prefixes();
            let mut add = |s: Term, p: Term, o: Term| {
                g.insert(Triple::new(s, p, o).unwrap());
            };
            let blending_node = ex(&format!("G{blending}"));
            add(blending_node.clone(), c("rdf:type"), c("bl:Blending"));
            for r in 0..roles {
                add(blending_node.clone(), c("bl:blendingComponent"), ex(&format!("G{blending}R{r}")));
            }
            let blended = ex(&format!("M{blending}"));
            add(blended.clone(), c("rdf:type"), c("bl:Blended"));
            add(blending_node.clone(), c("bl:enablesBlending"), blended.clone());
            for (i, frame) in frames.iter().enumerate() {
                let node = ex(&format!("F{i}{frame}"));
                add(node.clone(), c("rdf:type"), c("bl:Blendable"));
                if annotate {
                    let role = if i == 0 { "source" } else { "target" };
                    add(node.clone(), c("ex:hasBlendableRole"), Term::Literal(Literal::simple(role)));
                }
                if frame_level {
                    add(node.clone(), c("bl:inheritsRoleFrom"), blending_node.clone());
                } else {
                    for r in 0..roles {
                        let role = ex(&format!("F{i}{frame}R{r}"));
                        add(node.clone(), c("bl:blendableComponent"), role.clone());
                        add(role, c("bl:inheritsRoleFrom"), ex(&format!("G{blending}R{r}")));
                    }
                }
            }
            add(ex("L"), c("rdf:type"), c("cp:Lens"));
            add(ex("A"), c("rdf:type"), c("cp:Attitude"));
            add(ex("s"), c("metanet:isMetaphorical"), Term::Literal(Literal::boolean(true)));
            g
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn generated_blends_extract(g in blend_graph()) {
        let strict = validate_xkg(&g, Level::Strict);
        prop_assert!(strict.passed, "{:?}", strict.findings);
        prop_assert!(validate_xkg(&g, Level::Lenient).passed);
        let blend = extract_blend(&g).unwrap();
        prop_assert_eq!(blend.blendables.len(), 2);
        prop_assert!(source_target(&blend).is_ok());
        prop_assert!(extract_verdict(&g).unwrap().metaphorical);
    }

    #[test]
    fn strict_pass_implies_lenient_pass(g in blend_graph(), drop in any::<prop::sample::Index>()) {
        let mut mutant = g.clone();
        let victim = drop.get(&g.iter().cloned().collect::<Vec<_>>()).clone();
        mutant.remove(&victim);
        if validate_xkg(&mutant, Level::Strict).passed {
            prop_assert!(validate_xkg(&mutant, Level::Lenient).passed);
        }
    }
}
