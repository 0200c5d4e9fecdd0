#![allow(dead_code)]

use std::path::PathBuf;

use blendkg_core::ontology::FindingCode;
use blendkg_core::rdf::{parse_turtle, Graph, Literal, PrefixMap, Term, Triple};

pub mod graphs;
pub mod server;
pub mod stubs;

pub fn fixture_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

pub fn read_fixture(name: &str) -> String {
    std::fs::read_to_string(fixture_path(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

pub fn parse_fixture(name: &str) -> Graph {
    parse_turtle(&read_fixture(name), &PrefixMap::defaults()).unwrap()
}

/// Builds a triple from CURIEs; `true`/`false` objects become booleans.
pub fn triple(s: &str, p: &str, o: &str) -> Triple {
    let prefixes = PrefixMap::defaults();
    let expand = |c: &str| Term::Iri(prefixes.expand(c).unwrap());
    let object = match o {
        "true" => Term::Literal(Literal::boolean(true)),
        "false" => Term::Literal(Literal::boolean(false)),
        _ => expand(o),
    };
    Triple::new(expand(s), expand(p), object).unwrap()
}

/// One statement per Strict rule in `crime_xkg.ttl`, with the code its
/// removal must produce.
pub fn crime_rule_deletions() -> Vec<(Triple, FindingCode)> {
    vec![
        (triple("fred:infect_1", "metanet:isMetaphorical", "true"), FindingCode::NoVerdict),
        (triple("ex:Contamination", "rdf:type", "bl:Blending"), FindingCode::MissingBlending),
        (triple("ex:Crime", "rdf:type", "bl:Blendable"), FindingCode::BlendableCount),
        (triple("ex:CrimeAsDisease", "rdf:type", "bl:Blended"), FindingCode::MissingBlended),
        (triple("ex:PublicHealthLens", "rdf:type", "cp:Lens"), FindingCode::MissingLens),
        (triple("ex:Alarm", "rdf:type", "cp:Attitude"), FindingCode::MissingAttitude),
        (
            triple("ex:Pathogen", "bl:inheritsRoleFrom", "ex:Contaminant"),
            FindingCode::BlendableNotLinked,
        ),
        (
            triple("ex:Contamination", "bl:enablesBlending", "ex:CrimeAsDisease"),
            FindingCode::MissingEnablesBlending,
        ),
    ]
}

/// Counts statements in a one-statement-per-line Turtle file without parsing it.
pub fn count_line_statements(text: &str) -> usize {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#') && !l.starts_with("@prefix"))
        .filter(|l| l.ends_with(" ."))
        .count()
}
