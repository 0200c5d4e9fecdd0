//! Random graph generation over the supported Turtle subset.

use blendkg_core::rdf::{Graph, Literal, Term, Triple};
use proptest::prelude::*;

fn namespace() -> impl Strategy<Value = String> {
    prop_oneof![
        Just("http://example.org/".to_string()),
        Just("https://w3id.org/blending/ontology#".to_string()),
        Just("http://www.w3.org/2001/XMLSchema#".to_string()),
        "http://h[a-z]{1,4}\\.org/[a-z]{0,3}/?".prop_map(String::from),
    ]
}

fn iri() -> impl Strategy<Value = Term> {
    (namespace(), "[A-Za-z0-9_.~%-]{0,8}").prop_map(|(n, l)| Term::Iri(format!("{n}{l}")))
}

fn blank() -> impl Strategy<Value = Term> {
    "[a-z][a-z0-9_]{0,5}".prop_map(Term::Blank)
}

fn literal() -> impl Strategy<Value = Term> {
    let xsd = "http://www.w3.org/2001/XMLSchema#";
    prop_oneof![
        any::<String>().prop_map(|s| Term::Literal(Literal::simple(s))),
        ("\\PC{0,10}", "[a-z]{2}(-[A-Z]{2})?").prop_map(|(s, l)| Term::Literal(Literal::lang(s, l))),
        any::<i64>().prop_map(move |i| Term::Literal(Literal::typed(i.to_string(), format!("{xsd}integer")))),
        any::<bool>().prop_map(|b| Term::Literal(Literal::boolean(b))),
        ("[ -~]{0,6}", iri()).prop_map(|(s, dt)| {
            Term::Literal(Literal::typed(s, dt.as_iri().unwrap().to_string()))
        }),
    ]
}

pub fn graph_strategy() -> impl Strategy<Value = Graph> {
    let subject = prop_oneof![3 => iri(), 1 => blank()];
    let object = prop_oneof![2 => iri(), 1 => blank(), 2 => literal()];
    proptest::collection::vec((subject, iri(), object), 0..16).prop_map(|ts| {
        let mut g = Graph::with_default_prefixes();
        for (s, p, o) in ts {
            g.insert(Triple::new(s, p, o).unwrap());
        }
        g
    })
}
