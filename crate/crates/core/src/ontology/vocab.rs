//! Bundled Blending Ontology and Cognitive Perspectivisation terms.

use crate::rdf::{Graph, Term};

pub const BLEND: &str = "https://w3id.org/blending/ontology#Blend";
pub const BLENDABLE: &str = "https://w3id.org/blending/ontology#Blendable";
pub const BLENDED: &str = "https://w3id.org/blending/ontology#Blended";
pub const BLENDING: &str = "https://w3id.org/blending/ontology#Blending";
pub const BLENDABLE_COMPONENT: &str = "https://w3id.org/blending/ontology#blendableComponent";
pub const BLENDED_COMPONENT: &str = "https://w3id.org/blending/ontology#blendedComponent";
pub const BLENDING_COMPONENT: &str = "https://w3id.org/blending/ontology#blendingComponent";
pub const ENABLES_BLENDING: &str = "https://w3id.org/blending/ontology#enablesBlending";
pub const INHERITS_ROLE_FROM: &str = "https://w3id.org/blending/ontology#inheritsRoleFrom";

pub const LENS: &str = "http://www.ontologydesignpatterns.org/ont/persp/perspectivisation.owl#Lens";
pub const ATTITUDE: &str = "http://www.ontologydesignpatterns.org/ont/persp/perspectivisation.owl#Attitude";
pub const CONCEPTUALISER: &str =
    "http://www.ontologydesignpatterns.org/ont/persp/perspectivisation.owl#Conceptualiser";
pub const CUT: &str = "http://www.ontologydesignpatterns.org/ont/persp/perspectivisation.owl#Cut";

pub const IS_METAPHORICAL: &str = "https://w3id.org/framester/metanet/schema/isMetaphorical";

/// Marks a Blendable as the source or target input space.
pub const HAS_BLENDABLE_ROLE: &str = "http://example.org/hasBlendableRole";

/// Plain domain names attached to the sentence node by understanding answers.
pub const SOURCE_DOMAIN: &str = "http://example.org/sourceDomain";
pub const TARGET_DOMAIN: &str = "http://example.org/targetDomain";

pub const RDF_TYPE: &str = "http://www.w3.org/1999/02/22-rdf-syntax-ns#type";
pub const RDFS_LABEL: &str = "http://www.w3.org/2000/01/rdf-schema#label";
pub const XSD_BOOLEAN: &str = "http://www.w3.org/2001/XMLSchema#boolean";

/// Every ontology term with its CURIE form.
pub const TERMS: &[(&str, &str)] = &[
    ("bl:Blend", BLEND),
    ("bl:Blendable", BLENDABLE),
    ("bl:Blended", BLENDED),
    ("bl:Blending", BLENDING),
    ("bl:blendableComponent", BLENDABLE_COMPONENT),
    ("bl:blendedComponent", BLENDED_COMPONENT),
    ("bl:blendingComponent", BLENDING_COMPONENT),
    ("bl:enablesBlending", ENABLES_BLENDING),
    ("bl:inheritsRoleFrom", INHERITS_ROLE_FROM),
    ("cp:Lens", LENS),
    ("cp:Attitude", ATTITUDE),
    ("cp:Conceptualiser", CONCEPTUALISER),
    ("cp:Cut", CUT),
    ("metanet:isMetaphorical", IS_METAPHORICAL),
];

pub(crate) fn iri(value: &str) -> Term {
    Term::Iri(value.to_string())
}

/// Bundled terms that never occur in a user-supplied ontology graph.
pub fn missing_from(ontology: &Graph) -> Vec<&'static str> {
    let mentioned: std::collections::BTreeSet<&str> = ontology
        .iter()
        .flat_map(|t| [&t.subject, &t.predicate, &t.object])
        .filter_map(Term::as_iri)
        .collect();
    TERMS
        .iter()
        .filter(|(_, iri)| !mentioned.contains(iri))
        .map(|(curie, _)| *curie)
        .collect()
}
