use serde::{Deserialize, Serialize};

use super::validate::{
    blendable_linked, boolean_value, objects_of, structural_findings, typed_nodes, Severity, VerdictScan,
};
use super::vocab;
use super::OntologyError;
use crate::rdf::{Graph, Term};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledNode {
    pub node: Term,
    pub label: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BlendRole {
    Source,
    Target,
}

/// A role of a Blendable frame.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Role {
    pub node: Term,
    pub label: String,
    /// The Blending role this one inherits from, if any.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inherits_from: Option<Term>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Blendable {
    pub node: Term,
    pub label: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub annotated_role: Option<BlendRole>,
    pub roles: Vec<Role>,
}

/// A Blended component and the Blendable it draws its role from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InheritedRole {
    pub role: Term,
    pub from: Term,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source_blendable: Option<Term>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlendedSpace {
    pub node: Term,
    pub label: String,
    pub inherited_roles: Vec<InheritedRole>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlendStructure {
    pub blending: LabeledNode,
    /// Exactly two entries. Source first when the graph annotates roles.
    pub blendables: Vec<Blendable>,
    pub blended: BlendedSpace,
    pub lens: Option<LabeledNode>,
    pub attitude: Option<LabeledNode>,
    pub conceptualiser: Option<Term>,
    pub blending_property: Option<String>,
    pub metaphorical: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MetaphoricityVerdict {
    pub metaphorical: bool,
    pub evidence_node: Term,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source_label: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_label: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub property_label: Option<String>,
}

/// Label from `rdfs:label` (first in sorted order), else from the local name.
pub fn label_of(g: &Graph, node: &Term) -> String {
    objects_of(g, node, vocab::RDFS_LABEL)
        .into_iter()
        .find_map(|o| o.as_literal().map(|l| l.lexical.trim().to_string()))
        .unwrap_or_else(|| local_label(node))
}

/// De-camel-cased, lower-cased local name: `CrimeAsDisease` → "crime as disease".
/// FRED-style numeric suffixes (`crime_1`) are dropped.
pub fn local_label(node: &Term) -> String {
    let raw = match node {
        Term::Iri(v) => v.rsplit(['#', '/']).next().unwrap_or(v),
        Term::Blank(l) => l.as_str(),
        Term::Literal(l) => l.lexical.as_str(),
    };
    let raw = match raw.rsplit_once('_') {
        Some((head, tail)) if !head.is_empty() && tail.chars().all(|c| c.is_ascii_digit()) => head,
        _ => raw,
    };
    let mut words: Vec<String> = Vec::new();
    let mut current = String::new();
    let chars: Vec<char> = raw.chars().collect();
    for (i, &c) in chars.iter().enumerate() {
        if matches!(c, '_' | '-' | '.' | ' ') {
            if !current.is_empty() {
                words.push(std::mem::take(&mut current));
            }
            continue;
        }
        let boundary = c.is_uppercase()
            && i > 0
            && (chars[i - 1].is_lowercase()
                || chars[i - 1].is_ascii_digit()
                || chars.get(i + 1).is_some_and(|n| n.is_lowercase()) && chars[i - 1].is_uppercase());
        if boundary && !current.is_empty() {
            words.push(std::mem::take(&mut current));
        }
        current.extend(c.to_lowercase());
    }
    if !current.is_empty() {
        words.push(current);
    }
    words.join(" ")
}

fn labeled(g: &Graph, node: &Term) -> LabeledNode {
    LabeledNode {
        node: node.clone(),
        label: label_of(g, node),
    }
}

fn annotated_role(g: &Graph, node: &Term) -> Option<BlendRole> {
    objects_of(g, node, vocab::HAS_BLENDABLE_ROLE)
        .into_iter()
        .find_map(|o| match o.as_literal()?.lexical.trim().to_ascii_lowercase().as_str() {
            "source" => Some(BlendRole::Source),
            "target" => Some(BlendRole::Target),
            _ => None,
        })
}

pub fn extract_blend(g: &Graph) -> Result<BlendStructure, OntologyError> {
    let mut findings = Vec::new();
    structural_findings(g, &mut findings);
    if let Some(f) = findings.iter().find(|f| f.severity == Severity::Error) {
        return Err(OntologyError::StructureError(f.code));
    }

    let blendable_nodes = typed_nodes(g, vocab::BLENDABLE);
    let blendings = typed_nodes(g, vocab::BLENDING);
    let blendeds = typed_nodes(g, vocab::BLENDED);

    // Prefer the Blending linked to both inputs and enabling a Blended.
    let score = |bl: &Term| {
        let links = blendable_nodes.iter().filter(|b| blendable_linked(g, b, bl)).count();
        let enables = objects_of(g, bl, vocab::ENABLES_BLENDING)
            .iter()
            .any(|o| blendeds.contains(o));
        (links, enables)
    };
    let blending = *blendings
        .iter()
        .rev()
        .max_by_key(|bl| score(bl))
        .expect("structural check guarantees a Blending");
    let blending_roles = objects_of(g, blending, vocab::BLENDING_COMPONENT);

    let mut blendables: Vec<Blendable> = blendable_nodes
        .iter()
        .map(|b| Blendable {
            node: (*b).clone(),
            label: label_of(g, b),
            annotated_role: annotated_role(g, b),
            roles: objects_of(g, b, vocab::BLENDABLE_COMPONENT)
                .into_iter()
                .map(|r| Role {
                    node: r.clone(),
                    label: label_of(g, r),
                    inherits_from: objects_of(g, r, vocab::INHERITS_ROLE_FROM)
                        .into_iter()
                        .find(|t| blending_roles.contains(t))
                        .cloned(),
                })
                .collect(),
        })
        .collect();
    order_blendables(&mut blendables);

    let enabled = objects_of(g, blending, vocab::ENABLES_BLENDING);
    let blended_node = *blendeds
        .iter()
        .find(|b| enabled.contains(b))
        .unwrap_or(&blendeds[0]);
    let inherited_roles = objects_of(g, blended_node, vocab::BLENDED_COMPONENT)
        .into_iter()
        .flat_map(|role| {
            objects_of(g, role, vocab::INHERITS_ROLE_FROM)
                .into_iter()
                .map(|from| InheritedRole {
                    role: role.clone(),
                    from: from.clone(),
                    source_blendable: blendables
                        .iter()
                        .find(|b| &b.node == from || b.roles.iter().any(|r| &r.node == from))
                        .map(|b| b.node.clone()),
                })
        })
        .collect();

    let blending = labeled(g, blending);
    let first = |class| typed_nodes(g, class).first().map(|n| labeled(g, n));
    Ok(BlendStructure {
        blending_property: Some(blending.label.clone()).filter(|l| !l.is_empty()),
        blending,
        blendables,
        blended: BlendedSpace {
            node: blended_node.clone(),
            label: label_of(g, blended_node),
            inherited_roles,
        },
        lens: first(vocab::LENS),
        attitude: first(vocab::ATTITUDE),
        conceptualiser: typed_nodes(g, vocab::CONCEPTUALISER).first().map(|n| (*n).clone()),
        metaphorical: VerdictScan::new(g).agreed().unwrap_or(false),
    })
}

/// Puts the source first when either Blendable carries a role annotation.
fn order_blendables(blendables: &mut [Blendable]) {
    let rank = |b: &Blendable| match b.annotated_role {
        Some(BlendRole::Source) => 0,
        None => 1,
        Some(BlendRole::Target) => 2,
    };
    blendables.sort_by_key(rank);
}

/// (source, target) frame labels.
pub fn source_target(b: &BlendStructure) -> Result<(String, String), OntologyError> {
    let [first, second] = b.blendables.as_slice() else {
        return Err(OntologyError::StructureError(super::FindingCode::BlendableCount));
    };
    if first.label.is_empty() || second.label.is_empty() {
        return Err(OntologyError::MissingLabels);
    }
    let swapped = matches!(
        (first.annotated_role, second.annotated_role),
        (Some(BlendRole::Target), _) | (None, Some(BlendRole::Source))
    );
    if swapped {
        Ok((second.label.clone(), first.label.clone()))
    } else {
        Ok((first.label.clone(), second.label.clone()))
    }
}

pub fn extract_verdict(g: &Graph) -> Result<MetaphoricityVerdict, OntologyError> {
    let scan = VerdictScan::new(g);
    let Some(&(evidence, _)) = scan.assertions.first() else {
        return Err(OntologyError::NoVerdict);
    };
    let mut values = Vec::new();
    for (_, object) in &scan.assertions {
        match boolean_value(object) {
            Some(v) => values.push(v),
            None => return Err(OntologyError::NonBooleanVerdict(object.to_string())),
        }
    }
    if values.iter().any(|v| *v != values[0]) {
        return Err(OntologyError::AmbiguousVerdict);
    }
    let metaphorical = values[0];
    let mut verdict = MetaphoricityVerdict {
        metaphorical,
        evidence_node: evidence.clone(),
        source_label: None,
        target_label: None,
        property_label: None,
    };
    if metaphorical {
        if let Ok(blend) = extract_blend(g) {
            if let Ok((source, target)) = source_target(&blend) {
                verdict.source_label = Some(source);
                verdict.target_label = Some(target);
            }
            verdict.property_label = blend.blending_property;
        }
    }
    Ok(verdict)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rdf::{parse_turtle, PrefixMap};

    fn graph(text: &str) -> Graph {
        parse_turtle(text, &PrefixMap::defaults()).unwrap()
    }

    #[test]
    fn local_labels() {
        let t = |s: &str| local_label(&Term::Iri(format!("http://example.org/{s}")));
        assert_eq!(t("Internalization"), "internalization");
        assert_eq!(t("CrimeAsDisease"), "crime as disease");
        assert_eq!(t("crime_1"), "crime");
        assert_eq!(t("HTTPServer"), "http server");
        assert_eq!(t("public_health-lens"), "public health lens");
    }

    #[test]
    fn verdicts() {
        assert!(extract_verdict(&graph("ex:s metanet:isMetaphorical true .")).unwrap().metaphorical);
        let v = extract_verdict(&graph("ex:s metanet:isMetaphorical false .")).unwrap();
        assert!(!v.metaphorical);
        assert_eq!(v.evidence_node, Term::Iri("http://example.org/s".into()));
        assert_eq!(
            extract_verdict(&graph("ex:s metanet:isMetaphorical true . ex:t metanet:isMetaphorical false .")),
            Err(OntologyError::AmbiguousVerdict)
        );
        assert_eq!(extract_verdict(&graph("ex:s ex:p ex:o .")), Err(OntologyError::NoVerdict));
    }

    #[test]
    fn unannotated_blendables_fall_back_to_sorted_order() {
        let g = graph(
            "ex:G a bl:Blending . ex:B a bl:Blendable ; bl:inheritsRoleFrom ex:G .
             ex:A a bl:Blendable ; bl:inheritsRoleFrom ex:G .
             ex:M a bl:Blended . ex:G bl:enablesBlending ex:M .
             ex:L a cp:Lens . ex:T a cp:Attitude . ex:s metanet:isMetaphorical true .",
        );
        let blend = extract_blend(&g).unwrap();
        assert_eq!(source_target(&blend).unwrap(), ("a".to_string(), "b".to_string()));
    }
}
