use std::fmt;

use serde::{Deserialize, Serialize};

use super::vocab::{self, iri};
use crate::rdf::{Graph, Term};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Level {
    Lenient,
    Strict,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Severity {
    Error,
    Warning,
}

/// Stable identifiers for validation findings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum FindingCode {
    NoVerdict,
    MultipleVerdicts,
    NonBooleanVerdict,
    MissingBlending,
    BlendableCount,
    MissingBlended,
    MissingLens,
    MissingAttitude,
    BlendableNotLinked,
    MissingEnablesBlending,
    MissingBlend,
}

impl FindingCode {
    pub fn as_str(self) -> &'static str {
        match self {
            FindingCode::NoVerdict => "NO_VERDICT",
            FindingCode::MultipleVerdicts => "MULTIPLE_VERDICTS",
            FindingCode::NonBooleanVerdict => "NON_BOOLEAN_VERDICT",
            FindingCode::MissingBlending => "MISSING_BLENDING",
            FindingCode::BlendableCount => "BLENDABLE_COUNT",
            FindingCode::MissingBlended => "MISSING_BLENDED",
            FindingCode::MissingLens => "MISSING_LENS",
            FindingCode::MissingAttitude => "MISSING_ATTITUDE",
            FindingCode::BlendableNotLinked => "BLENDABLE_NOT_LINKED",
            FindingCode::MissingEnablesBlending => "MISSING_ENABLES_BLENDING",
            FindingCode::MissingBlend => "MISSING_BLEND",
        }
    }
}

impl fmt::Display for FindingCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Finding {
    pub code: FindingCode,
    pub severity: Severity,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub node: Option<Term>,
    pub message: String,
}

impl fmt::Display for Finding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sev = match self.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        write!(f, "{sev} {}: {}", self.code, self.message)?;
        if let Some(node) = &self.node {
            write!(f, " ({node})")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub level: Level,
    pub passed: bool,
    pub findings: Vec<Finding>,
}

impl ValidationReport {
    pub fn errors(&self) -> impl Iterator<Item = &Finding> {
        self.findings.iter().filter(|f| f.severity == Severity::Error)
    }

    pub fn error_codes(&self) -> Vec<FindingCode> {
        self.errors().map(|f| f.code).collect()
    }
}

/// Reads a verdict literal: `true`/`false` shorthand, `"true"^^xsd:boolean`
/// (also `1`/`0`), or a plain `"true"`.
pub(crate) fn boolean_value(term: &Term) -> Option<bool> {
    let lit = term.as_literal()?;
    if lit.language.is_some() {
        return None;
    }
    let lex = lit.lexical.trim();
    match lit.datatype.as_deref() {
        Some(vocab::XSD_BOOLEAN) => match lex {
            "true" | "1" => Some(true),
            "false" | "0" => Some(false),
            _ => None,
        },
        None if lex.eq_ignore_ascii_case("true") => Some(true),
        None if lex.eq_ignore_ascii_case("false") => Some(false),
        _ => None,
    }
}

/// Subjects typed with `class`, in sorted order.
pub(crate) fn typed_nodes<'g>(g: &'g Graph, class: &str) -> Vec<&'g Term> {
    let mut nodes: Vec<&Term> = g
        .matching(None, Some(&iri(vocab::RDF_TYPE)), Some(&iri(class)))
        .into_iter()
        .map(|t| &t.subject)
        .collect();
    nodes.dedup();
    nodes
}

pub(crate) fn objects_of<'g>(g: &'g Graph, subject: &Term, predicate: &str) -> Vec<&'g Term> {
    g.matching(Some(subject), Some(&iri(predicate)), None)
        .into_iter()
        .map(|t| &t.object)
        .collect()
}

/// True when the Blendable, or one of its roles, inherits from the Blending
/// or one of the Blending's roles.
pub(crate) fn blendable_linked(g: &Graph, blendable: &Term, blending: &Term) -> bool {
    let mut targets = objects_of(g, blending, vocab::BLENDING_COMPONENT);
    targets.push(blending);
    let mut sources = objects_of(g, blendable, vocab::BLENDABLE_COMPONENT);
    sources.push(blendable);
    sources.iter().any(|s| {
        objects_of(g, s, vocab::INHERITS_ROLE_FROM)
            .iter()
            .any(|o| targets.contains(o))
    })
}

pub(crate) struct VerdictScan<'g> {
    /// (subject, object) of every `metanet:isMetaphorical` triple.
    pub assertions: Vec<(&'g Term, &'g Term)>,
}

impl<'g> VerdictScan<'g> {
    pub fn new(g: &'g Graph) -> Self {
        let assertions = g
            .matching(None, Some(&iri(vocab::IS_METAPHORICAL)), None)
            .into_iter()
            .map(|t| (&t.subject, &t.object))
            .collect();
        Self { assertions }
    }

    /// The agreed value when every assertion is boolean and they all agree.
    pub fn agreed(&self) -> Option<bool> {
        let mut values = self.assertions.iter().map(|(_, o)| boolean_value(o));
        let first = values.next()??;
        values.all(|v| v == Some(first)).then_some(first)
    }
}

pub fn validate_xkg(g: &Graph, level: Level) -> ValidationReport {
    let mut findings = Vec::new();
    let mut error = |code, node: Option<&Term>, message: String| {
        findings.push(Finding {
            code,
            severity: Severity::Error,
            node: node.cloned(),
            message,
        })
    };

    let scan = VerdictScan::new(g);
    match scan.assertions.as_slice() {
        [] => error(FindingCode::NoVerdict, None, "no metanet:isMetaphorical assertion".into()),
        [_] => {}
        many => error(
            FindingCode::MultipleVerdicts,
            Some(many[0].0),
            format!("{} metanet:isMetaphorical assertions, expected one", many.len()),
        ),
    }
    for (subject, object) in &scan.assertions {
        if boolean_value(object).is_none() {
            error(
                FindingCode::NonBooleanVerdict,
                Some(subject),
                format!("metanet:isMetaphorical value {object} is not a boolean"),
            );
        }
    }

    if level == Level::Strict && scan.agreed() == Some(true) {
        structural_findings(g, &mut findings);
    }

    let passed = !findings.iter().any(|f| f.severity == Severity::Error);
    ValidationReport {
        level,
        passed,
        findings,
    }
}

/// Blend-shape checks. Checks whose subject nodes are missing are skipped so
/// that one absent element yields one finding.
pub(crate) fn structural_findings(g: &Graph, findings: &mut Vec<Finding>) {
    let mut error = |code, node: Option<&Term>, message: &str| {
        findings.push(Finding {
            code,
            severity: Severity::Error,
            node: node.cloned(),
            message: message.to_string(),
        })
    };
    let blendings = typed_nodes(g, vocab::BLENDING);
    let blendables = typed_nodes(g, vocab::BLENDABLE);
    let blendeds = typed_nodes(g, vocab::BLENDED);

    if blendings.is_empty() {
        error(FindingCode::MissingBlending, None, "no node typed bl:Blending");
    }
    if blendables.len() != 2 {
        let msg = format!("{} nodes typed bl:Blendable, expected 2", blendables.len());
        error(FindingCode::BlendableCount, None, &msg);
    }
    if blendeds.is_empty() {
        error(FindingCode::MissingBlended, None, "no node typed bl:Blended");
    }
    if typed_nodes(g, vocab::LENS).is_empty() {
        error(FindingCode::MissingLens, None, "no node typed cp:Lens");
    }
    if typed_nodes(g, vocab::ATTITUDE).is_empty() {
        error(FindingCode::MissingAttitude, None, "no node typed cp:Attitude");
    }
    if !blendings.is_empty() {
        for b in &blendables {
            if !blendings.iter().any(|bl| blendable_linked(g, b, bl)) {
                error(
                    FindingCode::BlendableNotLinked,
                    Some(b),
                    "blendable has no bl:inheritsRoleFrom path to a bl:Blending",
                );
            }
        }
        if !blendeds.is_empty() {
            let enabled = blendings.iter().any(|bl| {
                objects_of(g, bl, vocab::ENABLES_BLENDING)
                    .iter()
                    .any(|o| blendeds.contains(o))
            });
            if !enabled {
                error(
                    FindingCode::MissingEnablesBlending,
                    None,
                    "no bl:enablesBlending edge from a bl:Blending to a bl:Blended",
                );
            }
        }
    }
    if typed_nodes(g, vocab::BLEND).is_empty() {
        findings.push(Finding {
            code: FindingCode::MissingBlend,
            severity: Severity::Warning,
            node: None,
            message: "no node typed bl:Blend".into(),
        });
    }
}
