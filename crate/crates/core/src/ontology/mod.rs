//! Validation of extended graphs against the Blending Ontology and
//! extraction of verdicts and blend structure.

mod extract;
mod validate;
pub mod vocab;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use extract::{
    extract_blend, extract_verdict, label_of, local_label, source_target, BlendRole, BlendStructure, Blendable,
    InheritedRole, LabeledNode, MetaphoricityVerdict, Role,
};
pub use validate::{validate_xkg, Finding, FindingCode, Level, Severity, ValidationReport};

#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize, Deserialize)]
pub enum OntologyError {
    #[error("graph carries no metanet:isMetaphorical assertion")]
    NoVerdict,
    #[error("graph carries conflicting metanet:isMetaphorical assertions")]
    AmbiguousVerdict,
    #[error("metanet:isMetaphorical value `{0}` is not a boolean")]
    NonBooleanVerdict(String),
    #[error("blend structure invalid: {0}")]
    StructureError(FindingCode),
    #[error("a blendable has no label")]
    MissingLabels,
}

impl OntologyError {
    pub fn code(&self) -> &'static str {
        match self {
            OntologyError::NoVerdict => "NoVerdict",
            OntologyError::AmbiguousVerdict => "AmbiguousVerdict",
            OntologyError::NonBooleanVerdict(_) => "NonBooleanVerdict",
            OntologyError::StructureError(_) => "StructureError",
            OntologyError::MissingLabels => "MissingLabels",
        }
    }
}
