use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::RdfError;

/// Namespace IRIs bound by default.
pub mod ns {
    pub const BL: &str = "https://w3id.org/blending/ontology#";
    pub const CP: &str = "http://www.ontologydesignpatterns.org/ont/persp/perspectivisation.owl#";
    pub const METANET: &str = "https://w3id.org/framester/metanet/schema/";
    pub const RDF: &str = "http://www.w3.org/1999/02/22-rdf-syntax-ns#";
    pub const RDFS: &str = "http://www.w3.org/2000/01/rdf-schema#";
    pub const OWL: &str = "http://www.w3.org/2002/07/owl#";
    pub const XSD: &str = "http://www.w3.org/2001/XMLSchema#";
    pub const EX: &str = "http://example.org/";
    /// Default base for FRED-style instance IRIs.
    pub const FRED: &str = "http://www.ontologydesignpatterns.org/ont/fred/domain.owl#";
}

/// Prefix name to namespace IRI. Ordered so that serialization is stable.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct PrefixMap {
    entries: BTreeMap<String, String>,
}

impl PrefixMap {
    pub fn empty() -> Self {
        Self::default()
    }

    /// The default bindings, with `fred:` bound to [`ns::FRED`].
    pub fn defaults() -> Self {
        Self::defaults_with_base(ns::FRED)
    }

    /// The default bindings with a caller-chosen namespace for instance IRIs.
    pub fn defaults_with_base(fred_base: &str) -> Self {
        let mut m = Self::empty();
        for (p, n) in [
            ("bl", ns::BL),
            ("cp", ns::CP),
            ("metanet", ns::METANET),
            ("rdf", ns::RDF),
            ("rdfs", ns::RDFS),
            ("owl", ns::OWL),
            ("xsd", ns::XSD),
            ("ex", ns::EX),
            ("fred", fred_base),
        ] {
            m.insert(p, n);
        }
        m
    }

    pub fn insert(&mut self, prefix: impl Into<String>, namespace: impl Into<String>) -> Option<String> {
        self.entries.insert(prefix.into(), namespace.into())
    }

    pub fn get(&self, prefix: &str) -> Option<&str> {
        self.entries.get(prefix).map(String::as_str)
    }

    pub fn remove(&mut self, prefix: &str) -> Option<String> {
        self.entries.remove(prefix)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.entries.iter().map(|(p, n)| (p.as_str(), n.as_str()))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn contains_namespace(&self, namespace: &str) -> bool {
        self.entries.values().any(|n| n == namespace)
    }

    /// Expands `prefix:local`. The local part is taken verbatim.
    pub fn expand(&self, curie: &str) -> Result<String, RdfError> {
        let (prefix, local) = curie
            .split_once(':')
            .ok_or_else(|| RdfError::InvalidTerm(format!("not a CURIE: `{curie}`")))?;
        let namespace = self
            .get(prefix)
            .ok_or_else(|| RdfError::UnknownPrefix(prefix.to_string()))?;
        Ok(format!("{namespace}{local}"))
    }

    /// Compacts an IRI against the longest matching namespace whose
    /// remainder is a plain local name. Ties go to the smaller prefix name.
    pub fn compact(&self, iri: &str) -> Option<String> {
        self.entries
            .iter()
            .filter_map(|(p, n)| {
                let local = iri.strip_prefix(n.as_str())?;
                is_plain_local(local).then_some((n.len(), p, local))
            })
            .max_by(|a, b| a.0.cmp(&b.0).then_with(|| b.1.cmp(a.1)))
            .map(|(_, p, local)| format!("{p}:{local}"))
    }
}

impl FromIterator<(String, String)> for PrefixMap {
    fn from_iter<I: IntoIterator<Item = (String, String)>>(iter: I) -> Self {
        Self {
            entries: iter.into_iter().collect(),
        }
    }
}

/// Local names the serializer is willing to write unescaped.
pub(crate) fn is_plain_local(local: &str) -> bool {
    if local.is_empty() {
        return true;
    }
    let bytes = local.as_bytes();
    let edge_ok = |b: u8| b.is_ascii_alphanumeric() || b == b'_';
    edge_ok(bytes[0])
        && (bytes.len() == 1 || edge_ok(bytes[bytes.len() - 1]) || bytes[bytes.len() - 1] == b'-')
        && bytes
            .iter()
            .all(|&b| b.is_ascii_alphanumeric() || matches!(b, b'_' | b'-' | b'.'))
}

pub(crate) fn is_prefix_name(name: &str) -> bool {
    if name.is_empty() {
        return true;
    }
    let bytes = name.as_bytes();
    bytes[0].is_ascii_alphabetic()
        && bytes[bytes.len() - 1] != b'.'
        && bytes
            .iter()
            .all(|&b| b.is_ascii_alphanumeric() || matches!(b, b'_' | b'-' | b'.'))
}
