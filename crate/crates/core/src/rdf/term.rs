use std::fmt;

use serde::{Deserialize, Serialize};

use super::prefix::ns;
use super::RdfError;

/// An RDF literal. Equality is lexical: `"1"^^xsd:integer` and
/// `"01"^^xsd:integer` are different literals.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Literal {
    pub lexical: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub datatype: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub language: Option<String>,
}

impl Literal {
    pub fn simple(lexical: impl Into<String>) -> Self {
        Self {
            lexical: lexical.into(),
            datatype: None,
            language: None,
        }
    }

    pub fn typed(lexical: impl Into<String>, datatype: impl Into<String>) -> Self {
        Self {
            lexical: lexical.into(),
            datatype: Some(datatype.into()),
            language: None,
        }
    }

    pub fn lang(lexical: impl Into<String>, language: impl Into<String>) -> Self {
        Self {
            lexical: lexical.into(),
            datatype: None,
            language: Some(language.into()),
        }
    }

    pub fn boolean(value: bool) -> Self {
        Self::typed(if value { "true" } else { "false" }, format!("{}boolean", ns::XSD))
    }
}

/// Variant order matters: IRIs sort before blank nodes, which sort before
/// literals. The serializer relies on this for subject ordering.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Term {
    Iri(String),
    Blank(String),
    Literal(Literal),
}

impl Term {
    /// Builds an IRI term, rejecting values that cannot be absolute IRIs.
    pub fn iri(value: impl Into<String>) -> Result<Self, RdfError> {
        let value = value.into();
        if !is_absolute_iri(&value) {
            return Err(RdfError::InvalidTerm(format!("not an absolute IRI: `{value}`")));
        }
        Ok(Term::Iri(value))
    }

    pub fn blank(label: impl Into<String>) -> Self {
        Term::Blank(label.into())
    }

    pub fn literal(lit: Literal) -> Self {
        Term::Literal(lit)
    }

    pub fn as_iri(&self) -> Option<&str> {
        match self {
            Term::Iri(v) => Some(v),
            _ => None,
        }
    }

    pub fn as_literal(&self) -> Option<&Literal> {
        match self {
            Term::Literal(l) => Some(l),
            _ => None,
        }
    }

    pub fn is_resource(&self) -> bool {
        !matches!(self, Term::Literal(_))
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Iri(v) => write!(f, "<{v}>"),
            Term::Blank(l) => write!(f, "_:{l}"),
            Term::Literal(l) => {
                write!(f, "\"{}\"", l.lexical.escape_default())?;
                if let Some(lang) = &l.language {
                    write!(f, "@{lang}")
                } else if let Some(dt) = &l.datatype {
                    write!(f, "^^<{dt}>")
                } else {
                    Ok(())
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Triple {
    pub subject: Term,
    pub predicate: Term,
    pub object: Term,
}

impl Triple {
    pub fn new(subject: Term, predicate: Term, object: Term) -> Result<Self, RdfError> {
        if !subject.is_resource() {
            return Err(RdfError::InvalidTerm(format!("literal subject {subject}")));
        }
        if !matches!(predicate, Term::Iri(_)) {
            return Err(RdfError::InvalidTerm(format!("non-IRI predicate {predicate}")));
        }
        if let Term::Literal(l) = &object {
            if l.datatype.is_some() && l.language.is_some() {
                return Err(RdfError::InvalidTerm(
                    "literal with both datatype and language".into(),
                ));
            }
        }
        Ok(Self {
            subject,
            predicate,
            object,
        })
    }

    /// Convenience constructor for all-IRI triples.
    pub fn iris(s: &str, p: &str, o: &str) -> Result<Self, RdfError> {
        Self::new(Term::iri(s)?, Term::iri(p)?, Term::iri(o)?)
    }
}

impl fmt::Display for Triple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {} .", self.subject, self.predicate, self.object)
    }
}

/// scheme ":" rest, with no whitespace or angle brackets anywhere.
pub(crate) fn is_absolute_iri(value: &str) -> bool {
    let Some((scheme, _)) = value.split_once(':') else {
        return false;
    };
    let mut chars = scheme.chars();
    let scheme_ok = chars.next().is_some_and(|c| c.is_ascii_alphabetic())
        && chars.all(|c| c.is_ascii_alphanumeric() || matches!(c, '+' | '-' | '.'));
    scheme_ok
        && !value
            .chars()
            .any(|c| c.is_whitespace() || matches!(c, '<' | '>' | '"' | '{' | '}' | '|' | '^' | '`' | '\\'))
}
