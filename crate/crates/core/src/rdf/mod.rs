//! Self-contained RDF data model with a Turtle parser and a deterministic
//! serializer.
//!
//! Graphs store every term fully expanded. Prefixes only matter at the
//! edges: the parser expands CURIEs on the way in and the serializer
//! compacts them on the way out.

mod graph;
mod prefix;
mod term;
mod turtle;

pub use graph::{merge, Graph};
pub use prefix::{ns, PrefixMap};
pub use term::{Literal, Term, Triple};
pub use turtle::{parse_turtle, parse_turtle_bytes, serialize_turtle, serialize_turtle_minimal};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RdfError {
    #[error("syntax error at {line}:{column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("unknown prefix `{0}:`")]
    UnknownPrefix(String),
    #[error("invalid term: {0}")]
    InvalidTerm(String),
}
