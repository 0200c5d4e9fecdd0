//! Metaphor detection and understanding with knowledge graphs built by a
//! language model around a conceptual blending ontology.

mod fsutil;
mod http;
pub mod eval;
pub mod llm;
pub mod ontology;
pub mod pipeline;
pub mod prompt;
pub mod rdf;
pub mod skg;

use std::fmt::{Debug, Display};

use num_traits::{Float, FromPrimitive};

/// Floating-point type used for evaluation scores.
pub trait Scalar: Float + FromPrimitive + Debug + Display + Send + Sync + 'static {}

impl<T: Float + FromPrimitive + Debug + Display + Send + Sync + 'static> Scalar for T {}

pub type DetectionScores = eval::DetectionScores<f64>;
pub type UnderstandingScores = eval::UnderstandingScores<f64>;
pub type Correlation = eval::Correlation<f64>;
