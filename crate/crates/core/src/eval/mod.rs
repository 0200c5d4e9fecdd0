//! Datasets, scoring, agreement and correlation statistics, error tallies,
//! and table rendering.

mod annotation;
mod dataset;
mod metrics;
mod report;
mod scorer;
mod stats;
mod taxonomy;
pub mod tables;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use annotation::{fleiss_kappa, load_annotations, majority_vote, AnnotationMatrix};
pub use dataset::{
    balanced_sample, check_counts, load_dataset, Category, CountCheck, DatasetFormat, DatasetInstance, Modality,
};
pub use metrics::{score_by_category, score_detection, score_understanding, Confusion, DetectionScores, InstanceScore, Prediction, UnderstandingScores};
pub use report::{format_percent, render_csv, render_text, Block, Row};
pub use scorer::{AnnotationScorer, ExactScorer, HttpScorer, Scorer};
pub use stats::{average_ranks, correlation_p_value, point_biserial, spearman, Correlation};
pub use taxonomy::{load_error_tags, tally_errors, ErrorCategory, ErrorDistribution};

#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize, Deserialize)]
pub enum EvalError {
    #[error("row {row}: {reason}")]
    FormatError { row: usize, reason: String },
    #[error("not enough {class} instances: need {needed}, have {available}")]
    InsufficientClass {
        class: String,
        needed: usize,
        available: usize,
    },
    #[error("cannot join predictions with gold: {0}")]
    JoinError(String),
    #[error("scorer failed: {0}")]
    ScorerError(String),
    #[error("tie on item `{item}`")]
    TieError { item: String },
    #[error("degenerate annotation matrix: {0}")]
    DegenerateMatrix(String),
    #[error("degenerate input: {0}")]
    DegenerateInput(String),
    #[error("unknown error category `{0}`")]
    UnknownCategory(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("I/O: {0}")]
    Io(String),
}
