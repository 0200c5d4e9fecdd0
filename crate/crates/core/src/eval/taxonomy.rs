use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::EvalError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ErrorCategory {
    WrongSubelementMapping,
    TooSpecific,
    TooGeneral,
    SwitchedSourceTarget,
    LiteralAsMetaphor,
    IncorrectObjects,
    IncorrectProperty,
    IncorrectTargetSymbol,
}

impl ErrorCategory {
    pub const TEXTUAL: [ErrorCategory; 5] = [
        ErrorCategory::WrongSubelementMapping,
        ErrorCategory::TooSpecific,
        ErrorCategory::TooGeneral,
        ErrorCategory::SwitchedSourceTarget,
        ErrorCategory::LiteralAsMetaphor,
    ];
    pub const VISUAL: [ErrorCategory; 3] = [
        ErrorCategory::IncorrectObjects,
        ErrorCategory::IncorrectProperty,
        ErrorCategory::IncorrectTargetSymbol,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ErrorCategory::WrongSubelementMapping => "WrongSubelementMapping",
            ErrorCategory::TooSpecific => "TooSpecific",
            ErrorCategory::TooGeneral => "TooGeneral",
            ErrorCategory::SwitchedSourceTarget => "SwitchedSourceTarget",
            ErrorCategory::LiteralAsMetaphor => "LiteralAsMetaphor",
            ErrorCategory::IncorrectObjects => "IncorrectObjects",
            ErrorCategory::IncorrectProperty => "IncorrectProperty",
            ErrorCategory::IncorrectTargetSymbol => "IncorrectTargetSymbol",
        }
    }
}

impl fmt::Display for ErrorCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ErrorCategory {
    type Err = EvalError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key: String = s.chars().filter(|c| c.is_ascii_alphanumeric()).collect::<String>().to_lowercase();
        ErrorCategory::TEXTUAL
            .iter()
            .chain(ErrorCategory::VISUAL.iter())
            .copied()
            .find(|c| c.name().to_lowercase() == key)
            .ok_or_else(|| EvalError::UnknownCategory(s.trim().to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorDistribution {
    pub total: usize,
    pub counts: BTreeMap<ErrorCategory, usize>,
}

impl ErrorDistribution {
    /// Share of tagged items in `category`, as a percentage.
    pub fn percent(&self, category: ErrorCategory) -> f64 {
        if self.total == 0 {
            return 0.0;
        }
        100.0 * *self.counts.get(&category).unwrap_or(&0) as f64 / self.total as f64
    }

    pub fn percentages(&self) -> BTreeMap<ErrorCategory, f64> {
        self.counts.keys().map(|c| (*c, self.percent(*c))).collect()
    }
}

/// Percentage of tagged items per error category.
pub fn tally_errors<I, S>(tagged: &[(I, S)]) -> Result<ErrorDistribution, EvalError>
where
    S: AsRef<str>,
{
    let mut counts = BTreeMap::new();
    for (_, category) in tagged {
        let c: ErrorCategory = category.as_ref().parse()?;
        *counts.entry(c).or_insert(0) += 1;
    }
    Ok(ErrorDistribution {
        total: tagged.len(),
        counts,
    })
}

/// Reads `instance_id,category` rows.
pub fn load_error_tags(path: &std::path::Path) -> Result<Vec<(String, String)>, EvalError> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| EvalError::Io(format!("{}: {e}", path.display())))?;
    reader
        .deserialize::<(String, String)>()
        .enumerate()
        .map(|(i, row)| {
            row.map_err(|e| EvalError::FormatError {
                row: i + 2,
                reason: e.to_string(),
            })
        })
        .collect()
}
