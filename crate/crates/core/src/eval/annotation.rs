use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::EvalError;

/// Categorical labels, one row per item and one column per annotator.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotationMatrix {
    items: Vec<String>,
    annotators: Vec<String>,
    labels: Vec<Vec<String>>,
}

impl AnnotationMatrix {
    pub fn new(items: Vec<String>, annotators: Vec<String>, labels: Vec<Vec<String>>) -> Result<Self, EvalError> {
        if annotators.len() < 2 {
            return Err(EvalError::DegenerateMatrix(format!(
                "{} annotator(s); at least 2 required",
                annotators.len()
            )));
        }
        if labels.len() != items.len() {
            return Err(EvalError::DegenerateMatrix(format!(
                "{} label rows for {} items",
                labels.len(),
                items.len()
            )));
        }
        if let Some((i, row)) = labels.iter().enumerate().find(|(_, r)| r.len() != annotators.len()) {
            return Err(EvalError::DegenerateMatrix(format!(
                "item `{}` has {} labels for {} annotators",
                items[i],
                row.len(),
                annotators.len()
            )));
        }
        Ok(Self {
            items,
            annotators,
            labels,
        })
    }

    /// Builds a matrix with generated ids `item{i}` / `a{j}`.
    pub fn from_rows<S: AsRef<str>>(rows: &[Vec<S>]) -> Result<Self, EvalError> {
        let width = rows.first().map_or(0, Vec::len);
        Self::new(
            (0..rows.len()).map(|i| format!("item{i}")).collect(),
            (0..width).map(|j| format!("a{j}")).collect(),
            rows.iter()
                .map(|r| r.iter().map(|s| s.as_ref().to_string()).collect())
                .collect(),
        )
    }

    pub fn items(&self) -> &[String] {
        &self.items
    }

    pub fn annotators(&self) -> &[String] {
        &self.annotators
    }

    pub fn row(&self, i: usize) -> &[String] {
        &self.labels[i]
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    /// Keeps only the rows whose item id satisfies `keep`.
    pub fn filter_items(&self, keep: impl Fn(&str) -> bool) -> Result<Self, EvalError> {
        let (items, labels) = self
            .items
            .iter()
            .zip(&self.labels)
            .filter(|(item, _)| keep(item))
            .map(|(i, l)| (i.clone(), l.clone()))
            .unzip();
        Self::new(items, self.annotators.clone(), labels)
    }
}

#[derive(Deserialize)]
struct AnnotationRow {
    item_id: String,
    annotator_id: String,
    label: String,
}

/// Reads `item_id,annotator_id,label` rows. Items and annotators keep
/// first-appearance order; every item must be labelled once by every
/// annotator.
pub fn load_annotations(path: &Path) -> Result<AnnotationMatrix, EvalError> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| EvalError::Io(format!("{}: {e}", path.display())))?;
    let mut items: Vec<String> = Vec::new();
    let mut annotators: Vec<String> = Vec::new();
    let mut cells: BTreeMap<(usize, usize), String> = BTreeMap::new();
    for (i, row) in reader.deserialize::<AnnotationRow>().enumerate() {
        let line = i + 2;
        let row = row.map_err(|e| EvalError::FormatError {
            row: line,
            reason: e.to_string(),
        })?;
        let index = |list: &mut Vec<String>, id: &str| match list.iter().position(|x| x == id) {
            Some(p) => p,
            None => {
                list.push(id.to_string());
                list.len() - 1
            }
        };
        let it = index(&mut items, row.item_id.trim());
        let an = index(&mut annotators, row.annotator_id.trim());
        if cells.insert((it, an), row.label.trim().to_string()).is_some() {
            return Err(EvalError::FormatError {
                row: line,
                reason: format!("duplicate label for item `{}` by `{}`", row.item_id, row.annotator_id),
            });
        }
    }
    let mut labels = Vec::with_capacity(items.len());
    for (it, item) in items.iter().enumerate() {
        let mut row = Vec::with_capacity(annotators.len());
        for (an, annotator) in annotators.iter().enumerate() {
            match cells.remove(&(it, an)) {
                Some(l) => row.push(l),
                None => {
                    return Err(EvalError::DegenerateMatrix(format!(
                        "item `{item}` has no label from `{annotator}`"
                    )))
                }
            }
        }
        labels.push(row);
    }
    AnnotationMatrix::new(items, annotators, labels)
}

/// Modal label per item. A tie for the top count is an error.
pub fn majority_vote(m: &AnnotationMatrix) -> Result<Vec<String>, EvalError> {
    m.labels
        .iter()
        .zip(&m.items)
        .map(|(row, item)| {
            let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
            for l in row {
                *counts.entry(l).or_default() += 1;
            }
            let best = counts.values().copied().max().unwrap_or(0);
            let mut top = counts.iter().filter(|(_, c)| **c == best);
            match (top.next(), top.next()) {
                (Some((label, _)), None) => Ok(label.to_string()),
                _ => Err(EvalError::TieError { item: item.clone() }),
            }
        })
        .collect()
}

/// Fleiss' kappa over all categories that occur in the matrix.
pub fn fleiss_kappa(m: &AnnotationMatrix) -> Result<f64, EvalError> {
    if m.items.len() < 2 {
        return Err(EvalError::DegenerateMatrix(format!("{} item(s); at least 2 required", m.items.len())));
    }
    let categories: BTreeSet<&str> = m.labels.iter().flatten().map(String::as_str).collect();
    let n = m.annotators.len() as f64;
    let items = m.items.len() as f64;
    let mut totals: BTreeMap<&str, f64> = categories.iter().map(|c| (*c, 0.0)).collect();
    let mut p_bar = 0.0;
    for row in &m.labels {
        let mut counts: BTreeMap<&str, f64> = BTreeMap::new();
        for l in row {
            *counts.entry(l).or_default() += 1.0;
        }
        let agree: f64 = counts.values().map(|c| c * (c - 1.0)).sum();
        p_bar += agree / (n * (n - 1.0));
        for (c, k) in counts {
            *totals.get_mut(c).unwrap() += k;
        }
    }
    p_bar /= items;
    let p_e: f64 = totals.values().map(|t| (t / (items * n)).powi(2)).sum();
    if (1.0 - p_e).abs() < 1e-12 {
        return Err(EvalError::DegenerateMatrix("all labels fall in one category".into()));
    }
    Ok((p_bar - p_e) / (1.0 - p_e))
}
