use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

/// A row of fractional scores in [0, 1]; `None` renders as `-`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub label: String,
    pub cells: Vec<Option<f64>>,
    /// Figures copied from published results rather than computed here.
    #[serde(default)]
    pub reference: bool,
}

impl Row {
    pub fn new(label: impl Into<String>, cells: impl IntoIterator<Item = f64>) -> Self {
        Self {
            label: label.into(),
            cells: cells.into_iter().map(Some).collect(),
            reference: false,
        }
    }

    pub fn reference(label: impl Into<String>, cells: impl IntoIterator<Item = f64>) -> Self {
        Self {
            reference: true,
            ..Self::new(label, cells)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Block {
    pub title: String,
    pub columns: Vec<String>,
    pub rows: Vec<Row>,
    #[serde(default)]
    pub best: Option<String>,
    #[serde(default)]
    pub notes: Vec<String>,
}

impl Block {
    pub fn new<S: Into<String>>(title: impl Into<String>, columns: impl IntoIterator<Item = S>) -> Self {
        Self {
            title: title.into(),
            columns: columns.into_iter().map(Into::into).collect(),
            ..Self::default()
        }
    }

    pub fn row(mut self, row: Row) -> Self {
        self.rows.push(row);
        self
    }

    pub fn note(mut self, note: impl Into<String>) -> Self {
        self.notes.push(note.into());
        self
    }

    /// Marks the row with the highest value in `column`; the first such row
    /// wins ties.
    pub fn mark_best(mut self, column: usize) -> Self {
        let mut best: Option<(&Row, f64)> = None;
        for row in &self.rows {
            if let Some(Some(v)) = row.cells.get(column) {
                if best.is_none_or(|(_, b)| *v > b) {
                    best = Some((row, *v));
                }
            }
        }
        self.best = best.map(|(r, _)| r.label.clone());
        self
    }

    pub fn find(&self, label: &str) -> Option<&Row> {
        self.rows.iter().find(|r| r.label == label)
    }
}

/// Percentage with one decimal, half away from zero, dropping a trailing `.0`.
pub fn format_percent(fraction: f64) -> String {
    let tenths = (fraction * 1000.0 * (1.0 + f64::EPSILON * 4.0)).round() as i64;
    let sign = if tenths < 0 { "-" } else { "" };
    let (whole, frac) = (tenths.abs() / 10, tenths.abs() % 10);
    if frac == 0 {
        format!("{sign}{whole}")
    } else {
        format!("{sign}{whole}.{frac}")
    }
}

fn cell(v: &Option<f64>) -> String {
    v.map_or_else(|| "-".to_string(), format_percent)
}

/// Plain text: a title line, a ` & `-separated header and rows, then
/// `best:` and `note:` lines. Blocks are separated by a blank line.
pub fn render_text(blocks: &[Block]) -> String {
    let mut out = String::new();
    for (i, b) in blocks.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        let _ = writeln!(out, "{}", b.title);
        let header: Vec<&str> = std::iter::once("Method").chain(b.columns.iter().map(String::as_str)).collect();
        let _ = writeln!(out, "{}", header.join(" & "));
        for row in &b.rows {
            let cells: Vec<String> = std::iter::once(row.label.clone()).chain(row.cells.iter().map(cell)).collect();
            let marker = if row.reference { " *" } else { "" };
            let _ = writeln!(out, "{}{marker}", cells.join(" & "));
        }
        if let Some(best) = &b.best {
            let _ = writeln!(out, "best: {best}");
        }
        if b.rows.iter().any(|r| r.reference) {
            let _ = writeln!(out, "note: * published figures, not recomputed");
        }
        for n in &b.notes {
            let _ = writeln!(out, "note: {n}");
        }
    }
    out
}

/// One CSV record per row: block title, method label, reference flag, cells.
pub fn render_csv(blocks: &[Block]) -> String {
    let mut w = csv::WriterBuilder::new().flexible(true).from_writer(Vec::new());
    for b in blocks {
        let mut header = vec!["block".to_string(), "method".to_string(), "reference".to_string()];
        header.extend(b.columns.iter().cloned());
        w.write_record(&header).expect("writing to memory");
        for row in &b.rows {
            let mut rec = vec![b.title.clone(), row.label.clone(), row.reference.to_string()];
            rec.extend(row.cells.iter().map(cell));
            w.write_record(&rec).expect("writing to memory");
        }
    }
    String::from_utf8(w.into_inner().expect("writing to memory")).expect("csv output is UTF-8")
}
