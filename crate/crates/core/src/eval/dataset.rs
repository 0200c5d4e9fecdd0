use std::collections::{BTreeSet, HashSet};
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::EvalError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Modality {
    Text,
    Image,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Category {
    GenericConceptual,
    Scientific,
    Literal,
}

impl std::str::FromStr for Category {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().replace(['_', '-', ' '], "").as_str() {
            "genericconceptual" | "generic" | "conceptual" => Ok(Category::GenericConceptual),
            "scientific" => Ok(Category::Scientific),
            "literal" | "vua" => Ok(Category::Literal),
            _ => Err(format!("unknown category `{s}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetInstance {
    pub id: String,
    pub modality: Modality,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub text: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub image_ref: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_word: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gold_label: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gold_source: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gold_target: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gold_property: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub category: Option<Category>,
}

impl DatasetInstance {
    pub fn text(id: impl Into<String>, sentence: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            modality: Modality::Text,
            text: Some(sentence.into()),
            image_ref: None,
            target_word: None,
            gold_label: None,
            gold_source: None,
            gold_target: None,
            gold_property: None,
            category: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DatasetFormat {
    Mohx,
    Trofi,
    Wg,
    Bcmtd,
    Visual,
}

impl std::str::FromStr for DatasetFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace(['-', '_'], "").as_str() {
            "mohx" => Ok(DatasetFormat::Mohx),
            "trofi" => Ok(DatasetFormat::Trofi),
            "wg" => Ok(DatasetFormat::Wg),
            "bcmtd" => Ok(DatasetFormat::Bcmtd),
            "visual" => Ok(DatasetFormat::Visual),
            _ => Err(format!("unknown dataset format `{s}` (expected mohx, trofi, wg, bcmtd or visual)")),
        }
    }
}

impl DatasetFormat {
    /// Full-dataset size and metaphorical fraction of the published originals.
    /// The visual count includes the three in-context bank images.
    pub fn expected_counts(self) -> (usize, Option<f64>) {
        match self {
            DatasetFormat::Mohx => (647, Some(0.487)),
            DatasetFormat::Trofi => (3737, Some(0.435)),
            DatasetFormat::Wg => (447, Some(1.0)),
            DatasetFormat::Bcmtd => (147, None),
            DatasetFormat::Visual => (51, None),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountCheck {
    pub expected_count: usize,
    pub actual_count: usize,
    pub expected_fraction: Option<f64>,
    pub actual_fraction: Option<f64>,
    /// Count equal and fraction equal at one decimal of a percent.
    pub matches: bool,
}

/// Compares a loaded dataset against the published size and class balance.
pub fn check_counts(format: DatasetFormat, instances: &[DatasetInstance]) -> CountCheck {
    let (expected_count, expected_fraction) = format.expected_counts();
    let labeled: Vec<bool> = instances.iter().filter_map(|i| i.gold_label).collect();
    let actual_fraction =
        (!labeled.is_empty()).then(|| labeled.iter().filter(|l| **l).count() as f64 / labeled.len() as f64);
    let fraction_ok = match (expected_fraction, actual_fraction) {
        (Some(e), Some(a)) => (e * 1000.0).round() == (a * 1000.0).round(),
        (Some(_), None) => false,
        (None, _) => true,
    };
    CountCheck {
        expected_count,
        actual_count: instances.len(),
        expected_fraction,
        actual_fraction,
        matches: expected_count == instances.len() && fraction_ok,
    }
}

fn parse_label(raw: &str) -> Option<bool> {
    match raw.trim().to_ascii_lowercase().as_str() {
        "1" | "true" | "yes" | "metaphorical" | "met" => Some(true),
        "0" | "false" | "no" | "literal" | "lit" => Some(false),
        _ => None,
    }
}

fn non_empty(s: &str) -> Option<String> {
    let t = s.trim();
    (!t.is_empty()).then(|| t.to_string())
}

struct Columns {
    headers: csv::StringRecord,
}

impl Columns {
    fn require(&self, names: &[&str]) -> Result<(), EvalError> {
        for n in names {
            if !self.headers.iter().any(|h| h.trim() == *n) {
                return Err(EvalError::FormatError {
                    row: 1,
                    reason: format!("missing column `{n}`"),
                });
            }
        }
        Ok(())
    }

    fn get<'r>(&self, record: &'r csv::StringRecord, name: &str) -> &'r str {
        self.headers
            .iter()
            .position(|h| h.trim() == name)
            .and_then(|i| record.get(i))
            .unwrap_or("")
    }
}

/// Loads one of the supported dataset layouts. CSV rows are numbered from
/// the header line (row 1).
pub fn load_dataset(path: &Path, format: DatasetFormat) -> Result<Vec<DatasetInstance>, EvalError> {
    let instances = if format == DatasetFormat::Visual {
        load_visual(path)?
    } else {
        load_csv(path, format)?
    };
    let mut seen = HashSet::new();
    for (i, inst) in instances.iter().enumerate() {
        if !seen.insert(inst.id.as_str()) {
            let row = if format == DatasetFormat::Visual { i + 1 } else { i + 2 };
            return Err(EvalError::FormatError {
                row,
                reason: format!("duplicate id `{}`", inst.id),
            });
        }
    }
    Ok(instances)
}

fn load_csv(path: &Path, format: DatasetFormat) -> Result<Vec<DatasetInstance>, EvalError> {
    let mut reader = csv::ReaderBuilder::new()
        .flexible(false)
        .from_path(path)
        .map_err(|e| EvalError::Io(format!("{}: {e}", path.display())))?;
    let headers = reader
        .headers()
        .map_err(|e| EvalError::FormatError {
            row: 1,
            reason: e.to_string(),
        })?
        .clone();
    let cols = Columns { headers };
    let required: &[&str] = match format {
        DatasetFormat::Mohx | DatasetFormat::Trofi => &["id", "sentence", "target_word", "label"],
        DatasetFormat::Wg => &["id", "sentence", "source", "target"],
        DatasetFormat::Bcmtd => &["id", "sentence", "category", "label", "source", "target"],
        DatasetFormat::Visual => unreachable!("visual datasets are JSON"),
    };
    cols.require(required)?;

    let mut out = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let row = i + 2;
        let fail = |reason: String| EvalError::FormatError { row, reason };
        let record = record.map_err(|e| fail(e.to_string()))?;
        let id = non_empty(cols.get(&record, "id")).ok_or_else(|| fail("empty id".into()))?;
        let sentence = non_empty(cols.get(&record, "sentence")).ok_or_else(|| fail("empty sentence".into()))?;
        let mut inst = DatasetInstance::text(id, sentence);
        match format {
            DatasetFormat::Mohx | DatasetFormat::Trofi => {
                let raw = cols.get(&record, "label");
                inst.gold_label = Some(parse_label(raw).ok_or_else(|| fail(format!("bad label `{raw}`")))?);
                inst.target_word = non_empty(cols.get(&record, "target_word"));
            }
            DatasetFormat::Wg => {
                inst.gold_label = Some(true);
                inst.gold_source =
                    Some(non_empty(cols.get(&record, "source")).ok_or_else(|| fail("empty source".into()))?);
                inst.gold_target =
                    Some(non_empty(cols.get(&record, "target")).ok_or_else(|| fail("empty target".into()))?);
            }
            DatasetFormat::Bcmtd => {
                let raw = cols.get(&record, "label");
                let label = parse_label(raw).ok_or_else(|| fail(format!("bad label `{raw}`")))?;
                inst.gold_label = Some(label);
                inst.category = Some(cols.get(&record, "category").parse().map_err(fail)?);
                inst.gold_source = non_empty(cols.get(&record, "source"));
                inst.gold_target = non_empty(cols.get(&record, "target"));
                if label && (inst.gold_source.is_none() || inst.gold_target.is_none()) {
                    return Err(fail("metaphorical row needs source and target".into()));
                }
            }
            DatasetFormat::Visual => unreachable!(),
        }
        out.push(inst);
    }
    Ok(out)
}

#[derive(Deserialize)]
struct VisualRow {
    id: String,
    image_path: PathBuf,
    gold_source: String,
    gold_target: String,
    gold_property: String,
}

/// Image paths are resolved against the manifest's directory.
fn load_visual(path: &Path) -> Result<Vec<DatasetInstance>, EvalError> {
    let text = std::fs::read_to_string(path).map_err(|e| EvalError::Io(format!("{}: {e}", path.display())))?;
    let rows: Vec<serde_json::Value> = serde_json::from_str(&text).map_err(|e| EvalError::FormatError {
        row: e.line(),
        reason: format!("manifest is not a JSON array: {e}"),
    })?;
    let base = path.parent().unwrap_or(Path::new("."));
    rows.into_iter()
        .enumerate()
        .map(|(i, value)| {
            let row = i + 1;
            let r: VisualRow =
                serde_json::from_value(value).map_err(|e| EvalError::FormatError { row, reason: e.to_string() })?;
            if r.id.trim().is_empty() {
                return Err(EvalError::FormatError {
                    row,
                    reason: "empty id".into(),
                });
            }
            Ok(DatasetInstance {
                id: r.id,
                modality: Modality::Image,
                text: None,
                image_ref: Some(base.join(r.image_path)),
                target_word: None,
                gold_label: None,
                gold_source: non_empty(&r.gold_source),
                gold_target: non_empty(&r.gold_target),
                gold_property: non_empty(&r.gold_property),
                category: None,
            })
        })
        .collect()
}

/// `n / 2` metaphorical and `n / 2` literal instances chosen by a seeded
/// shuffle of each class, returned in dataset order.
pub fn balanced_sample(instances: &[DatasetInstance], n: usize, seed: u64) -> Result<Vec<DatasetInstance>, EvalError> {
    if !n.is_multiple_of(2) {
        return Err(EvalError::InvalidArgument(format!("sample size {n} is odd")));
    }
    let half = n / 2;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut chosen = BTreeSet::new();
    for (class, name) in [(true, "metaphorical"), (false, "literal")] {
        let mut pool: Vec<usize> = (0..instances.len())
            .filter(|&i| instances[i].gold_label == Some(class))
            .collect();
        if pool.len() < half {
            return Err(EvalError::InsufficientClass {
                class: name.into(),
                needed: half,
                available: pool.len(),
            });
        }
        pool.shuffle(&mut rng);
        chosen.extend(pool.into_iter().take(half));
    }
    Ok(chosen.into_iter().map(|i| instances[i].clone()).collect())
}
