//! Scores per run and the comparison tables built from them.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{Block, Category, DatasetFormat, DetectionScores, EvalError, Row};
use crate::prompt::TaskKind;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnderstandingSummary {
    pub success_rate: f64,
    pub successes: u64,
    pub instances: u64,
}

/// Share of items whose majority human label is positive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HumanScore {
    pub rate: f64,
    pub items: usize,
    pub annotators: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fleiss_kappa: Option<f64>,
}

/// Everything scored for one run directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunScores {
    pub dataset: DatasetFormat,
    pub task: TaskKind,
    pub method: String,
    pub model_id: String,
    pub instances: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detection: Option<DetectionScores<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub understanding: Option<UnderstandingSummary>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub human: Option<HumanScore>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub by_category: BTreeMap<Category, DetectionScores<f64>>,
}

pub const TABLES: [u8; 6] = [2, 3, 4, 5, 6, 7];

/// Row label used in table `table` for a method name.
pub fn method_label(table: u8, method: &str) -> String {
    match method {
        "LAG" => "LAG".into(),
        "NoBlending" => "No Blending".into(),
        "NoGraph" => "No Graph".into(),
        "SentImg" => "LAG sent+img".into(),
        "NoSent" => "LAG no sent".into(),
        "NoImg" => "LAG no img".into(),
        "ZeroShot" => "Zero-shot".into(),
        m => match m.strip_prefix("FewShot-") {
            Some(k) if table == 4 => format!("Few-Shot ({k})"),
            Some(k) => format!("Few-Shot {k}"),
            None => m.to_string(),
        },
    }
}

fn model_label(model_id: &str) -> String {
    let lower = model_id.to_lowercase();
    if lower.contains("claude") {
        "Claude".into()
    } else if lower.contains("llama") {
        "Llama".into()
    } else {
        model_id.to_string()
    }
}

struct Layout {
    title: &'static str,
    columns: &'static [&'static str],
    /// (dataset, metric) per column.
    cells: &'static [(DatasetFormat, Metric)],
    published: &'static [(&'static str, &'static [f64])],
    /// Published rows that are never recomputed here.
    baselines: &'static [&'static str],
    by_model: bool,
    task: Option<TaskKind>,
}

#[derive(Clone, Copy)]
enum Metric {
    Accuracy,
    F1,
    Human,
}

use DatasetFormat::{Bcmtd, Mohx, Trofi, Visual};
use Metric::{Accuracy, F1, Human};

const DETECTION_6: &[(DatasetFormat, Metric)] =
    &[(Mohx, Accuracy), (Mohx, F1), (Trofi, Accuracy), (Trofi, F1), (Bcmtd, Accuracy), (Bcmtd, F1)];
const COLUMNS_6: &[&str] = &["MOH-X Acc", "MOH-X F1", "TroFi Acc", "TroFi F1", "BCMTD Acc", "BCMTD F1"];

fn layout(table: u8) -> Result<Layout, EvalError> {
    Ok(match table {
        2 => Layout {
            title: "Metaphor detection on MOH-X and TroFi",
            columns: &["MOH-X F1", "MOH-X Acc", "TroFi F1", "TroFi Acc"],
            cells: &[(Mohx, F1), (Mohx, Accuracy), (Trofi, F1), (Trofi, Accuracy)],
            published: &[
                ("MetaPRO", &[0.84, 0.81, 0.79, 0.70]),
                ("TSI CMT", &[0.825, 0.829, 0.66, 0.668]),
                ("LAG", &[0.897, 0.873, 0.897, 0.846]),
            ],
            baselines: &["MetaPRO", "TSI CMT"],
            by_model: false,
            task: Some(TaskKind::Detection),
        },
        3 => Layout {
            title: "Metaphor detection on BCMTD",
            columns: &["Accuracy", "F1"],
            cells: &[(Bcmtd, Accuracy), (Bcmtd, F1)],
            published: &[
                ("LAG", &[0.801, 0.841]),
                ("MetaPRO", &[0.691, 0.698]),
                ("Few-Shot 12", &[0.59, 0.489]),
                ("Few-Shot 6", &[0.524, 0.452]),
                ("Few-Shot 3", &[0.475, 0.428]),
                ("Zero-shot", &[0.229, 0.338]),
            ],
            baselines: &["MetaPRO"],
            by_model: false,
            task: Some(TaskKind::Detection),
        },
        4 => Layout {
            title: "Visual metaphor understanding",
            columns: &["Accuracy"],
            cells: &[(Visual, Human)],
            published: &[
                ("LAG sent+img", &[0.65]),
                ("LAG no sent", &[0.67]),
                ("LAG no img", &[0.652]),
                ("Few-Shot (3)", &[0.547]),
            ],
            baselines: &[],
            by_model: false,
            task: Some(TaskKind::VisualUnderstanding),
        },
        5 => Layout {
            title: "Visual metaphor understanding ablation",
            columns: &["Accuracy"],
            cells: &[(Visual, Human)],
            published: &[("LAG no sent", &[0.67]), ("No Blending", &[0.686]), ("No Graph", &[0.562])],
            baselines: &[],
            by_model: false,
            task: Some(TaskKind::VisualUnderstanding),
        },
        6 => Layout {
            title: "Metaphor detection ablation",
            columns: COLUMNS_6,
            cells: DETECTION_6,
            published: &[
                ("LAG", &[0.873, 0.897, 0.846, 0.897, 0.801, 0.841]),
                ("No Blending", &[0.816, 0.87, 0.819, 0.86, 0.786, 0.852]),
                ("No Graph", &[0.786, 0.82, 0.839, 0.87, 0.70, 0.73]),
            ],
            baselines: &[],
            by_model: false,
            task: Some(TaskKind::Detection),
        },
        7 => Layout {
            title: "Metaphor detection by language model",
            columns: COLUMNS_6,
            cells: DETECTION_6,
            published: &[
                ("Claude", &[0.873, 0.897, 0.846, 0.897, 0.801, 0.841]),
                ("Llama", &[0.559, 0.69, 0.608, 0.75, 0.666, 0.666]),
            ],
            baselines: &[],
            by_model: true,
            task: Some(TaskKind::Detection),
        },
        n => return Err(EvalError::InvalidArgument(format!("no table {n}; expected one of 2-7"))),
    })
}

fn metric(scores: &RunScores, m: Metric) -> Option<f64> {
    match m {
        Accuracy => scores.detection.as_ref().map(|d| d.accuracy),
        F1 => scores.detection.as_ref().map(|d| d.f1),
        Human => scores.human.as_ref().map(|h| h.rate),
    }
}

/// Rows computed from `runs`, followed or preceded by published figures
/// for the labels no run covers. Published rows are flagged as such. The
/// best row is chosen on the first column.
pub fn build_table(table: u8, runs: &[RunScores]) -> Result<Block, EvalError> {
    let layout = layout(table)?;
    let mut computed: Vec<(String, Vec<Option<f64>>)> = Vec::new();
    for run in runs {
        if layout.task.is_some_and(|t| t != run.task) {
            continue;
        }
        if layout.by_model && run.method != "LAG" {
            continue;
        }
        let label = if layout.by_model {
            model_label(&run.model_id)
        } else {
            method_label(table, &run.method)
        };
        let idx = match computed.iter().position(|(l, _)| *l == label) {
            Some(i) => i,
            None => {
                computed.push((label, vec![None; layout.cells.len()]));
                computed.len() - 1
            }
        };
        for (col, (dataset, m)) in layout.cells.iter().enumerate() {
            if *dataset == run.dataset {
                if let Some(v) = metric(run, *m) {
                    computed[idx].1[col] = Some(v);
                }
            }
        }
    }
    computed.retain(|(_, cells)| cells.iter().any(Option::is_some));

    let mut block = Block::new(format!("Table {table}: {}", layout.title), layout.columns.iter().copied());
    for (label, values) in layout.published {
        match computed.iter().position(|(l, _)| l == label) {
            Some(i) if !layout.baselines.contains(label) => {
                let (label, cells) = computed.remove(i);
                block.rows.push(Row {
                    label,
                    cells,
                    reference: false,
                });
            }
            _ => block.rows.push(Row::reference(*label, values.iter().copied())),
        }
    }
    for (label, cells) in computed {
        block.rows.push(Row {
            label,
            cells,
            reference: false,
        });
    }
    Ok(block.mark_best(0))
}

/// One-row block with whatever a run was scored on.
pub fn summary_block(scores: &RunScores) -> Block {
    let mut columns = Vec::new();
    let mut cells = Vec::new();
    if let Some(d) = &scores.detection {
        columns.extend(["Accuracy", "F1", "Precision", "Recall"]);
        cells.extend([d.accuracy, d.f1, d.precision, d.recall]);
    }
    if let Some(u) = &scores.understanding {
        columns.push("Both domains");
        cells.push(u.success_rate);
    }
    if let (Some(h), TaskKind::VisualUnderstanding) = (&scores.human, scores.task) {
        columns.push("Human");
        cells.push(h.rate);
    }
    let title = format!("{:?} {} {} ({} instances)", scores.dataset, scores.method, scores.task.name(), scores.instances);
    let mut block = Block::new(title, columns).row(Row::new(scores.method.clone(), cells));
    if let Some(d) = &scores.detection {
        let c = d.confusion;
        block = block.note(format!("tp {} fp {} tn {} fn {}; {} error records counted as wrong", c.tp, c.fp, c.tn, c.fn_, d.errors));
    }
    for (category, d) in &scores.by_category {
        block = block.note(format!(
            "{category:?}: accuracy {} over {}",
            super::format_percent(d.accuracy),
            d.confusion.total()
        ));
    }
    if let Some(h) = &scores.human {
        let kappa = h.fleiss_kappa.map_or_else(|| "n/a".to_string(), |k| format!("{k:.3}"));
        block = block.note(format!("{} items, {} annotators, Fleiss kappa {kappa}", h.items, h.annotators));
    }
    block
}
