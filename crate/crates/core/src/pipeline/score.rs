use std::collections::HashSet;

use super::{PipelineRecord, RunManifest};
use crate::eval::tables::{HumanScore, RunScores, UnderstandingSummary};
use crate::eval::{
    fleiss_kappa, majority_vote, score_by_category, score_detection, score_understanding, AnnotationMatrix,
    AnnotationScorer, DatasetFormat, DatasetInstance, EvalError, ExactScorer, Prediction, Scorer,
};
use crate::prompt::TaskKind;

fn positive(label: &str) -> bool {
    matches!(label.trim().to_ascii_lowercase().as_str(), "1" | "true" | "yes" | "correct")
}

/// Scores a finished run against the dataset it was drawn from. Gold rows
/// without a record are ignored, so runs over a sample score against that
/// sample; a record without a gold row is a join error.
///
/// Understanding runs use `annotations` as the scorer when given (items
/// `<id>/source`, `<id>/target`), else `scorer`, else exact match. Visual
/// runs need `annotations` with one item per instance id.
pub fn score_run(
    records: &[PipelineRecord],
    manifest: &RunManifest,
    gold: &[DatasetInstance],
    format: DatasetFormat,
    scorer: Option<&dyn Scorer>,
    annotations: Option<&AnnotationMatrix>,
) -> Result<RunScores, EvalError> {
    let ids: HashSet<&str> = records.iter().map(|r| r.instance_id.as_str()).collect();
    let gold: Vec<DatasetInstance> = gold.iter().filter(|g| ids.contains(g.id.as_str())).cloned().collect();
    if gold.len() != ids.len() {
        let known: HashSet<&str> = gold.iter().map(|g| g.id.as_str()).collect();
        let missing = records.iter().find(|r| !known.contains(r.instance_id.as_str())).unwrap();
        return Err(EvalError::JoinError(format!("record `{}` has no gold row", missing.instance_id)));
    }
    let predictions: Vec<Prediction> = records.iter().map(PipelineRecord::prediction).collect();
    let mut scores = RunScores {
        dataset: format,
        task: manifest.task,
        method: manifest.method.clone(),
        model_id: manifest.model_id.clone(),
        instances: records.len(),
        detection: None,
        understanding: None,
        human: None,
        by_category: Default::default(),
    };

    if gold.iter().all(|g| g.gold_label.is_some()) && manifest.task != TaskKind::VisualUnderstanding {
        scores.detection = Some(score_detection(&predictions, &gold)?);
        if gold.iter().any(|g| g.category.is_some()) {
            scores.by_category = score_by_category(&predictions, &gold)?;
        }
    }

    match manifest.task {
        TaskKind::ConceptualUnderstanding => {
            let with_domains: Vec<DatasetInstance> = gold
                .iter()
                .filter(|g| g.gold_source.is_some() && g.gold_target.is_some())
                .cloned()
                .collect();
            let keep: HashSet<&str> = with_domains.iter().map(|g| g.id.as_str()).collect();
            let preds: Vec<Prediction> =
                predictions.iter().filter(|p| keep.contains(p.instance_id.as_str())).cloned().collect();
            let from_annotations = annotations.map(AnnotationScorer::from_matrix).transpose()?;
            let scorer: &dyn Scorer = match (&from_annotations, scorer) {
                (Some(a), _) => a,
                (None, Some(s)) => s,
                (None, None) => &ExactScorer,
            };
            let u = score_understanding::<f64>(&preds, &with_domains, scorer)?;
            scores.understanding = Some(UnderstandingSummary {
                success_rate: u.success_rate,
                successes: u.successes,
                instances: u.instances,
            });
            if let Some(m) = annotations {
                scores.human = Some(HumanScore {
                    rate: u.success_rate,
                    items: m.len(),
                    annotators: m.annotators().len(),
                    fleiss_kappa: fleiss_kappa(m).ok(),
                });
            }
        }
        TaskKind::VisualUnderstanding => {
            if let Some(m) = annotations {
                let m = m.filter_items(|item| ids.contains(item))?;
                if m.len() != ids.len() {
                    return Err(EvalError::JoinError(format!(
                        "annotations cover {} of {} records",
                        m.len(),
                        ids.len()
                    )));
                }
                let labels = majority_vote(&m)?;
                let correct = labels.iter().filter(|l| positive(l)).count();
                scores.human = Some(HumanScore {
                    rate: correct as f64 / labels.len() as f64,
                    items: m.len(),
                    annotators: m.annotators().len(),
                    fleiss_kappa: fleiss_kappa(&m).ok(),
                });
            }
        }
        TaskKind::Detection => {}
    }
    Ok(scores)
}

pub const REPORTS: &str = "reports";
pub const SCORES_JSON: &str = "scores.json";

/// Writes `reports/scores.json` and `reports/scores.txt` under `dir`.
pub fn write_scores(dir: &std::path::Path, scores: &RunScores) -> std::io::Result<()> {
    let reports = dir.join(REPORTS);
    std::fs::create_dir_all(&reports)?;
    let mut json = serde_json::to_string_pretty(scores).map_err(std::io::Error::other)?;
    json.push('\n');
    crate::fsutil::write_atomic(&reports.join(SCORES_JSON), json.as_bytes())?;
    let text = crate::eval::render_text(&[crate::eval::tables::summary_block(scores)]);
    crate::fsutil::write_atomic(&reports.join("scores.txt"), text.as_bytes())
}

pub fn load_scores(dir: &std::path::Path) -> std::io::Result<RunScores> {
    let path = dir.join(REPORTS).join(SCORES_JSON);
    let text = std::fs::read_to_string(&path).map_err(|e| std::io::Error::other(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| std::io::Error::other(format!("{}: {e}", path.display())))
}
