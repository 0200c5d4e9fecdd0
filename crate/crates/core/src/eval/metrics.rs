use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use super::{DatasetInstance, EvalError, Scorer};
use crate::Scalar;

/// One system answer for a dataset instance. `metaphorical` is `None` when
/// the run produced an error record instead of a verdict.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Prediction {
    pub instance_id: String,
    pub metaphorical: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub property: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

impl Confusion {
    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.tn + self.fn_
    }

    pub fn record(&mut self, gold: bool, predicted: bool) {
        match (gold, predicted) {
            (true, true) => self.tp += 1,
            (false, true) => self.fp += 1,
            (false, false) => self.tn += 1,
            (true, false) => self.fn_ += 1,
        }
    }

    fn ratio<T: Scalar>(num: u64, den: u64) -> T {
        if den == 0 {
            T::zero()
        } else {
            T::from_u64(num).unwrap() / T::from_u64(den).unwrap()
        }
    }

    pub fn accuracy<T: Scalar>(&self) -> T {
        Self::ratio(self.tp + self.tn, self.total())
    }

    pub fn precision<T: Scalar>(&self) -> T {
        Self::ratio(self.tp, self.tp + self.fp)
    }

    pub fn recall<T: Scalar>(&self) -> T {
        Self::ratio(self.tp, self.tp + self.fn_)
    }

    /// 2PR / (P + R), computed as 2tp / (2tp + fp + fn); 0 without true positives.
    pub fn f1<T: Scalar>(&self) -> T {
        Self::ratio(2 * self.tp, 2 * self.tp + self.fp + self.fn_)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionScores<T> {
    pub accuracy: T,
    pub f1: T,
    pub precision: T,
    pub recall: T,
    pub confusion: Confusion,
    /// Predictions without a verdict, already counted as wrong in `confusion`.
    pub errors: u64,
}

impl<T: Scalar> DetectionScores<T> {
    pub fn from_confusion(confusion: Confusion, errors: u64) -> Self {
        Self {
            accuracy: confusion.accuracy(),
            f1: confusion.f1(),
            precision: confusion.precision(),
            recall: confusion.recall(),
            confusion,
            errors,
        }
    }
}

fn join<'a>(
    predictions: &'a [Prediction],
    gold: &'a [DatasetInstance],
) -> Result<Vec<(&'a Prediction, &'a DatasetInstance)>, EvalError> {
    let mut by_id: HashMap<&str, &Prediction> = HashMap::new();
    for p in predictions {
        if by_id.insert(p.instance_id.as_str(), p).is_some() {
            return Err(EvalError::JoinError(format!("duplicate prediction for `{}`", p.instance_id)));
        }
    }
    if by_id.len() != gold.len() {
        let gold_ids: std::collections::HashSet<&str> = gold.iter().map(|g| g.id.as_str()).collect();
        if let Some(extra) = predictions.iter().find(|p| !gold_ids.contains(p.instance_id.as_str())) {
            return Err(EvalError::JoinError(format!("prediction `{}` has no gold instance", extra.instance_id)));
        }
    }
    gold.iter()
        .map(|g| {
            by_id
                .get(g.id.as_str())
                .map(|p| (*p, g))
                .ok_or_else(|| EvalError::JoinError(format!("no prediction for `{}`", g.id)))
        })
        .collect()
}

/// Accuracy and F1 with metaphorical as the positive class. Every gold
/// instance needs exactly one prediction; predictions without a verdict
/// count as the wrong answer.
pub fn score_detection<T: Scalar>(
    predictions: &[Prediction],
    gold: &[DatasetInstance],
) -> Result<DetectionScores<T>, EvalError> {
    let mut confusion = Confusion::default();
    let mut errors = 0;
    for (p, g) in join(predictions, gold)? {
        let truth = g
            .gold_label
            .ok_or_else(|| EvalError::JoinError(format!("gold instance `{}` has no label", g.id)))?;
        let predicted = match p.metaphorical {
            Some(v) => v,
            None => {
                errors += 1;
                !truth
            }
        };
        confusion.record(truth, predicted);
    }
    Ok(DetectionScores::from_confusion(confusion, errors))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceScore {
    pub instance_id: String,
    pub source_score: Option<f64>,
    pub target_score: Option<f64>,
    pub success: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnderstandingScores<T> {
    pub success_rate: T,
    pub successes: u64,
    pub instances: u64,
    pub per_instance: Vec<InstanceScore>,
}

/// An instance succeeds when both the source and the target score strictly
/// above zero. Missing predicted domains fail without calling the scorer.
pub fn score_understanding<T: Scalar>(
    predictions: &[Prediction],
    gold: &[DatasetInstance],
    scorer: &dyn Scorer,
) -> Result<UnderstandingScores<T>, EvalError> {
    let mut per_instance = Vec::with_capacity(gold.len());
    for (p, g) in join(predictions, gold)? {
        let (gs, gt) = match (&g.gold_source, &g.gold_target) {
            (Some(s), Some(t)) => (s, t),
            _ => {
                return Err(EvalError::JoinError(format!(
                    "gold instance `{}` lacks source or target",
                    g.id
                )))
            }
        };
        let score = |candidate: &Option<String>, reference: &str, slot: &str| -> Result<Option<f64>, EvalError> {
            match candidate {
                Some(c) => scorer.score(&g.id, slot, c, reference).map(Some),
                None => Ok(None),
            }
        };
        let source_score = score(&p.source, gs, "source")?;
        let target_score = score(&p.target, gt, "target")?;
        let success = matches!((source_score, target_score), (Some(s), Some(t)) if s > 0.0 && t > 0.0);
        per_instance.push(InstanceScore {
            instance_id: g.id.clone(),
            source_score,
            target_score,
            success,
        });
    }
    let successes = per_instance.iter().filter(|s| s.success).count() as u64;
    let instances = per_instance.len() as u64;
    Ok(UnderstandingScores {
        success_rate: Confusion::ratio(successes, instances),
        successes,
        instances,
        per_instance,
    })
}

/// Detection scores split by dataset category (BCMTD).
pub fn score_by_category<T: Scalar>(
    predictions: &[Prediction],
    gold: &[DatasetInstance],
) -> Result<BTreeMap<super::Category, DetectionScores<T>>, EvalError> {
    let mut groups: BTreeMap<super::Category, Vec<DatasetInstance>> = BTreeMap::new();
    for g in gold {
        if let Some(c) = g.category {
            groups.entry(c).or_default().push(g.clone());
        }
    }
    let mut out = BTreeMap::new();
    for (category, members) in groups {
        let ids: std::collections::HashSet<&str> = members.iter().map(|m| m.id.as_str()).collect();
        let subset: Vec<Prediction> = predictions
            .iter()
            .filter(|p| ids.contains(p.instance_id.as_str()))
            .cloned()
            .collect();
        out.insert(category, score_detection(&subset, &members)?);
    }
    Ok(out)
}
