//! Travel-related binary classification: linear models trained in the
//! primal by SGD, a random forest, evaluation metrics with ROC/AUC, k-fold
//! cross-validation, the leave-one-group-out protocol, and the term search
//! used to build training candidates.

pub mod eval;
pub mod forest;
pub mod linear;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::features::FeatureRow;

pub use eval::{k_fold_cv, leave_one_group_out, travel_term_search, CvReport, LogoReport, TermTable};
pub use forest::{train_random_forest, ForestConfig, ForestModel, MaxFeatures};
pub use linear::{train_linear, LinearConfig, LinearModel, LossKind};

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("training set contains a single class")]
    SingleClassTraining,
    #[error("bad config: {0}")]
    BadConfig(String),
    #[error("container error: {0}")]
    Container(#[from] crate::container::ContainerError),
}

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("evaluation set contains a single class")]
    SingleClassEval,
    #[error("too few examples: {got} for k = {k}")]
    TooFewExamples { got: usize, k: usize },
    #[error("unknown mode: {0}")]
    UnknownMode(String),
    #[error("empty group: {0}")]
    EmptyGroup(String),
    #[error("training failed: {0}")]
    Train(#[from] TrainError),
}

/// A labeled training example: features, binary label, optional group tag
/// (the transport mode it was sampled from).
#[derive(Debug, Clone)]
pub struct LabeledExample {
    pub row: FeatureRow,
    /// +1 travel-related, -1 non-related.
    pub label: i8,
    pub group: Option<String>,
}

/// Anything that scores a feature row; the label is positive when the score
/// exceeds the model's threshold.
pub trait Scorer {
    fn decision_score(&self, row: &FeatureRow) -> f64;
    fn threshold(&self) -> f64;

    fn predict(&self, row: &FeatureRow) -> i8 {
        if self.decision_score(row) > self.threshold() {
            1
        } else {
            -1
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub true_pos: u64,
    pub false_pos: u64,
    pub false_neg: u64,
    pub true_neg: u64,
}

impl ConfusionCounts {
    pub fn total(&self) -> u64 {
        self.true_pos + self.false_pos + self.false_neg + self.true_neg
    }

    pub fn from_predictions(predicted: &[i8], actual: &[i8]) -> Self {
        let mut c = ConfusionCounts::default();
        for (&p, &a) in predicted.iter().zip(actual) {
            match (p > 0, a > 0) {
                (true, true) => c.true_pos += 1,
                (true, false) => c.false_pos += 1,
                (false, true) => c.false_neg += 1,
                (false, false) => c.true_neg += 1,
            }
        }
        c
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// Set when any of the defining ratios was 0/0 and reported as 0.
    pub degenerate: bool,
}

/// Precision = tp/(tp+fp), recall = tp/(tp+fn), F1 = 2PR/(P+R); any 0/0 is
/// reported as 0 with the degenerate flag set.
pub fn metrics(counts: &ConfusionCounts) -> Metrics {
    let mut degenerate = false;
    let mut ratio = |num: u64, den: u64| {
        if den == 0 {
            degenerate = true;
            0.0
        } else {
            num as f64 / den as f64
        }
    };
    let precision = ratio(counts.true_pos, counts.true_pos + counts.false_pos);
    let recall = ratio(counts.true_pos, counts.true_pos + counts.false_neg);
    let f1 = if precision + recall == 0.0 {
        degenerate = true;
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    Metrics {
        precision,
        recall,
        f1,
        degenerate,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RocPoint {
    pub fpr: f64,
    pub tpr: f64,
}

/// ROC curve by sweeping the threshold over distinct scores, and AUC by
/// trapezoidal integration. Tied positive/negative scores contribute 0.5,
/// matching the rank-statistic definition of AUC.
pub fn roc_auc(scores: &[f64], labels: &[i8]) -> Result<(Vec<RocPoint>, f64), EvalError> {
    assert_eq!(scores.len(), labels.len(), "scores/labels length mismatch");
    let positives = labels.iter().filter(|&&l| l > 0).count() as f64;
    let negatives = labels.len() as f64 - positives;
    if positives == 0.0 || negatives == 0.0 {
        return Err(EvalError::SingleClassEval);
    }

    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].partial_cmp(&scores[a]).unwrap());

    let mut points = Vec::with_capacity(scores.len() + 1);
    let mut tp = 0.0;
    let mut fp = 0.0;
    let mut prev_score = f64::INFINITY;
    for &i in &order {
        if scores[i] != prev_score {
            points.push(RocPoint {
                fpr: fp / negatives,
                tpr: tp / positives,
            });
            prev_score = scores[i];
        }
        if labels[i] > 0 {
            tp += 1.0;
        } else {
            fp += 1.0;
        }
    }
    points.push(RocPoint { fpr: 1.0, tpr: 1.0 });

    let mut auc = 0.0;
    for pair in points.windows(2) {
        auc += (pair[1].fpr - pair[0].fpr) * (pair[1].tpr + pair[0].tpr) / 2.0;
    }
    Ok((points, auc))
}

/// Full evaluation of one classifier run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub counts: ConfusionCounts,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub degenerate: bool,
    pub roc: Vec<RocPoint>,
    pub auc: f64,
}

/// Build a report from raw scores: confusion counts at the given threshold
/// plus the ROC sweep over all thresholds.
pub fn evaluate_scores(
    scores: &[f64],
    labels: &[i8],
    threshold: f64,
) -> Result<EvalReport, EvalError> {
    let predicted: Vec<i8> = scores
        .iter()
        .map(|&s| if s > threshold { 1 } else { -1 })
        .collect();
    let counts = ConfusionCounts::from_predictions(&predicted, labels);
    let m = metrics(&counts);
    let (roc, auc) = roc_auc(scores, labels)?;
    Ok(EvalReport {
        counts,
        precision: m.precision,
        recall: m.recall,
        f1: m.f1,
        degenerate: m.degenerate,
        roc,
        auc,
    })
}

/// Score a whole evaluation set with a trained model and report.
pub fn evaluate_model<M: Scorer>(
    model: &M,
    rows: &[FeatureRow],
    labels: &[i8],
) -> Result<EvalReport, EvalError> {
    let scores: Vec<f64> = rows.iter().map(|r| model.decision_score(r)).collect();
    evaluate_scores(&scores, labels, model.threshold())
}
