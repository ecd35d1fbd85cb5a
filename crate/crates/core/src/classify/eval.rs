//! Evaluation protocols: stratified k-fold cross-validation, the
//! leave-one-group-out robustness check that hides one transport mode from
//! training, and the travel-term search used to harvest training
//! candidates.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::features::FeatureRow;
use crate::ingest::TweetRecord;
use crate::rng::SplitMix64;
use crate::textprep::{tokenize, Lang};

use super::{evaluate_model, EvalError, EvalReport, Scorer, TrainError};

/// Scalar means over folds or modes; confusion counts are summed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeanReport {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub auc: f64,
}

fn mean_of(reports: &[&EvalReport]) -> MeanReport {
    let n = reports.len().max(1) as f64;
    MeanReport {
        precision: reports.iter().map(|r| r.precision).sum::<f64>() / n,
        recall: reports.iter().map(|r| r.recall).sum::<f64>() / n,
        f1: reports.iter().map(|r| r.f1).sum::<f64>() / n,
        auc: reports.iter().map(|r| r.auc).sum::<f64>() / n,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub folds: Vec<EvalReport>,
    pub mean: MeanReport,
}

/// Deal indices into k folds. Stratified mode deals each class separately
/// so per-fold class counts differ by at most one.
fn make_folds(
    labels: &[i8],
    k: usize,
    stratified: bool,
    seed: u64,
) -> Vec<Vec<usize>> {
    let mut rng = SplitMix64::new(seed);
    let mut folds: Vec<Vec<usize>> = vec![Vec::new(); k];
    if stratified {
        let mut pos: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] > 0).collect();
        let mut neg: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] <= 0).collect();
        rng.shuffle(&mut pos);
        rng.shuffle(&mut neg);
        for (j, i) in pos.into_iter().enumerate() {
            folds[j % k].push(i);
        }
        for (j, i) in neg.into_iter().enumerate() {
            folds[j % k].push(i);
        }
    } else {
        let mut order: Vec<usize> = (0..labels.len()).collect();
        rng.shuffle(&mut order);
        for (j, i) in order.into_iter().enumerate() {
            folds[j % k].push(i);
        }
    }
    folds
}

/// k-fold cross-validation. The trainer is called once per fold on the
/// training partition; each fold's report evaluates the held-out part.
pub fn k_fold_cv<M, F>(
    rows: &[FeatureRow],
    labels: &[i8],
    k: usize,
    stratified: bool,
    seed: u64,
    mut trainer: F,
) -> Result<CvReport, EvalError>
where
    M: Scorer,
    F: FnMut(&[FeatureRow], &[i8]) -> Result<M, TrainError>,
{
    if rows.len() < k || k < 2 {
        return Err(EvalError::TooFewExamples {
            got: rows.len(),
            k,
        });
    }
    let folds = make_folds(labels, k, stratified, seed);
    let mut reports = Vec::with_capacity(k);
    for fold in &folds {
        let in_fold = |i: &usize| fold.contains(i);
        let train_idx: Vec<usize> = (0..rows.len()).filter(|i| !in_fold(i)).collect();
        let train_rows: Vec<FeatureRow> = train_idx.iter().map(|&i| rows[i].clone()).collect();
        let train_labels: Vec<i8> = train_idx.iter().map(|&i| labels[i]).collect();
        let model = trainer(&train_rows, &train_labels)?;
        let test_rows: Vec<FeatureRow> = fold.iter().map(|&i| rows[i].clone()).collect();
        let test_labels: Vec<i8> = fold.iter().map(|&i| labels[i]).collect();
        reports.push(evaluate_model(&model, &test_rows, &test_labels)?);
    }
    let mean = mean_of(&reports.iter().collect::<Vec<_>>());
    Ok(CvReport {
        folds: reports,
        mean,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogoReport {
    /// (hidden mode, training positives used, test positives, report).
    pub per_mode: Vec<(String, usize, usize, EvalReport)>,
    pub mean: MeanReport,
}

/// Leave-one-group-out: for each transport mode, train on every other
/// mode's positives plus the training negatives, and test on the hidden
/// mode's positives plus a seeded held-out negative sample of
/// `test_negatives` (excluded from training). The final score is the
/// unweighted mean over modes.
pub fn leave_one_group_out<M, F>(
    positives_by_mode: &BTreeMap<String, Vec<FeatureRow>>,
    negatives: &[FeatureRow],
    test_negatives: usize,
    seed: u64,
    only_modes: Option<&[String]>,
    mut trainer: F,
) -> Result<LogoReport, EvalError>
where
    M: Scorer,
    F: FnMut(&[FeatureRow], &[i8]) -> Result<M, TrainError>,
{
    if let Some(modes) = only_modes {
        for m in modes {
            if !positives_by_mode.contains_key(m) {
                return Err(EvalError::UnknownMode(m.clone()));
            }
        }
    }
    if negatives.len() <= test_negatives {
        return Err(EvalError::EmptyGroup(format!(
            "{} negatives cannot spare {} for testing",
            negatives.len(),
            test_negatives
        )));
    }

    // One seeded holdout shared across modes.
    let mut rng = SplitMix64::new(seed);
    let mut neg_order: Vec<usize> = (0..negatives.len()).collect();
    rng.shuffle(&mut neg_order);
    let (test_neg_idx, train_neg_idx) = neg_order.split_at(test_negatives);
    let train_negs: Vec<FeatureRow> = train_neg_idx.iter().map(|&i| negatives[i].clone()).collect();
    let test_negs: Vec<FeatureRow> = test_neg_idx.iter().map(|&i| negatives[i].clone()).collect();

    let mut per_mode = Vec::new();
    for (mode, hidden_rows) in positives_by_mode {
        if let Some(modes) = only_modes {
            if !modes.contains(mode) {
                continue;
            }
        }
        let mut train_rows: Vec<FeatureRow> = Vec::new();
        let mut train_labels: Vec<i8> = Vec::new();
        for (other, rows) in positives_by_mode {
            if other != mode {
                train_rows.extend(rows.iter().cloned());
                train_labels.extend(std::iter::repeat(1).take(rows.len()));
            }
        }
        let train_pos = train_rows.len();
        if train_pos == 0 {
            return Err(EvalError::EmptyGroup(format!(
                "no training positives left when hiding {mode}"
            )));
        }
        if hidden_rows.is_empty() {
            return Err(EvalError::EmptyGroup(format!("mode {mode} has no examples")));
        }
        train_rows.extend(train_negs.iter().cloned());
        train_labels.extend(std::iter::repeat(-1).take(train_negs.len()));

        let model = trainer(&train_rows, &train_labels)?;

        let mut test_rows: Vec<FeatureRow> = hidden_rows.clone();
        let mut test_labels: Vec<i8> = vec![1; hidden_rows.len()];
        test_rows.extend(test_negs.iter().cloned());
        test_labels.extend(std::iter::repeat(-1).take(test_negs.len()));
        let report = evaluate_model(&model, &test_rows, &test_labels)?;
        per_mode.push((mode.clone(), train_pos, hidden_rows.len(), report));
    }

    let mean = mean_of(&per_mode.iter().map(|(_, _, _, r)| r).collect::<Vec<_>>());
    Ok(LogoReport { per_mode, mean })
}

/// Travel-term table: per-mode whole-token search terms for one language.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TermTable {
    pub modes: Vec<(String, Vec<String>)>,
}

impl TermTable {
    /// The bundled per-language mode terms used to harvest training
    /// candidates.
    pub fn builtin(lang: Lang) -> Self {
        let modes: Vec<(&str, Vec<&str>)> = match lang {
            Lang::Pt => vec![
                ("bike", vec!["bicicleta", "moto"]),
                ("bus", vec!["onibus", "ônibus"]),
                ("car", vec!["carro"]),
                ("taxi", vec!["taxi", "táxi"]),
                ("train", vec!["metro", "metrô", "trem"]),
                ("walk", vec!["caminhar"]),
            ],
            Lang::En => vec![
                ("bike", vec!["bicycle", "bike"]),
                ("bus", vec!["bus"]),
                ("car", vec!["car"]),
                ("taxi", vec!["taxi", "cab"]),
                ("train", vec!["metro", "train", "subway"]),
                ("walk", vec!["walk"]),
            ],
        };
        TermTable {
            modes: modes
                .into_iter()
                .map(|(m, terms)| {
                    (
                        m.to_string(),
                        terms.into_iter().map(|t| t.to_string()).collect(),
                    )
                })
                .collect(),
        }
    }

    pub fn mode_names(&self) -> Vec<String> {
        self.modes.iter().map(|(m, _)| m.clone()).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TermMatch {
    pub record_id: String,
    pub mode: String,
    pub term: String,
}

/// Case-insensitive whole-token match of any table term against the
/// tokenized text. A record can match several modes, one entry per mode;
/// "trained" does not match "train".
pub fn travel_term_search(records: &[TweetRecord], table: &TermTable) -> Vec<TermMatch> {
    let mut matches = Vec::new();
    for record in records {
        let tokens: Vec<String> = tokenize(&record.text)
            .into_iter()
            .map(|t| t.surface.to_lowercase())
            .collect();
        for (mode, terms) in &table.modes {
            if let Some(term) = terms
                .iter()
                .find(|term| tokens.iter().any(|tok| tok == term.to_lowercase().as_str()))
            {
                matches.push(TermMatch {
                    record_id: record.id.clone(),
                    mode: mode.clone(),
                    term: term.clone(),
                });
            }
        }
    }
    matches
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classify::{train_linear, LinearConfig, LossKind};
    use crate::ingest::EntityCounts;

    fn dense(values: &[f64]) -> FeatureRow {
        FeatureRow::from_dense(values.to_vec())
    }

    fn record(id: &str, text: &str) -> TweetRecord {
        TweetRecord {
            id: id.into(),
            text: text.into(),
            created_at_utc: 0,
            lang: "pt".into(),
            coordinate: None,
            place: None,
            entities: EntityCounts::default(),
            user_id: "u".into(),
        }
    }

    fn linear_trainer(
        rows: &[FeatureRow],
        labels: &[i8],
    ) -> Result<crate::classify::LinearModel, TrainError> {
        train_linear(
            rows,
            labels,
            LossKind::Hinge,
            LinearConfig {
                lambda: 1e-3,
                epochs: 30,
                seed: 5,
            },
        )
    }

    #[test]
    fn folds_partition_the_set() {
        let labels: Vec<i8> = (0..100).map(|i| if i < 60 { 1 } else { -1 }).collect();
        let folds = make_folds(&labels, 10, true, 3);
        assert_eq!(folds.len(), 10);
        let mut all: Vec<usize> = folds.iter().flatten().copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..100).collect::<Vec<_>>());
        for fold in &folds {
            assert_eq!(fold.len(), 10);
            let pos = fold.iter().filter(|&&i| labels[i] > 0).count();
            // 60/40 data: every stratified fold holds 6 positives.
            assert_eq!(pos, 6);
        }
    }

    #[test]
    fn stratified_within_one_example() {
        let labels: Vec<i8> = (0..53).map(|i| if i < 21 { 1 } else { -1 }).collect();
        let folds = make_folds(&labels, 5, true, 9);
        let pos_counts: Vec<usize> = folds
            .iter()
            .map(|f| f.iter().filter(|&&i| labels[i] > 0).count())
            .collect();
        let max = pos_counts.iter().max().unwrap();
        let min = pos_counts.iter().min().unwrap();
        assert!(max - min <= 1, "positive counts {pos_counts:?}");
    }

    #[test]
    fn cv_runs_and_reports() {
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for i in 0..40 {
            let x = i as f64 / 40.0;
            rows.push(dense(&[x, 1.0 - x]));
            labels.push(if x > 0.5 { 1 } else { -1 });
        }
        let report = k_fold_cv(&rows, &labels, 10, true, 1, linear_trainer).unwrap();
        assert_eq!(report.folds.len(), 10);
        assert!(report.mean.f1 > 0.8, "mean f1 {}", report.mean.f1);
    }

    #[test]
    fn cv_too_few_examples() {
        let rows = vec![dense(&[1.0]); 3];
        let labels = vec![1, -1, 1];
        assert!(matches!(
            k_fold_cv(&rows, &labels, 10, true, 1, linear_trainer),
            Err(EvalError::TooFewExamples { got: 3, k: 10 })
        ));
    }

    #[test]
    fn logo_dataset_arithmetic_matches_published_row() {
        // Thesis-shaped counts: 1,686 positives, Taxi 314. Hiding Taxi
        // leaves 1,372 training positives and 314 test positives.
        let counts = [
            ("bike", 300),
            ("bus", 311),
            ("car", 317),
            ("taxi", 314),
            ("train", 317),
            ("walk", 217),
        ];
        let mut positives: BTreeMap<String, Vec<FeatureRow>> = BTreeMap::new();
        for (i, (mode, n)) in counts.iter().enumerate() {
            positives.insert(
                mode.to_string(),
                (0..*n).map(|j| dense(&[i as f64, (j % 7) as f64])).collect(),
            );
        }
        let negatives: Vec<FeatureRow> = (0..1986).map(|j| dense(&[-1.0, (j % 11) as f64])).collect();

        let report =
            leave_one_group_out(&positives, &negatives, 300, 1, None, linear_trainer).unwrap();
        let taxi = report
            .per_mode
            .iter()
            .find(|(m, _, _, _)| m == "taxi")
            .unwrap();
        assert_eq!(taxi.1, 1372);
        assert_eq!(taxi.2, 314);
        // Training negatives after the 300 holdout match the published 1,686.
        assert_eq!(negatives.len() - 300, 1686);
        let total_positives: usize = counts.iter().map(|(_, n)| n).sum();
        assert_eq!(total_positives, 1686);
    }

    #[test]
    fn logo_single_mode_is_empty_group() {
        let mut positives = BTreeMap::new();
        positives.insert("bus".to_string(), vec![dense(&[1.0]); 5]);
        let negatives = vec![dense(&[-1.0]); 10];
        assert!(matches!(
            leave_one_group_out(&positives, &negatives, 3, 1, None, linear_trainer),
            Err(EvalError::EmptyGroup(_))
        ));
    }

    #[test]
    fn logo_unknown_mode_rejected() {
        let mut positives = BTreeMap::new();
        positives.insert("bus".to_string(), vec![dense(&[1.0]); 5]);
        positives.insert("car".to_string(), vec![dense(&[2.0]); 5]);
        let negatives = vec![dense(&[-1.0]); 10];
        let modes = vec!["hoverboard".to_string()];
        assert!(matches!(
            leave_one_group_out(&positives, &negatives, 3, 1, Some(&modes), linear_trainer),
            Err(EvalError::UnknownMode(_))
        ));
    }

    #[test]
    fn term_search_matches_whole_tokens() {
        let table = TermTable::builtin(Lang::Pt);
        let records = vec![
            record("1", "meu ônibus atrasou"),
            record("2", "I trained hard"),
            record("3", ""),
        ];
        // Empty text cannot come from ingest but the search must not choke.
        let matches = travel_term_search(&records, &table);
        assert_eq!(matches.len(), 1);
        assert_eq!(matches[0].record_id, "1");
        assert_eq!(matches[0].mode, "bus");

        let en = TermTable::builtin(Lang::En);
        let matches = travel_term_search(&records, &en);
        assert!(matches.is_empty(), "'trained' must not match 'train'");
    }

    #[test]
    fn term_search_case_insensitive_and_multi_mode() {
        let table = TermTable::builtin(Lang::En);
        let records = vec![record("1", "Took the BUS then a Taxi")];
        let matches = travel_term_search(&records, &table);
        let modes: Vec<&str> = matches.iter().map(|m| m.mode.as_str()).collect();
        assert_eq!(modes, vec!["bus", "taxi"]);
    }
}
