//! Linear classifiers trained in the primal by SGD: hinge loss with the
//! 1/(lambda t) step schedule, or logistic loss. Rows keep their sparse
//! block sparse; the weight vector uses a scale factor so each step touches
//! only the row's nonzero coordinates.

use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::container;
use crate::features::FeatureRow;
use crate::rng::SplitMix64;

use super::{Scorer, TrainError};

pub const LINEAR_MAGIC: &str = "CPLIN1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LossKind {
    Hinge,
    Logistic,
}

impl std::str::FromStr for LossKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "hinge" => Ok(LossKind::Hinge),
            "logistic" => Ok(LossKind::Logistic),
            other => Err(format!("unknown loss {other:?} (expected hinge|logistic)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearConfig {
    pub lambda: f64,
    pub epochs: usize,
    pub seed: u64,
}

impl Default for LinearConfig {
    fn default() -> Self {
        LinearConfig {
            lambda: 1e-4,
            epochs: 50,
            seed: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub loss: LossKind,
    pub config: LinearConfig,
    /// Regularized empirical risk over the training set after each epoch.
    pub epoch_losses: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct LinearHeader {
    bias: f64,
    loss: LossKind,
    config: LinearConfig,
    arity: usize,
    epoch_losses: Vec<f64>,
}

impl Scorer for LinearModel {
    fn decision_score(&self, row: &FeatureRow) -> f64 {
        row.dot(&self.weights) + self.bias
    }

    fn threshold(&self) -> f64 {
        0.0
    }
}

impl LinearModel {
    pub fn save(&self, path: &Path) -> Result<(), TrainError> {
        let mut w = BufWriter::new(File::create(path).map_err(container::ContainerError::Io)?);
        let header = LinearHeader {
            bias: self.bias,
            loss: self.loss,
            config: self.config,
            arity: self.weights.len(),
            epoch_losses: self.epoch_losses.clone(),
        };
        container::write_header(&mut w, LINEAR_MAGIC, &header)?;
        container::write_f32_table(&mut w, &self.weights)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, TrainError> {
        let mut r = BufReader::new(File::open(path).map_err(container::ContainerError::Io)?);
        let header: LinearHeader = container::read_header(&mut r, LINEAR_MAGIC)?;
        let weights = container::read_f32_table(&mut r, header.arity)?;
        Ok(LinearModel {
            weights,
            bias: header.bias,
            loss: header.loss,
            config: header.config,
            epoch_losses: header.epoch_losses,
        })
    }
}

fn sigmoid(x: f64) -> f64 {
    let x = x.clamp(-30.0, 30.0);
    1.0 / (1.0 + (-x).exp())
}

/// Logistic loss ln(1 + exp(-m)), computed stably for large |m|.
fn log_loss(margin: f64) -> f64 {
    if margin > 30.0 {
        0.0
    } else if margin < -30.0 {
        -margin
    } else {
        (1.0 + (-margin).exp()).ln()
    }
}

struct ScaledWeights {
    scale: f64,
    table: Vec<f64>,
}

impl ScaledWeights {
    fn new(arity: usize) -> Self {
        ScaledWeights {
            scale: 1.0,
            table: vec![0.0; arity],
        }
    }

    fn dot(&self, row: &FeatureRow) -> f64 {
        self.scale * row.dot(&self.table)
    }

    /// w <- decay * w.
    fn rescale(&mut self, decay: f64) {
        if decay == 0.0 {
            self.table.iter_mut().for_each(|w| *w = 0.0);
            self.scale = 1.0;
            return;
        }
        self.scale *= decay;
        if self.scale < 1e-9 {
            let s = self.scale;
            self.table.iter_mut().for_each(|w| *w *= s);
            self.scale = 1.0;
        }
    }

    /// w <- w + coeff * x, touching only nonzero coordinates of x.
    fn add_row(&mut self, row: &FeatureRow, coeff: f64) {
        let c = coeff / self.scale;
        for &(i, v) in &row.sparse {
            self.table[i as usize] += c * v;
        }
        for (j, &v) in row.dense.iter().enumerate() {
            self.table[row.sparse_arity + j] += c * v;
        }
    }

    fn into_dense(self) -> Vec<f64> {
        let s = self.scale;
        self.table.into_iter().map(|w| w * s).collect()
    }
}

/// Full-objective value: mean loss plus (lambda/2)||w||^2.
fn objective(
    rows: &[FeatureRow],
    labels: &[i8],
    weights: &ScaledWeights,
    bias: f64,
    loss: LossKind,
    lambda: f64,
) -> f64 {
    let mut total = 0.0;
    for (row, &y) in rows.iter().zip(labels) {
        let margin = y as f64 * (weights.dot(row) + bias);
        total += match loss {
            LossKind::Hinge => (1.0 - margin).max(0.0),
            LossKind::Logistic => log_loss(margin),
        };
    }
    let norm2: f64 = weights
        .table
        .iter()
        .map(|w| (w * weights.scale) * (w * weights.scale))
        .sum();
    total / rows.len() as f64 + 0.5 * lambda * norm2
}

/// Train by SGD over the regularized empirical risk. Hinge loss follows the
/// classic primal schedule eta_t = 1/(lambda t); logistic uses
/// eta_t = eta0 / (1 + eta0 lambda t). Deterministic given the seed.
pub fn train_linear(
    rows: &[FeatureRow],
    labels: &[i8],
    loss: LossKind,
    config: LinearConfig,
) -> Result<LinearModel, TrainError> {
    if config.lambda <= 0.0 || config.epochs == 0 {
        return Err(TrainError::BadConfig(
            "lambda must be positive and epochs >= 1".into(),
        ));
    }
    if rows.is_empty() || labels.iter().all(|&y| y > 0) || labels.iter().all(|&y| y <= 0) {
        return Err(TrainError::SingleClassTraining);
    }
    assert_eq!(rows.len(), labels.len(), "rows/labels length mismatch");
    let arity = rows.iter().map(FeatureRow::arity).max().unwrap_or(0);

    let mut weights = ScaledWeights::new(arity);
    let mut bias = 0.0;
    let mut rng = SplitMix64::new(config.seed);
    let mut order: Vec<usize> = (0..rows.len()).collect();
    let mut epoch_losses = Vec::with_capacity(config.epochs);
    let mut t = 0u64;

    for _epoch in 0..config.epochs {
        rng.shuffle(&mut order);
        for &i in &order {
            t += 1;
            let row = &rows[i];
            let y = labels[i] as f64;
            match loss {
                LossKind::Hinge => {
                    let eta = 1.0 / (config.lambda * t as f64);
                    let margin = y * (weights.dot(row) + bias);
                    weights.rescale(1.0 - eta * config.lambda);
                    if margin < 1.0 {
                        weights.add_row(row, eta * y);
                        bias += eta * y;
                    }
                }
                LossKind::Logistic => {
                    let eta = 1.0 / (1.0 + config.lambda * t as f64);
                    let score = weights.dot(row) + bias;
                    let coeff = y * sigmoid(-y * score);
                    weights.rescale(1.0 - eta * config.lambda);
                    weights.add_row(row, eta * coeff);
                    bias += eta * coeff;
                }
            }
        }
        epoch_losses.push(objective(rows, labels, &weights, bias, loss, config.lambda));
    }

    let weights = weights.into_dense();
    if weights.iter().any(|w| !w.is_finite()) || !bias.is_finite() {
        return Err(TrainError::BadConfig("training diverged".into()));
    }
    Ok(LinearModel {
        weights,
        bias,
        loss,
        config,
        epoch_losses,
    })
}
