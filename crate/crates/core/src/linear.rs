//! Multiclass linear classifiers over sparse vectors: L2-regularized
//! multinomial logistic regression and one-vs-rest linear SVMs.
//!
//! Both trainers are full-batch and deterministic; identical inputs
//! produce bit-identical models.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::SparseVector;
use crate::optimize::{minimize, LbfgsConfig, LbfgsOutcome};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum LinearKind {
    LogReg,
    Svm,
}

/// A trained linear model: per-class weight rows and unregularized biases.
/// Scores are log-odds for `LogReg` and margins for `Svm`; prediction is
/// the argmax with ties broken by the lowest class index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub kind: LinearKind,
    pub class_names: Vec<String>,
    pub num_features: usize,
    /// `weights[class][feature]`.
    pub weights: Vec<Vec<f64>>,
    pub bias: Vec<f64>,
}

impl LinearModel {
    pub fn num_classes(&self) -> usize {
        self.class_names.len()
    }

    /// Squared Euclidean norm of the weight matrix (biases excluded).
    pub fn weight_norm_sq(&self) -> f64 {
        self.weights
            .iter()
            .flat_map(|row| row.iter())
            .map(|w| w * w)
            .sum()
    }

    pub(crate) fn validate(&self) -> Result<()> {
        let classes = self.class_names.len();
        if classes == 0 {
            return Err(Error::InvalidInput("model has no classes".to_string()));
        }
        let mut sorted = self.class_names.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != classes {
            return Err(Error::InvalidInput(
                "class names must be unique".to_string(),
            ));
        }
        if self.weights.len() != classes || self.bias.len() != classes {
            return Err(Error::InvalidInput(format!(
                "weight rows ({}) and biases ({}) must match the {classes} classes",
                self.weights.len(),
                self.bias.len()
            )));
        }
        if self.weights.iter().any(|row| row.len() != self.num_features) {
            return Err(Error::InvalidInput(format!(
                "weight rows must have {} columns",
                self.num_features
            )));
        }
        Ok(())
    }
}

fn validate_data(
    data: &[(SparseVector, usize)],
    num_classes: usize,
    num_features: usize,
) -> Result<()> {
    if data.is_empty() {
        return Err(Error::InvalidInput(
            "training data must not be empty".to_string(),
        ));
    }
    for (i, (x, y)) in data.iter().enumerate() {
        if *y >= num_classes {
            return Err(Error::InvalidInput(format!(
                "instance {i} has class index {y}, but there are {num_classes} classes"
            )));
        }
        if let Some(max) = x.max_index() {
            if max >= num_features {
                return Err(Error::InvalidInput(format!(
                    "instance {i} uses feature column {max}, but the model has {num_features}"
                )));
            }
        }
    }
    Ok(())
}

fn class_scores(weights: &[Vec<f64>], bias: &[f64], x: &SparseVector) -> Vec<f64> {
    weights
        .iter()
        .zip(bias)
        .map(|(row, b)| b + x.dot(row))
        .collect()
}

fn log_sum_exp(scores: &[f64]) -> f64 {
    let max = scores.iter().fold(f64::NEG_INFINITY, |m, &s| m.max(s));
    max + scores.iter().map(|s| (s - max).exp()).sum::<f64>().ln()
}

fn argmax_lowest(scores: &[f64]) -> usize {
    let mut best = 0;
    for (i, &score) in scores.iter().enumerate().skip(1) {
        if score > scores[best] {
            best = i;
        }
    }
    best
}

/// Multinomial negative log-likelihood plus `(l2/2)·‖W‖²` and its gradient,
/// over parameters packed as `[weights row-major, biases]`.
pub(crate) fn logreg_objective(
    params: &[f64],
    data: &[(SparseVector, usize)],
    num_classes: usize,
    num_features: usize,
    l2: f64,
) -> (f64, Vec<f64>) {
    let (weight_block, bias_block) = params.split_at(num_classes * num_features);
    let mut value = 0.0;
    let mut grad = vec![0.0; params.len()];
    let mut scores = vec![0.0; num_classes];
    for (x, gold) in data {
        for (c, score) in scores.iter_mut().enumerate() {
            let row = &weight_block[c * num_features..(c + 1) * num_features];
            *score = bias_block[c] + x.dot(row);
        }
        let lse = log_sum_exp(&scores);
        value += lse - scores[*gold];
        for c in 0..num_classes {
            let p = (scores[c] - lse).exp();
            let coefficient = p - if c == *gold { 1.0 } else { 0.0 };
            grad[num_classes * num_features + c] += coefficient;
            let row = &mut grad[c * num_features..(c + 1) * num_features];
            for (j, v) in x.iter() {
                row[j] += coefficient * v;
            }
        }
    }
    // Biases are unregularized.
    for (i, w) in weight_block.iter().enumerate() {
        value += 0.5 * l2 * w * w;
        grad[i] += l2 * w;
    }
    (value, grad)
}

fn run_logreg(
    data: &[(SparseVector, usize)],
    num_classes: usize,
    num_features: usize,
    l2: f64,
    tol: f64,
    max_epochs: usize,
) -> LbfgsOutcome {
    let config = LbfgsConfig::with_stopping(tol, max_epochs);
    minimize(
        |params| logreg_objective(params, data, num_classes, num_features, l2),
        vec![0.0; num_classes * num_features + num_classes],
        &config,
    )
}

/// Trains multinomial logistic regression by deterministic full-batch
/// quasi-Newton descent; stops at gradient max-norm `< tol` or after
/// `max_epochs` iterations.
pub fn train_logreg(
    data: &[(SparseVector, usize)],
    class_names: &[String],
    num_features: usize,
    l2: f64,
    tol: f64,
    max_epochs: usize,
) -> Result<LinearModel> {
    if l2 < 0.0 {
        return Err(Error::InvalidInput(format!(
            "l2 must be non-negative, got {l2}"
        )));
    }
    let num_classes = class_names.len();
    validate_data(data, num_classes, num_features)?;
    let outcome = run_logreg(data, num_classes, num_features, l2, tol, max_epochs);
    let (weight_block, bias_block) = outcome.x.split_at(num_classes * num_features);
    let model = LinearModel {
        kind: LinearKind::LogReg,
        class_names: class_names.to_vec(),
        num_features,
        weights: weight_block
            .chunks(num_features.max(1))
            .take(num_classes)
            .map(|row| row.to_vec())
            .collect(),
        bias: bias_block.to_vec(),
    };
    // chunks() of an empty block yields nothing; restore empty rows.
    let mut model = model;
    if num_features == 0 {
        model.weights = vec![Vec::new(); num_classes];
    }
    model.validate()?;
    Ok(model)
}

/// One binary L1-hinge SVM by dual coordinate descent over the bias-augmented
/// problem; `labels[i]` is ±1. Returns the augmented weight vector of length
/// `num_features + 1` (bias last).
fn svm_binary(
    data: &[(SparseVector, usize)],
    labels: &[f64],
    num_features: usize,
    c: f64,
    tol: f64,
    max_epochs: usize,
) -> Vec<f64> {
    let mut w = vec![0.0; num_features + 1];
    let mut alpha = vec![0.0; data.len()];
    // Diagonal of the Gram matrix, with the constant bias feature folded in.
    let q_diag: Vec<f64> = data.iter().map(|(x, _)| x.norm_sq() + 1.0).collect();
    for _ in 0..max_epochs {
        let mut max_violation = 0.0f64;
        for (i, (x, _)) in data.iter().enumerate() {
            let margin = x.dot(&w[..num_features]) + w[num_features];
            let g = labels[i] * margin - 1.0;
            let pg = if alpha[i] <= 0.0 {
                g.min(0.0)
            } else if alpha[i] >= c {
                g.max(0.0)
            } else {
                g
            };
            max_violation = max_violation.max(pg.abs());
            if pg.abs() > 1e-12 {
                let updated = (alpha[i] - g / q_diag[i]).clamp(0.0, c);
                let delta = (updated - alpha[i]) * labels[i];
                alpha[i] = updated;
                for (j, v) in x.iter() {
                    w[j] += delta * v;
                }
                w[num_features] += delta;
            }
        }
        if max_violation < tol {
            break;
        }
    }
    w
}

/// Trains one-vs-rest linear SVMs with hinge loss and penalty `c` by a
/// deterministic dual coordinate scheme (fixed instance order, no
/// shuffling).
pub fn train_svm(
    data: &[(SparseVector, usize)],
    class_names: &[String],
    num_features: usize,
    c: f64,
    tol: f64,
    max_epochs: usize,
) -> Result<LinearModel> {
    if c <= 0.0 {
        return Err(Error::InvalidInput(format!(
            "penalty parameter must be positive, got {c}"
        )));
    }
    let num_classes = class_names.len();
    validate_data(data, num_classes, num_features)?;
    let mut weights = Vec::with_capacity(num_classes);
    let mut bias = Vec::with_capacity(num_classes);
    for class in 0..num_classes {
        let labels: Vec<f64> = data
            .iter()
            .map(|(_, y)| if *y == class { 1.0 } else { -1.0 })
            .collect();
        let mut w = svm_binary(data, &labels, num_features, c, tol, max_epochs);
        let b = w.pop().expect("augmented weight vector is never empty");
        weights.push(w);
        bias.push(b);
    }
    let model = LinearModel {
        kind: LinearKind::Svm,
        class_names: class_names.to_vec(),
        num_features,
        weights,
        bias,
    };
    model.validate()?;
    Ok(model)
}

/// Scores `x` and returns the winning class index with the full score
/// vector. Fails if `x` addresses a column the model does not have.
pub fn predict_linear(model: &LinearModel, x: &SparseVector) -> Result<(usize, Vec<f64>)> {
    if let Some(max) = x.max_index() {
        if max >= model.num_features {
            return Err(Error::InvalidInput(format!(
                "feature column {max} out of range ({} features)",
                model.num_features
            )));
        }
    }
    let scores = class_scores(&model.weights, &model.bias, x);
    Ok((argmax_lowest(&scores), scores))
}
