//! First-order linear-chain conditional random field with binary emission
//! features and label-bigram transitions: lattice scoring, exact inference
//! by forward-backward, maximum-likelihood training with L2 regularization,
//! and Viterbi decoding.
//!
//! All computation is in log space. Paths carry no begin/end boundary
//! weights; boundary information enters through pad features. Features
//! unseen at training time contribute nothing at prediction time.

use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::optimize::{minimize, LbfgsConfig};

/// The features active at one sequence position.
pub type FeatureSet = BTreeSet<String>;

/// A trained chain CRF.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CrfModelRepr", into = "CrfModelRepr")]
pub struct CrfModel {
    label_names: Vec<String>,
    feature_names: Vec<String>,
    feature_index: HashMap<String, usize>,
    /// `emission_weights[feature][label]`.
    pub emission_weights: Vec<Vec<f64>>,
    /// `transition_weights[from][to]`.
    pub transition_weights: Vec<Vec<f64>>,
    /// Regularizer strength recorded at training time.
    pub l2: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct CrfModelRepr {
    label_names: Vec<String>,
    feature_names: Vec<String>,
    emission_weights: Vec<Vec<f64>>,
    transition_weights: Vec<Vec<f64>>,
    l2: f64,
}

impl From<CrfModel> for CrfModelRepr {
    fn from(model: CrfModel) -> Self {
        CrfModelRepr {
            label_names: model.label_names,
            feature_names: model.feature_names,
            emission_weights: model.emission_weights,
            transition_weights: model.transition_weights,
            l2: model.l2,
        }
    }
}

impl TryFrom<CrfModelRepr> for CrfModel {
    type Error = Error;

    fn try_from(repr: CrfModelRepr) -> Result<Self> {
        CrfModel::from_parts(
            repr.label_names,
            repr.feature_names,
            repr.emission_weights,
            repr.transition_weights,
            repr.l2,
        )
    }
}

impl CrfModel {
    /// Assembles a model, checking dimensional consistency and uniqueness
    /// of labels and features.
    pub fn from_parts(
        label_names: Vec<String>,
        feature_names: Vec<String>,
        emission_weights: Vec<Vec<f64>>,
        transition_weights: Vec<Vec<f64>>,
        l2: f64,
    ) -> Result<Self> {
        let num_labels = label_names.len();
        if num_labels == 0 {
            return Err(Error::InvalidInput("model has no labels".to_string()));
        }
        let unique_labels: BTreeSet<&String> = label_names.iter().collect();
        if unique_labels.len() != num_labels {
            return Err(Error::InvalidInput(
                "label names must be unique".to_string(),
            ));
        }
        let unique_features: BTreeSet<&String> = feature_names.iter().collect();
        if unique_features.len() != feature_names.len() {
            return Err(Error::InvalidInput(
                "feature names must be unique".to_string(),
            ));
        }
        if emission_weights.len() != feature_names.len()
            || emission_weights.iter().any(|row| row.len() != num_labels)
        {
            return Err(Error::InvalidInput(format!(
                "emission weights must be {} x {num_labels}",
                feature_names.len()
            )));
        }
        if transition_weights.len() != num_labels
            || transition_weights.iter().any(|row| row.len() != num_labels)
        {
            return Err(Error::InvalidInput(format!(
                "transition weights must be {num_labels} x {num_labels}"
            )));
        }
        let feature_index = feature_names
            .iter()
            .enumerate()
            .map(|(i, f)| (f.clone(), i))
            .collect();
        Ok(CrfModel {
            label_names,
            feature_names,
            feature_index,
            emission_weights,
            transition_weights,
            l2,
        })
    }

    pub fn label_names(&self) -> &[String] {
        &self.label_names
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn num_labels(&self) -> usize {
        self.label_names.len()
    }

    pub fn num_features(&self) -> usize {
        self.feature_names.len()
    }

    pub fn feature_id(&self, feature: &str) -> Option<usize> {
        self.feature_index.get(feature).copied()
    }

    /// Total parameter count: emissions then transitions.
    pub fn num_parameters(&self) -> usize {
        self.num_features() * self.num_labels() + self.num_labels() * self.num_labels()
    }

    fn pack_parameters(&self) -> Vec<f64> {
        let mut params = Vec::with_capacity(self.num_parameters());
        for row in &self.emission_weights {
            params.extend_from_slice(row);
        }
        for row in &self.transition_weights {
            params.extend_from_slice(row);
        }
        params
    }
}

/// Log-potential container: per-position emission scores and the shared
/// transition scores.
#[derive(Debug, Clone, PartialEq)]
pub struct Lattice {
    /// `emissions[t][label]`, `t < T`.
    pub emissions: Vec<Vec<f64>>,
    /// `transitions[from][to]`.
    pub transitions: Vec<Vec<f64>>,
}

impl Lattice {
    pub fn len(&self) -> usize {
        self.emissions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.emissions.is_empty()
    }

    pub fn num_labels(&self) -> usize {
        self.transitions.len()
    }

    fn check_finite(&self) -> Result<()> {
        let finite = self
            .emissions
            .iter()
            .chain(self.transitions.iter())
            .all(|row| row.iter().all(|s| s.is_finite()));
        if finite {
            Ok(())
        } else {
            Err(Error::InvalidInput(
                "lattice contains a non-finite score".to_string(),
            ))
        }
    }

    /// Path score with the same operation order the dynamic programs use,
    /// so decoded paths re-score exactly.
    pub fn path_score(&self, labels: &[usize]) -> f64 {
        let mut score = self.emissions[0][labels[0]];
        for t in 1..labels.len() {
            score = (score + self.transitions[labels[t - 1]][labels[t]]) + self.emissions[t][labels[t]];
        }
        score
    }
}

/// Sums each feature's emission weights into per-position scores. Features
/// absent from the model are ignored.
pub fn build_lattice(model: &CrfModel, feature_sets: &[FeatureSet]) -> Result<Lattice> {
    if feature_sets.is_empty() {
        return Err(Error::InvalidInput(
            "cannot build a lattice for an empty sequence".to_string(),
        ));
    }
    let num_labels = model.num_labels();
    let emissions = feature_sets
        .iter()
        .map(|features| {
            let mut scores = vec![0.0; num_labels];
            for feature in features {
                if let Some(f) = model.feature_id(feature) {
                    for (score, weight) in scores.iter_mut().zip(&model.emission_weights[f]) {
                        *score += weight;
                    }
                }
            }
            scores
        })
        .collect();
    Ok(Lattice {
        emissions,
        transitions: model.transition_weights.clone(),
    })
}

fn log_sum_exp(scores: &[f64]) -> f64 {
    let max = scores.iter().fold(f64::NEG_INFINITY, |m, &s| m.max(s));
    if !max.is_finite() {
        return max;
    }
    max + scores.iter().map(|s| (s - max).exp()).sum::<f64>().ln()
}

/// Exact inference output: the log partition function and normalized
/// unary/pairwise marginals.
#[derive(Debug, Clone)]
pub struct Marginals {
    pub log_partition: f64,
    /// `unary[t][label]`.
    pub unary: Vec<Vec<f64>>,
    /// `pairwise[t][from][to]` for the edge `t -> t+1`.
    pub pairwise: Vec<Vec<Vec<f64>>>,
}

/// Forward-backward in log space.
pub fn forward_backward(lattice: &Lattice) -> Result<Marginals> {
    lattice.check_finite()?;
    let t_len = lattice.len();
    let num_labels = lattice.num_labels();
    let mut alpha = vec![vec![0.0; num_labels]; t_len];
    alpha[0].clone_from(&lattice.emissions[0]);
    let mut scratch = vec![0.0; num_labels];
    for t in 1..t_len {
        for y in 0..num_labels {
            for (prev, value) in scratch.iter_mut().enumerate() {
                *value = alpha[t - 1][prev] + lattice.transitions[prev][y];
            }
            alpha[t][y] = lattice.emissions[t][y] + log_sum_exp(&scratch);
        }
    }
    let log_partition = log_sum_exp(&alpha[t_len - 1]);

    let mut beta = vec![vec![0.0; num_labels]; t_len];
    for t in (0..t_len.saturating_sub(1)).rev() {
        for y in 0..num_labels {
            for (next, value) in scratch.iter_mut().enumerate() {
                *value =
                    lattice.transitions[y][next] + lattice.emissions[t + 1][next] + beta[t + 1][next];
            }
            beta[t][y] = log_sum_exp(&scratch);
        }
    }

    let unary = (0..t_len)
        .map(|t| {
            (0..num_labels)
                .map(|y| (alpha[t][y] + beta[t][y] - log_partition).exp())
                .collect()
        })
        .collect();
    let pairwise = (0..t_len.saturating_sub(1))
        .map(|t| {
            (0..num_labels)
                .map(|from| {
                    (0..num_labels)
                        .map(|to| {
                            (alpha[t][from]
                                + lattice.transitions[from][to]
                                + lattice.emissions[t + 1][to]
                                + beta[t + 1][to]
                                - log_partition)
                                .exp()
                        })
                        .collect()
                })
                .collect()
        })
        .collect();
    Ok(Marginals {
        log_partition,
        unary,
        pairwise,
    })
}

/// Maximum-score label sequence and its score.
///
/// Ties prefer the lower label index at the latest differing position:
/// backward tracing picks the smallest maximizer at every step.
pub fn viterbi(lattice: &Lattice) -> (Vec<usize>, f64) {
    let t_len = lattice.len();
    let num_labels = lattice.num_labels();
    let mut delta = vec![vec![0.0; num_labels]; t_len];
    let mut backpointer = vec![vec![0usize; num_labels]; t_len];
    delta[0].clone_from(&lattice.emissions[0]);
    for t in 1..t_len {
        for y in 0..num_labels {
            let mut best_prev = 0;
            let mut best_score = delta[t - 1][0] + lattice.transitions[0][y];
            for (prev, (d, transition_row)) in
                delta[t - 1].iter().zip(&lattice.transitions).enumerate().skip(1)
            {
                let score = d + transition_row[y];
                if score > best_score {
                    best_score = score;
                    best_prev = prev;
                }
            }
            delta[t][y] = best_score + lattice.emissions[t][y];
            backpointer[t][y] = best_prev;
        }
    }
    let mut last = 0;
    for y in 1..num_labels {
        if delta[t_len - 1][y] > delta[t_len - 1][last] {
            last = y;
        }
    }
    let score = delta[t_len - 1][last];
    let mut labels = vec![0usize; t_len];
    labels[t_len - 1] = last;
    for t in (1..t_len).rev() {
        labels[t - 1] = backpointer[t][labels[t]];
    }
    (labels, score)
}

/// Converts feature sets to model feature ids, dropping unknown features.
fn to_feature_ids(model: &CrfModel, feature_sets: &[FeatureSet]) -> Vec<Vec<usize>> {
    feature_sets
        .iter()
        .map(|features| {
            features
                .iter()
                .filter_map(|f| model.feature_id(f))
                .collect()
        })
        .collect()
}

/// Regularized negative log-likelihood and its gradient over a batch of
/// instances already mapped to feature ids.
///
/// Parameters (and the gradient) are packed as the emission matrix in
/// feature-major order followed by the transition matrix in from-label
/// order. The regularizer is applied once per call.
fn objective_from_ids(
    params: &[f64],
    batch: &[(Vec<Vec<usize>>, Vec<usize>)],
    num_features: usize,
    num_labels: usize,
    l2: f64,
) -> Result<(f64, Vec<f64>)> {
    let emission_len = num_features * num_labels;
    let mut value = 0.0;
    let mut grad = vec![0.0; params.len()];
    for (feature_ids, gold) in batch {
        let t_len = feature_ids.len();
        let emissions: Vec<Vec<f64>> = feature_ids
            .iter()
            .map(|ids| {
                let mut scores = vec![0.0; num_labels];
                for &f in ids {
                    let row = &params[f * num_labels..(f + 1) * num_labels];
                    for (score, weight) in scores.iter_mut().zip(row) {
                        *score += weight;
                    }
                }
                scores
            })
            .collect();
        let transitions: Vec<Vec<f64>> = (0..num_labels)
            .map(|from| {
                params[emission_len + from * num_labels..emission_len + (from + 1) * num_labels]
                    .to_vec()
            })
            .collect();
        let lattice = Lattice {
            emissions,
            transitions,
        };
        let marginals = forward_backward(&lattice)?;

        let mut gold_score = lattice.emissions[0][gold[0]];
        for t in 1..t_len {
            gold_score += lattice.transitions[gold[t - 1]][gold[t]] + lattice.emissions[t][gold[t]];
        }
        value += marginals.log_partition - gold_score;

        for (t, ids) in feature_ids.iter().enumerate() {
            for &f in ids {
                let row = &mut grad[f * num_labels..(f + 1) * num_labels];
                for (g, &m) in row.iter_mut().zip(&marginals.unary[t]) {
                    *g += m;
                }
                row[gold[t]] -= 1.0;
            }
        }
        for t in 0..t_len - 1 {
            for from in 0..num_labels {
                let row = &mut grad
                    [emission_len + from * num_labels..emission_len + (from + 1) * num_labels];
                for (g, &m) in row.iter_mut().zip(&marginals.pairwise[t][from]) {
                    *g += m;
                }
            }
            grad[emission_len + gold[t] * num_labels + gold[t + 1]] -= 1.0;
        }
    }
    for (g, w) in grad.iter_mut().zip(params) {
        value += 0.5 * l2 * w * w;
        *g += l2 * w;
    }
    Ok((value, grad))
}

/// Regularized negative log-likelihood of `batch` under `model`, with the
/// gradient over all weights (emissions feature-major, then transitions).
pub fn nll_and_gradient(
    model: &CrfModel,
    batch: &[(Vec<FeatureSet>, Vec<usize>)],
    l2: f64,
) -> Result<(f64, Vec<f64>)> {
    if batch.is_empty() {
        return Err(Error::InvalidInput("batch must not be empty".to_string()));
    }
    let num_labels = model.num_labels();
    let mut ids = Vec::with_capacity(batch.len());
    for (i, (feature_sets, gold)) in batch.iter().enumerate() {
        if feature_sets.is_empty() {
            return Err(Error::InvalidInput(format!(
                "instance {i} has an empty sequence"
            )));
        }
        if feature_sets.len() != gold.len() {
            return Err(Error::InvalidInput(format!(
                "instance {i} has {} positions but {} gold labels",
                feature_sets.len(),
                gold.len()
            )));
        }
        if let Some(&bad) = gold.iter().find(|&&y| y >= num_labels) {
            return Err(Error::InvalidInput(format!(
                "instance {i} has gold label {bad}, but there are {num_labels} labels"
            )));
        }
        ids.push((to_feature_ids(model, feature_sets), gold.clone()));
    }
    objective_from_ids(
        &model.pack_parameters(),
        &ids,
        model.num_features(),
        num_labels,
        l2,
    )
}

/// Trains a CRF by full-batch L-BFGS from zero-initialized weights. The
/// feature space is every feature string observed in `data`, indexed in
/// first-occurrence order.
pub fn train_crf(
    data: &[(Vec<FeatureSet>, Vec<usize>)],
    label_names: &[String],
    l2: f64,
    tol: f64,
    max_iters: usize,
) -> Result<CrfModel> {
    if data.is_empty() {
        return Err(Error::InvalidInput(
            "training data must not be empty".to_string(),
        ));
    }
    if l2 < 0.0 {
        return Err(Error::InvalidInput(format!(
            "l2 must be non-negative, got {l2}"
        )));
    }
    let num_labels = label_names.len();
    let mut feature_names: Vec<String> = Vec::new();
    let mut feature_index: HashMap<String, usize> = HashMap::new();
    let mut ids: Vec<(Vec<Vec<usize>>, Vec<usize>)> = Vec::with_capacity(data.len());
    for (i, (feature_sets, gold)) in data.iter().enumerate() {
        if feature_sets.is_empty() {
            return Err(Error::InvalidInput(format!(
                "instance {i} has an empty sequence"
            )));
        }
        if feature_sets.len() != gold.len() {
            return Err(Error::InvalidInput(format!(
                "instance {i} has {} positions but {} gold labels",
                feature_sets.len(),
                gold.len()
            )));
        }
        if let Some(&bad) = gold.iter().find(|&&y| y >= num_labels) {
            return Err(Error::InvalidInput(format!(
                "instance {i} has gold label {bad}, but there are {num_labels} labels"
            )));
        }
        let sequence_ids = feature_sets
            .iter()
            .map(|features| {
                features
                    .iter()
                    .map(|f| {
                        *feature_index.entry(f.clone()).or_insert_with(|| {
                            feature_names.push(f.clone());
                            feature_names.len() - 1
                        })
                    })
                    .collect()
            })
            .collect();
        ids.push((sequence_ids, gold.clone()));
    }
    let num_features = feature_names.len();
    let outcome = minimize(
        |params| {
            objective_from_ids(params, &ids, num_features, num_labels, l2)
                .expect("validated batch cannot fail")
        },
        vec![0.0; num_features * num_labels + num_labels * num_labels],
        &LbfgsConfig::with_stopping(tol, max_iters),
    );
    let (emission_block, transition_block) = outcome.x.split_at(num_features * num_labels);
    let emission_weights = if num_labels > 0 {
        emission_block
            .chunks(num_labels)
            .map(|row| row.to_vec())
            .collect()
    } else {
        Vec::new()
    };
    let transition_weights = transition_block
        .chunks(num_labels.max(1))
        .take(num_labels)
        .map(|row| row.to_vec())
        .collect();
    CrfModel::from_parts(
        label_names.to_vec(),
        feature_names,
        emission_weights,
        transition_weights,
        l2,
    )
}
