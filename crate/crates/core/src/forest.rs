//! A small random-forest classifier over dense feature vectors.
//!
//! Splits minimize Gini impurity over a seeded random feature subset;
//! thresholds are midpoints between consecutive distinct values. Every
//! source of randomness derives from the training seed, so identical
//! inputs yield identical models.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestParams {
    pub num_trees: usize,
    /// `None` grows trees until purity or `min_leaf` stops them.
    pub max_depth: Option<usize>,
    pub min_leaf: usize,
    /// Features sampled per split; `None` uses ⌈√d⌉.
    pub features_per_split: Option<usize>,
    /// When set, each tree trains on a with-replacement resample of the
    /// full training-set size; otherwise on the training set itself.
    pub bootstrap: bool,
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams {
            num_trees: 100,
            max_depth: None,
            min_leaf: 1,
            features_per_split: None,
            bootstrap: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "node", rename_all = "snake_case")]
pub enum TreeNode {
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf {
        histogram: Vec<u32>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    pub nodes: Vec<TreeNode>,
    pub root: usize,
}

impl DecisionTree {
    fn leaf_histogram(&self, x: &[f64]) -> &[u32] {
        let mut node = self.root;
        loop {
            match &self.nodes[node] {
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    node = if x[*feature] <= *threshold { *left } else { *right };
                }
                TreeNode::Leaf { histogram } => return histogram,
            }
        }
    }

    /// Longest root-to-leaf path, in edges.
    pub fn depth(&self) -> usize {
        fn walk(nodes: &[TreeNode], at: usize) -> usize {
            match &nodes[at] {
                TreeNode::Leaf { .. } => 0,
                TreeNode::Split { left, right, .. } => {
                    1 + walk(nodes, *left).max(walk(nodes, *right))
                }
            }
        }
        walk(&self.nodes, self.root)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    pub trees: Vec<DecisionTree>,
    pub num_features: usize,
    pub class_names: Vec<String>,
    pub seed: u64,
}

impl ForestModel {
    pub fn num_trees(&self) -> usize {
        self.trees.len()
    }
}

struct TreeBuilder<'a> {
    data: &'a [(Vec<f64>, usize)],
    num_classes: usize,
    num_features: usize,
    params: &'a ForestParams,
    features_per_split: usize,
    nodes: Vec<TreeNode>,
}

impl<'a> TreeBuilder<'a> {
    fn histogram(&self, samples: &[usize]) -> Vec<u32> {
        let mut histogram = vec![0u32; self.num_classes];
        for &i in samples {
            histogram[self.data[i].1] += 1;
        }
        histogram
    }

    /// `n * (1 - Σ p²)` for the sample's class counts; comparable across
    /// children without renormalizing.
    fn gini_scaled(histogram: &[u32], n: f64) -> f64 {
        if n == 0.0 {
            return 0.0;
        }
        let sum_sq: f64 = histogram.iter().map(|&c| {
            let p = f64::from(c) / n;
            p * p
        }).sum();
        n * (1.0 - sum_sq)
    }

    fn sample_features(&self, rng: &mut ChaCha8Rng) -> Vec<usize> {
        let mut pool: Vec<usize> = (0..self.num_features).collect();
        let k = self.features_per_split.min(self.num_features);
        for i in 0..k {
            let j = rng.gen_range(i..pool.len());
            pool.swap(i, j);
        }
        pool.truncate(k);
        pool.sort_unstable();
        pool
    }

    fn best_split(
        &self,
        samples: &[usize],
        candidates: &[usize],
    ) -> Option<(usize, f64, Vec<usize>, Vec<usize>)> {
        let n = samples.len() as f64;
        let parent = Self::gini_scaled(&self.histogram(samples), n);
        let mut best: Option<(f64, usize, f64)> = None;
        for &feature in candidates {
            let mut ordered: Vec<usize> = samples.to_vec();
            ordered.sort_unstable_by(|&a, &b| {
                self.data[a].0[feature]
                    .partial_cmp(&self.data[b].0[feature])
                    .expect("feature values are finite")
                    .then(a.cmp(&b))
            });
            let mut left_hist = vec![0u32; self.num_classes];
            let mut right_hist = self.histogram(samples);
            for cut in 1..ordered.len() {
                let moved = ordered[cut - 1];
                left_hist[self.data[moved].1] += 1;
                right_hist[self.data[moved].1] -= 1;
                let prev = self.data[ordered[cut - 1]].0[feature];
                let next = self.data[ordered[cut]].0[feature];
                if prev == next {
                    continue;
                }
                if cut < self.params.min_leaf || ordered.len() - cut < self.params.min_leaf {
                    continue;
                }
                let score = Self::gini_scaled(&left_hist, cut as f64)
                    + Self::gini_scaled(&right_hist, (ordered.len() - cut) as f64);
                let threshold = 0.5 * (prev + next);
                let improves = match best {
                    None => score < parent - 1e-12,
                    Some((best_score, _, _)) => score < best_score,
                };
                if improves {
                    best = Some((score, feature, threshold));
                }
            }
        }
        best.map(|(_, feature, threshold)| {
            let (left, right): (Vec<usize>, Vec<usize>) = samples
                .iter()
                .partition(|&&i| self.data[i].0[feature] <= threshold);
            (feature, threshold, left, right)
        })
    }

    fn build(&mut self, samples: &[usize], depth: usize, rng: &mut ChaCha8Rng) -> usize {
        let histogram = self.histogram(samples);
        let depth_reached = self.params.max_depth.is_some_and(|d| depth >= d);
        let pure = histogram.iter().filter(|&&c| c > 0).count() <= 1;
        if !depth_reached && !pure && samples.len() >= 2 * self.params.min_leaf {
            let candidates = self.sample_features(rng);
            if let Some((feature, threshold, left_samples, right_samples)) =
                self.best_split(samples, &candidates)
            {
                let left = self.build(&left_samples, depth + 1, rng);
                let right = self.build(&right_samples, depth + 1, rng);
                self.nodes.push(TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                });
                return self.nodes.len() - 1;
            }
        }
        self.nodes.push(TreeNode::Leaf { histogram });
        self.nodes.len() - 1
    }
}

/// Trains a forest of `params.num_trees` trees. Each tree draws its own
/// sample and feature subsets from a generator seeded by `(seed, tree
/// index)`.
pub fn train_forest(
    data: &[(Vec<f64>, usize)],
    class_names: &[String],
    params: &ForestParams,
    seed: u64,
) -> Result<ForestModel> {
    if data.is_empty() {
        return Err(Error::InvalidInput(
            "training data must not be empty".to_string(),
        ));
    }
    if params.num_trees == 0 || params.min_leaf == 0 || params.features_per_split == Some(0) {
        return Err(Error::InvalidInput(
            "forest parameters must be positive".to_string(),
        ));
    }
    let num_features = data[0].0.len();
    if num_features == 0 {
        return Err(Error::InvalidInput(
            "training vectors must have at least one feature".to_string(),
        ));
    }
    let num_classes = class_names.len();
    for (i, (x, y)) in data.iter().enumerate() {
        if x.len() != num_features {
            return Err(Error::InvalidInput(format!(
                "instance {i} has {} features, expected {num_features}",
                x.len()
            )));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "instance {i} has a non-finite feature value"
            )));
        }
        if *y >= num_classes {
            return Err(Error::InvalidInput(format!(
                "instance {i} has class index {y}, but there are {num_classes} classes"
            )));
        }
    }
    let features_per_split = params
        .features_per_split
        .unwrap_or_else(|| (num_features as f64).sqrt().ceil() as usize)
        .min(num_features);

    let mut trees = Vec::with_capacity(params.num_trees);
    for tree_index in 0..params.num_trees {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(tree_index as u64);
        let samples: Vec<usize> = if params.bootstrap {
            (0..data.len())
                .map(|_| rng.gen_range(0..data.len()))
                .collect()
        } else {
            (0..data.len()).collect()
        };
        let mut builder = TreeBuilder {
            data,
            num_classes,
            num_features,
            params,
            features_per_split,
            nodes: Vec::new(),
        };
        let root = builder.build(&samples, 0, &mut rng);
        trees.push(DecisionTree {
            nodes: builder.nodes,
            root,
        });
    }
    Ok(ForestModel {
        trees,
        num_features,
        class_names: class_names.to_vec(),
        seed,
    })
}

/// Sums leaf histograms over all trees; argmax with the lowest class index
/// winning ties.
pub fn predict_forest(model: &ForestModel, x: &[f64]) -> Result<usize> {
    if x.len() != model.num_features {
        return Err(Error::InvalidInput(format!(
            "input has {} features, model expects {}",
            x.len(),
            model.num_features
        )));
    }
    let mut votes = vec![0u64; model.class_names.len()];
    for tree in &model.trees {
        for (class, count) in tree.leaf_histogram(x).iter().enumerate() {
            votes[class] += u64::from(*count);
        }
    }
    let mut best = 0;
    for (class, &count) in votes.iter().enumerate().skip(1) {
        if count > votes[best] {
            best = class;
        }
    }
    Ok(best)
}
