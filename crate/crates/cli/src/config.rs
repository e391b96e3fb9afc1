//! Optional JSON config file for hyperparameters and grid value lists.
//! Every field may be omitted; command-line flags override file values.

use std::fs;
use std::path::Path;

use serde::Deserialize;
use slu_core::forest::ForestParams;
use slu_core::pipeline::{SemanticHyperparams, SpeechActHyperparams};

use crate::CliError;

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    pub vocab_size: Option<usize>,
    pub svm_c: Option<f64>,
    pub logreg_l2: Option<f64>,
    pub crf_l2: Option<f64>,
    pub tol: Option<f64>,
    pub max_epochs: Option<usize>,
    pub max_iters: Option<usize>,
    pub forest_num_trees: Option<usize>,
    pub forest_max_depth: Option<usize>,
    pub forest_min_leaf: Option<usize>,
    pub forest_features_per_split: Option<usize>,
    pub folds: Option<usize>,
    pub svm_c_grid: Option<Vec<f64>>,
    pub logreg_l2_grid: Option<Vec<f64>>,
    pub crf_l2_grid: Option<Vec<f64>>,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> Result<FileConfig, CliError> {
        let Some(path) = path else {
            return Ok(FileConfig::default());
        };
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| {
            CliError::Runtime(format!(
                "{}: parse error at line {}, column {}: {e}",
                path.display(),
                e.line(),
                e.column()
            ))
        })
    }

    pub fn speech_act_hyperparams(&self) -> SpeechActHyperparams {
        let defaults = SpeechActHyperparams::default();
        let forest_defaults = ForestParams::default();
        SpeechActHyperparams {
            vocab_size: self.vocab_size.unwrap_or(defaults.vocab_size),
            svm_c: self.svm_c.unwrap_or(defaults.svm_c),
            logreg_l2: self.logreg_l2.unwrap_or(defaults.logreg_l2),
            tol: self.tol.unwrap_or(defaults.tol),
            max_epochs: self.max_epochs.unwrap_or(defaults.max_epochs),
            forest: ForestParams {
                num_trees: self.forest_num_trees.unwrap_or(forest_defaults.num_trees),
                max_depth: self.forest_max_depth.or(forest_defaults.max_depth),
                min_leaf: self.forest_min_leaf.unwrap_or(forest_defaults.min_leaf),
                features_per_split: self
                    .forest_features_per_split
                    .or(forest_defaults.features_per_split),
                bootstrap: forest_defaults.bootstrap,
            },
        }
    }

    pub fn semantic_hyperparams(&self) -> SemanticHyperparams {
        let defaults = SemanticHyperparams::default();
        SemanticHyperparams {
            l2: self.crf_l2.unwrap_or(defaults.l2),
            tol: self.tol.unwrap_or(defaults.tol),
            max_iters: self.max_iters.unwrap_or(defaults.max_iters),
        }
    }
}
