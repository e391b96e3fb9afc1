//! Spoken-language-understanding toolkit for two-party dialog corpora:
//! speech-act classification (rule, forest, SVM, and logistic systems) and
//! ontology-constrained semantic tagging with linear-chain CRFs, plus
//! evaluation and cross-validated model selection.

pub mod bio;
pub mod corpus;
pub mod crf;
pub mod error;
pub mod eval;
pub mod features;
pub mod folds;
pub mod forest;
pub mod linear;
pub mod optimize;
pub mod persist;
pub mod pipeline;
pub mod rules;

#[cfg(test)]
mod test_support;

pub use error::{Error, Result};
