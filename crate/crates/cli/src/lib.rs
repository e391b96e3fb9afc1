//! Command-line layer over `slu-core`: training, prediction, evaluation,
//! cross-validation, and synthetic-corpus generation.

pub mod args;
pub mod config;
pub mod gen;
mod run;

pub use run::{execute, CliError};
