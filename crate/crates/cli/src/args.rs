//! Command-line grammar.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "slu",
    version,
    about = "Speech-act classification and semantic tagging for two-party dialog corpora"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train a model and write it to --out.
    Train(TrainArgs),
    /// Annotate a corpus with a trained model's predictions.
    Predict(PredictArgs),
    /// Score a prediction corpus against a gold corpus.
    Eval(EvalArgs),
    /// Cross-validated hyperparameter grid search.
    Cv(CvArgs),
    /// Generate a seeded synthetic corpus with gold annotations.
    Gen(GenArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Task {
    SpeechAct,
    Semantic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Level {
    /// Match the full (category, attribute) pair.
    Pair,
    /// Match categories only.
    Category,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub task: Task,
    /// Speech-act system (s1..s5); required when --task speech-act.
    #[arg(long)]
    pub system: Option<String>,
    /// Training corpus file.
    #[arg(long)]
    pub corpus: PathBuf,
    /// Ontology file; required when --task semantic.
    #[arg(long)]
    pub ontology: Option<PathBuf>,
    /// Rule file; required for system s1.
    #[arg(long)]
    pub rules: Option<PathBuf>,
    /// Output model file.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Hyperparameter config file overriding the defaults.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    /// Trained model file.
    #[arg(long)]
    pub model: PathBuf,
    /// Corpus to annotate; existing gold annotations are preserved under a
    /// gold_ prefix in the output.
    #[arg(long)]
    pub corpus: PathBuf,
    /// Output corpus file.
    #[arg(long)]
    pub out: PathBuf,
    /// Optional cross-check against the model's task.
    #[arg(long)]
    pub task: Option<Task>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub task: Task,
    /// Gold corpus file.
    #[arg(long)]
    pub gold: PathBuf,
    /// Prediction corpus file (as written by `slu predict`).
    #[arg(long)]
    pub pred: PathBuf,
    /// Optional report output file; the report always prints to stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Speech-act matching level.
    #[arg(long, value_enum, default_value_t = Level::Pair)]
    pub level: Level,
    /// Row label in the report table.
    #[arg(long)]
    pub label: Option<String>,
}

#[derive(Debug, Args)]
pub struct CvArgs {
    #[arg(long)]
    pub task: Task,
    /// Speech-act system (s1..s5); required when --task speech-act.
    #[arg(long)]
    pub system: Option<String>,
    #[arg(long)]
    pub corpus: PathBuf,
    /// Ontology file; required when --task semantic.
    #[arg(long)]
    pub ontology: Option<PathBuf>,
    /// Rule file; required for system s1.
    #[arg(long)]
    pub rules: Option<PathBuf>,
    /// Optional JSON output for the grid table and best point.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, default_value_t = 5)]
    pub folds: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Config file carrying grid value lists.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GenArgs {
    /// Output corpus file.
    #[arg(long)]
    pub out: PathBuf,
    /// Output ontology file.
    #[arg(long)]
    pub ontology: PathBuf,
    #[arg(long, default_value_t = 60)]
    pub dialogs: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}
