//! Command dispatch.

use serde_json::Value;
use slu_core::corpus::{load_corpus, load_ontology, save_corpus, save_ontology, Corpus};
use slu_core::eval::{
    eval_segment_corpora, eval_speech_act_corpora, format_report, grid_search_cv,EvalReport,
    Grid, MatchLevel,
};
use slu_core::persist::{load_model, save_model, write_atomic, ModelFile};
use slu_core::pipeline::{
    predict_segments, predict_speech_acts, train_semantic_tagger, train_speech_act_system,
    SystemId,
};
use slu_core::rules::{load_ruleset, RuleSet};

use crate::args::{Cli, Command, CvArgs, EvalArgs, GenArgs, Level, PredictArgs, Task, TrainArgs};
use crate::config::FileConfig;
use crate::gen;

/// Errors split by exit code: usage errors exit 2, runtime failures exit 1.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Runtime(String),
}

impl From<slu_core::Error> for CliError {
    fn from(err: slu_core::Error) -> Self {
        CliError::Runtime(err.to_string())
    }
}

fn usage(message: impl Into<String>) -> CliError {
    CliError::Usage(message.into())
}

pub fn execute(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Train(args) => train(args),
        Command::Predict(args) => predict(args),
        Command::Eval(args) => eval(args),
        Command::Cv(args) => cv(args),
        Command::Gen(args) => generate(args),
    }
}

fn parse_system(raw: &Option<String>) -> Result<SystemId, CliError> {
    let raw = raw
        .as_ref()
        .ok_or_else(|| usage("--system is required when --task is speech-act"))?;
    raw.parse::<SystemId>()
        .map_err(|e| usage(e.to_string()))
}

fn load_rules_for(system: SystemId, rules: &Option<std::path::PathBuf>) -> Result<Option<RuleSet>, CliError> {
    if system != SystemId::S1 {
        return Ok(None);
    }
    let path = rules
        .as_ref()
        .ok_or_else(|| usage("--rules is required for system s1"))?;
    Ok(Some(load_ruleset(path)?))
}

fn train(args: TrainArgs) -> Result<(), CliError> {
    let config = FileConfig::load(args.config.as_deref())?;
    let corpus = load_corpus(&args.corpus)?;
    let model = match args.task {
        Task::Semantic => {
            let ontology_path = args
                .ontology
                .as_ref()
                .ok_or_else(|| usage("--ontology is required when --task is semantic"))?;
            let ontology = load_ontology(ontology_path)?;
            let hyperparams = config.semantic_hyperparams();
            ModelFile::Semantic(train_semantic_tagger(&corpus, &ontology, &hyperparams)?)
        }
        Task::SpeechAct => {
            let system = parse_system(&args.system)?;
            let ruleset = load_rules_for(system, &args.rules)?;
            let hyperparams = config.speech_act_hyperparams();
            ModelFile::SpeechAct(train_speech_act_system(
                &corpus,
                system,
                &hyperparams,
                ruleset,
                args.seed,
            )?)
        }
    };
    save_model(&model, &args.out)?;
    println!("wrote model to {}", args.out.display());
    Ok(())
}

/// Serializes the predicted corpus, preserving the input's annotations
/// under `gold_speech_acts` / `gold_segments`.
fn render_predictions(predicted: &Corpus, original: &Corpus) -> Result<String, CliError> {
    let mut value = serde_json::to_value(predicted)
        .map_err(|e| CliError::Runtime(format!("cannot serialize predictions: {e}")))?;
    let dialogs = value
        .get_mut("dialogs")
        .and_then(Value::as_array_mut)
        .expect("corpus serializes to a dialogs list");
    for (dialog_value, dialog) in dialogs.iter_mut().zip(&original.dialogs) {
        let utterances = dialog_value
            .get_mut("utterances")
            .and_then(Value::as_array_mut)
            .expect("dialog serializes to an utterances list");
        for (utterance_value, utterance) in utterances.iter_mut().zip(&dialog.utterances) {
            let object = utterance_value
                .as_object_mut()
                .expect("utterance serializes to an object");
            if !utterance.speech_acts.is_empty() {
                object.insert(
                    "gold_speech_acts".to_string(),
                    serde_json::to_value(&utterance.speech_acts)
                        .map_err(|e| CliError::Runtime(e.to_string()))?,
                );
            }
            if !utterance.segments.is_empty() {
                object.insert(
                    "gold_segments".to_string(),
                    serde_json::to_value(&utterance.segments)
                        .map_err(|e| CliError::Runtime(e.to_string()))?,
                );
            }
        }
    }
    let mut text = serde_json::to_string_pretty(&value)
        .map_err(|e| CliError::Runtime(format!("cannot serialize predictions: {e}")))?;
    text.push('\n');
    Ok(text)
}

fn predict(args: PredictArgs) -> Result<(), CliError> {
    let model = load_model(&args.model)?;
    let corpus = load_corpus(&args.corpus)?;
    if let Some(task) = args.task {
        let matches = matches!(
            (&model, task),
            (ModelFile::SpeechAct(_), Task::SpeechAct) | (ModelFile::Semantic(_), Task::Semantic)
        );
        if !matches {
            return Err(usage(format!(
                "--task does not match the model in {}",
                args.model.display()
            )));
        }
    }
    let mut predicted = corpus.clone();
    match &model {
        ModelFile::SpeechAct(model) => {
            for dialog in &mut predicted.dialogs {
                let labels = predict_speech_acts(model, dialog)?;
                for (utterance, label) in dialog.utterances.iter_mut().zip(labels) {
                    utterance.speech_acts = vec![label];
                }
            }
        }
        ModelFile::Semantic(model) => {
            for dialog in &mut predicted.dialogs {
                for utterance in &mut dialog.utterances {
                    utterance.segments = predict_segments(model, utterance)?;
                }
            }
        }
    }
    let text = render_predictions(&predicted, &corpus)?;
    write_atomic(&args.out, text.as_bytes())?;
    println!("wrote predictions to {}", args.out.display());
    Ok(())
}

fn eval(args: EvalArgs) -> Result<(), CliError> {
    let gold = load_corpus(&args.gold)?;
    let pred = load_corpus(&args.pred)?;
    let (report, default_label): (EvalReport, &str) = match args.task {
        Task::SpeechAct => {
            let level = match args.level {
                Level::Pair => MatchLevel::Pair,
                Level::Category => MatchLevel::Category,
            };
            (eval_speech_act_corpora(&gold, &pred, level)?, "speech-act")
        }
        Task::Semantic => (eval_segment_corpora(&gold, &pred)?, "semantic"),
    };
    let label = args.label.unwrap_or_else(|| default_label.to_string());
    let table = format_report(&[(label, report)]);
    print!("{table}");
    if let Some(out) = &args.out {
        write_atomic(out, table.as_bytes())?;
        println!("wrote report to {}", out.display());
    }
    Ok(())
}

fn cv(args: CvArgs) -> Result<(), CliError> {
    let config = FileConfig::load(args.config.as_deref())?;
    let corpus = load_corpus(&args.corpus)?;
    let folds = config.folds.unwrap_or(args.folds);
    let (grid, ontology, ruleset) = match args.task {
        Task::SpeechAct => {
            let system = parse_system(&args.system)?;
            let values = match system {
                SystemId::S3 => config.svm_c_grid.clone(),
                SystemId::S5 => config.logreg_l2_grid.clone(),
                _ => None,
            };
            let grid = Grid::speech_act(system, folds, args.seed, values.as_deref());
            let ruleset = load_rules_for(system, &args.rules)?;
            (grid, None, ruleset)
        }
        Task::Semantic => {
            let ontology_path = args
                .ontology
                .as_ref()
                .ok_or_else(|| usage("--ontology is required when --task is semantic"))?;
            let ontology = load_ontology(ontology_path)?;
            let grid = Grid::semantic(folds, args.seed, config.crf_l2_grid.as_deref());
            (grid, Some(ontology), None)
        }
    };
    let outcome = grid_search_cv(&corpus, &grid, ontology.as_ref(), ruleset.as_ref())?;
    println!("{:<16}{:>10}", "point", "mean F1");
    for row in &outcome.table {
        println!("{:<16}{:>10.4}", row.label, row.mean_f1);
    }
    println!("best: {}", outcome.best_label);
    if let Some(out) = &args.out {
        let mut text = serde_json::to_string_pretty(&outcome)
            .map_err(|e| CliError::Runtime(e.to_string()))?;
        text.push('\n');
        write_atomic(out, text.as_bytes())?;
        println!("wrote grid table to {}", out.display());
    }
    Ok(())
}

fn generate(args: GenArgs) -> Result<(), CliError> {
    if args.dialogs == 0 {
        return Err(usage("--dialogs must be positive"));
    }
    let (corpus, ontology) = gen::generate(args.seed, args.dialogs);
    save_corpus(&corpus, &args.out)?;
    save_ontology(&ontology, &args.ontology)?;
    println!(
        "wrote {} dialogs to {} and the ontology to {}",
        corpus.dialogs.len(),
        args.out.display(),
        args.ontology.display()
    );
    Ok(())
}
