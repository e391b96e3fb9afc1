//! End-to-end checks of the command-line surface, driving the built
//! binary so exit codes and diagnostics are exercised for real.

use std::path::Path;
use std::process::{Command, Output};

fn slu(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_slu"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn path_str(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn help_exits_zero() {
    let out = slu(&["--help"]);
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    for command in ["train", "predict", "eval", "cv", "gen"] {
        assert!(text.contains(command), "help is missing `{command}`:\n{text}");
    }
}

#[test]
fn unknown_flag_is_a_usage_error() {
    let out = slu(&["train", "--task", "semantic", "--frobnicate"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn missing_system_is_a_usage_error_naming_the_flag() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("c.json");
    let ontology = dir.path().join("o.json");
    let out_file = dir.path().join("m.json");
    assert!(slu(&[
        "gen",
        "--out",
        path_str(&corpus),
        "--ontology",
        path_str(&ontology),
        "--dialogs",
        "4",
    ])
    .status
    .success());

    let out = slu(&[
        "train",
        "--task",
        "speech-act",
        "--corpus",
        path_str(&corpus),
        "--out",
        path_str(&out_file),
    ]);
    assert_eq!(out.status.code(), Some(2));
    let message = String::from_utf8_lossy(&out.stderr);
    assert!(message.contains("--system"), "got: {message}");
}

#[test]
fn train_semantic_parses_and_runs() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("c.json");
    let ontology = dir.path().join("o.json");
    let model = dir.path().join("m.json");
    assert!(slu(&[
        "gen",
        "--out",
        path_str(&corpus),
        "--ontology",
        path_str(&ontology),
        "--dialogs",
        "6",
        "--seed",
        "3",
    ])
    .status
    .success());
    let out = slu(&[
        "train",
        "--task",
        "semantic",
        "--corpus",
        path_str(&corpus),
        "--ontology",
        path_str(&ontology),
        "--out",
        path_str(&model),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(model.exists());
}

#[test]
fn gen_is_byte_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let mut outputs = Vec::new();
    for run in 0..2 {
        let corpus = dir.path().join(format!("c{run}.json"));
        let ontology = dir.path().join(format!("o{run}.json"));
        assert!(slu(&[
            "gen",
            "--out",
            path_str(&corpus),
            "--ontology",
            path_str(&ontology),
            "--dialogs",
            "10",
            "--seed",
            "42",
        ])
        .status
        .success());
        outputs.push((
            std::fs::read(&corpus).unwrap(),
            std::fs::read(&ontology).unwrap(),
        ));
    }
    assert_eq!(outputs[0], outputs[1]);
}

#[test]
fn eval_on_misaligned_corpora_names_the_first_mismatching_id() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    let ontology = dir.path().join("o.json");
    for (path, seed) in [(&a, 1u64), (&b, 2u64)] {
        assert!(slu(&[
            "gen",
            "--out",
            path_str(path),
            "--ontology",
            path_str(&ontology),
            "--dialogs",
            "4",
            "--seed",
            &seed.to_string(),
        ])
        .status
        .success());
    }
    // Different seeds keep the same ids, so rename one dialog in b.
    let text = std::fs::read_to_string(&b).unwrap().replace("d0002", "dXXXX");
    std::fs::write(&b, text).unwrap();
    let out = slu(&[
        "eval",
        "--task",
        "speech-act",
        "--gold",
        path_str(&a),
        "--pred",
        path_str(&b),
    ]);
    assert_eq!(out.status.code(), Some(1));
    let message = String::from_utf8_lossy(&out.stderr);
    assert!(message.contains("d0002"), "got: {message}");
    assert!(message.contains("dXXXX"), "got: {message}");
}

#[test]
fn predict_preserves_gold_under_prefix_and_eval_composes() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("c.json");
    let ontology = dir.path().join("o.json");
    let model = dir.path().join("m.json");
    let predictions = dir.path().join("p.json");
    let report = dir.path().join("report.txt");
    for step in [
        vec![
            "gen",
            "--out",
            path_str(&corpus),
            "--ontology",
            path_str(&ontology),
            "--dialogs",
            "8",
            "--seed",
            "5",
        ],
        vec![
            "train",
            "--task",
            "speech-act",
            "--system",
            "s5",
            "--corpus",
            path_str(&corpus),
            "--out",
            path_str(&model),
        ],
        vec![
            "predict",
            "--model",
            path_str(&model),
            "--corpus",
            path_str(&corpus),
            "--out",
            path_str(&predictions),
        ],
        vec![
            "eval",
            "--task",
            "speech-act",
            "--gold",
            path_str(&corpus),
            "--pred",
            path_str(&predictions),
            "--out",
            path_str(&report),
        ],
    ] {
        let out = slu(&step);
        assert!(
            out.status.success(),
            "step {step:?} failed: {}",
            String::from_utf8_lossy(&out.stderr)
        );
    }
    let text = std::fs::read_to_string(&predictions).unwrap();
    assert!(text.contains("gold_speech_acts"));
    // The prediction file still loads as a corpus.
    let value: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert!(value["dialogs"].is_array());
    let table = std::fs::read_to_string(&report).unwrap();
    assert!(table.contains("F1-score"));
}

#[test]
fn input_files_are_never_mutated() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("c.json");
    let ontology = dir.path().join("o.json");
    let model = dir.path().join("m.json");
    let predictions = dir.path().join("p.json");
    slu(&[
        "gen",
        "--out",
        path_str(&corpus),
        "--ontology",
        path_str(&ontology),
        "--dialogs",
        "5",
        "--seed",
        "9",
    ]);
    let corpus_before = std::fs::read(&corpus).unwrap();
    slu(&[
        "train",
        "--task",
        "speech-act",
        "--system",
        "s4",
        "--corpus",
        path_str(&corpus),
        "--out",
        path_str(&model),
    ]);
    slu(&[
        "predict",
        "--model",
        path_str(&model),
        "--corpus",
        path_str(&corpus),
        "--out",
        path_str(&predictions),
    ]);
    assert_eq!(std::fs::read(&corpus).unwrap(), corpus_before);
}

#[test]
fn system_one_runs_with_the_shipped_ruleset() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("c.json");
    let ontology = dir.path().join("o.json");
    let model = dir.path().join("m.json");
    let predictions = dir.path().join("p.json");
    let rules = concat!(env!("CARGO_MANIFEST_DIR"), "/../../data/rules/default.json");
    slu(&[
        "gen",
        "--out",
        path_str(&corpus),
        "--ontology",
        path_str(&ontology),
        "--dialogs",
        "5",
        "--seed",
        "13",
    ]);
    let trained = slu(&[
        "train",
        "--task",
        "speech-act",
        "--system",
        "s1",
        "--corpus",
        path_str(&corpus),
        "--rules",
        rules,
        "--out",
        path_str(&model),
    ]);
    assert!(
        trained.status.success(),
        "{}",
        String::from_utf8_lossy(&trained.stderr)
    );
    let predicted = slu(&[
        "predict",
        "--model",
        path_str(&model),
        "--corpus",
        path_str(&corpus),
        "--out",
        path_str(&predictions),
    ]);
    assert!(predicted.status.success());

    // Without --rules, s1 is a usage error.
    let missing = slu(&[
        "train",
        "--task",
        "speech-act",
        "--system",
        "s1",
        "--corpus",
        path_str(&corpus),
        "--out",
        path_str(&model),
    ]);
    assert_eq!(missing.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&missing.stderr).contains("--rules"));
}

#[test]
fn config_file_overrides_defaults_and_rejects_unknown_keys() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("c.json");
    let ontology = dir.path().join("o.json");
    let model = dir.path().join("m.json");
    let config = dir.path().join("config.json");
    slu(&[
        "gen",
        "--out",
        path_str(&corpus),
        "--ontology",
        path_str(&ontology),
        "--dialogs",
        "5",
        "--seed",
        "21",
    ]);
    std::fs::write(&config, r#"{"logreg_l2": 0.5, "max_epochs": 50}"#).unwrap();
    let out = slu(&[
        "train",
        "--task",
        "speech-act",
        "--system",
        "s5",
        "--corpus",
        path_str(&corpus),
        "--config",
        path_str(&config),
        "--out",
        path_str(&model),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    std::fs::write(&config, r#"{"not_a_setting": 1}"#).unwrap();
    let bad = slu(&[
        "train",
        "--task",
        "speech-act",
        "--system",
        "s5",
        "--corpus",
        path_str(&corpus),
        "--config",
        path_str(&config),
        "--out",
        path_str(&model),
    ]);
    assert_eq!(bad.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&bad.stderr).contains("not_a_setting"));
}

#[test]
fn cv_runs_a_small_semantic_grid() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("c.json");
    let ontology = dir.path().join("o.json");
    let table = dir.path().join("grid.json");
    let config = dir.path().join("config.json");
    slu(&[
        "gen",
        "--out",
        path_str(&corpus),
        "--ontology",
        path_str(&ontology),
        "--dialogs",
        "6",
        "--seed",
        "2",
    ]);
    std::fs::write(&config, r#"{"crf_l2_grid": [0.1], "max_iters": 60}"#).unwrap();
    let out = slu(&[
        "cv",
        "--task",
        "semantic",
        "--corpus",
        path_str(&corpus),
        "--ontology",
        path_str(&ontology),
        "--folds",
        "3",
        "--config",
        path_str(&config),
        "--out",
        path_str(&table),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let value: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&table).unwrap()).unwrap();
    assert_eq!(value["table"].as_array().unwrap().len(), 1);
    assert!(value["best_label"].is_string());
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("best: l2=0.1"), "got: {text}");
}
