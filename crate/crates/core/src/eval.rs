//! Scoring and model selection: micro-averaged precision/recall/F1 for
//! speech acts (per speaker and overall), exact-match segment scoring, and
//! deterministic k-fold grid search.

use std::collections::BTreeSet;

use serde::Serialize;

use crate::corpus::{Corpus, Ontology, SemanticSegment, Speaker, SpeechActLabel};
use crate::error::{Error, Result};
use crate::folds::split_folds;
use crate::pipeline::{
    predict_segments, predict_speech_acts, train_semantic_tagger, train_speech_act_system,
    SemanticHyperparams, SpeechActHyperparams, SystemId,
};
use crate::rules::RuleSet;

/// Micro-aggregated match counts.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct Counts {
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

impl Counts {
    fn absorb(&mut self, other: Counts) {
        self.tp += other.tp;
        self.fp += other.fp;
        self.fn_ += other.fn_;
    }
}

/// Counts together with the derived precision, recall, and F1.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Metrics {
    pub counts: Counts,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl From<Counts> for Metrics {
    fn from(counts: Counts) -> Self {
        let (precision, recall, f1) = prf1(counts.tp, counts.fp, counts.fn_);
        Metrics {
            counts,
            precision,
            recall,
            f1,
        }
    }
}

/// Per-speaker and overall metrics.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct EvalReport {
    pub guide: Metrics,
    pub tourist: Metrics,
    pub overall: Metrics,
}

impl EvalReport {
    fn from_counts(guide: Counts, tourist: Counts) -> EvalReport {
        let mut overall = guide;
        overall.absorb(tourist);
        EvalReport {
            guide: guide.into(),
            tourist: tourist.into(),
            overall: overall.into(),
        }
    }
}

/// Precision, recall, and F1 from counts; any 0/0 ratio is 0 by convention.
pub fn prf1(tp: u64, fp: u64, fn_: u64) -> (f64, f64, f64) {
    let ratio = |num: u64, denom: u64| {
        if denom == 0 {
            0.0
        } else {
            num as f64 / denom as f64
        }
    };
    let precision = ratio(tp, tp + fp);
    let recall = ratio(tp, tp + fn_);
    (precision, recall, f1_from_pr(precision, recall))
}

/// Harmonic mean of precision and recall; 0 when both are 0.
pub fn f1_from_pr(precision: f64, recall: f64) -> f64 {
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

/// What counts as a speech-act match.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatchLevel {
    /// The full (category, attribute) pair must be in the gold set.
    Pair,
    /// Only the category must appear among the gold categories; used to
    /// score the category-only systems 2 and 4.
    Category,
}

fn act_counts(gold: &[SpeechActLabel], pred: &SpeechActLabel, level: MatchLevel) -> Counts {
    match level {
        MatchLevel::Pair => {
            let hit = gold.contains(pred);
            Counts {
                tp: u64::from(hit),
                fp: u64::from(!hit),
                fn_: gold.len() as u64 - u64::from(hit),
            }
        }
        MatchLevel::Category => {
            let categories: BTreeSet<&str> = gold.iter().map(|p| p.category.as_str()).collect();
            let hit = categories.contains(pred.category.as_str());
            Counts {
                tp: u64::from(hit),
                fp: u64::from(!hit),
                fn_: categories.len() as u64 - u64::from(hit),
            }
        }
    }
}

/// Scores monolabel predictions against gold sets, micro-aggregated per
/// speaker and overall. The three slices are aligned per utterance.
pub fn eval_speech_acts(
    gold: &[Vec<SpeechActLabel>],
    pred: &[SpeechActLabel],
    speakers: &[Speaker],
    level: MatchLevel,
) -> Result<EvalReport> {
    if gold.len() != pred.len() || gold.len() != speakers.len() {
        return Err(Error::InvalidInput(format!(
            "gold ({}), predictions ({}), and speakers ({}) must have equal length",
            gold.len(),
            pred.len(),
            speakers.len()
        )));
    }
    let mut guide = Counts::default();
    let mut tourist = Counts::default();
    for ((gold_set, predicted), speaker) in gold.iter().zip(pred).zip(speakers) {
        let counts = act_counts(gold_set, predicted, level);
        match speaker {
            Speaker::Guide => guide.absorb(counts),
            Speaker::Tourist => tourist.absorb(counts),
        }
    }
    Ok(EvalReport::from_counts(guide, tourist))
}

fn segment_counts(gold: &[SemanticSegment], pred: &[SemanticSegment]) -> Counts {
    let mut used = vec![false; gold.len()];
    let mut counts = Counts::default();
    for predicted in pred {
        let matched = gold
            .iter()
            .enumerate()
            .find(|(i, g)| !used[*i] && *g == predicted);
        match matched {
            Some((i, _)) => {
                used[i] = true;
                counts.tp += 1;
            }
            None => counts.fp += 1,
        }
    }
    counts.fn_ += used.iter().filter(|&&u| !u).count() as u64;
    counts
}

/// Exact-match segment scoring: a prediction is a true positive only if a
/// gold segment agrees on span, main category, and all three modifiers.
pub fn eval_segments(
    gold: &[Vec<SemanticSegment>],
    pred: &[Vec<SemanticSegment>],
    speakers: &[Speaker],
) -> Result<EvalReport> {
    if gold.len() != pred.len() || gold.len() != speakers.len() {
        return Err(Error::InvalidInput(format!(
            "gold ({}), predictions ({}), and speakers ({}) must have equal length",
            gold.len(),
            pred.len(),
            speakers.len()
        )));
    }
    let mut guide = Counts::default();
    let mut tourist = Counts::default();
    for ((gold_segments, pred_segments), speaker) in gold.iter().zip(pred).zip(speakers) {
        let counts = segment_counts(gold_segments, pred_segments);
        match speaker {
            Speaker::Guide => guide.absorb(counts),
            Speaker::Tourist => tourist.absorb(counts),
        }
    }
    Ok(EvalReport::from_counts(guide, tourist))
}

/// Verifies that two corpora describe the same dialogs in the same order.
pub fn check_alignment(gold: &Corpus, pred: &Corpus) -> Result<()> {
    if gold.dialogs.len() != pred.dialogs.len() {
        return Err(Error::InvalidInput(format!(
            "corpora have {} vs {} dialogs",
            gold.dialogs.len(),
            pred.dialogs.len()
        )));
    }
    for (g, p) in gold.dialogs.iter().zip(&pred.dialogs) {
        if g.id != p.id {
            return Err(Error::InvalidInput(format!(
                "dialog id mismatch: gold `{}` vs predictions `{}`",
                g.id, p.id
            )));
        }
        if g.utterances.len() != p.utterances.len() {
            return Err(Error::InvalidInput(format!(
                "dialog `{}` has {} gold utterances but {} predicted",
                g.id,
                g.utterances.len(),
                p.utterances.len()
            )));
        }
        for (i, (gu, pu)) in g.utterances.iter().zip(&p.utterances).enumerate() {
            if gu.speaker != pu.speaker {
                return Err(Error::InvalidInput(format!(
                    "dialog `{}` utterance {i}: speaker mismatch",
                    g.id
                )));
            }
        }
    }
    Ok(())
}

/// Scores a prediction corpus (one speech act per utterance) against a
/// gold corpus.
pub fn eval_speech_act_corpora(
    gold: &Corpus,
    pred: &Corpus,
    level: MatchLevel,
) -> Result<EvalReport> {
    check_alignment(gold, pred)?;
    let mut gold_sets = Vec::new();
    let mut predictions = Vec::new();
    let mut speakers = Vec::new();
    for (gd, pd) in gold.dialogs.iter().zip(&pred.dialogs) {
        for (i, (gu, pu)) in gd.utterances.iter().zip(&pd.utterances).enumerate() {
            if pu.speech_acts.len() != 1 {
                return Err(Error::InvalidInput(format!(
                    "dialog `{}` utterance {i}: predictions must carry exactly one speech act, found {}",
                    pd.id,
                    pu.speech_acts.len()
                )));
            }
            gold_sets.push(gu.speech_acts.clone());
            predictions.push(pu.speech_acts[0].clone());
            speakers.push(gu.speaker);
        }
    }
    eval_speech_acts(&gold_sets, &predictions, &speakers, level)
}

/// Scores a segment-prediction corpus against a gold corpus.
pub fn eval_segment_corpora(gold: &Corpus, pred: &Corpus) -> Result<EvalReport> {
    check_alignment(gold, pred)?;
    let mut gold_segments = Vec::new();
    let mut pred_segments = Vec::new();
    let mut speakers = Vec::new();
    for (gd, pd) in gold.dialogs.iter().zip(&pred.dialogs) {
        for (gu, pu) in gd.utterances.iter().zip(&pd.utterances) {
            gold_segments.push(gu.segments.clone());
            pred_segments.push(pu.segments.clone());
            speakers.push(gu.speaker);
        }
    }
    eval_segments(&gold_segments, &pred_segments, &speakers)
}

/// One grid point: a label for reporting plus a full hyperparameter
/// setting.
#[derive(Debug, Clone)]
pub struct GridPoint {
    pub label: String,
    pub hyperparams: PointHyperparams,
}

#[derive(Debug, Clone)]
pub enum PointHyperparams {
    SpeechAct(SpeechActHyperparams),
    Semantic(SemanticHyperparams),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridTarget {
    SpeechAct(SystemId),
    Semantic,
}

/// A hyperparameter grid evaluated by k-fold cross-validation.
#[derive(Debug, Clone)]
pub struct Grid {
    pub target: GridTarget,
    pub points: Vec<GridPoint>,
    pub k: usize,
    pub seed: u64,
}

impl Grid {
    /// Grid for a speech-act system. `values` are penalty parameters for
    /// system 3 and regularizer strengths for system 5 (`None` uses the
    /// defaults `{0.01, 0.1, 1, 10, 100}` and `{0.01, 0.1, 1, 10}`);
    /// systems 1, 2, and 4 have no tuned axis and get a single point.
    pub fn speech_act(system: SystemId, k: usize, seed: u64, values: Option<&[f64]>) -> Grid {
        let points = match system {
            SystemId::S3 => {
                let defaults = [0.01, 0.1, 1.0, 10.0, 100.0];
                values
                    .unwrap_or(&defaults)
                    .iter()
                    .map(|&c| GridPoint {
                        label: format!("c={c}"),
                        hyperparams: PointHyperparams::SpeechAct(SpeechActHyperparams {
                            svm_c: c,
                            ..SpeechActHyperparams::default()
                        }),
                    })
                    .collect()
            }
            SystemId::S5 => {
                let defaults = [0.01, 0.1, 1.0, 10.0];
                values
                    .unwrap_or(&defaults)
                    .iter()
                    .map(|&l2| GridPoint {
                        label: format!("l2={l2}"),
                        hyperparams: PointHyperparams::SpeechAct(SpeechActHyperparams {
                            logreg_l2: l2,
                            ..SpeechActHyperparams::default()
                        }),
                    })
                    .collect()
            }
            _ => vec![GridPoint {
                label: "default".to_string(),
                hyperparams: PointHyperparams::SpeechAct(SpeechActHyperparams::default()),
            }],
        };
        Grid {
            target: GridTarget::SpeechAct(system),
            points,
            k,
            seed,
        }
    }

    /// Grid over the tagger's regularizer strength (`None` uses
    /// `{0.01, 0.1, 1}`).
    pub fn semantic(k: usize, seed: u64, values: Option<&[f64]>) -> Grid {
        let defaults = [0.01, 0.1, 1.0];
        let points = values
            .unwrap_or(&defaults)
            .iter()
            .map(|&l2| GridPoint {
                label: format!("l2={l2}"),
                hyperparams: PointHyperparams::Semantic(SemanticHyperparams {
                    l2,
                    ..SemanticHyperparams::default()
                }),
            })
            .collect();
        Grid {
            target: GridTarget::Semantic,
            points,
            k,
            seed,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct GridPointResult {
    pub label: String,
    pub mean_f1: f64,
    pub fold_f1: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CvOutcome {
    pub best_index: usize,
    pub best_label: String,
    pub table: Vec<GridPointResult>,
}

/// Runs k-fold cross-validation over every grid point and returns the
/// argmax of mean overall F1, ties resolved by the earliest grid point.
/// Folds are dialog-granular, so no utterance of an evaluation dialog is
/// ever seen in the same point's training set.
pub fn grid_search_cv(
    corpus: &Corpus,
    grid: &Grid,
    ontology: Option<&Ontology>,
    ruleset: Option<&RuleSet>,
) -> Result<CvOutcome> {
    if grid.points.is_empty() {
        return Err(Error::InvalidInput("grid has no points".to_string()));
    }
    let folds = split_folds(corpus, grid.k, grid.seed)?;
    let mut table = Vec::with_capacity(grid.points.len());
    for point in &grid.points {
        let mut fold_f1 = Vec::with_capacity(grid.k);
        for fold in 0..grid.k {
            let train = corpus.retain_dialogs(|id| folds[id] != fold);
            let test = corpus.retain_dialogs(|id| folds[id] == fold);
            let f1 = match (&point.hyperparams, grid.target) {
                (PointHyperparams::SpeechAct(hp), GridTarget::SpeechAct(system)) => {
                    let model =
                        train_speech_act_system(&train, system, hp, ruleset.cloned(), grid.seed)?;
                    let mut gold = Vec::new();
                    let mut predictions = Vec::new();
                    let mut speakers = Vec::new();
                    for dialog in &test.dialogs {
                        let labels = predict_speech_acts(&model, dialog)?;
                        for (utterance, label) in dialog.utterances.iter().zip(labels) {
                            gold.push(utterance.speech_acts.clone());
                            predictions.push(label);
                            speakers.push(utterance.speaker);
                        }
                    }
                    let level = match system {
                        SystemId::S2 | SystemId::S4 => MatchLevel::Category,
                        _ => MatchLevel::Pair,
                    };
                    eval_speech_acts(&gold, &predictions, &speakers, level)?.overall.f1
                }
                (PointHyperparams::Semantic(hp), GridTarget::Semantic) => {
                    let ontology = ontology.ok_or_else(|| {
                        Error::InvalidInput(
                            "semantic cross-validation requires an ontology".to_string(),
                        )
                    })?;
                    let model = train_semantic_tagger(&train, ontology, hp)?;
                    let mut gold = Vec::new();
                    let mut predictions = Vec::new();
                    let mut speakers = Vec::new();
                    for dialog in &test.dialogs {
                        for utterance in &dialog.utterances {
                            gold.push(utterance.segments.clone());
                            predictions.push(predict_segments(&model, utterance)?);
                            speakers.push(utterance.speaker);
                        }
                    }
                    eval_segments(&gold, &predictions, &speakers)?.overall.f1
                }
                _ => {
                    return Err(Error::InvalidInput(
                        "grid point does not match the grid target".to_string(),
                    ));
                }
            };
            fold_f1.push(f1);
        }
        let mean_f1 = fold_f1.iter().sum::<f64>() / fold_f1.len() as f64;
        table.push(GridPointResult {
            label: point.label.clone(),
            mean_f1,
            fold_f1,
        });
    }
    let mut best_index = 0;
    for (i, result) in table.iter().enumerate().skip(1) {
        if result.mean_f1 > table[best_index].mean_f1 {
            best_index = i;
        }
    }
    Ok(CvOutcome {
        best_index,
        best_label: table[best_index].label.clone(),
        table,
    })
}

/// Renders reports as a fixed-width table: one row per tracker, one
/// precision/recall/F1 column group per speaker plus the overall group,
/// four decimal places.
pub fn format_report(rows: &[(String, EvalReport)]) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "{:<16}{:<33}{:<33}{:<33}\n",
        "Tracker", "Guide", "Tourist", "Overall"
    ));
    let header = format!("{:>10} {:>10} {:>10}", "Precision", "Recall", "F1-score");
    out.push_str(&format!("{:<16}{header} {header} {header}\n", ""));
    for (name, report) in rows {
        let group = |m: &Metrics| format!("{:>10.4} {:>10.4} {:>10.4}", m.precision, m.recall, m.f1);
        out.push_str(&format!(
            "{:<16}{} {} {}\n",
            name,
            group(&report.guide),
            group(&report.tourist),
            group(&report.overall)
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Utterance;
    use crate::test_support::{dialog, utterance};
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// Published (precision, recall, f1) triples for the five trackers and
    /// the semantic tagger, guide then tourist.
    pub(crate) const REPORTED_RESULTS: [(f64, f64, f64); 12] = [
        (0.6287, 0.5191, 0.5687),
        (0.3583, 0.2977, 0.3252),
        (0.6330, 0.5227, 0.5726),
        (0.2931, 0.2435, 0.2660),
        (0.7451, 0.6153, 0.6740),
        (0.5627, 0.4675, 0.5107),
        (0.6314, 0.5214, 0.5712),
        (0.2939, 0.2442, 0.2668),
        (0.6762, 0.5584, 0.6117),
        (0.5736, 0.4766, 0.5206),
        (0.5646, 0.4886, 0.5239),
        (0.5741, 0.4764, 0.5207),
    ];

    #[test]
    fn f1_identities_hold_for_all_reported_rows() {
        for (precision, recall, f1) in REPORTED_RESULTS {
            let computed = f1_from_pr(precision, recall);
            assert!(
                (computed - f1).abs() < 5e-5,
                "f1({precision}, {recall}) = {computed}, reported {f1}"
            );
        }
    }

    #[test]
    fn zero_counts_give_zero_metrics() {
        assert_eq!(prf1(0, 0, 0), (0.0, 0.0, 0.0));
    }

    #[test]
    fn f1_lies_between_precision_and_recall() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..200 {
            let tp = rng.gen_range(0..50u64);
            let fp = rng.gen_range(0..50u64);
            let fn_ = rng.gen_range(0..50u64);
            let (p, r, f1) = prf1(tp, fp, fn_);
            if p > 0.0 && r > 0.0 {
                assert!(f1 <= p.max(r) + 1e-12);
                assert!(f1 >= p.min(r) - 1e-12);
            }
        }
    }

    fn pair(category: &str, attribute: &str) -> SpeechActLabel {
        SpeechActLabel::new(category, attribute)
    }

    #[test]
    fn speech_act_counting_matches_the_contract() {
        let gold = vec![
            vec![pair("QST", "WHERE")],
            vec![pair("QST", "WHERE"), pair("FOL", "ACK")],
            vec![],
        ];
        let pred = vec![pair("QST", "WHERE"), pair("QST", "WHERE"), pair("RES", "NONE")];
        let speakers = vec![Speaker::Guide; 3];
        let report =
            eval_speech_acts(&gold, &pred, &speakers, MatchLevel::Pair).unwrap();
        assert_eq!(report.guide.counts.tp, 2);
        assert_eq!(report.guide.counts.fp, 1);
        assert_eq!(report.guide.counts.fn_, 1);
        assert_eq!(report.tourist.counts.tp, 0);
    }

    #[test]
    fn category_level_ignores_attributes() {
        let gold = vec![vec![pair("QST", "WHERE")]];
        let pred = vec![pair("QST", "NONE")];
        let speakers = vec![Speaker::Tourist];
        let pair_report = eval_speech_acts(&gold, &pred, &speakers, MatchLevel::Pair).unwrap();
        let cat_report =
            eval_speech_acts(&gold, &pred, &speakers, MatchLevel::Category).unwrap();
        assert_eq!(pair_report.overall.counts.tp, 0);
        assert_eq!(cat_report.overall.counts.tp, 1);
        assert_eq!(cat_report.overall.f1, 1.0);
    }

    fn seg(start: usize, end: usize, main: &str) -> SemanticSegment {
        SemanticSegment::new(start, end, main)
    }

    #[test]
    fn identical_segment_lists_score_one() {
        let gold = vec![vec![seg(0, 1, "LOC"), seg(2, 4, "TIME"), seg(5, 6, "FOOD")]];
        let report = eval_segments(&gold, &gold.clone(), &[Speaker::Guide]).unwrap();
        assert_eq!(report.overall.counts.tp, 3);
        assert_eq!(report.overall.f1, 1.0);
    }

    #[test]
    fn attribute_mismatch_is_both_fp_and_fn() {
        let mut gold_segment = seg(0, 2, "LOC");
        gold_segment.sub = Some("AREA".to_string());
        let gold = vec![vec![gold_segment]];
        let pred = vec![vec![seg(0, 2, "LOC")]];
        let report = eval_segments(&gold, &pred, &[Speaker::Tourist]).unwrap();
        assert_eq!(report.overall.counts.tp, 0);
        assert_eq!(report.overall.counts.fp, 1);
        assert_eq!(report.overall.counts.fn_, 1);
    }

    #[test]
    fn empty_predictions_miss_everything() {
        let gold = vec![vec![seg(0, 1, "LOC"), seg(1, 2, "LOC")]];
        let pred = vec![vec![]];
        let report = eval_segments(&gold, &pred, &[Speaker::Guide]).unwrap();
        assert_eq!(report.overall.counts.fn_, 2);
        assert_eq!(report.overall.recall, 0.0);
        assert_eq!(report.overall.f1, 0.0);
    }

    #[test]
    fn disjoint_segment_lists_score_zero() {
        let gold = vec![vec![seg(0, 1, "LOC")]];
        let pred = vec![vec![seg(1, 2, "TIME")]];
        let report = eval_segments(&gold, &pred, &[Speaker::Guide]).unwrap();
        assert_eq!(report.overall.f1, 0.0);
    }

    #[test]
    fn alignment_names_the_first_mismatching_id() {
        let gold = Corpus {
            dialogs: vec![
                dialog("d1", vec![]),
                dialog("d2", vec![]),
            ],
        };
        let pred = Corpus {
            dialogs: vec![
                dialog("d1", vec![]),
                dialog("dX", vec![]),
            ],
        };
        let err = check_alignment(&gold, &pred).unwrap_err();
        assert!(err.to_string().contains("`d2`"), "got: {err}");
        assert!(err.to_string().contains("`dX`"));
    }

    fn keyword_utterance(index: usize, speaker: Speaker, keyword: &str, category: &str) -> Utterance {
        let mut utt = utterance(index, speaker, &[keyword, "filler"]);
        utt.speech_acts.push(pair(category, "NONE"));
        utt
    }

    fn keyword_corpus(dialog_count: usize) -> Corpus {
        let dialogs = (0..dialog_count)
            .map(|i| {
                let utterances = (0..4)
                    .map(|j| {
                        let speaker = if j % 2 == 0 { Speaker::Guide } else { Speaker::Tourist };
                        let (keyword, category) =
                            if (i + j) % 2 == 0 { ("alpha", "A") } else { ("beta", "B") };
                        keyword_utterance(j, speaker, keyword, category)
                    })
                    .collect();
                dialog(format!("d{i:02}"), utterances)
            })
            .collect();
        Corpus { dialogs }
    }

    #[test]
    fn single_point_grid_returns_it() {
        let corpus = keyword_corpus(6);
        let grid = Grid::speech_act(SystemId::S4, 3, 0, None);
        let outcome = grid_search_cv(&corpus, &grid, None, None).unwrap();
        assert_eq!(outcome.best_index, 0);
        assert_eq!(outcome.table.len(), 1);
    }

    #[test]
    fn equal_points_pick_the_earliest() {
        let corpus = keyword_corpus(6);
        // Two identical settings must tie exactly; earliest wins.
        let grid = Grid::speech_act(SystemId::S5, 3, 1, Some(&[0.1, 0.1]));
        let outcome = grid_search_cv(&corpus, &grid, None, None).unwrap();
        assert_eq!(outcome.table[0].mean_f1, outcome.table[1].mean_f1);
        assert_eq!(outcome.best_index, 0);
    }

    /// A corpus where a clean keyword decides the label but 30% of the
    /// utterances are mislabeled, and random filler n-grams recur across
    /// dialogs. A loosely regularized SVM memorizes those fillers and
    /// carries the noise into held-out folds.
    fn noisy_corpus() -> Corpus {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let fillers = ["um", "ah", "so", "well", "right", "ok"];
        let dialogs = (0..20)
            .map(|i| {
                let utterances = (0..8)
                    .map(|j| {
                        let speaker = if rng.gen_bool(0.5) { Speaker::Guide } else { Speaker::Tourist };
                        let true_class = rng.gen_bool(0.5);
                        let keyword = if true_class { "alpha" } else { "beta" };
                        let mut texts = vec![keyword];
                        for _ in 0..3 {
                            texts.push(fillers[rng.gen_range(0..fillers.len())]);
                        }
                        let observed = if rng.gen_bool(0.3) { !true_class } else { true_class };
                        let mut utt = utterance(j, speaker, &texts);
                        utt.speech_acts
                            .push(pair(if observed { "A" } else { "B" }, "NONE"));
                        utt
                    })
                    .collect();
                dialog(format!("n{i:02}"), utterances)
            })
            .collect();
        Corpus { dialogs }
    }

    #[test]
    fn cv_prefers_the_regularized_point_on_noisy_data() {
        let corpus = noisy_corpus();
        let grid = Grid::speech_act(SystemId::S3, 5, 3, Some(&[1e-3, 1e3]));
        let outcome = grid_search_cv(&corpus, &grid, None, None).unwrap();
        assert_eq!(
            outcome.best_index, 0,
            "expected c=1e-3 to win: {:?}",
            outcome.table
        );
        assert!(outcome.table[0].mean_f1 > outcome.table[1].mean_f1);
    }

    #[test]
    fn cv_folds_partition_the_dialogs() {
        let corpus = keyword_corpus(9);
        let folds = split_folds(&corpus, 3, 7).unwrap();
        for fold in 0..3 {
            let train = corpus.retain_dialogs(|id| folds[id] != fold);
            let test = corpus.retain_dialogs(|id| folds[id] == fold);
            assert_eq!(train.dialogs.len() + test.dialogs.len(), 9);
            for d in &test.dialogs {
                assert!(!train.dialogs.iter().any(|t| t.id == d.id));
            }
        }
    }

    #[test]
    fn report_table_uses_four_decimals() {
        let report = EvalReport::from_counts(
            Counts { tp: 3, fp: 1, fn_: 2 },
            Counts { tp: 1, fp: 1, fn_: 1 },
        );
        let text = format_report(&[("System 3".to_string(), report)]);
        assert!(text.contains("0.7500"), "got:\n{text}");
        assert!(text.contains("Tracker"));
        assert!(text.contains("F1-score"));
        assert_eq!(text.lines().count(), 3);
    }
}
