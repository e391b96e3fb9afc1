//! End-to-end systems: the five speech-act classifiers and the four-CRF
//! semantic tagger with ontology-constrained combination.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::bio::{bio_to_spans, segments_to_bio};
use crate::corpus::{
    AttributeKind, Corpus, Dialog, Ontology, SemanticSegment, Speaker, SpeechActLabel, Utterance,
};
use crate::crf::{build_lattice, train_crf, viterbi, CrfModel, FeatureSet};
use crate::error::{Error, Result};
use crate::features::{
    build_ngram_vocab, extract_discourse_features, extract_sa_features, extract_token_features,
    SaFeatureConfig, SparseVector, Vocabulary,
};
use crate::forest::{predict_forest, train_forest, ForestModel, ForestParams};
use crate::linear::{predict_linear, train_logreg, train_svm, LinearModel};
use crate::rules::{apply_rules, RuleSet};

/// The five speech-act systems.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SystemId {
    S1,
    S2,
    S3,
    S4,
    S5,
}

impl SystemId {
    pub const ALL: [SystemId; 5] = [
        SystemId::S1,
        SystemId::S2,
        SystemId::S3,
        SystemId::S4,
        SystemId::S5,
    ];
}

impl fmt::Display for SystemId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            SystemId::S1 => "S1",
            SystemId::S2 => "S2",
            SystemId::S3 => "S3",
            SystemId::S4 => "S4",
            SystemId::S5 => "S5",
        };
        f.write_str(name)
    }
}

impl FromStr for SystemId {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        match text.to_ascii_lowercase().as_str() {
            "1" | "s1" => Ok(SystemId::S1),
            "2" | "s2" => Ok(SystemId::S2),
            "3" | "s3" => Ok(SystemId::S3),
            "4" | "s4" => Ok(SystemId::S4),
            "5" | "s5" => Ok(SystemId::S5),
            other => Err(Error::InvalidInput(format!(
                "unknown system id `{other}` (expected s1..s5)"
            ))),
        }
    }
}

/// Hyperparameters for the speech-act systems; each system reads only the
/// fields it uses.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SpeechActHyperparams {
    pub vocab_size: usize,
    pub svm_c: f64,
    pub logreg_l2: f64,
    pub tol: f64,
    pub max_epochs: usize,
    pub forest: ForestParams,
}

impl Default for SpeechActHyperparams {
    fn default() -> Self {
        SpeechActHyperparams {
            vocab_size: 5000,
            svm_c: 1.0,
            logreg_l2: 0.1,
            tol: 1e-4,
            max_epochs: 500,
            forest: ForestParams::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SemanticHyperparams {
    pub l2: f64,
    pub tol: f64,
    pub max_iters: usize,
}

impl Default for SemanticHyperparams {
    fn default() -> Self {
        SemanticHyperparams {
            l2: 0.1,
            tol: 1e-4,
            max_iters: 300,
        }
    }
}

/// The trained payload of a speech-act system; the variant is forced by
/// the system id.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum SpeechActPayload {
    /// System 1.
    Rules { ruleset: RuleSet },
    /// Systems 2 and 4, over the dense discourse features.
    Forest {
        model: ForestModel,
        history_depth: usize,
    },
    /// System 3: one SVM per speaker.
    SpeakerSvms {
        guide: LinearModel,
        tourist: LinearModel,
        vocab: Vocabulary,
        config: SaFeatureConfig,
    },
    /// System 5: a single speaker-independent model.
    Logistic {
        model: LinearModel,
        vocab: Vocabulary,
        config: SaFeatureConfig,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpeechActModel {
    pub system: SystemId,
    /// Distinct gold (category, attribute) pairs in order of first
    /// appearance; class indices of the linear systems index into it.
    pub labels: Vec<SpeechActLabel>,
    pub payload: SpeechActPayload,
}

fn gold_pairs(utterance: &Utterance) -> Vec<SpeechActLabel> {
    if utterance.speech_acts.is_empty() {
        // Unannotated utterances train as an explicit (NONE, NONE) class.
        vec![SpeechActLabel::none()]
    } else {
        utterance.speech_acts.clone()
    }
}

fn build_label_inventory(corpus: &Corpus) -> Vec<SpeechActLabel> {
    let mut inventory = Vec::new();
    let mut seen: HashMap<SpeechActLabel, usize> = HashMap::new();
    for dialog in &corpus.dialogs {
        for utterance in &dialog.utterances {
            for pair in gold_pairs(utterance) {
                if !seen.contains_key(&pair) {
                    seen.insert(pair.clone(), inventory.len());
                    inventory.push(pair);
                }
            }
        }
    }
    inventory
}

fn require_speech_act_annotations(corpus: &Corpus) -> Result<()> {
    let annotated = corpus
        .dialogs
        .iter()
        .flat_map(|d| &d.utterances)
        .any(|u| !u.speech_acts.is_empty());
    if annotated {
        Ok(())
    } else {
        Err(Error::InvalidInput(
            "corpus has no speech-act annotations".to_string(),
        ))
    }
}

fn sa_config() -> SaFeatureConfig {
    SaFeatureConfig {
        history_depth: 1,
        include_speaker_change: true,
    }
}

fn train_forest_system(
    corpus: &Corpus,
    history_depth: usize,
    inventory: &[SpeechActLabel],
    hp: &SpeechActHyperparams,
    seed: u64,
) -> Result<ForestModel> {
    let mut categories: Vec<String> = Vec::new();
    let mut category_index: HashMap<&str, usize> = HashMap::new();
    for pair in inventory {
        if !category_index.contains_key(pair.category.as_str()) {
            category_index.insert(&pair.category, categories.len());
            categories.push(pair.category.clone());
        }
    }
    let mut data = Vec::new();
    for dialog in &corpus.dialogs {
        for (i, utterance) in dialog.utterances.iter().enumerate() {
            let dense = extract_discourse_features(dialog, i, history_depth)?.to_dense();
            for pair in gold_pairs(utterance) {
                let class = category_index[pair.category.as_str()];
                data.push((dense.clone(), class));
            }
        }
    }
    train_forest(&data, &categories, &hp.forest, seed)
}

fn linear_instances(
    corpus: &Corpus,
    vocab: &Vocabulary,
    config: &SaFeatureConfig,
    inventory: &[SpeechActLabel],
) -> Result<Vec<(Speaker, SparseVector, usize)>> {
    let class_index: HashMap<&SpeechActLabel, usize> =
        inventory.iter().enumerate().map(|(i, p)| (p, i)).collect();
    let mut instances = Vec::new();
    for dialog in &corpus.dialogs {
        for (i, utterance) in dialog.utterances.iter().enumerate() {
            let x = extract_sa_features(dialog, i, vocab, config)?;
            // A gold set with several pairs yields one monolabel instance
            // per pair, all sharing the same features.
            for pair in gold_pairs(utterance) {
                instances.push((utterance.speaker, x.clone(), class_index[&pair]));
            }
        }
    }
    Ok(instances)
}

fn pair_class_names(inventory: &[SpeechActLabel]) -> Vec<String> {
    inventory.iter().map(|pair| pair.to_string()).collect()
}

/// Trains one speech-act system. System 1 wraps the supplied ruleset;
/// systems 2/4 train forests on category-only labels with history depth
/// 2/1; system 3 trains one SVM per speaker; system 5 trains a single
/// logistic model.
pub fn train_speech_act_system(
    corpus: &Corpus,
    system: SystemId,
    hp: &SpeechActHyperparams,
    ruleset: Option<RuleSet>,
    seed: u64,
) -> Result<SpeechActModel> {
    require_speech_act_annotations(corpus)?;
    let labels = build_label_inventory(corpus);
    let payload = match system {
        SystemId::S1 => {
            let ruleset = ruleset.ok_or_else(|| {
                Error::InvalidInput("system S1 requires a ruleset".to_string())
            })?;
            SpeechActPayload::Rules { ruleset }
        }
        SystemId::S2 | SystemId::S4 => {
            let history_depth = if system == SystemId::S2 { 2 } else { 1 };
            let model = train_forest_system(corpus, history_depth, &labels, hp, seed)?;
            SpeechActPayload::Forest {
                model,
                history_depth,
            }
        }
        SystemId::S3 => {
            let vocab = build_ngram_vocab(corpus, hp.vocab_size)?;
            let config = sa_config();
            let num_features = config.num_columns(vocab.len());
            let class_names = pair_class_names(&labels);
            let instances = linear_instances(corpus, &vocab, &config, &labels)?;
            let train_for = |speaker: Speaker| -> Result<LinearModel> {
                let data: Vec<(SparseVector, usize)> = instances
                    .iter()
                    .filter(|(s, _, _)| *s == speaker)
                    .map(|(_, x, y)| (x.clone(), *y))
                    .collect();
                if data.is_empty() {
                    return Err(Error::InvalidInput(format!(
                        "no {speaker} utterances in the training corpus"
                    )));
                }
                train_svm(
                    &data,
                    &class_names,
                    num_features,
                    hp.svm_c,
                    hp.tol,
                    hp.max_epochs,
                )
            };
            let guide = train_for(Speaker::Guide)?;
            let tourist = train_for(Speaker::Tourist)?;
            SpeechActPayload::SpeakerSvms {
                guide,
                tourist,
                vocab,
                config,
            }
        }
        SystemId::S5 => {
            let vocab = build_ngram_vocab(corpus, hp.vocab_size)?;
            let config = sa_config();
            let num_features = config.num_columns(vocab.len());
            let class_names = pair_class_names(&labels);
            let data: Vec<(SparseVector, usize)> = linear_instances(corpus, &vocab, &config, &labels)?
                .into_iter()
                .map(|(_, x, y)| (x, y))
                .collect();
            let model = train_logreg(
                &data,
                &class_names,
                num_features,
                hp.logreg_l2,
                hp.tol,
                hp.max_epochs,
            )?;
            SpeechActPayload::Logistic {
                model,
                vocab,
                config,
            }
        }
    };
    Ok(SpeechActModel {
        system,
        labels,
        payload,
    })
}

/// Predicts exactly one label per utterance, left to right.
pub fn predict_speech_acts(model: &SpeechActModel, dialog: &Dialog) -> Result<Vec<SpeechActLabel>> {
    match &model.payload {
        SpeechActPayload::Rules { ruleset } => Ok(apply_rules(ruleset, dialog)),
        SpeechActPayload::Forest {
            model: forest,
            history_depth,
        } => (0..dialog.utterances.len())
            .map(|i| {
                let dense = extract_discourse_features(dialog, i, *history_depth)?.to_dense();
                let class = predict_forest(forest, &dense)?;
                Ok(SpeechActLabel::new(
                    forest.class_names[class].clone(),
                    "NONE",
                ))
            })
            .collect(),
        SpeechActPayload::SpeakerSvms {
            guide,
            tourist,
            vocab,
            config,
        } => (0..dialog.utterances.len())
            .map(|i| {
                let x = extract_sa_features(dialog, i, vocab, config)?;
                let submodel = match dialog.utterances[i].speaker {
                    Speaker::Guide => guide,
                    Speaker::Tourist => tourist,
                };
                let (class, _) = predict_linear(submodel, &x)?;
                Ok(model.labels[class].clone())
            })
            .collect(),
        SpeechActPayload::Logistic {
            model: linear,
            vocab,
            config,
        } => (0..dialog.utterances.len())
            .map(|i| {
                let x = extract_sa_features(dialog, i, vocab, config)?;
                let (class, _) = predict_linear(linear, &x)?;
                Ok(model.labels[class].clone())
            })
            .collect(),
    }
}

/// Four independently trained CRFs (one per attribute kind) plus the
/// ontology used to combine their outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SemanticModel {
    pub main: CrfModel,
    pub sub: CrfModel,
    pub rel: CrfModel,
    pub from_to: CrfModel,
    pub ontology: Ontology,
}

impl SemanticModel {
    pub fn model_for(&self, kind: AttributeKind) -> &CrfModel {
        match kind {
            AttributeKind::Main => &self.main,
            AttributeKind::Sub => &self.sub,
            AttributeKind::Rel => &self.rel,
            AttributeKind::FromTo => &self.from_to,
        }
    }
}

fn token_feature_sets(utterance: &Utterance) -> Result<Vec<FeatureSet>> {
    (0..utterance.tokens.len())
        .map(|position| {
            Ok(extract_token_features(&utterance.tokens, position)?
                .into_iter()
                .collect())
        })
        .collect()
}

/// Trains the semantic tagger: for each attribute kind, gold segments are
/// converted to BIO labels and one CRF is trained over the token-window
/// features. The label `O` always has index 0.
pub fn train_semantic_tagger(
    corpus: &Corpus,
    ontology: &Ontology,
    hp: &SemanticHyperparams,
) -> Result<SemanticModel> {
    let annotated = corpus
        .dialogs
        .iter()
        .flat_map(|d| &d.utterances)
        .any(|u| !u.segments.is_empty());
    if !annotated {
        return Err(Error::InvalidInput(
            "corpus has no segment annotations".to_string(),
        ));
    }
    let utterances: Vec<&Utterance> = corpus
        .dialogs
        .iter()
        .flat_map(|d| &d.utterances)
        .filter(|u| !u.tokens.is_empty())
        .collect();
    let features: Vec<Vec<FeatureSet>> = utterances
        .iter()
        .map(|u| token_feature_sets(u))
        .collect::<Result<_>>()?;

    let train_kind = |kind: AttributeKind| -> Result<CrfModel> {
        let mut label_names = vec!["O".to_string()];
        let mut label_index: HashMap<String, usize> = HashMap::new();
        label_index.insert("O".to_string(), 0);
        let mut data = Vec::with_capacity(utterances.len());
        for (utterance, sets) in utterances.iter().zip(&features) {
            let gold: Vec<usize> = segments_to_bio(utterance, kind)
                .into_iter()
                .map(|label| {
                    *label_index.entry(label.clone()).or_insert_with(|| {
                        label_names.push(label);
                        label_names.len() - 1
                    })
                })
                .collect();
            data.push((sets.clone(), gold));
        }
        train_crf(&data, &label_names, hp.l2, hp.tol, hp.max_iters)
    };

    Ok(SemanticModel {
        main: train_kind(AttributeKind::Main)?,
        sub: train_kind(AttributeKind::Sub)?,
        rel: train_kind(AttributeKind::Rel)?,
        from_to: train_kind(AttributeKind::FromTo)?,
        ontology: ontology.clone(),
    })
}

/// Merges the four per-kind BIO sequences into segments.
///
/// Every MAIN span becomes a segment. For each other kind, the values of
/// that kind's spans overlapping the main span qualify if the ontology
/// admits them under the main category; the qualifying value covering the
/// most tokens of the main span wins, with ties going to the earliest span
/// start. If none qualify the attribute stays absent.
pub fn combine_attribute_tags(
    main_bio: &[String],
    sub_bio: &[String],
    rel_bio: &[String],
    ft_bio: &[String],
    ontology: &Ontology,
) -> Result<Vec<SemanticSegment>> {
    let len = main_bio.len();
    for (name, bio) in [("SUB", sub_bio), ("REL", rel_bio), ("FROM_TO", ft_bio)] {
        if bio.len() != len {
            return Err(Error::InvalidInput(format!(
                "{name} labeling has length {}, expected {len}",
                bio.len()
            )));
        }
    }
    let mut segments = Vec::new();
    for (start, end, main) in bio_to_spans(main_bio) {
        let entry = ontology.get(&main);
        let pick = |kind: AttributeKind, bio: &[String]| -> Option<String> {
            let admissible = entry?.admissible(kind)?;
            let mut best: Option<(usize, String)> = None;
            // Spans arrive sorted by start, so replacing only on a strictly
            // larger overlap implements the earliest-start tie-break.
            for (s, e, value) in bio_to_spans(bio) {
                let overlap = e.min(end).saturating_sub(s.max(start));
                if overlap == 0 || !admissible.contains(&value) {
                    continue;
                }
                if best.as_ref().is_none_or(|(b, _)| overlap > *b) {
                    best = Some((overlap, value));
                }
            }
            best.map(|(_, value)| value)
        };
        let mut segment = SemanticSegment::new(start, end, main);
        segment.sub = pick(AttributeKind::Sub, sub_bio);
        segment.rel = pick(AttributeKind::Rel, rel_bio);
        segment.from_to = pick(AttributeKind::FromTo, ft_bio);
        segments.push(segment);
    }
    Ok(segments)
}

/// Decodes the four CRFs over one utterance and combines their outputs.
pub fn predict_segments(
    model: &SemanticModel,
    utterance: &Utterance,
) -> Result<Vec<SemanticSegment>> {
    if utterance.tokens.is_empty() {
        return Ok(Vec::new());
    }
    let features = token_feature_sets(utterance)?;
    let decode = |crf: &CrfModel| -> Result<Vec<String>> {
        let lattice = build_lattice(crf, &features)?;
        let (path, _) = viterbi(&lattice);
        Ok(path
            .into_iter()
            .map(|y| crf.label_names()[y].clone())
            .collect())
    };
    combine_attribute_tags(
        &decode(&model.main)?,
        &decode(&model.sub)?,
        &decode(&model.rel)?,
        &decode(&model.from_to)?,
        &model.ontology,
    )
}
