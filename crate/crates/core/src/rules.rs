//! Rule-based speech-act baseline: an ordered rule list evaluated per
//! utterance with access to the dialog context and the labels already
//! predicted for earlier utterances.
//!
//! Rule files are JSON arrays. Every entry but the last is
//! `{"if": ["<predicate>", ...], "then": {"category": ..., "attribute": ...}}`;
//! the final entry is `{"default": {"category": ..., "attribute": ...}}`.
//! A predicate is a name optionally followed by a parenthesized argument,
//! e.g. `ends_with_token(?)` or `speaker_changed`.

use std::fmt;
use std::fs;
use std::path::Path;

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::corpus::{Dialog, Speaker, SpeechActLabel, Utterance};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Predicate {
    EndsWithToken(String),
    ContainsToken(String),
    SpeakerIs(Speaker),
    SpeakerChanged,
    PrevPredCategoryIs(String),
    UtteranceIndexIs(usize),
    TokenCountLt(usize),
}

impl Predicate {
    pub fn parse(text: &str) -> Result<Predicate> {
        let (name, argument) = match text.split_once('(') {
            Some((name, rest)) => {
                let Some(argument) = rest.strip_suffix(')') else {
                    return Err(Error::InvalidInput(format!(
                        "predicate `{text}` has an unterminated argument"
                    )));
                };
                (name.trim(), Some(argument))
            }
            None => (text.trim(), None),
        };
        let require = |name: &str| {
            argument.map(str::to_string).ok_or_else(|| {
                Error::InvalidInput(format!("predicate `{name}` requires an argument"))
            })
        };
        match name {
            "ends_with_token" => Ok(Predicate::EndsWithToken(require(name)?)),
            "contains_token" => Ok(Predicate::ContainsToken(require(name)?)),
            "speaker_is" => match require(name)?.as_str() {
                "GUIDE" => Ok(Predicate::SpeakerIs(Speaker::Guide)),
                "TOURIST" => Ok(Predicate::SpeakerIs(Speaker::Tourist)),
                other => Err(Error::InvalidInput(format!(
                    "speaker_is argument must be GUIDE or TOURIST, got `{other}`"
                ))),
            },
            "speaker_changed" => Ok(Predicate::SpeakerChanged),
            "prev_pred_category_is" => Ok(Predicate::PrevPredCategoryIs(require(name)?)),
            "utterance_index_is" => {
                let raw = require(name)?;
                let index = raw.parse().map_err(|_| {
                    Error::InvalidInput(format!(
                        "utterance_index_is argument must be a non-negative integer, got `{raw}`"
                    ))
                })?;
                Ok(Predicate::UtteranceIndexIs(index))
            }
            "token_count_lt" => {
                let raw = require(name)?;
                let count = raw.parse().map_err(|_| {
                    Error::InvalidInput(format!(
                        "token_count_lt argument must be a non-negative integer, got `{raw}`"
                    ))
                })?;
                Ok(Predicate::TokenCountLt(count))
            }
            other => Err(Error::UnknownPredicate(other.to_string())),
        }
    }

    fn holds(&self, context: &RuleContext<'_>) -> bool {
        let utterance = context.utterance;
        match self {
            Predicate::EndsWithToken(t) => {
                utterance.tokens.last().is_some_and(|last| last.text == *t)
            }
            Predicate::ContainsToken(t) => utterance.tokens.iter().any(|tok| tok.text == *t),
            Predicate::SpeakerIs(s) => utterance.speaker == *s,
            Predicate::SpeakerChanged => context
                .prev_speaker
                .is_some_and(|prev| prev != utterance.speaker),
            Predicate::PrevPredCategoryIs(c) => context.prev_pred_category == Some(c.as_str()),
            Predicate::UtteranceIndexIs(i) => utterance.index == *i,
            Predicate::TokenCountLt(n) => utterance.tokens.len() < *n,
        }
    }
}

impl fmt::Display for Predicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Predicate::EndsWithToken(t) => write!(f, "ends_with_token({t})"),
            Predicate::ContainsToken(t) => write!(f, "contains_token({t})"),
            Predicate::SpeakerIs(s) => write!(f, "speaker_is({s})"),
            Predicate::SpeakerChanged => write!(f, "speaker_changed"),
            Predicate::PrevPredCategoryIs(c) => write!(f, "prev_pred_category_is({c})"),
            Predicate::UtteranceIndexIs(i) => write!(f, "utterance_index_is({i})"),
            Predicate::TokenCountLt(n) => write!(f, "token_count_lt({n})"),
        }
    }
}

impl Serialize for Predicate {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Predicate {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let text = String::deserialize(deserializer)?;
        Predicate::parse(&text).map_err(D::Error::custom)
    }
}

/// One rule: a conjunction of predicates and the label it assigns.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rule {
    pub conditions: Vec<Predicate>,
    pub action: SpeechActLabel,
}

/// An ordered rule list with first-match semantics and a default label.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RuleSet {
    pub rules: Vec<Rule>,
    pub default: SpeechActLabel,
}

struct RuleContext<'a> {
    utterance: &'a Utterance,
    prev_speaker: Option<Speaker>,
    prev_pred_category: Option<&'a str>,
}

#[derive(Debug, Deserialize)]
struct RawEntry {
    #[serde(rename = "if", default)]
    conditions: Option<Vec<String>>,
    #[serde(default)]
    then: Option<SpeechActLabel>,
    #[serde(default)]
    default: Option<SpeechActLabel>,
}

/// Parses a rule document. Rules keep file order; the final entry must be
/// the default.
pub fn parse_ruleset(text: &str) -> Result<RuleSet> {
    let entries: Vec<RawEntry> = serde_json::from_str(text)
        .map_err(|e| Error::parse(Path::new("<ruleset>"), &e))?;
    let mut rules = Vec::new();
    let mut default = None;
    for (index, entry) in entries.iter().enumerate() {
        match (&entry.conditions, &entry.then, &entry.default) {
            (Some(conditions), Some(action), None) => {
                if default.is_some() {
                    return Err(Error::InvalidInput(format!(
                        "rule entry {index} appears after the default entry"
                    )));
                }
                if conditions.is_empty() {
                    return Err(Error::InvalidInput(format!(
                        "rule entry {index} has no conditions"
                    )));
                }
                if action.category.is_empty() {
                    return Err(Error::InvalidInput(format!(
                        "rule entry {index} has an empty action category"
                    )));
                }
                let parsed = conditions
                    .iter()
                    .map(|c| Predicate::parse(c))
                    .collect::<Result<Vec<_>>>()?;
                rules.push(Rule {
                    conditions: parsed,
                    action: action.clone(),
                });
            }
            (None, None, Some(label)) => {
                if label.category.is_empty() {
                    return Err(Error::InvalidInput(
                        "default entry has an empty category".to_string(),
                    ));
                }
                default = Some(label.clone());
            }
            _ => {
                return Err(Error::InvalidInput(format!(
                    "entry {index} must be either {{\"if\", \"then\"}} or {{\"default\"}}"
                )));
            }
        }
    }
    let default = default.ok_or(Error::MissingDefault)?;
    Ok(RuleSet { rules, default })
}

/// Reads and parses a rule file.
pub fn load_ruleset(path: impl AsRef<Path>) -> Result<RuleSet> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_ruleset(&text).map_err(|e| match e {
        Error::Parse {
            line,
            column,
            message,
            ..
        } => Error::Parse {
            path: path.to_path_buf(),
            line,
            column,
            message,
        },
        other => other,
    })
}

/// Labels every utterance in order. For each utterance the first rule whose
/// conditions all hold fires; `prev_pred_category_is` sees this function's
/// own prediction for the previous utterance.
pub fn apply_rules(ruleset: &RuleSet, dialog: &Dialog) -> Vec<SpeechActLabel> {
    let mut predictions: Vec<SpeechActLabel> = Vec::with_capacity(dialog.utterances.len());
    for (position, utterance) in dialog.utterances.iter().enumerate() {
        let context = RuleContext {
            utterance,
            prev_speaker: position
                .checked_sub(1)
                .map(|p| dialog.utterances[p].speaker),
            prev_pred_category: position
                .checked_sub(1)
                .map(|p| predictions[p].category.as_str()),
        };
        let label = ruleset
            .rules
            .iter()
            .find(|rule| rule.conditions.iter().all(|c| c.holds(&context)))
            .map(|rule| rule.action.clone())
            .unwrap_or_else(|| ruleset.default.clone());
        predictions.push(label);
    }
    predictions
}
