//! Dialog corpus model: speaker-attributed token sequences with optional
//! speech-act and semantic-segment annotations, plus the tagging ontology.
//!
//! Corpus files are UTF-8 JSON with a top-level `dialogs` list; ontology
//! files map each main category to its admissible attribute values. All
//! values are immutable after loading and safe to share across threads.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs;
use std::path::Path;

use serde::de::{MapAccess, Visitor};
use serde::{Deserialize, Deserializer, Serialize};

use crate::error::{Error, Result};
use crate::persist::write_atomic;

/// Speaker role of an utterance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Speaker {
    Guide,
    Tourist,
}

impl fmt::Display for Speaker {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Speaker::Guide => write!(f, "GUIDE"),
            Speaker::Tourist => write!(f, "TOURIST"),
        }
    }
}

/// A single token. Part-of-speech tags are input data; an empty string
/// means the tag is unavailable.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Token {
    pub text: String,
    #[serde(default)]
    pub pos_coarse: String,
    #[serde(default)]
    pub pos_fine: String,
}

impl Token {
    pub fn new(text: impl Into<String>) -> Self {
        Token {
            text: text.into(),
            pos_coarse: String::new(),
            pos_fine: String::new(),
        }
    }

    pub fn with_pos(
        text: impl Into<String>,
        pos_coarse: impl Into<String>,
        pos_fine: impl Into<String>,
    ) -> Self {
        Token {
            text: text.into(),
            pos_coarse: pos_coarse.into(),
            pos_fine: pos_fine.into(),
        }
    }
}

/// One speech act, treated atomically as a (category, attribute) class.
/// The attribute uses the sentinel `NONE` when only a category is known.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SpeechActLabel {
    pub category: String,
    pub attribute: String,
}

impl SpeechActLabel {
    pub fn new(category: impl Into<String>, attribute: impl Into<String>) -> Self {
        SpeechActLabel {
            category: category.into(),
            attribute: attribute.into(),
        }
    }

    /// The `(NONE, NONE)` class used for utterances without annotations.
    pub fn none() -> Self {
        SpeechActLabel::new("NONE", "NONE")
    }
}

impl fmt::Display for SpeechActLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}|{}", self.category, self.attribute)
    }
}

/// The four attribute channels of a semantic tag.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum AttributeKind {
    Main,
    Sub,
    Rel,
    FromTo,
}

impl AttributeKind {
    pub const ALL: [AttributeKind; 4] = [
        AttributeKind::Main,
        AttributeKind::Sub,
        AttributeKind::Rel,
        AttributeKind::FromTo,
    ];

    pub fn name(self) -> &'static str {
        match self {
            AttributeKind::Main => "MAIN",
            AttributeKind::Sub => "SUB",
            AttributeKind::Rel => "REL",
            AttributeKind::FromTo => "FROM_TO",
        }
    }
}

impl fmt::Display for AttributeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A tagged token span `start..end` (end exclusive) carrying a main
/// category and optional subcategory, relative and from-to modifiers.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SemanticSegment {
    pub start: usize,
    pub end: usize,
    pub main: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sub: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rel: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub from_to: Option<String>,
}

impl SemanticSegment {
    pub fn new(start: usize, end: usize, main: impl Into<String>) -> Self {
        SemanticSegment {
            start,
            end,
            main: main.into(),
            sub: None,
            rel: None,
            from_to: None,
        }
    }

    /// The segment's value on one attribute channel, if any.
    pub fn value_for(&self, kind: AttributeKind) -> Option<&str> {
        match kind {
            AttributeKind::Main => Some(&self.main),
            AttributeKind::Sub => self.sub.as_deref(),
            AttributeKind::Rel => self.rel.as_deref(),
            AttributeKind::FromTo => self.from_to.as_deref(),
        }
    }
}

/// One utterance. `index` is its 0-based position within the dialog and is
/// assigned on load rather than read from the file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Utterance {
    #[serde(skip)]
    pub index: usize,
    pub speaker: Speaker,
    pub tokens: Vec<Token>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub speech_acts: Vec<SpeechActLabel>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub segments: Vec<SemanticSegment>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dialog {
    pub id: String,
    pub utterances: Vec<Utterance>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Corpus {
    pub dialogs: Vec<Dialog>,
}

impl Corpus {
    pub fn utterance_count(&self) -> usize {
        self.dialogs.iter().map(|d| d.utterances.len()).sum()
    }

    /// A copy containing only the dialogs whose id satisfies `keep`.
    pub fn retain_dialogs(&self, keep: impl Fn(&str) -> bool) -> Corpus {
        Corpus {
            dialogs: self
                .dialogs
                .iter()
                .filter(|d| keep(&d.id))
                .cloned()
                .collect(),
        }
    }

    /// Checks every structural invariant, reporting the dialog id,
    /// utterance index, and offending field of the first violation.
    pub fn validate(&self) -> Result<()> {
        let mut seen_ids = BTreeSet::new();
        for dialog in &self.dialogs {
            if !seen_ids.insert(dialog.id.as_str()) {
                return Err(Error::Schema(format!(
                    "duplicate dialog id `{}`",
                    dialog.id
                )));
            }
            for (pos, utterance) in dialog.utterances.iter().enumerate() {
                validate_utterance(&dialog.id, pos, utterance)?;
            }
        }
        Ok(())
    }
}

fn validate_utterance(dialog_id: &str, position: usize, utterance: &Utterance) -> Result<()> {
    let at = |detail: String| {
        Error::Schema(format!(
            "dialog `{dialog_id}` utterance {position}: {detail}"
        ))
    };
    if utterance.index != position {
        return Err(at(format!(
            "utterance index {} does not match its position",
            utterance.index
        )));
    }
    for (t, token) in utterance.tokens.iter().enumerate() {
        if token.text.is_empty() {
            return Err(at(format!("token {t} has empty text")));
        }
    }
    if utterance.speech_acts.len() > 4 {
        return Err(at(format!(
            "{} speech-act pairs exceed the limit of 4",
            utterance.speech_acts.len()
        )));
    }
    let mut pairs = BTreeSet::new();
    for act in &utterance.speech_acts {
        if act.category.is_empty() {
            return Err(at("speech act has empty category".to_string()));
        }
        if !pairs.insert((act.category.as_str(), act.attribute.as_str())) {
            return Err(at(format!("duplicate speech act `{act}`")));
        }
    }
    let len = utterance.tokens.len();
    for (s, segment) in utterance.segments.iter().enumerate() {
        if segment.main.is_empty() {
            return Err(at(format!("segment {s} has empty main category")));
        }
        if segment.start >= segment.end {
            return Err(at(format!(
                "segment {s} has end {} <= start {}",
                segment.end, segment.start
            )));
        }
        if segment.end > len {
            return Err(at(format!(
                "segment {s} spans {}..{} beyond the {len} tokens",
                segment.start, segment.end
            )));
        }
    }
    // Segments carrying a value for the same attribute kind must not
    // overlap, or their per-token labeling would be ambiguous.
    for kind in AttributeKind::ALL {
        let mut spans: Vec<(usize, usize, usize)> = utterance
            .segments
            .iter()
            .enumerate()
            .filter(|(_, seg)| seg.value_for(kind).is_some())
            .map(|(i, seg)| (seg.start, seg.end, i))
            .collect();
        spans.sort_unstable();
        for pair in spans.windows(2) {
            if pair[1].0 < pair[0].1 {
                return Err(at(format!(
                    "segments {} and {} overlap on {kind}",
                    pair[0].2, pair[1].2
                )));
            }
        }
    }
    Ok(())
}

/// Loads and validates a corpus file.
pub fn load_corpus(path: impl AsRef<Path>) -> Result<Corpus> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut corpus: Corpus = serde_json::from_str(&text).map_err(|e| Error::parse(path, &e))?;
    for dialog in &mut corpus.dialogs {
        for (pos, utterance) in dialog.utterances.iter_mut().enumerate() {
            utterance.index = pos;
        }
    }
    corpus.validate()?;
    Ok(corpus)
}

/// Writes a corpus as pretty-printed JSON via an atomic rename.
pub fn save_corpus(corpus: &Corpus, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut text = serde_json::to_string_pretty(corpus)
        .map_err(|e| Error::InvalidInput(format!("cannot serialize corpus: {e}")))?;
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

/// Admissible attribute values for one main category.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct OntologyEntry {
    #[serde(default)]
    pub subcategories: BTreeSet<String>,
    #[serde(default)]
    pub relative_modifiers: BTreeSet<String>,
    #[serde(default)]
    pub from_to_modifiers: BTreeSet<String>,
}

impl OntologyEntry {
    /// The admissible value set for a non-main attribute kind.
    pub fn admissible(&self, kind: AttributeKind) -> Option<&BTreeSet<String>> {
        match kind {
            AttributeKind::Main => None,
            AttributeKind::Sub => Some(&self.subcategories),
            AttributeKind::Rel => Some(&self.relative_modifiers),
            AttributeKind::FromTo => Some(&self.from_to_modifiers),
        }
    }
}

/// Mapping from each main category to its admissible attribute values.
/// The same attribute value may appear under several main categories.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
#[serde(transparent)]
pub struct Ontology {
    entries: BTreeMap<String, OntologyEntry>,
}

impl Ontology {
    pub fn new() -> Self {
        Ontology::default()
    }

    pub fn insert(&mut self, main: impl Into<String>, entry: OntologyEntry) {
        self.entries.insert(main.into(), entry);
    }

    pub fn get(&self, main: &str) -> Option<&OntologyEntry> {
        self.entries.get(main)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &OntologyEntry)> {
        self.entries.iter()
    }
}

// Hand-written so that a repeated main-category key is rejected instead of
// silently keeping the last occurrence.
impl<'de> Deserialize<'de> for Ontology {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        struct OntologyVisitor;

        impl<'de> Visitor<'de> for OntologyVisitor {
            type Value = Ontology;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a map from main category to its attribute sets")
            }

            fn visit_map<A: MapAccess<'de>>(
                self,
                mut map: A,
            ) -> std::result::Result<Ontology, A::Error> {
                let mut entries = BTreeMap::new();
                while let Some((key, value)) = map.next_entry::<String, OntologyEntry>()? {
                    if entries.insert(key.clone(), value).is_some() {
                        return Err(serde::de::Error::custom(format!(
                            "duplicate main category `{key}`"
                        )));
                    }
                }
                Ok(Ontology { entries })
            }
        }

        deserializer.deserialize_map(OntologyVisitor)
    }
}

/// Loads and validates an ontology file.
pub fn load_ontology(path: impl AsRef<Path>) -> Result<Ontology> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::parse(path, &e))
}

/// Writes an ontology as pretty-printed JSON via an atomic rename.
pub fn save_ontology(ontology: &Ontology, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut text = serde_json::to_string_pretty(ontology)
        .map_err(|e| Error::InvalidInput(format!("cannot serialize ontology: {e}")))?;
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::test_support::{dialog, utterance};

    fn write_temp(contents: &str) -> tempfile::NamedTempFile {
        use std::io::Write;
        let mut file = tempfile::NamedTempFile::new().unwrap();
        file.write_all(contents.as_bytes()).unwrap();
        file
    }

    #[test]
    fn loads_small_corpus() {
        let file = write_temp(
            r#"{"dialogs": [{"id": "d1", "utterances": [
                {"speaker": "GUIDE", "tokens": [{"text": "hello", "pos_coarse": "U", "pos_fine": "UH"}]},
                {"speaker": "TOURIST", "tokens": [{"text": "hi"}],
                 "speech_acts": [{"category": "FOL", "attribute": "ACK"}],
                 "segments": [{"start": 0, "end": 1, "main": "LOC"}]}
            ]}]}"#,
        );
        let corpus = load_corpus(file.path()).unwrap();
        assert_eq!(corpus.dialogs.len(), 1);
        assert_eq!(corpus.dialogs[0].utterances.len(), 2);
        assert_eq!(corpus.dialogs[0].utterances[1].index, 1);
        assert_eq!(corpus.dialogs[0].utterances[0].tokens[0].pos_fine, "UH");
        assert_eq!(corpus.dialogs[0].utterances[1].tokens[0].pos_fine, "");
    }

    #[test]
    fn rejects_inverted_segment() {
        let file = write_temp(
            r#"{"dialogs": [{"id": "d1", "utterances": [
                {"speaker": "GUIDE", "tokens": [{"text": "a"}, {"text": "b"}],
                 "segments": [{"start": 1, "end": 1, "main": "LOC"}]}
            ]}]}"#,
        );
        let err = load_corpus(file.path()).unwrap_err();
        let message = err.to_string();
        assert!(message.contains("segment 0"), "got: {message}");
        assert!(message.contains("end 1 <= start 1"), "got: {message}");
    }

    #[test]
    fn rejects_duplicate_dialog_id() {
        let file = write_temp(
            r#"{"dialogs": [
                {"id": "d1", "utterances": []},
                {"id": "d1", "utterances": []}
            ]}"#,
        );
        let err = load_corpus(file.path()).unwrap_err();
        assert!(err.to_string().contains("duplicate dialog id `d1`"));
    }

    #[test]
    fn rejects_overlapping_segments_of_same_kind() {
        let mut utt = utterance(0, Speaker::Guide, &["a", "b", "c"]);
        utt.segments.push(SemanticSegment::new(0, 2, "LOC"));
        utt.segments.push(SemanticSegment::new(1, 3, "TIME"));
        let corpus = Corpus {
            dialogs: vec![dialog("d1", vec![utt])],
        };
        let err = corpus.validate().unwrap_err();
        assert!(err.to_string().contains("overlap on MAIN"));
    }

    #[test]
    fn accepts_adjacent_segments() {
        let mut utt = utterance(0, Speaker::Guide, &["a", "b"]);
        utt.segments.push(SemanticSegment::new(0, 1, "LOC"));
        utt.segments.push(SemanticSegment::new(1, 2, "LOC"));
        let corpus = Corpus {
            dialogs: vec![dialog("d1", vec![utt])],
        };
        corpus.validate().unwrap();
    }

    #[test]
    fn rejects_duplicate_speech_act() {
        let mut utt = utterance(0, Speaker::Guide, &["a"]);
        utt.speech_acts.push(SpeechActLabel::new("QST", "WHERE"));
        utt.speech_acts.push(SpeechActLabel::new("QST", "WHERE"));
        let corpus = Corpus {
            dialogs: vec![dialog("d1", vec![utt])],
        };
        assert!(corpus.validate().is_err());
    }

    #[test]
    fn loads_ontology_and_rejects_duplicate_key() {
        let file = write_temp(r#"{"LOC": {"subcategories": ["AREA"]}}"#);
        let ontology = load_ontology(file.path()).unwrap();
        assert_eq!(ontology.len(), 1);
        assert!(ontology
            .get("LOC")
            .unwrap()
            .subcategories
            .contains("AREA"));

        let empty = write_temp("{}");
        assert_eq!(load_ontology(empty.path()).unwrap().len(), 0);

        let dup = write_temp(r#"{"LOC": {}, "LOC": {"subcategories": []}}"#);
        let err = load_ontology(dup.path()).unwrap_err();
        assert!(err.to_string().contains("duplicate main category `LOC`"));
    }

    #[test]
    fn corpus_round_trips_through_save() {
        let mut utt = utterance(0, Speaker::Tourist, &["to", "the", "museum"]);
        utt.segments.push(SemanticSegment {
            start: 2,
            end: 3,
            main: "LOC".to_string(),
            sub: Some("AREA".to_string()),
            rel: None,
            from_to: Some("TO".to_string()),
        });
        utt.speech_acts.push(SpeechActLabel::new("QST", "WHERE"));
        let corpus = Corpus {
            dialogs: vec![dialog("d1", vec![utt])],
        };
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("corpus.json");
        save_corpus(&corpus, &path).unwrap();
        let loaded = load_corpus(&path).unwrap();
        assert_eq!(loaded, corpus);
    }
}
