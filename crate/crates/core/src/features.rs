//! Feature extraction: the pooled n-gram vocabulary and sparse utterance
//! vectors for the classifier systems, the dense discourse features for the
//! forest systems, and the 7-token window template for the sequence tagger.
//!
//! Lowercasing is the only text normalization applied anywhere in this
//! module; question-mark counting sees raw tokens.

use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, Dialog, Token, Utterance};
use crate::error::{Error, Result};

/// Sparse feature vector: `(column, value)` pairs with strictly increasing
/// columns and no explicit zeros.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SparseVector {
    entries: Vec<(usize, f64)>,
}

impl SparseVector {
    pub fn new() -> Self {
        SparseVector::default()
    }

    /// Builds from arbitrary pairs. Pairs are sorted; zero values are
    /// dropped; a duplicated column is an error.
    pub fn from_pairs(mut pairs: Vec<(usize, f64)>) -> Result<Self> {
        pairs.retain(|&(_, v)| v != 0.0);
        pairs.sort_unstable_by_key(|&(i, _)| i);
        for window in pairs.windows(2) {
            if window[0].0 == window[1].0 {
                return Err(Error::InvalidInput(format!(
                    "duplicate sparse column {}",
                    window[0].0
                )));
            }
        }
        Ok(SparseVector { entries: pairs })
    }

    /// Binary indicator vector over a sorted set of columns.
    pub fn from_binary_columns(columns: BTreeSet<usize>) -> Self {
        SparseVector {
            entries: columns.into_iter().map(|c| (c, 1.0)).collect(),
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.entries.iter().copied()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn max_index(&self) -> Option<usize> {
        self.entries.last().map(|&(i, _)| i)
    }

    /// Dot product against a dense row.
    pub fn dot(&self, dense: &[f64]) -> f64 {
        self.entries.iter().map(|&(i, v)| v * dense[i]).sum()
    }

    /// Squared Euclidean norm.
    pub fn norm_sq(&self) -> f64 {
        self.entries.iter().map(|&(_, v)| v * v).sum()
    }
}

/// The `max_size` most frequent 1–3-grams over lowercased token texts,
/// pooled into one ranking. Ties are broken by shorter n first, then
/// lexicographic order; indices follow rank order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "VocabularyRepr", into = "VocabularyRepr")]
pub struct Vocabulary {
    grams: Vec<Vec<String>>,
    index: HashMap<Vec<String>, usize>,
    max_size: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct VocabularyRepr {
    grams: Vec<Vec<String>>,
    max_size: usize,
}

impl From<Vocabulary> for VocabularyRepr {
    fn from(vocabulary: Vocabulary) -> Self {
        VocabularyRepr {
            grams: vocabulary.grams,
            max_size: vocabulary.max_size,
        }
    }
}

impl TryFrom<VocabularyRepr> for Vocabulary {
    type Error = Error;

    fn try_from(repr: VocabularyRepr) -> Result<Self> {
        if repr.grams.len() > repr.max_size {
            return Err(Error::InvalidInput(format!(
                "vocabulary holds {} grams, more than its cap {}",
                repr.grams.len(),
                repr.max_size
            )));
        }
        Ok(Vocabulary::from_ranked(repr.grams, repr.max_size))
    }
}

impl Vocabulary {
    fn from_ranked(grams: Vec<Vec<String>>, max_size: usize) -> Self {
        let index = grams
            .iter()
            .enumerate()
            .map(|(i, g)| (g.clone(), i))
            .collect();
        Vocabulary {
            grams,
            index,
            max_size,
        }
    }

    pub fn len(&self) -> usize {
        self.grams.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grams.is_empty()
    }

    pub fn max_size(&self) -> usize {
        self.max_size
    }

    /// Grams in index order.
    pub fn grams(&self) -> &[Vec<String>] {
        &self.grams
    }

    pub fn index_of(&self, gram: &[String]) -> Option<usize> {
        self.index.get(gram).copied()
    }
}

/// Counts all 1/2/3-grams in the corpus and keeps the `max_size` most
/// frequent under the documented tie-break.
pub fn build_ngram_vocab(corpus: &Corpus, max_size: usize) -> Result<Vocabulary> {
    if corpus.dialogs.is_empty() {
        return Err(Error::InvalidInput(
            "cannot build a vocabulary from an empty corpus".to_string(),
        ));
    }
    let mut counts: HashMap<Vec<String>, u64> = HashMap::new();
    for dialog in &corpus.dialogs {
        for utterance in &dialog.utterances {
            let lowered: Vec<String> = utterance
                .tokens
                .iter()
                .map(|t| t.text.to_lowercase())
                .collect();
            for n in 1..=3 {
                for window in lowered.windows(n) {
                    *counts.entry(window.to_vec()).or_insert(0) += 1;
                }
            }
        }
    }
    let mut ranked: Vec<(Vec<String>, u64)> = counts.into_iter().collect();
    ranked.sort_unstable_by(|a, b| {
        b.1.cmp(&a.1)
            .then_with(|| a.0.len().cmp(&b.0.len()))
            .then_with(|| a.0.cmp(&b.0))
    });
    ranked.truncate(max_size);
    Ok(Vocabulary::from_ranked(
        ranked.into_iter().map(|(gram, _)| gram).collect(),
        max_size,
    ))
}

fn utterance_grams(tokens: &[Token]) -> BTreeSet<Vec<String>> {
    let lowered: Vec<String> = tokens.iter().map(|t| t.text.to_lowercase()).collect();
    let mut grams = BTreeSet::new();
    for n in 1..=3 {
        for window in lowered.windows(n) {
            grams.insert(window.to_vec());
        }
    }
    grams
}

/// Layout of the sparse utterance vectors: one block of `len(vocab) + 1`
/// columns per history offset — n-gram presence indicators plus a
/// speaker-change bit at the end of the block.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SaFeatureConfig {
    /// How many previous utterances contribute feature copies (0, 1, or 2).
    pub history_depth: usize,
    pub include_speaker_change: bool,
}

impl Default for SaFeatureConfig {
    fn default() -> Self {
        SaFeatureConfig {
            history_depth: 1,
            include_speaker_change: true,
        }
    }
}

impl SaFeatureConfig {
    /// Total number of columns the layout can produce.
    pub fn num_columns(&self, vocab_len: usize) -> usize {
        (self.history_depth + 1) * (vocab_len + 1)
    }
}

/// Binary sparse features for the utterance at `index`: for each history
/// offset `o <= history_depth`, every vocabulary gram present in utterance
/// `index - o` sets a column in that offset's block, and the block's last
/// column flags a speaker change at that utterance. Offsets before the
/// dialog start contribute nothing.
pub fn extract_sa_features(
    dialog: &Dialog,
    index: usize,
    vocab: &Vocabulary,
    config: &SaFeatureConfig,
) -> Result<SparseVector> {
    if config.history_depth > 2 {
        return Err(Error::InvalidInput(format!(
            "history depth must be 0, 1, or 2, got {}",
            config.history_depth
        )));
    }
    if index >= dialog.utterances.len() {
        return Err(Error::InvalidInput(format!(
            "utterance index {index} out of range for dialog `{}` ({} utterances)",
            dialog.id,
            dialog.utterances.len()
        )));
    }
    let stride = vocab.len() + 1;
    let mut columns = BTreeSet::new();
    for offset in 0..=config.history_depth {
        let Some(position) = index.checked_sub(offset) else {
            break;
        };
        let base = offset * stride;
        let utterance = &dialog.utterances[position];
        for gram in utterance_grams(&utterance.tokens) {
            if let Some(i) = vocab.index_of(&gram) {
                columns.insert(base + i);
            }
        }
        if config.include_speaker_change
            && position > 0
            && dialog.utterances[position].speaker != dialog.utterances[position - 1].speaker
        {
            columns.insert(base + vocab.len());
        }
    }
    Ok(SparseVector::from_binary_columns(columns))
}

/// The dense discourse features: question-mark counts per history offset,
/// plus three booleans computed from the current utterance's standpoint.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DiscourseFeatures {
    /// `question_marks[o]` counts `?` tokens in utterance `index - o`;
    /// missing history yields 0.
    pub question_marks: Vec<u32>,
    pub speaker_change_prev: bool,
    pub speaker_change_prev2: bool,
    pub speaker_is_guide: bool,
}

impl DiscourseFeatures {
    /// Dense layout: the question-mark counts in offset order, then the
    /// three booleans as 0/1.
    pub fn to_dense(&self) -> Vec<f64> {
        let mut dense: Vec<f64> = self.question_marks.iter().map(|&c| f64::from(c)).collect();
        dense.push(f64::from(u8::from(self.speaker_change_prev)));
        dense.push(f64::from(u8::from(self.speaker_change_prev2)));
        dense.push(f64::from(u8::from(self.speaker_is_guide)));
        dense
    }

    pub fn dim(history_depth: usize) -> usize {
        history_depth + 4
    }
}

fn count_question_marks(utterance: &Utterance) -> u32 {
    utterance.tokens.iter().filter(|t| t.text == "?").count() as u32
}

/// Discourse features for the utterance at `index` with the given history
/// depth (1 or 2).
pub fn extract_discourse_features(
    dialog: &Dialog,
    index: usize,
    history_depth: usize,
) -> Result<DiscourseFeatures> {
    if !(1..=2).contains(&history_depth) {
        return Err(Error::InvalidInput(format!(
            "discourse history depth must be 1 or 2, got {history_depth}"
        )));
    }
    let utterances = &dialog.utterances;
    if index >= utterances.len() {
        return Err(Error::InvalidInput(format!(
            "utterance index {index} out of range for dialog `{}` ({} utterances)",
            dialog.id,
            utterances.len()
        )));
    }
    let question_marks = (0..=history_depth)
        .map(|offset| match index.checked_sub(offset) {
            Some(position) => count_question_marks(&utterances[position]),
            None => 0,
        })
        .collect();
    let speaker = utterances[index].speaker;
    Ok(DiscourseFeatures {
        question_marks,
        speaker_change_prev: index >= 1 && utterances[index - 1].speaker != speaker,
        speaker_change_prev2: index >= 2 && utterances[index - 2].speaker != speaker,
        speaker_is_guide: speaker == crate::corpus::Speaker::Guide,
    })
}

/// Window feature template over 7 consecutive tokens (offsets −3..=3
/// around `position`).
///
/// The exact spellings are a stable contract — they appear verbatim in
/// serialized tagger models. An offset `o` with a token emits
/// `o:lower=<w>`, `o:suf3=<s>`, `o:initcap=<0|1>`, `o:allcaps=<0|1>`,
/// `o:digit=<0|1>`, `o:posc=<t>`, `o:posf=<t>`; an offset past either
/// boundary emits the single feature `o:pad`. The suffix of a word shorter
/// than 3 characters is the whole lowercased word.
pub fn extract_token_features(tokens: &[Token], position: usize) -> Result<Vec<String>> {
    if position >= tokens.len() {
        return Err(Error::InvalidInput(format!(
            "token position {position} out of range ({} tokens)",
            tokens.len()
        )));
    }
    let mut features = Vec::with_capacity(49);
    for offset in -3i64..=3 {
        let target = position as i64 + offset;
        if target < 0 || target >= tokens.len() as i64 {
            features.push(format!("{offset}:pad"));
            continue;
        }
        let token = &tokens[target as usize];
        let lower = token.text.to_lowercase();
        let chars: Vec<char> = lower.chars().collect();
        let suf3: String = chars[chars.len().saturating_sub(3)..].iter().collect();
        let initcap = token
            .text
            .chars()
            .next()
            .map(char::is_uppercase)
            .unwrap_or(false);
        let allcaps = token
            .text
            .chars()
            .filter(|c| c.is_alphabetic())
            .all(char::is_uppercase);
        let digit = token.text.chars().any(|c| c.is_ascii_digit());
        features.push(format!("{offset}:lower={lower}"));
        features.push(format!("{offset}:suf3={suf3}"));
        features.push(format!("{offset}:initcap={}", u8::from(initcap)));
        features.push(format!("{offset}:allcaps={}", u8::from(allcaps)));
        features.push(format!("{offset}:digit={}", u8::from(digit)));
        features.push(format!("{offset}:posc={}", token.pos_coarse));
        features.push(format!("{offset}:posf={}", token.pos_fine));
    }
    Ok(features)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Speaker;
    use crate::test_support::{dialog, utterance};

    fn one_utterance_corpus(texts: &[&str]) -> Corpus {
        Corpus {
            dialogs: vec![dialog("d1", vec![utterance(0, Speaker::Guide, texts)])],
        }
    }

    #[test]
    fn vocab_ranks_by_count_then_order_then_lex() {
        let corpus = one_utterance_corpus(&["a", "b", "a"]);
        let vocab = build_ngram_vocab(&corpus, 3).unwrap();
        let expected: Vec<Vec<String>> = vec![
            vec!["a".into()],
            vec!["b".into()],
            vec!["a".into(), "b".into()],
        ];
        assert_eq!(vocab.grams(), expected.as_slice());
        assert_eq!(vocab.index_of(&expected[2]), Some(2));
    }

    #[test]
    fn vocab_keeps_everything_under_a_large_cap() {
        let corpus = one_utterance_corpus(&["a", "b", "a"]);
        let vocab = build_ngram_vocab(&corpus, 100).unwrap();
        // a, b, "a b", "b a", "a b a"
        assert_eq!(vocab.len(), 5);
    }

    #[test]
    fn vocab_is_deterministic() {
        let corpus = one_utterance_corpus(&["c", "a", "b", "a", "c"]);
        let first = build_ngram_vocab(&corpus, 6).unwrap();
        let second = build_ngram_vocab(&corpus, 6).unwrap();
        assert_eq!(first.grams(), second.grams());
    }

    #[test]
    fn vocab_rejects_empty_corpus() {
        assert!(build_ngram_vocab(&Corpus::default(), 10).is_err());
    }

    #[test]
    fn vocab_counts_are_case_insensitive() {
        let corpus = one_utterance_corpus(&["The", "the", "THE"]);
        let vocab = build_ngram_vocab(&corpus, 1).unwrap();
        assert_eq!(vocab.grams()[0], vec!["the".to_string()]);
    }

    fn two_utterance_dialog() -> Dialog {
        dialog(
            "d1",
            vec![
                utterance(0, Speaker::Tourist, &["a", "b"]),
                utterance(1, Speaker::Guide, &["a", "b"]),
            ],
        )
    }

    #[test]
    fn sa_features_first_utterance_has_only_offset_zero() {
        let d = two_utterance_dialog();
        let corpus = Corpus {
            dialogs: vec![d.clone()],
        };
        let vocab = build_ngram_vocab(&corpus, 100).unwrap();
        let config = SaFeatureConfig::default();
        let x = extract_sa_features(&d, 0, &vocab, &config).unwrap();
        let stride = vocab.len() + 1;
        assert!(x.max_index().unwrap() < stride, "offset-1 block must be empty");
        // Dialog-initial utterance: speaker-change bit stays clear.
        assert!(x.iter().all(|(c, _)| c != vocab.len()));
    }

    #[test]
    fn sa_features_same_gram_lands_in_both_blocks() {
        let d = two_utterance_dialog();
        let corpus = Corpus {
            dialogs: vec![d.clone()],
        };
        let vocab = build_ngram_vocab(&corpus, 100).unwrap();
        let config = SaFeatureConfig::default();
        let x = extract_sa_features(&d, 1, &vocab, &config).unwrap();
        let stride = vocab.len() + 1;
        let gram = vec!["a".to_string(), "b".to_string()];
        let i = vocab.index_of(&gram).unwrap();
        let columns: Vec<usize> = x.iter().map(|(c, _)| c).collect();
        assert!(columns.contains(&i));
        assert!(columns.contains(&(stride + i)));
        // Speakers differ, so the offset-0 change bit is set.
        assert!(columns.contains(&vocab.len()));
    }

    #[test]
    fn sa_features_out_of_vocab_and_same_speaker_is_empty() {
        let d = dialog(
            "d1",
            vec![
                utterance(0, Speaker::Guide, &["x"]),
                utterance(1, Speaker::Guide, &["y"]),
            ],
        );
        let other = one_utterance_corpus(&["z"]);
        let vocab = build_ngram_vocab(&other, 100).unwrap();
        let x = extract_sa_features(&d, 1, &vocab, &SaFeatureConfig::default()).unwrap();
        assert!(x.is_empty());
    }

    #[test]
    fn sa_feature_columns_stay_inside_the_blocks() {
        let d = two_utterance_dialog();
        let corpus = Corpus {
            dialogs: vec![d.clone()],
        };
        let vocab = build_ngram_vocab(&corpus, 100).unwrap();
        for depth in 0..=2usize {
            let config = SaFeatureConfig {
                history_depth: depth,
                include_speaker_change: true,
            };
            for index in 0..2 {
                let x = extract_sa_features(&d, index, &vocab, &config).unwrap();
                if let Some(max) = x.max_index() {
                    assert!(max < config.num_columns(vocab.len()));
                }
            }
        }
    }

    #[test]
    fn discourse_features_count_question_tokens() {
        let d = dialog(
            "d1",
            vec![utterance(0, Speaker::Tourist, &["Is", "it", "far", "?"])],
        );
        let f = extract_discourse_features(&d, 0, 1).unwrap();
        assert_eq!(f.question_marks, vec![1, 0]);
        assert!(!f.speaker_change_prev);
        assert!(!f.speaker_change_prev2);
        assert!(!f.speaker_is_guide);
        assert_eq!(f.to_dense(), vec![1.0, 0.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn discourse_features_double_question() {
        let d = dialog("d1", vec![utterance(0, Speaker::Guide, &["?", "?"])]);
        let f = extract_discourse_features(&d, 0, 2).unwrap();
        assert_eq!(f.question_marks, vec![2, 0, 0]);
        assert!(f.speaker_is_guide);
    }

    #[test]
    fn discourse_features_detect_speaker_change() {
        let d = dialog(
            "d1",
            vec![
                utterance(0, Speaker::Tourist, &["hi", "?"]),
                utterance(1, Speaker::Guide, &["hello"]),
            ],
        );
        let f = extract_discourse_features(&d, 1, 1).unwrap();
        assert_eq!(f.question_marks, vec![0, 1]);
        assert!(f.speaker_change_prev);
        assert!(!f.speaker_change_prev2);
        assert!(f.speaker_is_guide);
    }

    #[test]
    fn token_features_window_and_pads() {
        let tokens = vec![Token::new("The"), Token::new("Merlion")];
        let features = extract_token_features(&tokens, 1).unwrap();
        for expected in [
            "0:lower=merlion",
            "0:suf3=ion",
            "0:initcap=1",
            "0:allcaps=0",
            "0:digit=0",
            "-1:lower=the",
            "-3:pad",
            "-2:pad",
            "1:pad",
            "2:pad",
            "3:pad",
        ] {
            assert!(
                features.iter().any(|f| f == expected),
                "missing {expected} in {features:?}"
            );
        }
        // 2 real offsets with 7 features each + 5 pads.
        assert_eq!(features.len(), 2 * 7 + 5);
    }

    #[test]
    fn token_features_short_word_rules() {
        let tokens = vec![Token::new("B2")];
        let features = extract_token_features(&tokens, 0).unwrap();
        for expected in ["0:digit=1", "0:allcaps=1", "0:suf3=b2", "0:initcap=1"] {
            assert!(features.iter().any(|f| f == expected), "missing {expected}");
        }
        // Single token: exactly one non-pad offset group.
        let pads = features.iter().filter(|f| f.ends_with(":pad")).count();
        assert_eq!(pads, 6);
    }

    #[test]
    fn token_features_empty_pos_tags_are_kept() {
        let tokens = vec![Token::new("x")];
        let features = extract_token_features(&tokens, 0).unwrap();
        assert!(features.iter().any(|f| f == "0:posc="));
        assert!(features.iter().any(|f| f == "0:posf="));
    }

    #[test]
    fn token_features_exactly_seven_groups() {
        let tokens: Vec<Token> = ["a", "b", "c", "d", "e"]
            .iter()
            .map(|t| Token::new(*t))
            .collect();
        for position in 0..tokens.len() {
            let features = extract_token_features(&tokens, position).unwrap();
            for offset in -3i64..=3 {
                let prefix = format!("{offset}:");
                let group: Vec<&String> =
                    features.iter().filter(|f| f.starts_with(&prefix)).collect();
                assert!(
                    group.len() == 7 || (group.len() == 1 && group[0].ends_with(":pad")),
                    "offset {offset} at position {position}: {group:?}"
                );
            }
        }
    }

    #[test]
    fn sparse_vector_rejects_duplicates_and_drops_zeros() {
        assert!(SparseVector::from_pairs(vec![(1, 1.0), (1, 2.0)]).is_err());
        let x = SparseVector::from_pairs(vec![(3, 0.0), (2, 1.5)]).unwrap();
        assert_eq!(x.iter().collect::<Vec<_>>(), vec![(2, 1.5)]);
    }
}
