//! Seeded synthetic-corpus generator.
//!
//! The generated dialogs carry separable ground truth on both tasks, so a
//! full train/predict/eval round trip over them has a known answer:
//!
//! - the speech-act category is a function of the discourse context
//!   (question marks, speaker change, speaker role) and is additionally
//!   marked by a `kc-*` keyword token; the attribute is marked by a `ka-*`
//!   keyword token;
//! - semantic segments consist of `xe-...` tokens that spell out their
//!   main category, modifiers, and position inside the span.
//!
//! The same seed always produces byte-identical files.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use slu_core::corpus::{
    Corpus, Dialog, Ontology, OntologyEntry, SemanticSegment, Speaker, SpeechActLabel, Token,
    Utterance,
};

const CATEGORIES: [&str; 4] = ["QST", "RES", "INI", "FOL"];
const ATTRIBUTES: [&str; 4] = ["WHERE", "WHEN", "ACK", "REC"];
const MAINS: [&str; 4] = ["LOC", "TIME", "FOOD", "TRSP"];
const FILLERS: [&str; 12] = [
    "okay", "well", "the", "to", "a", "map", "walk", "good", "right", "um", "ah", "there",
];

/// The fixed ontology the generated segments are drawn from. STATION
/// appears under two main categories on purpose.
pub fn gen_ontology() -> Ontology {
    let entry = |subs: &[&str], rels: &[&str], fts: &[&str]| OntologyEntry {
        subcategories: subs.iter().map(|s| s.to_string()).collect(),
        relative_modifiers: rels.iter().map(|s| s.to_string()).collect(),
        from_to_modifiers: fts.iter().map(|s| s.to_string()).collect(),
    };
    let mut ontology = Ontology::new();
    ontology.insert(
        "LOC",
        entry(&["AREA", "STATION", "MALL"], &["NEAR", "OPPOSITE"], &["FROM", "TO"]),
    );
    ontology.insert(
        "TIME",
        entry(&["DAY", "HOUR"], &["BEFORE", "AFTER"], &["START", "END"]),
    );
    ontology.insert("FOOD", entry(&["DISH", "DRINK"], &[], &[]));
    ontology.insert(
        "TRSP",
        entry(&["LINE", "STATION"], &["NEAR"], &["FROM", "TO"]),
    );
    ontology
}

fn pick<'a>(rng: &mut ChaCha8Rng, values: &'a [&'a str]) -> &'a str {
    values[rng.gen_range(0..values.len())]
}

fn maybe_pick(
    rng: &mut ChaCha8Rng,
    values: &std::collections::BTreeSet<String>,
) -> Option<String> {
    if values.is_empty() || rng.gen_bool(0.5) {
        return None;
    }
    values.iter().nth(rng.gen_range(0..values.len())).cloned()
}

fn filler_token(rng: &mut ChaCha8Rng) -> Token {
    Token::with_pos(pick(rng, &FILLERS), "F", "FW")
}

fn push_fillers(rng: &mut ChaCha8Rng, tokens: &mut Vec<Token>, min: usize, max: usize) {
    let count = rng.gen_range(min..=max);
    for _ in 0..count {
        tokens.push(filler_token(rng));
    }
}

fn entity_token(main: &str, sub: &Option<String>, rel: &Option<String>, ft: &Option<String>, position: usize) -> Token {
    let part = |value: &Option<String>| value.as_deref().unwrap_or("na").to_lowercase();
    let text = format!(
        "xe-{}-{}-{}-{}-{position}",
        main.to_lowercase(),
        part(sub),
        part(rel),
        part(ft)
    );
    Token::with_pos(text, "E", "EW")
}

fn build_utterance(
    rng: &mut ChaCha8Rng,
    ontology: &Ontology,
    index: usize,
    speaker: Speaker,
    speaker_changed: bool,
) -> Utterance {
    let is_question = rng.gen_bool(0.5);
    let category = if is_question {
        "QST"
    } else if speaker_changed {
        "RES"
    } else if speaker == Speaker::Guide {
        "INI"
    } else {
        "FOL"
    };
    debug_assert!(CATEGORIES.contains(&category));
    let attribute = pick(rng, &ATTRIBUTES);

    let mut tokens = Vec::new();
    let mut segments = Vec::new();
    push_fillers(rng, &mut tokens, 1, 3);
    tokens.push(Token::with_pos(format!("kc-{}", category.to_lowercase()), "K", "KW"));
    push_fillers(rng, &mut tokens, 0, 2);
    tokens.push(Token::with_pos(format!("ka-{}", attribute.to_lowercase()), "K", "KW"));

    for _ in 0..rng.gen_range(0..=2usize) {
        push_fillers(rng, &mut tokens, 1, 2);
        let main = pick(rng, &MAINS);
        let entry = ontology.get(main).expect("generator mains are in the ontology");
        let sub = maybe_pick(rng, &entry.subcategories);
        let rel = maybe_pick(rng, &entry.relative_modifiers);
        let ft = maybe_pick(rng, &entry.from_to_modifiers);
        let start = tokens.len();
        for position in 0..rng.gen_range(1..=3usize) {
            tokens.push(entity_token(main, &sub, &rel, &ft, position));
        }
        segments.push(SemanticSegment {
            start,
            end: tokens.len(),
            main: main.to_string(),
            sub,
            rel,
            from_to: ft,
        });
    }
    push_fillers(rng, &mut tokens, 0, 2);
    if is_question {
        for _ in 0..rng.gen_range(1..=2usize) {
            tokens.push(Token::with_pos("?", "P", "PQ"));
        }
    }

    Utterance {
        index,
        speaker,
        tokens,
        speech_acts: vec![SpeechActLabel::new(category, attribute)],
        segments,
    }
}

/// Generates `dialogs` dialogs of 6–12 utterances each.
pub fn generate(seed: u64, dialogs: usize) -> (Corpus, Ontology) {
    let ontology = gen_ontology();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dialogs = (0..dialogs)
        .map(|d| {
            let count = rng.gen_range(6..=12usize);
            let mut speaker = if rng.gen_bool(0.5) {
                Speaker::Guide
            } else {
                Speaker::Tourist
            };
            let mut utterances = Vec::with_capacity(count);
            for index in 0..count {
                let mut changed = false;
                if index > 0 && rng.gen_bool(0.5) {
                    speaker = match speaker {
                        Speaker::Guide => Speaker::Tourist,
                        Speaker::Tourist => Speaker::Guide,
                    };
                    changed = true;
                }
                utterances.push(build_utterance(&mut rng, &ontology, index, speaker, changed));
            }
            Dialog {
                id: format!("d{d:04}"),
                utterances,
            }
        })
        .collect();
    (Corpus { dialogs }, ontology)
}
