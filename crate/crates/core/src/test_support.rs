//! Shared builders for unit tests.

use crate::corpus::{Dialog, Speaker, Token, Utterance};

pub(crate) fn utterance(index: usize, speaker: Speaker, texts: &[&str]) -> Utterance {
    Utterance {
        index,
        speaker,
        tokens: texts.iter().map(|t| Token::new(*t)).collect(),
        speech_acts: Vec::new(),
        segments: Vec::new(),
    }
}

pub(crate) fn dialog(id: impl Into<String>, mut utterances: Vec<Utterance>) -> Dialog {
    for (pos, utterance) in utterances.iter_mut().enumerate() {
        utterance.index = pos;
    }
    Dialog {
        id: id.into(),
        utterances,
    }
}
