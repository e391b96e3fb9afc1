//! Deterministic dialog-level cross-validation folds.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::corpus::Corpus;
use crate::error::{Error, Result};

/// Assigns every dialog to one of `k` folds.
///
/// Dialog ids are sorted, shuffled with a seeded generator, and dealt
/// round-robin, so membership is a function of the id set, `k`, and `seed`
/// alone — reordering dialogs in the file changes nothing — and fold sizes
/// differ by at most one.
pub fn split_folds(corpus: &Corpus, k: usize, seed: u64) -> Result<BTreeMap<String, usize>> {
    if k < 2 {
        return Err(Error::InvalidInput(format!(
            "fold count must be at least 2, got {k}"
        )));
    }
    let mut ids: Vec<&str> = corpus.dialogs.iter().map(|d| d.id.as_str()).collect();
    if ids.len() < k {
        return Err(Error::InvalidInput(format!(
            "{} dialogs cannot fill {k} folds",
            ids.len()
        )));
    }
    ids.sort_unstable();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    ids.shuffle(&mut rng);
    Ok(ids
        .into_iter()
        .enumerate()
        .map(|(i, id)| (id.to_string(), i % k))
        .collect())
}
