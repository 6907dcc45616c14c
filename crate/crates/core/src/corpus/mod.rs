//! Corpus handling: length filtering, vocabulary, encoding, train/test
//! split and per-type length statistics.

mod stats;
mod vocab;

pub use stats::{compute_stats, CorpusStats, TypeStats};
pub use vocab::{encode, encode_with, EncodedSentence, Vocabulary, EOS, PAD, RESERVED_TOKENS, SOS, UNK};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::abstraction::{AbstractSentence, CorpusRecord};

pub const MIN_LENGTH: usize = 3;
pub const MAX_LENGTH: usize = 300;
pub const TRAIN_RATIO: f64 = 0.8;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CorpusError {
    #[error("corpus is empty")]
    EmptyCorpus,
    #[error("split ratio must lie strictly between 0 and 1, got {0}")]
    InvalidRatio(f64),
    #[error("length bounds inverted: {lo} > {hi}")]
    InvalidBounds { lo: usize, hi: usize },
    #[error("vocabulary file: {0}")]
    MalformedVocabulary(String),
}

/// Anything with a sentence type and an abstract-token length.
pub trait CorpusItem {
    fn sentence_type(&self) -> &str;
    fn token_count(&self) -> usize;
    fn tokens(&self) -> &[String];
}

impl CorpusItem for AbstractSentence {
    fn sentence_type(&self) -> &str {
        &self.sentence_type
    }
    fn token_count(&self) -> usize {
        self.tokens.len()
    }
    fn tokens(&self) -> &[String] {
        &self.tokens
    }
}

impl CorpusItem for CorpusRecord {
    fn sentence_type(&self) -> &str {
        &self.sentence_type
    }
    fn token_count(&self) -> usize {
        self.tokens.len()
    }
    fn tokens(&self) -> &[String] {
        &self.tokens
    }
}

/// Keeps sentences with `lo <= length <= hi`, preserving order.
pub fn filter_by_length<S: CorpusItem>(sentences: Vec<S>, lo: usize, hi: usize) -> Result<Vec<S>, CorpusError> {
    if lo > hi {
        return Err(CorpusError::InvalidBounds { lo, hi });
    }
    Ok(sentences
        .into_iter()
        .filter(|s| (lo..=hi).contains(&s.token_count()))
        .collect())
}

/// Seeded shuffle followed by a cut at `round(ratio * N)`.
pub fn split_train_test<T: Clone>(items: &[T], ratio: f64, seed: u64) -> Result<(Vec<T>, Vec<T>), CorpusError> {
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(CorpusError::InvalidRatio(ratio));
    }
    let mut order: Vec<usize> = (0..items.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let n_train = (ratio * items.len() as f64).round() as usize;
    let (train, test) = order.split_at(n_train);
    Ok((
        train.iter().map(|&i| items[i].clone()).collect(),
        test.iter().map(|&i| items[i].clone()).collect(),
    ))
}
