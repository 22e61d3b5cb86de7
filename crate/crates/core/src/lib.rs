//! Word- and phrase-based n-gram language models.
//!
//! Training counts word n-grams, or phrase n-grams over every way of
//! grouping consecutive words into phrases of bounded length, and smooths
//! them with Good-Turing discounting and Katz backoff. Phrase models score a
//! sentence over its segmentations into phrases, either summing over all of
//! them (sum model) or keeping the one with the lowest per-phrase perplexity
//! (max model). N-best lists can be reranked with any of the models and
//! evaluated with corpus BLEU.

pub mod cli;
pub mod corpus;
pub mod counts;
pub mod error;
pub mod logmath;
pub mod phrase_lm;
pub mod rerank;
pub mod smoothing;
pub mod word_lm;

pub use corpus::{Corpus, Sentence, Vocabulary, WordId};
pub use counts::{CountTable, CountsOfCounts, PhraseId};
pub use error::{Error, Result};
pub use phrase_lm::{PhraseMode, PhraseScorer, Segmentation};
pub use smoothing::{BackoffModel, BuildOptions};
