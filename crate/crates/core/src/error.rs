use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("perplexity is undefined: {0}")]
    UndefinedPerplexity(&'static str),

    #[error("score is undefined: {0}")]
    UndefinedScore(&'static str),

    /// N_r is zero for a count that the Good-Turing formula needs.
    #[error("undefined Good-Turing histogram: N_{r} = 0 but N_{} > 0", r + 1)]
    UndefinedHistogram { r: u64 },

    #[error("cannot train: {0}")]
    CannotTrain(&'static str),

    #[error("sentence has {len} words, above the phrase-scoring limit of {max}")]
    SentenceTooLong { len: usize, max: usize },

    #[error("segmentation does not match sentence: {0}")]
    Structural(String),

    #[error("mode mismatch: {0}")]
    ModeMismatch(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

impl Error {
    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: message.into(),
        }
    }
}
