//! Corpus statistics and rank correlation.

mod corpus;
mod correlation;
mod diversity;

pub use corpus::{corpus_stats, CorpusStats, RoleFilter};
pub use correlation::{pearson, ranks, spearman, spearman_with, TieMethod};
pub use diversity::{distinct_2, distinct_n, tokenize};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StatsError {
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("need at least 2 observations, got {0}")]
    TooShort(usize),
    #[error("zero variance")]
    Degenerate,
    #[error("non-finite input")]
    NonFinite,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}
