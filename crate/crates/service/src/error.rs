use arena_core::{DomainError, EloError, MatchmakerError};
use thiserror::Error;

use crate::events::StorageError;
use crate::state::Phase;

#[derive(Debug, Error)]
pub enum ArenaError {
    #[error("{kind} {id} not found")]
    NotFound { kind: &'static str, id: String },
    #[error("operation not allowed in phase {phase}: {reason}")]
    State { phase: Phase, reason: String },
    #[error("conversation is closed")]
    ConversationClosed,
    #[error("battle already voted")]
    AlreadyVoted,
    #[error("at least {required} user turns are required before ending, got {actual}")]
    MinTurns { required: u32, actual: u32 },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Storage(#[from] StorageError),
    #[error(transparent)]
    Matchmaker(#[from] MatchmakerError),
    #[error(transparent)]
    Elo(#[from] EloError),
    #[error("replayed log is inconsistent at event {seq}: {reason}")]
    Replay { seq: u64, reason: String },
}

impl From<DomainError> for ArenaError {
    fn from(e: DomainError) -> Self {
        match e {
            DomainError::ConversationClosed => ArenaError::ConversationClosed,
            DomainError::AlreadyVoted => ArenaError::AlreadyVoted,
            DomainError::InvalidArgument(m) => ArenaError::InvalidArgument(m),
            DomainError::Invariant(v) => ArenaError::InvalidArgument(v.to_string()),
        }
    }
}

impl ArenaError {
    /// Stable machine-readable code used in HTTP error bodies.
    pub fn code(&self) -> &'static str {
        match self {
            ArenaError::NotFound { .. } => "not_found",
            ArenaError::State { .. } => "state_error",
            ArenaError::ConversationClosed => "conversation_closed",
            ArenaError::AlreadyVoted => "already_voted",
            ArenaError::MinTurns { .. } => "min_turns",
            ArenaError::InvalidArgument(_) => "invalid_argument",
            ArenaError::Storage(_) => "storage_error",
            ArenaError::Matchmaker(_) => "configuration_error",
            ArenaError::Elo(_) => "ranking_error",
            ArenaError::Replay { .. } => "storage_error",
        }
    }
}
