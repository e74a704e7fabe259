//! Core of the CRS battle arena: domain types, Elo ranking, matchmaking,
//! dataset export and the corpus/correlation statistics used in reports.
//!
//! Numeric code is generic over [`Real`] (f32 or f64); the aliases below
//! fix the scalar for the common cases.

pub mod domain;
pub mod elo;
pub mod export;
pub mod leaderboard;
pub mod matchmaker;
pub mod report;
pub mod scalar;
pub mod simulate;
pub mod stats;

pub use domain::{
    Battle, Conversation, CrsDescriptor, CrsId, DomainError, Environment, Outcome, Role, Sentiment, Side,
    Timestamp, Utterance, Violation,
};
pub use elo::{expected_score, rate_all, update, EloError, Matchup};
pub use export::{ExportError, ExportRecord, ExportSide};
pub use matchmaker::{Matchmaker, MatchmakerError};
pub use scalar::Real;
pub use stats::StatsError;

pub type EloConfigF64 = elo::EloConfig<f64>;
pub type EloConfigF32 = elo::EloConfig<f32>;
pub type RatingTableF64 = elo::RatingTable<f64>;
pub type RatingTableF32 = elo::RatingTable<f32>;
pub type LeaderboardF64 = leaderboard::Leaderboard<f64>;
pub type CorpusStatsF64 = stats::CorpusStats<f64>;
pub type CorpusStatsF32 = stats::CorpusStats<f32>;
