//! Arena service: anonymous pairwise battles between CRS backends, an
//! event-sourced store, the live leaderboard and the dataset export.

pub mod arena;
pub mod config;
pub mod error;
pub mod events;
pub mod http;
pub mod state;

pub use arena::{Arena, ArenaOptions, BattleView, Clock, LeaderboardRow, LeaderboardView, VoteChoice, FALLBACK_REPLY};
pub use config::{ArenaConfig, ConfigError, CrsEntry};
pub use error::ArenaError;
pub use events::{Event, EventLog, LoggedEvent, StorageError};
pub use http::router;
pub use state::{ArenaState, Phase, SessionState};
