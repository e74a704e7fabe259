//! Elo ratings replayed from a chronologically ordered vote log.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::{CrsId, Outcome, Timestamp};
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EloError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("CRS {0} is not in the registry")]
    UnknownCrs(CrsId),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EloConfig<T> {
    pub initial_rating: T,
    pub k_factor: T,
}

impl<T: Real> Default for EloConfig<T> {
    fn default() -> Self {
        Self { initial_rating: T::lit(1000.0), k_factor: T::lit(16.0) }
    }
}

impl<T: Real> EloConfig<T> {
    pub fn new(initial_rating: T, k_factor: T) -> Result<Self, EloError> {
        let config = Self { initial_rating, k_factor };
        config.check()?;
        Ok(config)
    }

    fn check(&self) -> Result<(), EloError> {
        if !self.initial_rating.is_finite() {
            return Err(EloError::InvalidArgument("initial rating must be finite".into()));
        }
        if !(self.k_factor.is_finite() && self.k_factor > T::zero()) {
            return Err(EloError::InvalidArgument("k_factor must be positive".into()));
        }
        Ok(())
    }
}

/// Logistic expectation that `rating_a` beats `rating_b`.
pub fn expected_score<T: Real>(rating_a: T, rating_b: T) -> Result<T, EloError> {
    if !rating_a.is_finite() || !rating_b.is_finite() {
        return Err(EloError::InvalidArgument("ratings must be finite".into()));
    }
    let exponent = (rating_b - rating_a) / T::lit(400.0);
    Ok(T::one() / (T::one() + T::lit(10.0).powf(exponent)))
}

/// Applies one game. `score_a` is 1 for an A win, 0.5 for a draw, 0 for a loss.
///
/// B's delta is the negation of A's so the pair is exactly zero-sum.
pub fn update<T: Real>(
    rating_a: T,
    rating_b: T,
    score_a: T,
    config: &EloConfig<T>,
) -> Result<(T, T), EloError> {
    config.check()?;
    let half = T::lit(0.5);
    if score_a != T::zero() && score_a != half && score_a != T::one() {
        return Err(EloError::InvalidArgument(format!(
            "score must be 0, 0.5 or 1, got {score_a}"
        )));
    }
    let expected_a = expected_score(rating_a, rating_b)?;
    let delta = config.k_factor * (score_a - expected_a);
    Ok((rating_a + delta, rating_b - delta))
}

/// A battle reduced to what the ranking needs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Matchup {
    pub crs_a: CrsId,
    pub crs_b: CrsId,
    pub outcome: Outcome,
}

impl Matchup {
    pub fn new(crs_a: impl Into<String>, crs_b: impl Into<String>, outcome: Outcome) -> Self {
        Self { crs_a: CrsId::new(crs_a), crs_b: CrsId::new(crs_b), outcome }
    }
}

/// A vote with the keys that define replay order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VoteEntry {
    pub voted_at: Timestamp,
    pub battle_id: String,
    pub matchup: Matchup,
}

/// Sorts votes by timestamp, breaking ties by battle id.
pub fn into_replay_order(mut votes: Vec<VoteEntry>) -> Vec<Matchup> {
    votes.sort_by(|x, y| (x.voted_at, &x.battle_id).cmp(&(y.voted_at, &y.battle_id)));
    votes.into_iter().map(|v| v.matchup).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatingTable<T> {
    pub ratings: BTreeMap<CrsId, T>,
    pub ranks: BTreeMap<CrsId, u32>,
    pub battles_processed: usize,
}

impl<T: Real> RatingTable<T> {
    /// Builds the table and assigns standard competition ranks ("1224"):
    /// exact-value ties share the best rank of their group.
    pub fn from_ratings(ratings: BTreeMap<CrsId, T>, battles_processed: usize) -> Self {
        let mut order: Vec<(&CrsId, T)> = ratings.iter().map(|(id, r)| (id, *r)).collect();
        order.sort_by(|x, y| y.1.partial_cmp(&x.1).unwrap_or(std::cmp::Ordering::Equal));
        let mut ranks = BTreeMap::new();
        let mut rank = 0u32;
        let mut previous: Option<T> = None;
        for (position, (id, rating)) in order.into_iter().enumerate() {
            if previous != Some(rating) {
                rank = position as u32 + 1;
                previous = Some(rating);
            }
            ranks.insert(id.clone(), rank);
        }
        Self { ratings, ranks, battles_processed }
    }

    pub fn rating(&self, id: &CrsId) -> Option<T> {
        self.ratings.get(id).copied()
    }

    pub fn rank(&self, id: &CrsId) -> Option<u32> {
        self.ranks.get(id).copied()
    }

    pub fn total(&self) -> T {
        self.ratings.values().fold(T::zero(), |acc, r| acc + *r)
    }
}

/// Replays `battles` in the given order. Pending battles are skipped.
pub fn rate_all<'a, T: Real>(
    battles: &[Matchup],
    registry: impl IntoIterator<Item = &'a CrsId>,
    config: &EloConfig<T>,
) -> Result<RatingTable<T>, EloError> {
    config.check()?;
    let mut ratings: BTreeMap<CrsId, T> = registry
        .into_iter()
        .map(|id| (id.clone(), config.initial_rating))
        .collect();
    let mut processed = 0;
    for battle in battles {
        for id in [&battle.crs_a, &battle.crs_b] {
            if !ratings.contains_key(id) {
                return Err(EloError::UnknownCrs(id.clone()));
            }
        }
        let Some(score) = battle.outcome.score_a() else {
            continue;
        };
        if battle.crs_a == battle.crs_b {
            return Err(EloError::InvalidArgument(format!(
                "{} cannot battle itself",
                battle.crs_a
            )));
        }
        let (a, b) = update(ratings[&battle.crs_a], ratings[&battle.crs_b], T::lit(score), config)?;
        ratings.insert(battle.crs_a.clone(), a);
        ratings.insert(battle.crs_b.clone(), b);
        processed += 1;
    }
    Ok(RatingTable::from_ratings(ratings, processed))
}

/// Registry made of every CRS named in `battles`.
pub fn registry_of(battles: &[Matchup]) -> BTreeSet<CrsId> {
    battles
        .iter()
        .flat_map(|b| [b.crs_a.clone(), b.crs_b.clone()])
        .collect()
}
