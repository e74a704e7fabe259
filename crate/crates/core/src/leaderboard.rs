//! Elo leaderboard with per-CRS satisfaction rates.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::domain::{CrsId, Sentiment};
use crate::elo::{rate_all, EloConfig, EloError, Matchup};
use crate::export::{sort_records, ExportRecord};
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeaderboardEntry<T> {
    pub crs_id: CrsId,
    pub elo: T,
    pub rank: u32,
    /// Percentage of ended conversations closed with satisfaction, one
    /// decimal. `None` when the CRS has no ended conversation.
    pub satisfaction: Option<T>,
    pub ended_conversations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Leaderboard<T> {
    pub battles_processed: usize,
    /// Sorted by rank, then crs_id.
    pub entries: Vec<LeaderboardEntry<T>>,
}

impl<T: Real> Leaderboard<T> {
    pub fn entry(&self, id: &CrsId) -> Option<&LeaderboardEntry<T>> {
        self.entries.iter().find(|e| &e.crs_id == id)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SentimentTally {
    pub satisfied: usize,
    pub ended: usize,
}

impl SentimentTally {
    pub fn add(&mut self, sentiment: Sentiment) {
        match sentiment {
            Sentiment::Satisfaction => {
                self.satisfied += 1;
                self.ended += 1;
            }
            Sentiment::Frustration => self.ended += 1,
            Sentiment::NoneYet => {}
        }
    }

    /// 100 * satisfied / ended, rounded to one decimal.
    pub fn percent<T: Real>(&self) -> Option<T> {
        (self.ended > 0).then(|| {
            (T::from_count(self.satisfied * 1000) / T::from_count(self.ended)).round() / T::lit(10.0)
        })
    }
}

/// Builds the leaderboard from votes already in replay order.
pub fn build<'a, T: Real>(
    votes: &[Matchup],
    sentiments: impl IntoIterator<Item = (&'a CrsId, Sentiment)>,
    registry: &BTreeSet<CrsId>,
    config: &EloConfig<T>,
) -> Result<Leaderboard<T>, EloError> {
    let table = rate_all(votes, registry, config)?;
    let mut tallies: BTreeMap<&CrsId, SentimentTally> = BTreeMap::new();
    for (id, sentiment) in sentiments {
        tallies.entry(id).or_default().add(sentiment);
    }
    let mut entries: Vec<LeaderboardEntry<T>> = table
        .ratings
        .iter()
        .map(|(id, elo)| {
            let tally = tallies.get(id).copied().unwrap_or_default();
            LeaderboardEntry {
                crs_id: id.clone(),
                elo: *elo,
                rank: table.ranks[id],
                satisfaction: tally.percent(),
                ended_conversations: tally.ended,
            }
        })
        .collect();
    entries.sort_by(|x, y| (x.rank, &x.crs_id).cmp(&(y.rank, &y.crs_id)));
    Ok(Leaderboard { battles_processed: table.battles_processed, entries })
}

/// Leaderboard over exported records, replayed in export order.
///
/// The registry is every CRS that appears in `records`.
pub fn from_records<T: Real>(
    records: &[ExportRecord],
    config: &EloConfig<T>,
) -> Result<Leaderboard<T>, EloError> {
    let mut ordered = records.to_vec();
    sort_records(&mut ordered);
    let registry: BTreeSet<CrsId> = ordered
        .iter()
        .flat_map(|r| r.sides().map(|s| s.crs_id.clone()))
        .collect();
    let votes: Vec<Matchup> = ordered.iter().map(ExportRecord::matchup).collect();
    let sentiments = ordered
        .iter()
        .flat_map(|r| r.sides().map(|s| (&s.crs_id, s.sentiment)));
    build(&votes, sentiments, &registry, config)
}
