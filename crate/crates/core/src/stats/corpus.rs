use serde::{Deserialize, Serialize};

use super::diversity::{distinct_2, tokenize};
use super::StatsError;
use crate::domain::{Role, Utterance};
use crate::export::ExportRecord;
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RoleFilter {
    #[default]
    All,
    System,
    User,
}

impl RoleFilter {
    pub fn keeps(self, utterance: &Utterance) -> bool {
        match self {
            RoleFilter::All => true,
            RoleFilter::System => utterance.role == Role::System,
            RoleFilter::User => utterance.role == Role::User,
        }
    }
}

impl std::fmt::Display for RoleFilter {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            RoleFilter::All => "all",
            RoleFilter::System => "system",
            RoleFilter::User => "user",
        })
    }
}

impl std::str::FromStr for RoleFilter {
    type Err = StatsError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "all" => Ok(RoleFilter::All),
            "system" => Ok(RoleFilter::System),
            "user" => Ok(RoleFilter::User),
            other => Err(StatsError::InvalidArgument(format!("unknown role filter {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorpusStats<T> {
    pub utterances_per_dialogue: T,
    pub words_per_utterance: T,
    pub distinct2: T,
    pub n_dialogues: usize,
    pub n_votes: usize,
}

/// Dialogue-level statistics over a set of exported battles.
///
/// Each side of a battle is a dialogue. `utterances_per_dialogue` counts
/// every utterance; word counts and Distinct-2 only see `role_filter`.
pub fn corpus_stats<T: Real>(records: &[ExportRecord], role_filter: RoleFilter) -> CorpusStats<T> {
    let n_dialogues = records.len() * 2;
    let n_votes = records.iter().filter(|r| !r.outcome.is_pending()).count();
    let dialogues = || records.iter().flat_map(|r| r.sides());
    let total_utterances: usize = dialogues().map(|d| d.utterances.len()).sum();

    let selected: Vec<&str> = dialogues()
        .flat_map(|d| d.utterances.iter())
        .filter(|u| role_filter.keeps(u))
        .map(|u| u.text.as_str())
        .collect();
    let words: usize = selected.iter().map(|t| tokenize(t).len()).sum();

    let mean = |num: usize, den: usize| {
        if den == 0 {
            T::zero()
        } else {
            T::from_count(num) / T::from_count(den)
        }
    };
    let distinct2 = if records.is_empty() { T::zero() } else { distinct_2(&selected) };

    CorpusStats {
        utterances_per_dialogue: mean(total_utterances, n_dialogues),
        words_per_utterance: mean(words, selected.len()),
        distinct2,
        n_dialogues,
        n_votes,
    }
}
