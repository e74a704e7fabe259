//! Synthetic battle logs with known strengths, for checking the ranker.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::{CrsId, Outcome};
use crate::elo::Matchup;
use crate::matchmaker::{Matchmaker, MatchmakerError};
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimulationError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Matchmaker(#[from] MatchmakerError),
}

/// Input of `analyze simulate`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationConfig {
    pub strengths: BTreeMap<CrsId, f64>,
    pub n_battles: usize,
    #[serde(default)]
    pub draw_probability: f64,
}

impl SimulationConfig {
    pub fn run(&self, seed: u64) -> Result<Vec<Matchup>, SimulationError> {
        simulate_battles(&self.strengths, self.n_battles, seed, self.draw_probability)
    }
}

/// Plays `n_battles` battles paired by the matchmaker.
///
/// A battle is a draw with probability `draw_probability`; otherwise side A
/// wins with probability s_a / (s_a + s_b). Sides are assigned at random.
pub fn simulate_battles<T: Real>(
    strengths: &BTreeMap<CrsId, T>,
    n_battles: usize,
    seed: u64,
    draw_probability: T,
) -> Result<Vec<Matchup>, SimulationError> {
    if strengths.len() < 2 {
        return Err(MatchmakerError::TooFewCrs(strengths.len()).into());
    }
    for (id, s) in strengths {
        if !(s.is_finite() && *s > T::zero() && *s < T::one()) {
            return Err(SimulationError::InvalidArgument(format!(
                "propensity of {id} must lie in (0, 1), got {s}"
            )));
        }
    }
    if !(draw_probability >= T::zero() && draw_probability < T::one()) {
        return Err(SimulationError::InvalidArgument(format!(
            "draw probability must lie in [0, 1), got {draw_probability}"
        )));
    }

    let mut matchmaker = Matchmaker::seeded(strengths.keys().cloned(), seed);
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(0x9e37_79b9_7f4a_7c15));
    let draw_p = draw_probability.as_f64();
    let mut battles = Vec::with_capacity(n_battles);
    for _ in 0..n_battles {
        let (x, y) = matchmaker.next_pair()?;
        let (a, b) = if rng.random_bool(0.5) { (x, y) } else { (y, x) };
        let (sa, sb) = (strengths[&a], strengths[&b]);
        let p_a = (sa / (sa + sb)).as_f64();
        let outcome = if rng.random::<f64>() < draw_p {
            Outcome::Draw
        } else if rng.random::<f64>() < p_a {
            Outcome::AWins
        } else {
            Outcome::BWins
        };
        battles.push(Matchup { crs_a: a, crs_b: b, outcome });
    }
    Ok(battles)
}
