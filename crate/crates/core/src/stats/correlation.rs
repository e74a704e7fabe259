//! Pearson and Spearman correlation.

use serde::{Deserialize, Serialize};

use super::StatsError;
use crate::scalar::Real;

/// How equal values are ranked.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TieMethod {
    /// Tied values share the mean of the positions they occupy.
    #[default]
    Average,
    /// Tied values get consecutive ranks in input order.
    Ordinal,
}

impl std::str::FromStr for TieMethod {
    type Err = StatsError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "average" => Ok(TieMethod::Average),
            "ordinal" => Ok(TieMethod::Ordinal),
            other => Err(StatsError::InvalidArgument(format!("unknown tie method {other:?}"))),
        }
    }
}

fn check_pair<T: Real>(x: &[T], y: &[T]) -> Result<(), StatsError> {
    if x.len() != y.len() {
        return Err(StatsError::LengthMismatch(x.len(), y.len()));
    }
    if x.len() < 2 {
        return Err(StatsError::TooShort(x.len()));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(StatsError::NonFinite);
    }
    Ok(())
}

/// Ascending 1-based ranks.
pub fn ranks<T: Real>(values: &[T], ties: TieMethod) -> Result<Vec<T>, StatsError> {
    if values.iter().any(|v| !v.is_finite()) {
        return Err(StatsError::NonFinite);
    }
    let mut order: Vec<usize> = (0..values.len()).collect();
    // stable sort keeps input order within ties
    order.sort_by(|&i, &j| values[i].partial_cmp(&values[j]).expect("finite"));
    let mut out = vec![T::zero(); values.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && values[order[end]] == values[order[start]] {
            end += 1;
        }
        for (offset, &idx) in order[start..end].iter().enumerate() {
            out[idx] = match ties {
                TieMethod::Average => T::from_count(start + end + 1) / T::lit(2.0),
                TieMethod::Ordinal => T::from_count(start + offset + 1),
            };
        }
        start = end;
    }
    Ok(out)
}

/// Product-moment correlation coefficient.
pub fn pearson<T: Real>(x: &[T], y: &[T]) -> Result<T, StatsError> {
    check_pair(x, y)?;
    let n = T::from_count(x.len());
    let mean_x = x.iter().fold(T::zero(), |a, v| a + *v) / n;
    let mean_y = y.iter().fold(T::zero(), |a, v| a + *v) / n;
    let (mut sxy, mut sxx, mut syy) = (T::zero(), T::zero(), T::zero());
    for (a, b) in x.iter().zip(y) {
        let dx = *a - mean_x;
        let dy = *b - mean_y;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == T::zero() || syy == T::zero() {
        return Err(StatsError::Degenerate);
    }
    let r = sxy / (sxx * syy).sqrt();
    Ok(r.max(-T::one()).min(T::one()))
}

/// Spearman's rho with tie-averaged ranks.
pub fn spearman<T: Real>(x: &[T], y: &[T]) -> Result<T, StatsError> {
    spearman_with(x, y, TieMethod::Average)
}

pub fn spearman_with<T: Real>(x: &[T], y: &[T], ties: TieMethod) -> Result<T, StatsError> {
    check_pair(x, y)?;
    pearson(&ranks(x, ties)?, &ranks(y, ties)?)
}
