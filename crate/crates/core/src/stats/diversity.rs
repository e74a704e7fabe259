use std::collections::HashSet;

use crate::scalar::Real;

/// Lowercases and splits on whitespace; punctuation stays attached.
pub fn tokenize(text: &str) -> Vec<String> {
    text.to_lowercase().split_whitespace().map(str::to_owned).collect()
}

/// Corpus-level Distinct-n: distinct n-grams over total n-grams.
///
/// N-grams never span two utterances. Returns 1 when the corpus has no
/// n-gram at all.
pub fn distinct_n<T: Real, S: AsRef<str>>(utterances: &[S], n: usize) -> T {
    assert!(n > 0, "n-gram order must be positive");
    let mut seen: HashSet<Vec<String>> = HashSet::new();
    let mut total = 0usize;
    for utterance in utterances {
        let tokens = tokenize(utterance.as_ref());
        for gram in tokens.windows(n) {
            total += 1;
            seen.insert(gram.to_vec());
        }
    }
    if total == 0 {
        return T::one();
    }
    T::from_count(seen.len()) / T::from_count(total)
}

pub fn distinct_2<T: Real, S: AsRef<str>>(utterances: &[S]) -> T {
    distinct_n(utterances, 2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn examples() {
        assert_eq!(distinct_2::<f64, _>(&["good movie"]), 1.0);
        assert!((distinct_2::<f64, _>(&["the movie the movie"]) - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn empty_and_short_utterances() {
        assert_eq!(distinct_2::<f64, &str>(&[]), 1.0);
        assert_eq!(distinct_2::<f64, _>(&["hi", "ok"]), 1.0);
    }

    #[test]
    fn bigrams_do_not_cross_utterances() {
        // joined this would add (movie,good)
        let d: f64 = distinct_2(&["good movie", "good movie"]);
        assert_eq!(d, 0.5);
    }

    #[test]
    fn case_folds_and_keeps_punctuation() {
        assert_eq!(tokenize("I like Sci-Fi, really!"), vec!["i", "like", "sci-fi,", "really!"]);
        let d: f64 = distinct_2(&["Good Movie", "good movie"]);
        assert_eq!(d, 0.5);
        assert_eq!(tokenize("I like sci-fi movies").len(), 4);
    }

    proptest! {
        #[test]
        fn duplicating_never_increases(
            corpus in proptest::collection::vec("[a-c]{1,2}( [a-c]{1,2}){0,6}", 1..12),
            pick in 0usize..12,
        ) {
            let before: f64 = distinct_2(&corpus);
            let mut grown = corpus.clone();
            grown.push(corpus[pick % corpus.len()].clone());
            let after: f64 = distinct_2(&grown);
            prop_assert!(after <= before + 1e-12);
            prop_assert!((0.0..=1.0).contains(&after));
        }
    }
}
