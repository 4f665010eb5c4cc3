//! Ordinal label assignment by comparison against cached training scores.
//!
//! Instead of learned thresholds, a query score is bracketed by the labels
//! of training objects scoring at or below / at or above it, giving a class
//! interval. Non-singleton intervals are resolved by the kappa indicator:
//! the proportion of other-class training objects separated from the query
//! by more than the margin in the direction the candidate class implies.

use std::collections::BTreeMap;

use crate::encoding::encode;
use crate::error::{Error, Result};
use crate::fm::{link_score_fast, ModelParams};

/// Candidate label range `[lower, upper]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ClassInterval {
    pub lower: u32,
    pub upper: u32,
    /// Set when the raw bracket came out inverted (possible only when the
    /// trained scores are not concordant with the labels) and was swapped.
    pub fallback: bool,
}

impl ClassInterval {
    pub fn is_singleton(&self) -> bool {
        self.lower == self.upper
    }
}

/// The raw bracket formula over an explicit score cache:
/// `L = max({1} u {label : cached <= score})`,
/// `R = min({H} u {label : cached >= score})`,
/// swapped (with the fallback flag set) if inverted. An empty cache yields
/// `[1, H]` by the guard values.
pub fn interval_from_scores(score: f64, cache: &[(f64, u32)], n_classes: u32) -> ClassInterval {
    let mut lower = 1u32;
    let mut upper = n_classes;
    for &(s, label) in cache {
        if s <= score {
            lower = lower.max(label);
        }
        if s >= score {
            upper = upper.min(label);
        }
    }
    if lower <= upper {
        ClassInterval { lower, upper, fallback: false }
    } else {
        ClassInterval { lower: upper, upper: lower, fallback: true }
    }
}

/// Class interval of a query score against the model's training cache.
pub fn class_interval(score: f64, p: &ModelParams) -> Result<ClassInterval> {
    if p.train_scores.is_empty() {
        return Err(Error::Inference("model has no cached training scores".into()));
    }
    Ok(interval_from_scores(score, &p.train_scores, p.n_classes))
}

/// Indicator favoring classification into class `h`: the fraction of
/// other-class training objects that the query beats by more than `tau`
/// (for lower classes) or is beaten by (for higher classes).
pub fn kappa(score: f64, h: u32, p: &ModelParams, tau: f64) -> Result<f64> {
    if h < 1 || h > p.n_classes {
        return Err(Error::InvalidInput(format!(
            "class {h} out of range 1..={}",
            p.n_classes
        )));
    }
    let mut card = 0usize;
    let mut denom = 0usize;
    for &(s, label) in &p.train_scores {
        if label == h {
            continue;
        }
        denom += 1;
        if label < h && score - s > tau {
            card += 1;
        }
        if label > h && s - score > tau {
            card += 1;
        }
    }
    if denom == 0 {
        return Err(Error::Inference(format!(
            "every cached training object belongs to class {h}; indicator undefined"
        )));
    }
    Ok(card as f64 / denom as f64)
}

/// A classified object: chosen label, its class interval, and the kappa
/// values computed for the candidates (empty for singleton intervals).
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub label: u32,
    pub interval: ClassInterval,
    pub kappa_values: BTreeMap<u32, f64>,
}

/// Classify a raw attribute row: encode, score, bracket, and pick the
/// candidate with the largest kappa (ties to the smallest class).
pub fn predict(x: &[f64], p: &ModelParams) -> Result<Prediction> {
    let phi = encode(x, &p.disc)?;
    let score = link_score_fast(&phi, p)?;
    predict_from_score(score, p)
}

/// Classification from an already-computed query score.
pub fn predict_from_score(score: f64, p: &ModelParams) -> Result<Prediction> {
    let interval = class_interval(score, p)?;
    if interval.is_singleton() {
        return Ok(Prediction { label: interval.lower, interval, kappa_values: BTreeMap::new() });
    }
    let mut kappa_values = BTreeMap::new();
    let mut best_h = interval.lower;
    let mut best_kappa = f64::NEG_INFINITY;
    for h in interval.lower..=interval.upper {
        let value = kappa(score, h, p, p.tau)?;
        if value > best_kappa {
            best_kappa = value;
            best_h = h;
        }
        kappa_values.insert(h, value);
    }
    Ok(Prediction { label: best_h, interval, kappa_values })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fm::tests::tiny_model;

    fn model_with_cache(cache: Vec<(f64, u32)>, tau: f64) -> ModelParams {
        let mut p = tiny_model(vec![0.0, 0.0], vec![0.0, 0.0], 1);
        p.n_classes = cache.iter().map(|&(_, l)| l).max().unwrap_or(0);
        p.train_scores = cache;
        p.tau = tau;
        p
    }

    #[test]
    fn bracket_hand_example() {
        let cache = vec![(0.1, 1), (0.5, 2), (0.9, 3)];
        let iv = interval_from_scores(0.7, &cache, 3);
        assert_eq!((iv.lower, iv.upper, iv.fallback), (2, 3, false));
    }

    #[test]
    fn tie_belongs_to_both_sides() {
        let cache = vec![(0.1, 1), (0.5, 2), (0.9, 3)];
        let iv = interval_from_scores(0.5, &cache, 3);
        assert_eq!((iv.lower, iv.upper), (2, 2));
        assert!(iv.is_singleton());
    }

    #[test]
    fn empty_cache_gives_guard_interval() {
        let iv = interval_from_scores(0.3, &[], 4);
        assert_eq!((iv.lower, iv.upper, iv.fallback), (1, 4, false));
    }

    #[test]
    fn guards_apply_beyond_score_range() {
        let cache = vec![(0.4, 2), (0.6, 3)];
        let below = interval_from_scores(0.0, &cache, 4);
        assert_eq!((below.lower, below.upper), (1, 2));
        let above = interval_from_scores(1.0, &cache, 4);
        assert_eq!((above.lower, above.upper), (3, 4));
    }

    #[test]
    fn inverted_bracket_swaps_and_flags() {
        // Non-concordant cache: a high score with a low label.
        let cache = vec![(0.9, 1), (0.1, 3)];
        let iv = interval_from_scores(0.5, &cache, 3);
        assert!(iv.fallback);
        assert!(iv.lower <= iv.upper);
        assert_eq!((iv.lower, iv.upper), (1, 3));
    }

    #[test]
    fn class_interval_requires_cache() {
        let p = model_with_cache(vec![], 0.1);
        assert!(matches!(class_interval(0.0, &p), Err(Error::Inference(_))));
    }

    #[test]
    fn kappa_hand_example() {
        // H=2, h=1, one higher-class object beating the query by > tau.
        let p = model_with_cache(vec![(0.9, 2)], 0.1);
        assert_eq!(kappa(0.1, 1, &p, 0.1).unwrap(), 1.0);
    }

    #[test]
    fn kappa_zero_when_everything_within_margin() {
        let p = model_with_cache(vec![(0.5, 1), (0.55, 3)], 0.1);
        assert_eq!(kappa(0.5, 2, &p, 0.1).unwrap(), 0.0);
    }

    #[test]
    fn kappa_margin_is_strict() {
        // Gap exactly tau does not count.
        let p = model_with_cache(vec![(0.0, 1), (1.0, 3)], 0.1);
        assert_eq!(kappa(0.1, 2, &p, 0.1).unwrap(), 0.5);
    }

    #[test]
    fn kappa_denominator_zero_is_error() {
        let p = model_with_cache(vec![(0.2, 2), (0.4, 2)], 0.1);
        assert!(matches!(kappa(0.3, 2, &p, 0.1), Err(Error::Inference(_))));
    }

    #[test]
    fn kappa_bounded_by_one() {
        let p = model_with_cache(vec![(0.0, 1), (0.1, 1), (5.0, 3), (6.0, 3)], 0.1);
        for h in 1..=3 {
            let v = kappa(2.0, h, &p, 0.1).unwrap();
            assert!((0.0..=1.0).contains(&v));
        }
    }

    #[test]
    fn singleton_interval_skips_kappa() {
        let p = model_with_cache(vec![(0.0, 1), (1.0, 2)], 0.1);
        let pred = predict_from_score(1.0, &p).unwrap();
        assert_eq!(pred.label, 2);
        assert!(pred.interval.is_singleton());
        assert!(pred.kappa_values.is_empty());
    }

    #[test]
    fn argmax_kappa_selects_label() {
        // Interval [1,2]; both higher-class objects beat the query by more
        // than tau while the lower-class objects sit within it, so kappa
        // favors class 1.
        let p = model_with_cache(vec![(0.0, 1), (0.05, 1), (1.0, 2), (1.1, 2)], 0.1);
        let pred = predict_from_score(0.1, &p).unwrap();
        assert_eq!((pred.interval.lower, pred.interval.upper), (1, 2));
        assert_eq!(pred.kappa_values[&1], 1.0);
        assert_eq!(pred.kappa_values[&2], 0.0);
        assert_eq!(pred.label, 1);
    }

    #[test]
    fn kappa_tie_breaks_to_smallest_class() {
        let p = model_with_cache(vec![(0.0, 1), (1.0, 2)], 0.1);
        let pred = predict_from_score(0.5, &p).unwrap();
        assert_eq!((pred.interval.lower, pred.interval.upper), (1, 2));
        assert_eq!(pred.kappa_values[&1], pred.kappa_values[&2]);
        assert_eq!(pred.label, 1);
    }

    #[test]
    fn label_always_inside_interval() {
        use rand::Rng;
        let mut rng = crate::rng::derive_rng(31, &[]);
        for _ in 0..200 {
            let n = rng.random_range(2..20usize);
            let h = rng.random_range(2..6);
            let mut cache: Vec<(f64, u32)> = (0..n)
                .map(|_| (rng.random_range(-1.0..1.0), rng.random_range(1..=h)))
                .collect();
            // Two distinct labels keep every kappa denominator positive.
            cache[0].1 = 1;
            cache[1].1 = h;
            let mut p = model_with_cache(cache, 0.1);
            p.n_classes = h;
            let score = rng.random_range(-1.5..1.5);
            let pred = predict_from_score(score, &p).unwrap();
            assert!(pred.label >= pred.interval.lower && pred.label <= pred.interval.upper);
            for v in pred.kappa_values.values() {
                assert!((0.0..=1.0).contains(v));
            }
        }
    }

    #[test]
    fn shift_invariance() {
        let cache = vec![(0.0, 1), (0.4, 2), (1.0, 3), (1.5, 3)];
        let p = model_with_cache(cache.clone(), 0.1);
        for &c in &[0.5, -2.0, 10.0] {
            let shifted: Vec<(f64, u32)> = cache.iter().map(|&(s, l)| (s + c, l)).collect();
            let q = model_with_cache(shifted, 0.1);
            for &score in &[0.2, 0.7, 1.2] {
                let a = predict_from_score(score, &p).unwrap();
                let b = predict_from_score(score + c, &q).unwrap();
                assert_eq!(a.label, b.label);
                assert_eq!((a.interval.lower, a.interval.upper), (b.interval.lower, b.interval.upper));
                assert_eq!(a.kappa_values, b.kappa_values);
            }
        }
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        /// Concordant cache: per-class score bands separated by at least tau.
        fn concordant_cache(
            class_sizes: &[usize],
            widths: &[f64],
            tau: f64,
        ) -> Vec<(f64, u32)> {
            let mut cache = Vec::new();
            let mut base = 0.0;
            for (c, (&size, &w)) in class_sizes.iter().zip(widths).enumerate() {
                for s in 0..size {
                    let frac = if size > 1 { s as f64 / (size - 1) as f64 } else { 0.0 };
                    cache.push((base + frac * w, c as u32 + 1));
                }
                base += w + tau;
            }
            cache
        }

        proptest! {
            #[test]
            fn concordant_caches_never_invert(
                sizes in proptest::collection::vec(1usize..5, 2..5),
                query in -1.0f64..10.0,
            ) {
                let tau = 0.1;
                let widths = vec![0.5; sizes.len()];
                let cache = concordant_cache(&sizes, &widths, tau);
                let iv = interval_from_scores(query, &cache, sizes.len() as u32);
                prop_assert!(!iv.fallback);
                prop_assert!(iv.lower <= iv.upper);
            }
        }
    }
}
