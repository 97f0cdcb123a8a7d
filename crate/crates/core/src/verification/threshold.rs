use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Orientation {
    /// `+1` iff `x ≥ threshold`.
    PositiveAbove,
    /// `+1` iff `x ≤ threshold`.
    PositiveBelow,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdFit {
    pub error_rate: f64,
    pub threshold: f64,
    pub orientation: Orientation,
}

/// Misclassification rate of one fixed 1-D threshold rule.
pub fn threshold_error(pos: &[f64], neg: &[f64], threshold: f64, orientation: Orientation) -> f64 {
    let predict_pos = |x: f64| match orientation {
        Orientation::PositiveAbove => x - threshold >= 0.0,
        Orientation::PositiveBelow => threshold - x >= 0.0,
    };
    let wrong = pos.iter().filter(|&&x| !predict_pos(x)).count() + neg.iter().filter(|&&x| predict_pos(x)).count();
    wrong as f64 / (pos.len() + neg.len()) as f64
}

/// Best threshold rule over both orientations. Candidate thresholds sit
/// below the minimum, above the maximum and at midpoints between adjacent
/// distinct values; ties go to the lowest threshold, `PositiveAbove` first.
pub fn best_threshold_error(pos: &[f64], neg: &[f64]) -> Result<ThresholdFit> {
    if pos.is_empty() || neg.is_empty() {
        return Err(Error::EmptyInput("best_threshold_error needs both classes"));
    }
    let mut all: Vec<(f64, bool)> = pos
        .iter()
        .map(|&x| (x, true))
        .chain(neg.iter().map(|&x| (x, false)))
        .collect();
    if all.iter().any(|(x, _)| x.is_nan()) {
        return Err(Error::InvalidConfig("NaN in threshold data".into()));
    }
    all.sort_by(|a, b| a.0.total_cmp(&b.0));
    let (n_pos, n_neg) = (pos.len(), neg.len());
    let total = (n_pos + n_neg) as f64;

    let mut best: Option<(usize, f64, Orientation)> = None;
    let mut consider = |errors: usize, threshold: f64, orientation| {
        if best.is_none_or(|(e, _, _)| errors < e) {
            best = Some((errors, threshold, orientation));
        }
    };

    let (mut pos_below, mut neg_below) = (0usize, 0usize);
    let mut i = 0;
    let mut threshold = all[0].0 - 1.0;
    loop {
        consider(pos_below + (n_neg - neg_below), threshold, Orientation::PositiveAbove);
        consider((n_pos - pos_below) + neg_below, threshold, Orientation::PositiveBelow);
        if i == all.len() {
            break;
        }
        let value = all[i].0;
        while i < all.len() && all[i].0 == value {
            if all[i].1 {
                pos_below += 1;
            } else {
                neg_below += 1;
            }
            i += 1;
        }
        threshold = if i < all.len() {
            value + (all[i].0 - value) / 2.0
        } else {
            value + 1.0
        };
    }
    let (errors, threshold, orientation) = best.expect("at least one candidate");
    Ok(ThresholdFit {
        error_rate: errors as f64 / total,
        threshold,
        orientation,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn separable_symmetric() {
        let fit = best_threshold_error(&[0.9, 0.8], &[-0.8, -0.9]).unwrap();
        assert_eq!(fit.error_rate, 0.0);
        assert_eq!(fit.threshold, 0.0);
        assert_eq!(fit.orientation, Orientation::PositiveAbove);
    }

    #[test]
    fn identical_distributions() {
        let fit = best_threshold_error(&[1.0, -1.0], &[1.0, -1.0]).unwrap();
        assert_eq!(fit.error_rate, 0.5);
    }

    #[test]
    fn interleaved_quarter() {
        // brute force over the five candidate cuts of the sorted sample
        let pos = [0.5, -0.1];
        let neg = [0.1, -0.5];
        let cuts = [-1.5, -0.3, 0.0, 0.3, 1.5];
        let brute = cuts
            .iter()
            .flat_map(|&c| {
                [Orientation::PositiveAbove, Orientation::PositiveBelow]
                    .map(|o| threshold_error(&pos, &neg, c, o))
            })
            .fold(f64::INFINITY, f64::min);
        assert_eq!(brute, 0.25);
        assert_eq!(best_threshold_error(&pos, &neg).unwrap().error_rate, 0.25);
    }

    #[test]
    fn reversed_orientation() {
        let fit = best_threshold_error(&[-2.0, -3.0], &[1.0, 2.0]).unwrap();
        assert_eq!(fit.error_rate, 0.0);
        assert_eq!(fit.orientation, Orientation::PositiveBelow);
        assert_eq!(threshold_error(&[-2.0, -3.0], &[1.0, 2.0], fit.threshold, fit.orientation), 0.0);
    }

    #[test]
    fn empty_input_rejected() {
        assert!(matches!(best_threshold_error(&[], &[1.0]), Err(Error::EmptyInput(_))));
    }

    proptest! {
        #[test]
        fn best_beats_any_threshold(pos in prop::collection::vec(-3.0f64..3.0, 1..40),
                                    neg in prop::collection::vec(-3.0f64..3.0, 1..40),
                                    t in -4.0f64..4.0, above: bool) {
            let fit = best_threshold_error(&pos, &neg).unwrap();
            let o = if above { Orientation::PositiveAbove } else { Orientation::PositiveBelow };
            prop_assert!(fit.error_rate <= threshold_error(&pos, &neg, t, o) + 1e-15);
            let achieved = threshold_error(&pos, &neg, fit.threshold, fit.orientation);
            prop_assert!((achieved - fit.error_rate).abs() < 1e-15);
            prop_assert!(fit.error_rate <= 0.5);
        }
    }
}
