use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cells::{final_state_unchecked, CellState};
use crate::constructions::ModelSetup;
use crate::error::Result;
use crate::process::{check_enumerable, path_at, DEFAULT_ENUMERATION_CAP};

/// Exact error of a setup over every path of F1B(n).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExactResult {
    pub n: usize,
    pub total_paths: u64,
    /// Misclassified paths; the error probability is `errors / total_paths`.
    pub errors: u64,
    pub error_probability: f64,
    /// Smallest classifier score over positive paths.
    pub min_margin_pos: f64,
    /// Largest classifier score over negative paths.
    pub max_margin_neg: f64,
}

impl ExactResult {
    pub fn is_zero(&self) -> bool {
        self.errors == 0
    }
}

#[derive(Clone, Copy)]
struct Tally {
    errors: u64,
    min_pos: f64,
    max_neg: f64,
}

impl Tally {
    const EMPTY: Tally = Tally {
        errors: 0,
        min_pos: f64::INFINITY,
        max_neg: f64::NEG_INFINITY,
    };

    fn merge(self, other: Tally) -> Tally {
        Tally {
            errors: self.errors + other.errors,
            min_pos: self.min_pos.min(other.min_pos),
            max_neg: self.max_neg.max(other.max_neg),
        }
    }
}

/// Exhaustive error with the default enumeration cap.
pub fn exact_error(setup: &ModelSetup, n: usize) -> Result<ExactResult> {
    exact_error_capped(setup, n, DEFAULT_ENUMERATION_CAP)
}

pub fn exact_error_capped(setup: &ModelSetup, n: usize, cap: usize) -> Result<ExactResult> {
    setup.validate()?;
    let total = check_enumerable(n, cap)?;
    let tally = (0..total as usize)
        .into_par_iter()
        .with_min_len(512)
        .map(|i| {
            let path = path_at(n, i as u64);
            let fin = final_state_unchecked(&setup.params, &setup.s0, &path, setup.encoding);
            let score = crate::linalg::dot(&setup.classifier.beta, fin.readout()) + setup.classifier.gamma;
            let predicted = crate::cells::sign_of_score(score);
            let label = path.label();
            Tally {
                errors: (predicted != label) as u64,
                min_pos: if label == 1 { score } else { f64::INFINITY },
                max_neg: if label == -1 { score } else { f64::NEG_INFINITY },
            }
        })
        .reduce(|| Tally::EMPTY, Tally::merge);
    Ok(ExactResult {
        n,
        total_paths: total,
        errors: tally.errors,
        error_probability: tally.errors as f64 / total as f64,
        min_margin_pos: tally.min_pos,
        max_margin_neg: tally.max_neg,
    })
}

/// `(label, final state)` for every path, in enumeration order.
pub fn enumerate_finals(setup: &ModelSetup, n: usize, cap: usize) -> Result<Vec<(i8, CellState)>> {
    setup.validate()?;
    let total = check_enumerable(n, cap)?;
    Ok((0..total as usize)
        .into_par_iter()
        .with_min_len(512)
        .map(|i| {
            let path = path_at(n, i as u64);
            (
                path.label(),
                final_state_unchecked(&setup.params, &setup.s0, &path, setup.encoding),
            )
        })
        .collect())
}
