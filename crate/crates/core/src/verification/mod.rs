//! Independent checks that a setup classifies every path correctly:
//! exhaustive enumeration, deterministic reachable-set certification and
//! the moment recursion.

pub mod certify;
pub mod exact;
pub mod moments;
pub mod separability;
pub mod threshold;

use serde::{Deserialize, Serialize};

pub use certify::{certify_gru_interval, certify_vanilla_k2, CertEntry, CertMethod, IntervalCert, MechanismCheck};
pub use exact::{enumerate_finals, exact_error, exact_error_capped, ExactResult};
pub use moments::{moment_recursion, ConditionalMoments, MomentSeries};
pub use separability::{best_linear_error_2d, convex_hull, linear_separability_2d};
pub use threshold::{best_threshold_error, threshold_error, Orientation, ThresholdFit};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Margins {
    pub min_pos: f64,
    pub max_neg: f64,
}

/// Summary printed by the `verify` command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub method: String,
    pub certified: bool,
    pub error_probability: f64,
    pub errors: u64,
    pub total_paths: u64,
    pub margins: Margins,
    pub parameters: serde_json::Value,
}

impl VerificationReport {
    pub fn from_exact(result: &ExactResult, parameters: serde_json::Value) -> Self {
        Self {
            method: "exact_enumeration".into(),
            certified: result.is_zero(),
            error_probability: result.error_probability,
            errors: result.errors,
            total_paths: result.total_paths,
            margins: Margins {
                min_pos: result.min_margin_pos,
                max_neg: result.max_margin_neg,
            },
            parameters,
        }
    }
}
