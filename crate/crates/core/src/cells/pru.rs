use serde::{Deserialize, Serialize};

use super::gru::GateBlock;
use crate::error::Result;
use crate::linalg::sigmoid;
use crate::process::InputVector;

/// Single-gate unit: the candidate sees the raw previous state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PruParams {
    pub dim: usize,
    pub update: GateBlock,
    pub candidate: GateBlock,
}

pub(crate) struct PruStep {
    pub next: Vec<f64>,
    pub update: Vec<f64>,
    pub candidate: Vec<f64>,
}

impl PruParams {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            update: GateBlock::zeros(dim),
            candidate: GateBlock::zeros(dim),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.update.validate("pru update gate", self.dim)?;
        self.candidate.validate("pru candidate", self.dim)
    }

    pub(crate) fn forward(&self, s: &[f64], x: InputVector) -> PruStep {
        let update: Vec<f64> = self.update.affine(s, x).into_iter().map(sigmoid).collect();
        let candidate: Vec<f64> = self.candidate.affine(s, x).into_iter().map(f64::tanh).collect();
        let next = update
            .iter()
            .zip(&candidate)
            .zip(s)
            .map(|((z, c), v)| z * c + (1.0 - z) * v)
            .collect();
        PruStep {
            next,
            update,
            candidate,
        }
    }

    pub(crate) fn lifted(&self) -> Self {
        Self {
            dim: self.dim + 1,
            update: self.update.lifted(),
            candidate: self.candidate.lifted(),
        }
    }
}
