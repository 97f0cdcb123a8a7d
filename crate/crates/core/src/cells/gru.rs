use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::linalg::{check_len, sigmoid, Mat};
use crate::process::InputVector;

/// Weights of one gate or candidate: `W x + U s + b`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GateBlock {
    pub w: Mat,
    pub u: Mat,
    pub b: Vec<f64>,
}

impl GateBlock {
    pub fn zeros(dim: usize) -> Self {
        Self {
            w: Mat::zeros(dim, 2),
            u: Mat::zeros(dim, dim),
            b: vec![0.0; dim],
        }
    }

    pub fn validate(&self, what: &'static str, dim: usize) -> Result<()> {
        self.w.check_shape(what, dim, 2)?;
        self.u.check_shape(what, dim, dim)?;
        check_len(what, &self.b, dim)
    }

    /// `W x + U s + b`
    #[inline]
    pub fn affine(&self, s: &[f64], x: InputVector) -> Vec<f64> {
        let mut out = self.b.clone();
        self.w.mul_add(&x.as_array(), &mut out);
        self.u.mul_add(s, &mut out);
        out
    }

    pub(crate) fn lifted(&self) -> Self {
        let mut b = self.b.clone();
        b.push(0.0);
        Self {
            w: self.w.padded(1, 0),
            u: self.u.padded(1, 1),
            b,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GruParams {
    pub dim: usize,
    pub reset: GateBlock,
    pub update: GateBlock,
    pub candidate: GateBlock,
}

pub(crate) struct GruStep {
    pub next: Vec<f64>,
    pub reset: Vec<f64>,
    pub update: Vec<f64>,
    pub candidate: Vec<f64>,
}

impl GruParams {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            reset: GateBlock::zeros(dim),
            update: GateBlock::zeros(dim),
            candidate: GateBlock::zeros(dim),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.reset.validate("gru reset gate", self.dim)?;
        self.update.validate("gru update gate", self.dim)?;
        self.candidate.validate("gru candidate", self.dim)
    }

    pub(crate) fn forward(&self, s: &[f64], x: InputVector) -> GruStep {
        let reset: Vec<f64> = self.reset.affine(s, x).into_iter().map(sigmoid).collect();
        let update: Vec<f64> = self.update.affine(s, x).into_iter().map(sigmoid).collect();
        let gated: Vec<f64> = reset.iter().zip(s).map(|(r, v)| r * v).collect();
        let candidate: Vec<f64> = self
            .candidate
            .affine(&gated, x)
            .into_iter()
            .map(f64::tanh)
            .collect();
        let next = update
            .iter()
            .zip(&candidate)
            .zip(s)
            .map(|((z, c), v)| z * c + (1.0 - z) * v)
            .collect();
        GruStep {
            next,
            reset,
            update,
            candidate,
        }
    }

    pub(crate) fn lifted(&self) -> Self {
        Self {
            dim: self.dim + 1,
            reset: self.reset.lifted(),
            update: self.update.lifted(),
            candidate: self.candidate.lifted(),
        }
    }
}
