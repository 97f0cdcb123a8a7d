use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::linalg::{check_len, sigmoid, Mat};
use crate::process::InputVector;

/// One LSTM block with peephole matrix `V`: `W x + U d + V c + b`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LstmBlock {
    pub w: Mat,
    pub u: Mat,
    pub v: Mat,
    pub b: Vec<f64>,
}

impl LstmBlock {
    pub fn zeros(dim: usize) -> Self {
        Self {
            w: Mat::zeros(dim, 2),
            u: Mat::zeros(dim, dim),
            v: Mat::zeros(dim, dim),
            b: vec![0.0; dim],
        }
    }

    fn validate(&self, what: &'static str, dim: usize) -> Result<()> {
        self.w.check_shape(what, dim, 2)?;
        self.u.check_shape(what, dim, dim)?;
        self.v.check_shape(what, dim, dim)?;
        check_len(what, &self.b, dim)
    }

    #[inline]
    fn affine(&self, c: &[f64], d: &[f64], x: InputVector) -> Vec<f64> {
        let mut out = self.b.clone();
        self.w.mul_add(&x.as_array(), &mut out);
        self.u.mul_add(d, &mut out);
        self.v.mul_add(c, &mut out);
        out
    }

    fn lifted(&self) -> Self {
        let mut b = self.b.clone();
        b.push(0.0);
        Self {
            w: self.w.padded(1, 0),
            u: self.u.padded(1, 1),
            v: self.v.padded(1, 1),
            b,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LstmParams {
    pub dim: usize,
    pub input: LstmBlock,
    pub forget: LstmBlock,
    pub output: LstmBlock,
    pub candidate: LstmBlock,
}

pub(crate) struct LstmStep {
    pub c: Vec<f64>,
    pub d: Vec<f64>,
    pub input: Vec<f64>,
    pub forget: Vec<f64>,
    pub output: Vec<f64>,
    pub candidate: Vec<f64>,
}

impl LstmParams {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            input: LstmBlock::zeros(dim),
            forget: LstmBlock::zeros(dim),
            output: LstmBlock::zeros(dim),
            candidate: LstmBlock::zeros(dim),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.input.validate("lstm input gate", self.dim)?;
        self.forget.validate("lstm forget gate", self.dim)?;
        self.output.validate("lstm output gate", self.dim)?;
        self.candidate.validate("lstm candidate", self.dim)
    }

    pub(crate) fn forward(&self, c: &[f64], d: &[f64], x: InputVector) -> LstmStep {
        let gate = |block: &LstmBlock| -> Vec<f64> {
            block.affine(c, d, x).into_iter().map(sigmoid).collect()
        };
        let input = gate(&self.input);
        let forget = gate(&self.forget);
        let output = gate(&self.output);
        let candidate: Vec<f64> = self
            .candidate
            .affine(c, d, x)
            .into_iter()
            .map(f64::tanh)
            .collect();
        let c_next: Vec<f64> = (0..self.dim)
            .map(|k| input[k] * candidate[k] + forget[k] * c[k])
            .collect();
        let d_next = c_next
            .iter()
            .zip(&output)
            .map(|(cv, o)| o * cv.tanh())
            .collect();
        LstmStep {
            c: c_next,
            d: d_next,
            input,
            forget,
            output,
            candidate,
        }
    }

    pub(crate) fn lifted(&self) -> Self {
        Self {
            dim: self.dim + 1,
            input: self.input.lifted(),
            forget: self.forget.lifted(),
            output: self.output.lifted(),
            candidate: self.candidate.lifted(),
        }
    }
}
