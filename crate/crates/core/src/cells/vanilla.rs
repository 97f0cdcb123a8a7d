use serde::{Deserialize, Serialize};

use super::Activation;
use crate::error::Result;
use crate::linalg::{check_len, Mat};
use crate::process::InputVector;

/// `s' = act(W x + U s + b)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VanillaParams {
    pub dim: usize,
    /// K×2; column 0 multiplies the information bit, column 1 the flag.
    pub w: Mat,
    /// K×K
    pub u: Mat,
    pub b: Vec<f64>,
    pub activation: Activation,
}

impl VanillaParams {
    pub fn zeros(dim: usize, activation: Activation) -> Self {
        Self {
            dim,
            w: Mat::zeros(dim, 2),
            u: Mat::zeros(dim, dim),
            b: vec![0.0; dim],
            activation,
        }
    }

    /// The scalar recurrence `S_t = tanh(U S_{t-1} + W1 X^I_t + W2 X^F_t)`.
    pub fn scalar(u: f64, w_info: f64, w_flag: f64) -> Self {
        Self {
            dim: 1,
            w: Mat::from_rows(&[[w_info, w_flag]]),
            u: Mat::from_rows(&[[u]]),
            b: vec![0.0],
            activation: Activation::Tanh,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.w.check_shape("vanilla W", self.dim, 2)?;
        self.u.check_shape("vanilla U", self.dim, self.dim)?;
        check_len("vanilla b", &self.b, self.dim)
    }

    pub fn pre_activation(&self, s: &[f64], x: InputVector) -> Vec<f64> {
        let mut pre = self.b.clone();
        self.w.mul_add(&x.as_array(), &mut pre);
        self.u.mul_add(s, &mut pre);
        pre
    }

    pub(crate) fn forward(&self, s: &[f64], x: InputVector) -> (Vec<f64>, Vec<f64>) {
        let pre = self.pre_activation(s, x);
        let next = pre.iter().map(|&v| self.activation.apply(v)).collect();
        (next, pre)
    }

    pub(crate) fn lifted(&self) -> Self {
        let mut b = self.b.clone();
        b.push(0.0);
        Self {
            dim: self.dim + 1,
            w: self.w.padded(1, 0),
            u: self.u.padded(1, 1),
            b,
            activation: self.activation,
        }
    }
}
