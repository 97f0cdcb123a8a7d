//! Grid search over scalar tanh cells `S_t = tanh(U·S_{t−1} + W1·x_I + W2·x_F)`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{class_path_seed, wilson_interval};
use crate::error::{Error, Result};
use crate::process::{sample_conditioned, FlagEncoding, FlagPlacement, SamplePath};
use crate::verification::best_threshold_error;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepGrid {
    pub u: Vec<f64>,
    pub w1: Vec<f64>,
    pub w2: Vec<f64>,
}

impl SweepGrid {
    /// The same evenly spaced axis `lo, lo+step, …, hi` for all three weights.
    pub fn cube(lo: f64, hi: f64, step: f64) -> Result<Self> {
        let axis = axis(lo, hi, step)?;
        Ok(Self {
            u: axis.clone(),
            w1: axis.clone(),
            w2: axis,
        })
    }

    pub fn single(u: f64, w1: f64, w2: f64) -> Self {
        Self {
            u: vec![u],
            w1: vec![w1],
            w2: vec![w2],
        }
    }

    pub fn len(&self) -> usize {
        self.u.len() * self.w1.len() * self.w2.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Grid points in row-major order (U slowest, W2 fastest).
    pub fn points(&self) -> Vec<(f64, f64, f64)> {
        let mut out = Vec::with_capacity(self.len());
        for &u in &self.u {
            for &w1 in &self.w1 {
                for &w2 in &self.w2 {
                    out.push((u, w1, w2));
                }
            }
        }
        out
    }
}

/// `lo + k·step` for k = 0..=round((hi − lo)/step), computed by index so
/// values do not drift.
pub fn axis(lo: f64, hi: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0) || !(lo <= hi) || !lo.is_finite() || !hi.is_finite() {
        return Err(Error::InvalidConfig(format!("bad grid axis {lo}..{hi} step {step}")));
    }
    let count = ((hi - lo) / step + 1e-9).floor() as usize + 1;
    Ok((0..count).map(|k| {
        let v = lo + step * k as f64;
        // snap to a short decimal so 0.2·k prints as written
        (v * 1e9).round() / 1e9
    }).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub u: f64,
    pub w1: f64,
    pub w2: f64,
    pub error: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub paths: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub grid: SweepGrid,
    pub n: usize,
    pub paths_per_class: usize,
    pub seed: u64,
    pub points: Vec<SweepPoint>,
    pub min_error: f64,
    pub argmin: (f64, f64, f64),
}

pub(super) fn final_value(u: f64, w1: f64, w2: f64, path: &SamplePath) -> f64 {
    let (on, off) = (FlagEncoding::Symmetric.flag_value(true), FlagEncoding::Symmetric.flag_value(false));
    let flag = path.flag_index();
    let mut s = 0.0f64;
    for (i, &bit) in path.info_bits().iter().enumerate() {
        let x_flag = if i + 1 == flag { on } else { off };
        s = (u * s + w1 * f64::from(bit) + w2 * x_flag).tanh();
    }
    s
}

/// Best-threshold error of the final state at every grid point, with the
/// flag uniform over 1..=n and `s0 = 0`. All points share one path set.
pub fn sweep_vanilla_k1(grid: &SweepGrid, n: usize, paths_per_class: usize, seed: u64) -> Result<SweepReport> {
    if grid.is_empty() {
        return Err(Error::EmptyInput("sweep grid"));
    }
    if paths_per_class == 0 {
        return Err(Error::EmptyInput("paths per class"));
    }
    if n == 0 {
        return Err(Error::InvalidLength(0));
    }
    let draw = |label: i8| -> Vec<SamplePath> {
        (0..paths_per_class)
            .into_par_iter()
            .map(|i| sample_conditioned(n, class_path_seed(seed, label, i as u64), FlagPlacement::Random, Some(label)))
            .collect::<Result<_>>()
            .expect("n checked")
    };
    let pos_paths = draw(1);
    let neg_paths = draw(-1);
    let total = 2 * paths_per_class as u64;

    let points: Vec<SweepPoint> = grid
        .points()
        .into_par_iter()
        .map(|(u, w1, w2)| {
            let pos: Vec<f64> = pos_paths.iter().map(|p| final_value(u, w1, w2, p)).collect();
            let neg: Vec<f64> = neg_paths.iter().map(|p| final_value(u, w1, w2, p)).collect();
            let fit = best_threshold_error(&pos, &neg).expect("classes are nonempty");
            let errors = (fit.error_rate * total as f64).round() as u64;
            let (ci_lo, ci_hi) = wilson_interval(errors, total);
            SweepPoint {
                u,
                w1,
                w2,
                error: fit.error_rate,
                ci_lo,
                ci_hi,
                paths: total as usize,
                seed,
            }
        })
        .collect();
    let best = points
        .iter()
        .min_by(|a, b| a.error.total_cmp(&b.error))
        .expect("grid is nonempty");
    Ok(SweepReport {
        grid: grid.clone(),
        n,
        paths_per_class,
        seed,
        min_error: best.error,
        argmin: (best.u, best.w1, best.w2),
        points,
    })
}

