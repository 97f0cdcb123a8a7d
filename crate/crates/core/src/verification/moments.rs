//! Mean and variance of the scalar gated state over time, per class.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Moments of `S_t` (t = 0..=n) for one flag position.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionalMoments {
    pub flag_index: usize,
    pub mean_pos: Vec<f64>,
    pub var_pos: Vec<f64>,
    pub mean_neg: Vec<f64>,
    pub var_neg: Vec<f64>,
}

/// Class moments of `S_t` with the flag position drawn uniformly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentSeries {
    pub gate: f64,
    pub scale: f64,
    pub n: usize,
    pub mean_pos: Vec<f64>,
    pub var_pos: Vec<f64>,
    pub mean_neg: Vec<f64>,
    pub var_neg: Vec<f64>,
    pub conditional: Vec<ConditionalMoments>,
    /// `min(1, v_n / μ_n²)` for the positive class.
    pub chebyshev_bound: f64,
}

fn branch(a: f64, b: f64, n: usize, flag: usize, y: f64) -> (Vec<f64>, Vec<f64>) {
    let (mut mu, mut v) = (0.0, 0.0);
    let mut means = Vec::with_capacity(n + 1);
    let mut vars = Vec::with_capacity(n + 1);
    means.push(mu);
    vars.push(v);
    for t in 1..=n {
        if t == flag {
            mu = (1.0 - a) * mu + y * (a * b);
            v = (1.0 - a) * (1.0 - a) * v;
        } else {
            mu *= a;
            v = a * a * v + (1.0 - a) * (1.0 - a) * b * b;
        }
        means.push(mu);
        vars.push(v);
    }
    (means, vars)
}

/// Uniform mixture over flag positions; the variance includes the spread
/// of the conditional means.
fn mixture(parts: &[(&[f64], &[f64])], len: usize) -> (Vec<f64>, Vec<f64>) {
    let k = parts.len() as f64;
    let mut mean = vec![0.0; len];
    let mut var = vec![0.0; len];
    for t in 0..len {
        let m = parts.iter().map(|(mu, _)| mu[t]).sum::<f64>() / k;
        var[t] = parts.iter().map(|(mu, v)| v[t] + (mu[t] - m) * (mu[t] - m)).sum::<f64>() / k;
        mean[t] = m;
    }
    (mean, var)
}

/// Moment recursion from `s0 = 0` with gate `A` and scale `B`.
pub fn moment_recursion(gate: f64, scale: f64, n: usize) -> Result<MomentSeries> {
    if !(gate > 0.0 && gate < 1.0) {
        return Err(Error::InvalidGate(gate));
    }
    if n == 0 {
        return Err(Error::InvalidLength(0));
    }
    let conditional: Vec<ConditionalMoments> = (1..=n)
        .map(|flag| {
            let (mean_pos, var_pos) = branch(gate, scale, n, flag, 1.0);
            let (mean_neg, var_neg) = branch(gate, scale, n, flag, -1.0);
            ConditionalMoments {
                flag_index: flag,
                mean_pos,
                var_pos,
                mean_neg,
                var_neg,
            }
        })
        .collect();
    let pos: Vec<_> = conditional.iter().map(|c| (c.mean_pos.as_slice(), c.var_pos.as_slice())).collect();
    let neg: Vec<_> = conditional.iter().map(|c| (c.mean_neg.as_slice(), c.var_neg.as_slice())).collect();
    let (mean_pos, var_pos) = mixture(&pos, n + 1);
    let (mean_neg, var_neg) = mixture(&neg, n + 1);
    let mu = mean_pos[n];
    let chebyshev_bound = if mu == 0.0 { 1.0 } else { (var_pos[n] / (mu * mu)).min(1.0) };
    Ok(MomentSeries {
        gate,
        scale,
        n,
        mean_pos,
        var_pos,
        mean_neg,
        var_neg,
        conditional,
        chebyshev_bound,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::process::enumerate_paths;
    use crate::constructions::gated_closed_form;
    use proptest::prelude::*;

    #[test]
    fn two_step_hand_values() {
        let m = moment_recursion(0.9, 1.0, 2).unwrap();
        let c = &m.conditional[0];
        assert!((c.mean_pos[1] - 0.9).abs() < 1e-15);
        assert_eq!(c.var_pos[1], 0.0);
        assert!((c.mean_pos[2] - 0.81).abs() < 1e-15);
        assert!((c.var_pos[2] - 0.01).abs() < 1e-15);
    }

    #[test]
    fn bound_vanishes_as_gate_approaches_one() {
        let n = 10;
        let bounds: Vec<f64> = [0.9, 0.99, 0.999, 0.9999]
            .iter()
            .map(|&a| moment_recursion(a, 1.0, n).unwrap().chebyshev_bound)
            .collect();
        assert!(bounds.windows(2).all(|w| w[1] < w[0]));
        assert!(bounds[3] < 1e-4);
    }

    /// Exact moments by enumerating every path through the closed form.
    #[test]
    fn matches_enumeration() {
        let (a, b, n) = (0.8, 0.6, 7);
        let m = moment_recursion(a, b, n).unwrap();
        for label in [1i8, -1] {
            let mut sum = vec![0.0; n + 1];
            let mut sq = vec![0.0; n + 1];
            let mut count = 0.0;
            for p in enumerate_paths(n, 16).unwrap().filter(|p| p.label() == label) {
                let traj = gated_closed_form(a, b, &p, 0.0);
                for t in 0..=n {
                    sum[t] += traj[t];
                    sq[t] += traj[t] * traj[t];
                }
                count += 1.0;
            }
            let (mean, var) = if label > 0 { (&m.mean_pos, &m.var_pos) } else { (&m.mean_neg, &m.var_neg) };
            for t in 0..=n {
                let mu = sum[t] / count;
                assert!((mu - mean[t]).abs() < 1e-12, "t={t}");
                assert!((sq[t] / count - mu * mu - var[t]).abs() < 1e-12, "t={t}");
            }
        }
    }

    proptest! {
        #[test]
        fn classes_are_mirror_images(a in 0.01f64..0.99, b in -2.0f64..2.0, n in 1usize..30) {
            let m = moment_recursion(a, b, n).unwrap();
            for t in 0..=n {
                prop_assert_eq!(m.mean_pos[t], -m.mean_neg[t]);
                prop_assert_eq!(m.var_pos[t], m.var_neg[t]);
                prop_assert!(m.var_pos[t] >= 0.0);
            }
        }
    }
}
