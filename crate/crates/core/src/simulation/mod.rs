//! Monte-Carlo state distributions per class, error estimates and the
//! scalar vanilla parameter sweep.

pub mod export;
pub mod sweep;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cells::{sign_of_score, CellState};
use crate::constructions::ModelSetup;
use crate::error::{Error, Result};
use crate::linalg::dot;
use crate::process::{sample_conditioned, sample_path, FlagPlacement};
use crate::rng::derive_seed;
use crate::verification::{best_linear_error_2d, best_threshold_error, linear_separability_2d};

pub use export::{export_histograms, export_sweep, ExportFormat, HistogramRow, SweepRow};
pub use sweep::{sweep_vanilla_k1, SweepGrid, SweepPoint, SweepReport};

pub const DEFAULT_BINS: usize = 61;
pub const HISTOGRAM_RANGE: (f64, f64) = (-1.05, 1.05);
pub const DEFAULT_SCATTER_CAP: usize = 5000;
/// Evenly spaced directions tried when 2-D final states are not separable.
const LINEAR_SCAN_ANGLES: usize = 720;

const POSITIVE_STREAM: u64 = 1;
const NEGATIVE_STREAM: u64 = 2;

/// Seed of path `index` of the class with `label`.
pub fn class_path_seed(seed: u64, label: i8, index: u64) -> u64 {
    let stream = if label > 0 { POSITIVE_STREAM } else { NEGATIVE_STREAM };
    derive_seed(derive_seed(seed, stream), index)
}

/// Uniform bins; values outside the range land in the edge bins.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub bin_edges: Vec<f64>,
    pub counts_pos: Vec<u64>,
    pub counts_neg: Vec<u64>,
}

impl Histogram {
    pub fn new(bins: usize, lo: f64, hi: f64) -> Result<Self> {
        if bins == 0 {
            return Err(Error::InvalidConfig("histogram needs at least one bin".into()));
        }
        if !(lo < hi) {
            return Err(Error::InvalidConfig(format!("histogram range [{lo}, {hi}] is empty")));
        }
        let width = (hi - lo) / bins as f64;
        let mut bin_edges: Vec<f64> = (0..bins).map(|i| lo + width * i as f64).collect();
        bin_edges.push(hi);
        Ok(Self {
            bin_edges,
            counts_pos: vec![0; bins],
            counts_neg: vec![0; bins],
        })
    }

    pub fn bins(&self) -> usize {
        self.counts_pos.len()
    }

    pub fn bin_of(&self, x: f64) -> usize {
        let bins = self.bins();
        let (lo, hi) = (self.bin_edges[0], self.bin_edges[bins]);
        if x.is_nan() || x <= lo {
            return 0;
        }
        let i = ((x - lo) / (hi - lo) * bins as f64).floor();
        (i as usize).min(bins - 1)
    }

    pub fn add(&mut self, label: i8, x: f64) {
        let i = self.bin_of(x);
        if label > 0 {
            self.counts_pos[i] += 1;
        } else {
            self.counts_neg[i] += 1;
        }
    }

    pub fn total_pos(&self) -> u64 {
        self.counts_pos.iter().sum()
    }

    pub fn total_neg(&self) -> u64 {
        self.counts_neg.iter().sum()
    }
}

/// Distributions at one time step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub t: usize,
    /// One histogram per read-out coordinate.
    pub histograms: Vec<Histogram>,
    /// Best single-threshold error per coordinate (absent without paths).
    pub threshold_errors: Vec<Option<f64>>,
    /// Best linear error on the full 2-D state.
    pub linear_error: Option<f64>,
    /// Sample moments per coordinate (absent without paths).
    pub moments: Vec<Option<ClassMoments>>,
}

/// Mean, variance and fourth central moment of one coordinate per class
/// (divided by the sample count).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassMoments {
    pub mean_pos: f64,
    pub var_pos: f64,
    pub m4_pos: f64,
    pub mean_neg: f64,
    pub var_neg: f64,
    pub m4_neg: f64,
}

/// `(mean, variance, fourth central moment)`, summed in index order.
pub fn sample_moments(xs: &[f64]) -> Option<(f64, f64, f64)> {
    if xs.is_empty() {
        return None;
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    let m4 = xs.iter().map(|x| (x - mean).powi(4)).sum::<f64>() / n;
    Some((mean, var, m4))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scatter {
    pub t: usize,
    pub pos: Vec<[f64; 2]>,
    pub neg: Vec<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistributionSeries {
    pub n: usize,
    pub placement: FlagPlacement,
    pub paths_per_class: usize,
    pub seed: u64,
    pub snapshot_times: Vec<usize>,
    pub snapshots: Vec<Snapshot>,
    /// First paths of each class at `t = n` (two-dimensional states only).
    pub scatter: Option<Scatter>,
}

impl DistributionSeries {
    pub fn snapshot(&self, t: usize) -> Option<&Snapshot> {
        self.snapshots.iter().find(|s| s.t == t)
    }
}

/// Read-out values of one path at each snapshot time, concatenated.
fn snapshot_values(setup: &ModelSetup, path_seed: u64, n: usize, placement: FlagPlacement, label: i8, times: &[usize]) -> Vec<f64> {
    let path = sample_conditioned(n, path_seed, placement, Some(label)).expect("placement checked");
    let mut out = Vec::with_capacity(times.len() * setup.s0.readout().len());
    let mut state: CellState = setup.s0.clone();
    let mut next = 0;
    for t in 0..=n {
        if t > 0 {
            state = setup.params.step_unchecked(&state, path.input_at(t, setup.encoding));
        }
        while next < times.len() && times[next] == t {
            out.extend_from_slice(state.readout());
            next += 1;
        }
    }
    out
}

/// Simulates `paths_per_class` paths of each class (the flagged bit forced
/// to the label) and bins every read-out coordinate at each snapshot time.
pub fn mc_distributions(
    setup: &ModelSetup,
    n: usize,
    placement: FlagPlacement,
    paths_per_class: usize,
    seed: u64,
    snapshot_times: &[usize],
    bins: usize,
) -> Result<DistributionSeries> {
    setup.validate()?;
    if n == 0 {
        return Err(Error::InvalidLength(0));
    }
    if let FlagPlacement::Fixed(l) = placement {
        if !(1..=n).contains(&l) {
            return Err(Error::IndexOutOfRange { t: l, n });
        }
    }
    if let Some(&t) = snapshot_times.iter().find(|&&t| t > n) {
        return Err(Error::IndexOutOfRange { t, n });
    }
    let mut times = snapshot_times.to_vec();
    times.sort_unstable();
    times.dedup();
    let dim = setup.s0.readout().len();
    let template = Histogram::new(bins, HISTOGRAM_RANGE.0, HISTOGRAM_RANGE.1)?;
    let mut sim_times = times.clone();
    if dim == 2 && sim_times.last() != Some(&n) {
        sim_times.push(n);
    }

    let simulate = |label: i8| -> Vec<Vec<f64>> {
        (0..paths_per_class)
            .into_par_iter()
            .map(|i| snapshot_values(setup, class_path_seed(seed, label, i as u64), n, placement, label, &sim_times))
            .collect()
    };
    let pos = simulate(1);
    let neg = simulate(-1);

    let mut snapshots = Vec::with_capacity(times.len());
    for (k, &t) in times.iter().enumerate() {
        let mut histograms = vec![template.clone(); dim];
        let mut threshold_errors = Vec::with_capacity(dim);
        let mut moments = Vec::with_capacity(dim);
        for (coord, hist) in histograms.iter_mut().enumerate() {
            let p: Vec<f64> = pos.iter().map(|v| v[k * dim + coord]).collect();
            let q: Vec<f64> = neg.iter().map(|v| v[k * dim + coord]).collect();
            p.iter().for_each(|&x| hist.add(1, x));
            q.iter().for_each(|&x| hist.add(-1, x));
            threshold_errors.push(best_threshold_error(&p, &q).ok().map(|f| f.error_rate));
            moments.push(match (sample_moments(&p), sample_moments(&q)) {
                (Some(a), Some(b)) => Some(ClassMoments {
                    mean_pos: a.0,
                    var_pos: a.1,
                    m4_pos: a.2,
                    mean_neg: b.0,
                    var_neg: b.1,
                    m4_neg: b.2,
                }),
                _ => None,
            });
        }
        let linear_error = if dim == 2 {
            let p: Vec<[f64; 2]> = pos.iter().map(|v| [v[k * dim], v[k * dim + 1]]).collect();
            let q: Vec<[f64; 2]> = neg.iter().map(|v| [v[k * dim], v[k * dim + 1]]).collect();
            best_linear_error_2d(&p, &q, LINEAR_SCAN_ANGLES).map(|(_, e)| e)
        } else {
            None
        };
        snapshots.push(Snapshot {
            t,
            histograms,
            threshold_errors,
            linear_error,
            moments,
        });
    }

    let last = sim_times.len() - 1;
    let scatter = (dim == 2).then(|| {
        let finals = |paths: &[Vec<f64>]| -> Vec<[f64; 2]> {
            paths.iter().take(DEFAULT_SCATTER_CAP).map(|v| [v[last * dim], v[last * dim + 1]]).collect()
        };
        Scatter {
            t: n,
            pos: finals(&pos),
            neg: finals(&neg),
        }
    });

    Ok(DistributionSeries {
        n,
        placement,
        paths_per_class,
        seed,
        snapshot_times: times,
        snapshots,
        scatter,
    })
}

/// Wilson score interval for `successes` out of `trials` at 95 %.
pub fn wilson_interval(successes: u64, trials: u64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    const Z: f64 = 1.959_963_984_540_054;
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = Z * Z;
    let centre = (p + z2 / (2.0 * n)) / (1.0 + z2 / n);
    let half = Z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / (1.0 + z2 / n);
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McError {
    pub errors: u64,
    pub num_paths: u64,
    pub estimate: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
}

/// Monte-Carlo error estimate over paths drawn from F1B(n).
pub fn mc_error(setup: &ModelSetup, n: usize, num_paths: u64, seed: u64) -> Result<McError> {
    setup.validate()?;
    if num_paths == 0 {
        return Err(Error::InvalidConfig("num_paths must be at least 1".into()));
    }
    if n == 0 {
        return Err(Error::InvalidLength(0));
    }
    let errors: u64 = (0..num_paths as usize)
        .into_par_iter()
        .map(|i| {
            let path = sample_path(n, derive_seed(seed, i as u64)).expect("n checked");
            let fin = crate::cells::final_state_unchecked(&setup.params, &setup.s0, &path, setup.encoding);
            let score = dot(&setup.classifier.beta, fin.readout()) + setup.classifier.gamma;
            u64::from(sign_of_score(score) != path.label())
        })
        .sum();
    let (ci_lo, ci_hi) = wilson_interval(errors, num_paths);
    Ok(McError {
        errors,
        num_paths,
        estimate: errors as f64 / num_paths as f64,
        ci_lo,
        ci_hi,
    })
}

/// Whether the final 2-D states of a series are linearly separable.
pub fn scatter_separable(scatter: &Scatter) -> bool {
    linear_separability_2d(&scatter.pos, &scatter.neg).is_some()
}

#[cfg(test)]
mod tests;
