//! Gradient training of a two-dimensional tanh vanilla RNN with a logistic
//! read-out, and the replay of a published set of learned weights.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cells::{Activation, CellParams, CellState, LinearClassifier, VanillaParams};
use crate::constructions::ModelSetup;
use crate::error::{Error, Result};
use crate::linalg::{dot, Mat};
use crate::process::{sample_path, FlagEncoding, FlagPlacement, SamplePath};
use crate::rng::{derive_seed, CounterRng};
use crate::simulation::{class_path_seed, mc_distributions, DistributionSeries, DEFAULT_BINS};
use crate::verification::{best_linear_error_2d, linear_separability_2d};

const DIM: usize = 2;
/// W (2×2), U (2×2), b, β, γ.
pub const PARAMETER_COUNT: usize = 4 + 4 + 2 + 2 + 1;

const INIT_STREAM: u64 = 1;
const BATCH_STREAM: u64 = 2;
const EVAL_STREAM: u64 = 3;

/// Tanh vanilla cell (K = 2, `s0 = 0`, symmetric flags) and logistic head.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainableModel {
    pub params: VanillaParams,
    pub head: LinearClassifier,
}

impl TrainableModel {
    pub fn zeros() -> Self {
        Self {
            params: VanillaParams::zeros(DIM, Activation::Tanh),
            head: LinearClassifier::new(vec![0.0; DIM], 0.0),
        }
    }

    /// Cell weights uniform in `(−scale, scale)`, head zero.
    pub fn random(scale: f64, seed: u64) -> Self {
        let mut rng = CounterRng::new(seed);
        let mut m = Self::zeros();
        let mut flat = m.to_flat();
        for v in flat.iter_mut().take(10) {
            *v = rng.uniform(-scale, scale);
        }
        m.set_flat(&flat);
        m
    }

    /// Parameters in the order W, U (row-major), b, β, γ.
    pub fn to_flat(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(PARAMETER_COUNT);
        out.extend_from_slice(&self.params.w.data);
        out.extend_from_slice(&self.params.u.data);
        out.extend_from_slice(&self.params.b);
        out.extend_from_slice(&self.head.beta);
        out.push(self.head.gamma);
        out
    }

    pub fn set_flat(&mut self, flat: &[f64]) {
        assert_eq!(flat.len(), PARAMETER_COUNT);
        self.params.w.data.copy_from_slice(&flat[0..4]);
        self.params.u.data.copy_from_slice(&flat[4..8]);
        self.params.b.copy_from_slice(&flat[8..10]);
        self.head.beta.copy_from_slice(&flat[10..12]);
        self.head.gamma = flat[12];
    }

    pub fn setup(&self) -> ModelSetup {
        ModelSetup {
            params: CellParams::Vanilla(self.params.clone()),
            s0: CellState::hidden(vec![0.0; DIM]),
            encoding: FlagEncoding::Symmetric,
            classifier: self.head.clone(),
        }
    }

    fn trajectory(&self, path: &SamplePath) -> Vec<[f64; DIM]> {
        let mut traj = Vec::with_capacity(path.len() + 1);
        traj.push([0.0; DIM]);
        for t in 1..=path.len() {
            let (next, _) = self.params.forward(&traj[t - 1], path.input_at(t, FlagEncoding::Symmetric));
            traj.push([next[0], next[1]]);
        }
        traj
    }

    pub fn logit(&self, path: &SamplePath) -> f64 {
        let s = self.trajectory(path);
        dot(&self.head.beta, &s[path.len()]) + self.head.gamma
    }
}

/// `ln(1 + eˣ)` without overflow.
pub fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Mean logistic loss `ln(1 + exp(−y·z))` over the batch.
pub fn forward_loss(m: &TrainableModel, batch: &[SamplePath]) -> Result<f64> {
    if batch.is_empty() {
        return Err(Error::EmptyInput("batch"));
    }
    let total: f64 = batch
        .iter()
        .map(|p| softplus(-f64::from(p.label()) * m.logit(p)))
        .sum();
    Ok(total / batch.len() as f64)
}

/// Gradient of one path's loss, flat layout as [`TrainableModel::to_flat`].
fn path_gradient(m: &TrainableModel, path: &SamplePath) -> (f64, Vec<f64>) {
    let traj = m.trajectory(path);
    let n = path.len();
    let y = f64::from(path.label());
    let z = dot(&m.head.beta, &traj[n]) + m.head.gamma;
    let loss = softplus(-y * z);
    let dz = -y * logistic(-y * z);

    let mut g = vec![0.0; PARAMETER_COUNT];
    g[10] = dz * traj[n][0];
    g[11] = dz * traj[n][1];
    g[12] = dz;
    let mut ds = [dz * m.head.beta[0], dz * m.head.beta[1]];
    let (mut dw, mut du) = (Mat::zeros(DIM, 2), Mat::zeros(DIM, DIM));
    let mut db = [0.0; DIM];
    for t in (1..=n).rev() {
        let s = traj[t];
        let prev = traj[t - 1];
        let x = path.input_at(t, FlagEncoding::Symmetric).as_array();
        let da = [ds[0] * (1.0 - s[0] * s[0]), ds[1] * (1.0 - s[1] * s[1])];
        for i in 0..DIM {
            for j in 0..2 {
                *dw.get_mut(i, j) += da[i] * x[j];
            }
            for j in 0..DIM {
                *du.get_mut(i, j) += da[i] * prev[j];
            }
            db[i] += da[i];
        }
        let mut back = [0.0; DIM];
        m.params.u.mul_t_add(&da, &mut back);
        ds = back;
    }
    g[0..4].copy_from_slice(&dw.data);
    g[4..8].copy_from_slice(&du.data);
    g[8..10].copy_from_slice(&db);
    (loss, g)
}

/// Gradient of [`forward_loss`] by back-propagation through every step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Gradient {
    pub loss: f64,
    /// Same layout as [`TrainableModel::to_flat`].
    pub flat: Vec<f64>,
}

impl Gradient {
    pub fn w(&self) -> &[f64] {
        &self.flat[0..4]
    }

    pub fn u(&self) -> &[f64] {
        &self.flat[4..8]
    }

    pub fn b(&self) -> &[f64] {
        &self.flat[8..10]
    }

    pub fn beta(&self) -> &[f64] {
        &self.flat[10..12]
    }

    pub fn gamma(&self) -> f64 {
        self.flat[12]
    }
}

pub fn backward(m: &TrainableModel, batch: &[SamplePath]) -> Result<Gradient> {
    if batch.is_empty() {
        return Err(Error::EmptyInput("batch"));
    }
    let per_path: Vec<(f64, Vec<f64>)> = batch.par_iter().map(|p| path_gradient(m, p)).collect();
    let scale = 1.0 / batch.len() as f64;
    let mut flat = vec![0.0; PARAMETER_COUNT];
    let mut loss = 0.0;
    for (l, g) in &per_path {
        loss += l;
        flat.iter_mut().zip(g).for_each(|(a, b)| *a += b);
    }
    flat.iter_mut().for_each(|v| *v *= scale);
    Ok(Gradient {
        loss: loss * scale,
        flat,
    })
}

/// Central finite differences of [`forward_loss`] in every parameter.
pub fn numerical_gradient(m: &TrainableModel, batch: &[SamplePath], eps: f64) -> Result<Vec<f64>> {
    let base = m.to_flat();
    let mut probe = m.clone();
    let mut out = Vec::with_capacity(PARAMETER_COUNT);
    for k in 0..PARAMETER_COUNT {
        let mut shifted = base.clone();
        shifted[k] = base[k] + eps;
        probe.set_flat(&shifted);
        let up = forward_loss(&probe, batch)?;
        shifted[k] = base[k] - eps;
        probe.set_flat(&shifted);
        let down = forward_loss(&probe, batch)?;
        out.push((up - down) / (2.0 * eps));
    }
    Ok(out)
}

/// `|a − b| / max(|a|, |b|)`, zero when the values are equal.
pub fn relative_error(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / a.abs().max(b.abs())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub n: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub momentum: f64,
    pub epochs: usize,
    /// Fresh batches drawn per epoch.
    pub steps_per_epoch: usize,
    pub seed: u64,
    pub init_scale: f64,
    pub placement: FlagPlacement,
    /// Fresh paths used for the final accuracy.
    pub eval_paths: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            n: 10,
            batch_size: 64,
            learning_rate: 0.05,
            momentum: 0.9,
            epochs: 30,
            steps_per_epoch: 100,
            seed: 0,
            init_scale: 0.5,
            placement: FlagPlacement::Random,
            eval_paths: 10_000,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidConfig(what.to_string()));
        if self.n == 0 {
            return Err(Error::InvalidLength(0));
        }
        if self.batch_size == 0 {
            return bad("batch_size must be positive");
        }
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return bad("learning_rate must be a non-negative number");
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return bad("momentum must lie in [0, 1)");
        }
        if self.epochs == 0 || self.steps_per_epoch == 0 {
            return bad("epochs and steps_per_epoch must be positive");
        }
        if !(self.init_scale >= 0.0 && self.init_scale.is_finite()) {
            return bad("init_scale must be a non-negative number");
        }
        if self.placement != FlagPlacement::Random {
            return bad("training draws the flag position uniformly");
        }
        Ok(())
    }

    pub fn steps(&self) -> usize {
        self.epochs * self.steps_per_epoch
    }
}

/// Mean loss over this many final steps decides convergence.
pub const CONVERGENCE_WINDOW: usize = 100;
pub const CONVERGENCE_LOSS: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub loss_curve: Vec<f64>,
    pub final_accuracy: f64,
    /// Final states of the evaluation paths are linearly separable.
    pub separable: bool,
    /// Lowest linear error on the evaluation final states.
    pub final_linear_error: f64,
    pub converged: bool,
}

fn training_batch(config: &TrainConfig, step: usize) -> Vec<SamplePath> {
    let stream = derive_seed(derive_seed(config.seed, BATCH_STREAM), step as u64);
    (0..config.batch_size)
        .map(|i| sample_path(config.n, derive_seed(stream, i as u64)).expect("n validated"))
        .collect()
}

/// SGD with momentum on freshly sampled batches.
pub fn train(config: &TrainConfig) -> Result<(TrainableModel, TrainReport)> {
    config.validate()?;
    let mut model = TrainableModel::random(config.init_scale, derive_seed(config.seed, INIT_STREAM));
    let mut theta = model.to_flat();
    let mut velocity = vec![0.0; PARAMETER_COUNT];
    let mut loss_curve = Vec::with_capacity(config.steps());
    for step in 0..config.steps() {
        let batch = training_batch(config, step);
        let grad = backward(&model, &batch)?;
        if !grad.loss.is_finite() || grad.flat.iter().any(|g| !g.is_finite()) {
            return Err(Error::Diverged { step, loss: grad.loss });
        }
        loss_curve.push(grad.loss);
        for ((th, v), g) in theta.iter_mut().zip(&mut velocity).zip(&grad.flat) {
            *v = config.momentum * *v - config.learning_rate * g;
            *th += *v;
        }
        model.set_flat(&theta);
    }
    let tail = &loss_curve[loss_curve.len().saturating_sub(CONVERGENCE_WINDOW)..];
    let tail_mean = tail.iter().sum::<f64>() / tail.len() as f64;
    let converged = tail_mean < CONVERGENCE_LOSS;

    let eval_seed = derive_seed(config.seed, EVAL_STREAM);
    let evals: Vec<(i8, [f64; DIM], f64)> = (0..config.eval_paths)
        .into_par_iter()
        .map(|i| {
            let p = sample_path(config.n, derive_seed(eval_seed, i as u64)).expect("n validated");
            let s = model.trajectory(&p)[config.n];
            (p.label(), s, dot(&model.head.beta, &s) + model.head.gamma)
        })
        .collect();
    let correct = evals.iter().filter(|(y, _, z)| crate::cells::sign_of_score(*z) == *y).count();
    let pos: Vec<[f64; 2]> = evals.iter().filter(|e| e.0 > 0).map(|e| e.1).collect();
    let neg: Vec<[f64; 2]> = evals.iter().filter(|e| e.0 < 0).map(|e| e.1).collect();
    let separable = linear_separability_2d(&pos, &neg).is_some();
    let final_linear_error = best_linear_error_2d(&pos, &neg, 720).map_or(0.5, |(_, e)| e);
    let report = TrainReport {
        loss_curve,
        final_accuracy: if evals.is_empty() { 0.0 } else { correct as f64 / evals.len() as f64 },
        separable,
        final_linear_error,
        converged,
    };
    Ok((model, report))
}

/// Published learned weights of a two-dimensional model trained on
/// n = 100 with the flag at 50. The bias was not published; it is zero here.
pub fn published_model() -> TrainableModel {
    let mut m = TrainableModel::zeros();
    m.params.u = Mat::from_rows(&[[-1.2, 0.1938], [0.8660, 0.6481]]);
    m.params.w = Mat::from_rows(&[[0.0073, -0.3010], [0.7336, 1.1052]]);
    m
}

pub const REPLAY_N: usize = 100;
pub const REPLAY_FLAG: usize = 50;
pub const REPLAY_SNAPSHOTS: [usize; 4] = [49, 50, 51, 100];

/// How the unpublished bias of the replayed model is set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "mode", content = "value")]
pub enum BiasChoice {
    Zero,
    Fixed([f64; 2]),
    /// Grid search on a calibration sample independent of the replay paths.
    Recovered,
}

impl std::str::FromStr for BiasChoice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "zero" => Ok(BiasChoice::Zero),
            "recover" | "recovered" => Ok(BiasChoice::Recovered),
            other => {
                let parts: Vec<&str> = other.split(',').collect();
                let parse = |p: &str| {
                    p.trim()
                        .parse::<f64>()
                        .map_err(|_| Error::InvalidConfig(format!("bad bias `{other}`: expected zero, recover or b1,b2")))
                };
                match parts.as_slice() {
                    [a, b] => Ok(BiasChoice::Fixed([parse(a)?, parse(b)?])),
                    _ => Err(Error::InvalidConfig(format!("bad bias `{other}`: expected zero, recover or b1,b2"))),
                }
            }
        }
    }
}

const CALIBRATION_STREAM: u64 = 0xB1A5;
/// Calibration grid: each bias coordinate in −1..=1 with this step.
pub const BIAS_GRID_STEP: f64 = 0.1;
pub const BIAS_CALIBRATION_PATHS: usize = 500;

/// Bias whose final states (t = 100, flag at 50) have the lowest linear
/// error on a calibration sample, ties broken by the widest separating gap.
pub fn recover_replay_bias(seed: u64) -> Result<[f64; 2]> {
    let cal_seed = derive_seed(seed, CALIBRATION_STREAM);
    let paths = |label: i8| -> Vec<SamplePath> {
        (0..BIAS_CALIBRATION_PATHS)
            .map(|i| {
                crate::process::sample_conditioned(
                    REPLAY_N,
                    class_path_seed(cal_seed, label, i as u64),
                    FlagPlacement::Fixed(REPLAY_FLAG),
                    Some(label),
                )
            })
            .collect::<Result<_>>()
            .expect("valid placement")
    };
    let (pos_paths, neg_paths) = (paths(1), paths(-1));
    let axis = crate::simulation::sweep::axis(-1.0, 1.0, BIAS_GRID_STEP)?;
    let grid: Vec<[f64; 2]> = axis.iter().flat_map(|&a| axis.iter().map(move |&b| [a, b])).collect();
    let scored: Vec<(f64, f64)> = grid
        .par_iter()
        .map(|&bias| {
            let mut m = published_model();
            m.params.b = bias.to_vec();
            let finals = |ps: &[SamplePath]| -> Vec<[f64; 2]> { ps.iter().map(|p| m.trajectory(p)[REPLAY_N]).collect() };
            let (pos, neg) = (finals(&pos_paths), finals(&neg_paths));
            let err = best_linear_error_2d(&pos, &neg, 180).map_or(0.5, |f| f.1);
            let gap = crate::verification::separability::max_gap_direction(&pos, &neg).map_or(f64::NEG_INFINITY, |d| d.1);
            (err, gap)
        })
        .collect();
    let best = (0..grid.len())
        .min_by(|&i, &j| {
            let (a, b) = (scored[i], scored[j]);
            a.0.total_cmp(&b.0).then(b.1.total_cmp(&a.1))
        })
        .expect("grid is nonempty");
    Ok(grid[best])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightReplay {
    pub bias: [f64; 2],
    pub bias_choice: BiasChoice,
    pub series: DistributionSeries,
    /// Separating line for the final states, if one exists.
    pub separator: Option<LinearClassifier>,
    /// Best linear error on the final states and the line achieving it.
    pub final_linear_error: f64,
    pub fitted: Option<LinearClassifier>,
}

impl WeightReplay {
    /// Best single-threshold error of coordinate `coord` (from 0) at `t`.
    pub fn threshold_error(&self, t: usize, coord: usize) -> Option<f64> {
        self.series.snapshot(t)?.threshold_errors.get(coord).copied().flatten()
    }
}

/// Monte-Carlo replay of the published weights with the flag at 50.
pub fn replay_figure4(paths_per_class: usize, seed: u64, bias: BiasChoice) -> Result<WeightReplay> {
    let b = match bias {
        BiasChoice::Zero => [0.0, 0.0],
        BiasChoice::Fixed(b) => b,
        BiasChoice::Recovered => recover_replay_bias(seed)?,
    };
    let mut model = published_model();
    model.params.b = b.to_vec();
    let setup = model.setup();
    let series = mc_distributions(
        &setup,
        REPLAY_N,
        FlagPlacement::Fixed(REPLAY_FLAG),
        paths_per_class,
        seed,
        &REPLAY_SNAPSHOTS,
        DEFAULT_BINS,
    )?;
    let scatter = series.scatter.as_ref().expect("two-dimensional state");
    // the scatter keeps a capped sample, so the verdict is recomputed over every path
    let finals = |label: i8| -> Vec<[f64; 2]> {
        (0..paths_per_class)
            .into_par_iter()
            .map(|i| {
                let p = crate::process::sample_conditioned(
                    REPLAY_N,
                    class_path_seed(seed, label, i as u64),
                    FlagPlacement::Fixed(REPLAY_FLAG),
                    Some(label),
                )
                .expect("valid placement");
                model.trajectory(&p)[REPLAY_N]
            })
            .collect()
    };
    let (pos, neg) = if paths_per_class <= scatter.pos.len() {
        (scatter.pos.clone(), scatter.neg.clone())
    } else {
        (finals(1), finals(-1))
    };
    let separator = linear_separability_2d(&pos, &neg);
    let fit = best_linear_error_2d(&pos, &neg, 720);
    Ok(WeightReplay {
        bias: b,
        bias_choice: bias,
        series,
        separator,
        final_linear_error: fit.as_ref().map_or(0.5, |f| f.1),
        fitted: fit.map(|f| f.0),
    })
}
