//! Recurrent state-update functions, trajectory execution and the linear
//! read-out classifier.
//!
//! Four cell families share one calling convention: a parameter record
//! ([`CellParams`]) maps a [`CellState`] and an [`InputVector`] to the next
//! state. Input matrices are K×2 with the information bit in column 0 and
//! the flag in column 1.

mod gru;
mod lstm;
mod pru;
mod vanilla;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use gru::{GateBlock, GruParams};
pub use lstm::{LstmBlock, LstmParams};
pub use pru::PruParams;
pub use vanilla::VanillaParams;

use crate::error::{Error, Result};
use crate::linalg::dot;
use crate::process::{FlagEncoding, InputVector, SamplePath};

/// Clamp of the identity to `[-1, 1]`.
#[inline]
pub fn g_activation(x: f64) -> f64 {
    x.clamp(-1.0, 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Tanh,
    #[serde(alias = "g")]
    PiecewiseLinear,
}

impl Activation {
    #[inline]
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Tanh => x.tanh(),
            Activation::PiecewiseLinear => g_activation(x),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Vanilla,
    Lstm,
    Gru,
    Pru,
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModelKind::Vanilla => "vanilla",
            ModelKind::Lstm => "lstm",
            ModelKind::Gru => "gru",
            ModelKind::Pru => "pru",
        })
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "vanilla" | "rnn" => Ok(ModelKind::Vanilla),
            "lstm" => Ok(ModelKind::Lstm),
            "gru" => Ok(ModelKind::Gru),
            "pru" => Ok(ModelKind::Pru),
            other => Err(Error::InvalidConfig(format!("unknown model {other:?}"))),
        }
    }
}

/// Recurrent state. Gated and vanilla cells carry `s`; the LSTM carries the
/// memory `c` (what classifiers read) and the exposed `d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CellState {
    Hidden { s: Vec<f64> },
    Lstm { c: Vec<f64>, d: Vec<f64> },
}

impl CellState {
    pub fn hidden(s: Vec<f64>) -> Self {
        CellState::Hidden { s }
    }

    pub fn zeros(kind: ModelKind, dim: usize) -> Self {
        match kind {
            ModelKind::Lstm => CellState::Lstm {
                c: vec![0.0; dim],
                d: vec![0.0; dim],
            },
            _ => CellState::Hidden { s: vec![0.0; dim] },
        }
    }

    /// The part a classifier sees: `s`, or `c` for the LSTM.
    pub fn readout(&self) -> &[f64] {
        match self {
            CellState::Hidden { s } => s,
            CellState::Lstm { c, .. } => c,
        }
    }

    pub fn dim(&self) -> usize {
        self.readout().len()
    }

    pub(crate) fn lifted(&self) -> Self {
        let push0 = |v: &[f64]| {
            let mut v = v.to_vec();
            v.push(0.0);
            v
        };
        match self {
            CellState::Hidden { s } => CellState::Hidden { s: push0(s) },
            CellState::Lstm { c, d } => CellState::Lstm {
                c: push0(c),
                d: push0(d),
            },
        }
    }
}

/// Intermediate values of one step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "lowercase")]
pub enum StepTrace {
    Vanilla {
        pre_activation: Vec<f64>,
    },
    Lstm {
        input_gate: Vec<f64>,
        forget_gate: Vec<f64>,
        output_gate: Vec<f64>,
        candidate: Vec<f64>,
    },
    Gru {
        reset_gate: Vec<f64>,
        update_gate: Vec<f64>,
        candidate: Vec<f64>,
    },
    Pru {
        update_gate: Vec<f64>,
        candidate: Vec<f64>,
    },
}

impl StepTrace {
    /// All sigmoid gate values recorded in this step.
    pub fn gates(&self) -> Vec<f64> {
        match self {
            StepTrace::Vanilla { .. } => Vec::new(),
            StepTrace::Lstm {
                input_gate,
                forget_gate,
                output_gate,
                ..
            } => [input_gate.as_slice(), forget_gate, output_gate].concat(),
            StepTrace::Gru {
                reset_gate,
                update_gate,
                ..
            } => [reset_gate.as_slice(), update_gate].concat(),
            StepTrace::Pru { update_gate, .. } => update_gate.clone(),
        }
    }

    /// Tanh candidate values, empty for the vanilla cell.
    pub fn candidates(&self) -> &[f64] {
        match self {
            StepTrace::Vanilla { .. } => &[],
            StepTrace::Lstm { candidate, .. }
            | StepTrace::Gru { candidate, .. }
            | StepTrace::Pru { candidate, .. } => candidate,
        }
    }
}

pub type GateTrace = Vec<StepTrace>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "lowercase")]
pub enum CellParams {
    Vanilla(VanillaParams),
    Lstm(LstmParams),
    Gru(GruParams),
    Pru(PruParams),
}

impl CellParams {
    pub fn kind(&self) -> ModelKind {
        match self {
            CellParams::Vanilla(_) => ModelKind::Vanilla,
            CellParams::Lstm(_) => ModelKind::Lstm,
            CellParams::Gru(_) => ModelKind::Gru,
            CellParams::Pru(_) => ModelKind::Pru,
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            CellParams::Vanilla(p) => p.dim,
            CellParams::Lstm(p) => p.dim,
            CellParams::Gru(p) => p.dim,
            CellParams::Pru(p) => p.dim,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            CellParams::Vanilla(p) => p.validate(),
            CellParams::Lstm(p) => p.validate(),
            CellParams::Gru(p) => p.validate(),
            CellParams::Pru(p) => p.validate(),
        }
    }

    /// Validates the parameters and that `state` fits them.
    pub fn check_state(&self, state: &CellState) -> Result<()> {
        self.validate()?;
        let dim = self.dim();
        match (self, state) {
            (CellParams::Lstm(_), CellState::Lstm { c, d }) => {
                crate::linalg::check_len("lstm state c", c, dim)?;
                crate::linalg::check_len("lstm state d", d, dim)
            }
            (CellParams::Lstm(_), CellState::Hidden { .. }) => Err(Error::ModelMismatch(
                "lstm needs a (c, d) state".to_string(),
            )),
            (_, CellState::Hidden { s }) => crate::linalg::check_len("state s", s, dim),
            (p, CellState::Lstm { .. }) => Err(Error::ModelMismatch(format!(
                "{} takes a plain state, got an lstm (c, d) state",
                p.kind()
            ))),
        }
    }

    /// One application of the state-update function.
    pub fn step(&self, state: &CellState, x: InputVector) -> Result<CellState> {
        self.check_state(state)?;
        Ok(self.step_unchecked(state, x))
    }

    pub fn step_traced(&self, state: &CellState, x: InputVector) -> Result<(CellState, StepTrace)> {
        self.check_state(state)?;
        Ok(self.forward(state, x))
    }

    #[inline]
    pub(crate) fn step_unchecked(&self, state: &CellState, x: InputVector) -> CellState {
        self.forward(state, x).0
    }

    fn forward(&self, state: &CellState, x: InputVector) -> (CellState, StepTrace) {
        match (self, state) {
            (CellParams::Vanilla(p), CellState::Hidden { s }) => {
                let (next, pre_activation) = p.forward(s, x);
                (CellState::Hidden { s: next }, StepTrace::Vanilla { pre_activation })
            }
            (CellParams::Gru(p), CellState::Hidden { s }) => {
                let out = p.forward(s, x);
                (
                    CellState::Hidden { s: out.next },
                    StepTrace::Gru {
                        reset_gate: out.reset,
                        update_gate: out.update,
                        candidate: out.candidate,
                    },
                )
            }
            (CellParams::Pru(p), CellState::Hidden { s }) => {
                let out = p.forward(s, x);
                (
                    CellState::Hidden { s: out.next },
                    StepTrace::Pru {
                        update_gate: out.update,
                        candidate: out.candidate,
                    },
                )
            }
            (CellParams::Lstm(p), CellState::Lstm { c, d }) => {
                let out = p.forward(c, d, x);
                (
                    CellState::Lstm { c: out.c, d: out.d },
                    StepTrace::Lstm {
                        input_gate: out.input,
                        forget_gate: out.forget,
                        output_gate: out.output,
                        candidate: out.candidate,
                    },
                )
            }
            _ => unreachable!("state kind checked by check_state"),
        }
    }

    /// Parameters with every entry uniform in `[-scale, scale)`; vanilla
    /// cells use tanh.
    pub fn random(kind: ModelKind, dim: usize, scale: f64, seed: u64) -> Self {
        let mut rng = crate::rng::CounterRng::new(seed);
        let mut fill = |v: &mut [f64]| v.iter_mut().for_each(|x| *x = rng.uniform(-scale, scale));
        match kind {
            ModelKind::Vanilla => {
                let mut p = VanillaParams::zeros(dim, Activation::Tanh);
                fill(&mut p.w.data);
                fill(&mut p.u.data);
                fill(&mut p.b);
                CellParams::Vanilla(p)
            }
            ModelKind::Gru => {
                let mut p = GruParams::zeros(dim);
                for g in [&mut p.reset, &mut p.update, &mut p.candidate] {
                    fill(&mut g.w.data);
                    fill(&mut g.u.data);
                    fill(&mut g.b);
                }
                CellParams::Gru(p)
            }
            ModelKind::Pru => {
                let mut p = PruParams::zeros(dim);
                for g in [&mut p.update, &mut p.candidate] {
                    fill(&mut g.w.data);
                    fill(&mut g.u.data);
                    fill(&mut g.b);
                }
                CellParams::Pru(p)
            }
            ModelKind::Lstm => {
                let mut p = LstmParams::zeros(dim);
                for g in [&mut p.input, &mut p.forget, &mut p.output, &mut p.candidate] {
                    fill(&mut g.w.data);
                    fill(&mut g.u.data);
                    fill(&mut g.v.data);
                    fill(&mut g.b);
                }
                CellParams::Lstm(p)
            }
        }
    }

    /// Same system at dimension K+1: every new row and column is zero.
    pub fn lifted(&self) -> Self {
        match self {
            CellParams::Vanilla(p) => CellParams::Vanilla(p.lifted()),
            CellParams::Lstm(p) => CellParams::Lstm(p.lifted()),
            CellParams::Gru(p) => CellParams::Gru(p.lifted()),
            CellParams::Pru(p) => CellParams::Pru(p.lifted()),
        }
    }
}

/// Vanilla cell step.
pub fn vanilla_step(p: &VanillaParams, s: &CellState, x: InputVector) -> Result<CellState> {
    CellParams::Vanilla(p.clone()).step(s, x)
}

pub fn lstm_step(p: &LstmParams, s: &CellState, x: InputVector) -> Result<CellState> {
    CellParams::Lstm(p.clone()).step(s, x)
}

pub fn gru_step(p: &GruParams, s: &CellState, x: InputVector) -> Result<CellState> {
    CellParams::Gru(p.clone()).step(s, x)
}

pub fn pru_step(p: &PruParams, s: &CellState, x: InputVector) -> Result<CellState> {
    CellParams::Pru(p.clone()).step(s, x)
}

/// Feeds `path` through the cell. The trajectory has `n + 1` entries with
/// `s0` first.
pub fn run(
    params: &CellParams,
    s0: &CellState,
    path: &SamplePath,
    enc: FlagEncoding,
) -> Result<Vec<CellState>> {
    params.check_state(s0)?;
    if path.is_empty() {
        return Err(Error::InvalidLength(0));
    }
    let mut traj = Vec::with_capacity(path.len() + 1);
    traj.push(s0.clone());
    for t in 1..=path.len() {
        let next = params.step_unchecked(&traj[t - 1], path.input_at(t, enc));
        traj.push(next);
    }
    Ok(traj)
}

/// [`run`] plus the per-step gate trace.
pub fn run_traced(
    params: &CellParams,
    s0: &CellState,
    path: &SamplePath,
    enc: FlagEncoding,
) -> Result<(Vec<CellState>, GateTrace)> {
    params.check_state(s0)?;
    if path.is_empty() {
        return Err(Error::InvalidLength(0));
    }
    let mut traj = Vec::with_capacity(path.len() + 1);
    let mut trace = Vec::with_capacity(path.len());
    traj.push(s0.clone());
    for t in 1..=path.len() {
        let (next, step) = params.forward(&traj[t - 1], path.input_at(t, enc));
        traj.push(next);
        trace.push(step);
    }
    Ok((traj, trace))
}

/// Final state `S_n` without keeping the trajectory.
pub fn final_state(
    params: &CellParams,
    s0: &CellState,
    path: &SamplePath,
    enc: FlagEncoding,
) -> Result<CellState> {
    params.check_state(s0)?;
    Ok(final_state_unchecked(params, s0, path, enc))
}

pub(crate) fn final_state_unchecked(
    params: &CellParams,
    s0: &CellState,
    path: &SamplePath,
    enc: FlagEncoding,
) -> CellState {
    let mut state = s0.clone();
    for t in 1..=path.len() {
        state = params.step_unchecked(&state, path.input_at(t, enc));
    }
    state
}

/// Trajectory as CSV: `t,s_1,...,s_K` (the read-out part of each state).
pub fn trajectory_csv<W: std::io::Write>(traj: &[CellState], out: W) -> Result<()> {
    let dim = traj.first().map_or(0, CellState::dim);
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["t".to_string()];
    header.extend((1..=dim).map(|k| format!("s_{k}")));
    w.write_record(&header)?;
    for (t, state) in traj.iter().enumerate() {
        let mut row = vec![t.to_string()];
        row.extend(state.readout().iter().map(|v| v.to_string()));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// `C(s) = +1` iff `β·s + γ ≥ 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearClassifier {
    pub beta: Vec<f64>,
    pub gamma: f64,
}

impl LinearClassifier {
    pub fn new(beta: Vec<f64>, gamma: f64) -> Self {
        Self { beta, gamma }
    }

    /// Signed score `β·s + γ`.
    pub fn score(&self, s: &[f64]) -> Result<f64> {
        crate::linalg::check_len("classifier β", s, self.beta.len())?;
        Ok(dot(&self.beta, s) + self.gamma)
    }

    pub fn classify(&self, state: &CellState) -> Result<i8> {
        Ok(sign_of_score(self.score(state.readout())?))
    }

    /// Appends a zero weight for a lifted state coordinate.
    pub fn lifted(&self) -> Self {
        let mut beta = self.beta.clone();
        beta.push(0.0);
        Self {
            beta,
            gamma: self.gamma,
        }
    }
}

#[inline]
pub fn sign_of_score(score: f64) -> i8 {
    if score >= 0.0 {
        1
    } else {
        -1
    }
}

pub fn classify(c: &LinearClassifier, s: &CellState) -> Result<i8> {
    c.classify(s)
}
