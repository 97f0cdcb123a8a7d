//! Explicit parameter settings that pass the F1B test, their closed forms,
//! and the mechanism diagnostics of the two-dimensional vanilla construction.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::cells::{
    Activation, CellParams, CellState, GruParams, LinearClassifier, LstmParams, ModelKind, PruParams,
    VanillaParams,
};
use crate::error::{Error, Result};
use crate::linalg::{logit, sigmoid, Mat};
use crate::process::{FlagEncoding, InputVector, SamplePath};

/// Everything needed to run and score a model: parameters, initial state,
/// flag encoding and read-out classifier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSetup {
    pub params: CellParams,
    pub s0: CellState,
    pub encoding: FlagEncoding,
    pub classifier: LinearClassifier,
}

impl ModelSetup {
    pub fn validate(&self) -> Result<()> {
        self.params.check_state(&self.s0)?;
        crate::linalg::check_len("classifier β", &self.classifier.beta, self.params.dim())
    }

    /// The same setup one dimension up (see [`lift`]).
    pub fn lifted(&self) -> Self {
        let (params, s0) = lift(&self.params, &self.s0);
        Self {
            params,
            s0,
            encoding: self.encoding,
            classifier: self.classifier.lifted(),
        }
    }
}

/// Scalar gated construction: the update gate reads only the flag with
/// weight `a` and the candidate reads only the information bit with weight
/// `b`. With `A = σ(a)` and `B = tanh(b)` the state follows
/// `s ← A·s + (1−A)·B·x` off the flag and `s ← (1−A)·s + A·B·x` on it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GruK1Construction {
    pub a: f64,
    pub b: f64,
}

impl GruK1Construction {
    pub fn new(a: f64, b: f64) -> Self {
        Self { a, b }
    }

    /// From the gate value `A` rather than its pre-activation.
    pub fn from_gate(gate: f64, b: f64) -> Result<Self> {
        if !(gate > 0.0 && gate < 1.0) {
            return Err(Error::InvalidGate(gate));
        }
        Ok(Self { a: logit(gate), b })
    }

    pub fn gate(&self) -> f64 {
        sigmoid(self.a)
    }

    pub fn scale(&self) -> f64 {
        self.b.tanh()
    }

    pub fn validate(&self) -> Result<()> {
        let gate = self.gate();
        if !(gate > 0.0 && gate < 1.0) {
            return Err(Error::InvalidGate(gate));
        }
        if !self.b.is_finite() {
            return Err(Error::ConstraintViolation(format!("b = {} is not finite", self.b)));
        }
        Ok(())
    }

    /// β = sign(B), γ = 0.
    pub fn classifier(&self) -> LinearClassifier {
        let sign = if self.scale() < 0.0 { -1.0 } else { 1.0 };
        LinearClassifier::new(vec![sign], 0.0)
    }

    fn setup(&self, params: CellParams) -> ModelSetup {
        let kind = params.kind();
        ModelSetup {
            params,
            s0: CellState::zeros(kind, 1),
            encoding: FlagEncoding::Symmetric,
            classifier: self.classifier(),
        }
    }

    pub fn gru_setup(&self) -> Result<ModelSetup> {
        Ok(self.setup(CellParams::Gru(gru_k1_params(self)?)))
    }

    pub fn pru_setup(&self) -> Result<ModelSetup> {
        Ok(self.setup(CellParams::Pru(pru_k1_params(self)?)))
    }

    pub fn lstm_setup(&self) -> Result<ModelSetup> {
        Ok(self.setup(CellParams::Lstm(lstm_k1_params(self)?)))
    }

    pub fn setup_for(&self, kind: ModelKind) -> Result<ModelSetup> {
        match kind {
            ModelKind::Gru => self.gru_setup(),
            ModelKind::Pru => self.pru_setup(),
            ModelKind::Lstm => self.lstm_setup(),
            ModelKind::Vanilla => Err(Error::InvalidConfig(
                "the gated scalar construction needs a gated model".into(),
            )),
        }
    }
}

pub fn gru_k1_params(c: &GruK1Construction) -> Result<GruParams> {
    c.validate()?;
    let mut p = GruParams::zeros(1);
    p.update.w = Mat::from_rows(&[[0.0, c.a]]);
    p.candidate.w = Mat::from_rows(&[[c.b, 0.0]]);
    Ok(p)
}

/// With no recurrent weight in the candidate the PRU obeys the same
/// closed forms as the GRU construction.
pub fn pru_k1_params(c: &GruK1Construction) -> Result<PruParams> {
    c.validate()?;
    let mut p = PruParams::zeros(1);
    p.update.w = Mat::from_rows(&[[0.0, c.a]]);
    p.candidate.w = Mat::from_rows(&[[c.b, 0.0]]);
    Ok(p)
}

/// Input gate `σ(a·x_F)`, forget gate `σ(−a·x_F)`, candidate `tanh(b·x_I)`;
/// output gate and peepholes are zero, so `c` follows the gated closed forms.
pub fn lstm_k1_params(c: &GruK1Construction) -> Result<LstmParams> {
    c.validate()?;
    let mut p = LstmParams::zeros(1);
    p.input.w = Mat::from_rows(&[[0.0, c.a]]);
    p.forget.w = Mat::from_rows(&[[0.0, -c.a]]);
    p.candidate.w = Mat::from_rows(&[[c.b, 0.0]]);
    Ok(p)
}

/// Smallest `a` whose gate `A = σ(a)` gives `2·Aⁿ − 1 ≥ margin`.
pub fn choose_a(n: usize, margin: f64) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidLength(0));
    }
    if !(margin > 0.0 && margin < 1.0) {
        return Err(Error::UnreachableMargin(margin));
    }
    let gate = ((1.0 + margin) / 2.0).powf(1.0 / n as f64);
    let mut a = logit(gate);
    let meets = |a: f64| 2.0 * sigmoid(a).powi(n as i32) - 1.0 >= margin;
    let step = 1e-9 * a.abs().max(1.0);
    while !meets(a) {
        a += step;
    }
    Ok(a)
}

/// Closed-form state sequence of the scalar gated construction on `path`
/// (symmetric flags), starting from `s0`.
pub fn gated_closed_form(gate: f64, scale: f64, path: &SamplePath, s0: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(path.len() + 1);
    out.push(s0);
    let mut s = s0;
    for (i, &bit) in path.info_bits().iter().enumerate() {
        let x = bit as f64;
        s = if i + 1 == path.flag_index() {
            (1.0 - gate) * s + gate * scale * x
        } else {
            gate * s + (1.0 - gate) * scale * x
        };
        out.push(s);
    }
    out
}

/// Two-dimensional vanilla construction with `g` activation and binary
/// flags: coordinate 1 memorizes, coordinate 2 loads.
///
/// `S¹ ← g(S¹ + b1·S² + b1)`, `S² ← g(W21·x_I − b2·x_F + b2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VanillaK2Construction {
    pub b1: f64,
    pub w21: f64,
    pub b2: f64,
}

impl VanillaK2Construction {
    pub fn new(b1: f64, w21: f64, b2: f64) -> Self {
        Self { b1, w21, b2 }
    }

    pub fn validate(&self) -> Result<()> {
        let Self { b1, w21, b2 } = *self;
        let fail = |what: String| Err(Error::ConstraintViolation(what));
        if !(w21 > 0.0 && w21 < 1.0) {
            return fail(format!("W21 = {w21} must lie in (0, 1)"));
        }
        if b2 >= 0.0 || b2.is_nan() {
            return fail(format!("b2 = {b2} must be negative"));
        }
        if !(w21 + b2 < -1.0 && -w21 + b2 < -1.0) {
            return fail(format!("W21·x + b2 < -1 for x = ±1 fails (W21 + b2 = {})", w21 + b2));
        }
        if b1 == 0.0 || b1.is_nan() {
            return fail("b1 must be non-zero".to_string());
        }
        for v in [b1 + b1 * w21, b1 - b1 * w21] {
            if !(v > -1.0 && v < 1.0) {
                return fail(format!("b1 ± b1·W21 must lie in (-1, 1), got {v}"));
            }
        }
        Ok(())
    }

    /// Pre-activation of the memorization coordinate.
    pub fn h(&self, s1: f64, s2: f64) -> f64 {
        s1 + self.b1 * s2 + self.b1
    }

    /// `sign(b1)·(1, b1)` with γ = 0.
    pub fn classifier(&self) -> LinearClassifier {
        let sign = self.b1.signum();
        LinearClassifier::new(vec![sign, sign * self.b1], 0.0)
    }

    /// Smallest |score| over all final states: `|b1|·W21`.
    pub fn margin(&self) -> f64 {
        self.b1.abs() * self.w21
    }
}

/// Parameters, required `s0 = (0, −1)`, binary encoding and classifier.
pub fn vanilla_k2_params(c: &VanillaK2Construction) -> Result<ModelSetup> {
    c.validate()?;
    let params = VanillaParams {
        dim: 2,
        w: Mat::from_rows(&[[0.0, 0.0], [c.w21, -c.b2]]),
        u: Mat::from_rows(&[[1.0, c.b1], [0.0, 0.0]]),
        b: vec![c.b1, c.b2],
        activation: Activation::PiecewiseLinear,
    };
    Ok(ModelSetup {
        params: CellParams::Vanilla(params),
        s0: CellState::hidden(vec![0.0, -1.0]),
        encoding: FlagEncoding::Binary,
        classifier: c.classifier(),
    })
}

/// Transition mechanisms of the two-dimensional construction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Mechanism {
    /// No flag: the loading coordinate resets to −1.
    LoadEmptying,
    /// Flag: the loading coordinate takes `W21·x_I`.
    FeatureLoading,
    /// `S¹ ∈ (−1, 1)`, `S² = −1`: the memorization coordinate is kept.
    Memorization,
    /// `h(S¹, S²) ∈ (−1, 1)`, `S² > −1`: loading mixes into memorization.
    StateMixing,
}

impl fmt::Display for Mechanism {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mechanism::LoadEmptying => "load emptying",
            Mechanism::FeatureLoading => "feature loading",
            Mechanism::Memorization => "memorization",
            Mechanism::StateMixing => "state mixing",
        })
    }
}

/// Which mechanisms' conditions hold for the transition out of `s_prev`
/// on input `x` (binary flag encoding). Sorted, no duplicates.
pub fn mechanism_of(c: &VanillaK2Construction, s_prev: &CellState, x: InputVector) -> Vec<Mechanism> {
    let s = s_prev.readout();
    let (s1, s2) = (s[0], s[1]);
    let mut out = Vec::with_capacity(2);
    if x.x_flag == 0.0 {
        out.push(Mechanism::LoadEmptying);
    }
    if x.x_flag == 1.0 {
        out.push(Mechanism::FeatureLoading);
    }
    if s1 > -1.0 && s1 < 1.0 && s2 == -1.0 {
        out.push(Mechanism::Memorization);
    }
    let h = c.h(s1, s2);
    if h > -1.0 && h < 1.0 && s2 > -1.0 {
        out.push(Mechanism::StateMixing);
    }
    out
}

/// Lifts a model to dimension K+1. The new coordinate gets zero rows and
/// columns everywhere and a zero initial value, so it stays 0 and the
/// first K coordinates evolve exactly as before.
pub fn lift(params: &CellParams, s0: &CellState) -> (CellParams, CellState) {
    (params.lifted(), s0.lifted())
}
