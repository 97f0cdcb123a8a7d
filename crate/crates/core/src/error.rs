use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("sequence length must be at least 1, got {0}")]
    InvalidLength(usize),

    #[error("enumeration too large: n = {n} exceeds cap {cap} ({required} paths would be required)")]
    EnumerationTooLarge { n: usize, cap: usize, required: u128 },

    #[error("time index {t} out of range 1..={n}")]
    IndexOutOfRange { t: usize, n: usize },

    #[error("dimension mismatch in {what}: expected {expected}, got {got}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("model/state mismatch: {0}")]
    ModelMismatch(String),

    #[error("construction constraint violated: {0}")]
    ConstraintViolation(String),

    #[error("gate value A = {0} is outside (0, 1)")]
    InvalidGate(f64),

    #[error("margin {0} is unreachable (must lie in (0, 1))")]
    UnreachableMargin(f64),

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("training diverged at step {step} (loss = {loss})")]
    Diverged { step: usize, loss: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
