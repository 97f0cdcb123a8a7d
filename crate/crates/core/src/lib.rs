pub mod cells;
pub mod constructions;
pub mod error;
pub mod linalg;
pub mod process;
pub mod rng;
pub mod simulation;
pub mod trainer;
pub mod verification;

pub use error::{Error, Result};
