pub mod checks;
pub mod cli;
pub mod contract;
pub mod error;
pub mod eval;
pub mod grid;
pub mod heads;
pub mod io;
pub mod matching;
pub mod metrics;
pub mod rng;
pub mod synth;

pub use error::{Error, Result};
