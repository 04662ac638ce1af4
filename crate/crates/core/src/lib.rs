pub mod diagnostics;
pub mod error;
pub mod harness;
pub mod linalg;
pub mod lowrank;
pub mod optim;
pub mod problems;
pub mod rng;
pub mod sketch;

pub use error::{Error, Result};
