//! Rank-revealing randomized SVD with an energy-threshold stopping rule.

pub mod cli;
pub mod completion;
pub mod decomposition;
pub mod error;
pub mod io;
pub mod linalg;
pub mod sampling;
pub mod synthetic;

pub use decomposition::{r3svd, R3svdConfig};
pub use error::{Error, Result};
pub use linalg::{DenseMatrix, LowRankFactors};
