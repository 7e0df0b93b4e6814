//! Numerical foundation shared by every featlab crate.
//!
//! Everything here works on 64-bit floats. Randomness comes from a single
//! generator type, [`Rng`], which every stochastic routine in the workspace
//! takes by mutable reference; nothing creates its own entropy.

pub mod activation;
pub mod error;
pub mod loss;
pub mod matrix;
pub mod rng;
pub mod stats;

pub use activation::{leaky_relu, sigmoid, softmax_rows, DEFAULT_LEAKY_SLOPE};
pub use error::{Error, Result};
pub use loss::{cross_entropy, Targets, LOG_CLAMP};
pub use matrix::{matmul, Matrix};
pub use rng::Rng;
pub use stats::{bootstrap_ci, pearson, spearman, StatSummary};
