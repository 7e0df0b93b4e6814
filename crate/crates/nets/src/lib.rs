//! Models, gradients and training.
//!
//! Every network here exposes its parameters as an ordered list of flat
//! `f64` buffers ([`Network::params`]) and computes exact gradients of its
//! mean loss by hand-written backpropagation. Optimisers and the training
//! loop only ever see those buffers.

pub mod activations;
pub mod checkpoint;
pub mod cnn;
pub mod init;
pub mod mlp;
pub mod network;
pub mod optim;
pub mod reliance;
pub mod train;

pub use activations::{capture, ActivationMatrix};
pub use checkpoint::{ArchSpec, Architecture, CheckpointManifest};
pub use cnn::{Cnn, CnnSpec, PoolFinal, FC1, FC2, POOL_FINAL};
pub use mlp::{multitask_loss, Mlp, MlpSpec, OutputKind, FINAL_HIDDEN};
pub use network::{gradients, Grads, Labels, Network, TrainData};
pub use optim::{Adam, AdamState, OptimizerKind};
pub use reliance::feature_reliance;
pub use train::{train, CheckpointSelection, EpochRecord, History, Plateau, TrainConfig, TrainOutcome};
