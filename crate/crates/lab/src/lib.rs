//! Configuration-driven experiments: generate data, train, decode, compare
//! representations and summarize the results.
//!
//! Every experiment is a JSON [`ExperimentConfig`]. Its runs are
//! `(condition, seed)` pairs; each finished run leaves a [`RunRecord`] on
//! disk and is never recomputed for the same configuration.

pub mod binary;
pub mod commands;
pub mod config;
pub mod navon;
pub mod record;
pub mod report;
pub mod runner;
pub mod vision;

pub use commands::{cmd_decode, cmd_gen, cmd_report, cmd_rsa, cmd_sweep, cmd_train, GenManifest, RunOptions};
pub use config::{ExperimentConfig, ExperimentKind, SCHEMA_VERSION};
pub use record::{conditions, Condition, RunRecord, SeriesPoint, Store};
pub use report::{build_report, write_report, ResultsTable};
pub use runner::{jobs, Context, Job, Trained};
