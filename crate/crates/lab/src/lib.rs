//! Configuration, orchestration and file formats for the Dean–Kawasaki
//! ergodicity experiments.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod ensemble;
pub mod error;
pub mod experiments;
pub mod manifest;
pub mod output;

pub use config::{load_config, parse_config, Experiment, RunConfig};
pub use error::{LabError, LabResult};
pub use experiments::{replay, run, Outcome, RunReport};
pub use manifest::Manifest;
