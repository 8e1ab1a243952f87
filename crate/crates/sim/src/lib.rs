//! Monte Carlo experiment harness for the blind activity-detection
//! pipeline: configuration, per-trial orchestration, metric aggregation,
//! parameter sweeps, and CSV emission.
//!
//! One trial is: draw a scene → observe it → solve the angle SDP → evaluate
//! the dual polynomial and pick peaks → cluster peaks into users → identify
//! users (by registered angles when stationary, by recovered data
//! otherwise) → score detection and recovery against the ground truth.
//! Batches run trials under consecutive seeds and average; sweeps repeat
//! batches across one varying parameter, mirroring how the evaluation
//! figures are produced.

pub mod config;
pub mod metrics;
pub mod runner;
pub mod trial;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Core(#[from] blindra_core::Error),

    #[error("TOML parse error: {0}")]
    Toml(#[from] toml::de::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, SimError>;
