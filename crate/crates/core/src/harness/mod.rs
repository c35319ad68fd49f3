//! Experiment orchestration: config parsing, seeded parallel replications,
//! regret and mismatch traces, bound evaluation, verification suites, CSV/JSON
//! output, and SVG plots.

pub mod config;
pub mod output;
pub mod runner;
pub mod svg;
pub mod verify;

pub use config::{AgentKind, ExperimentConfig};
pub use runner::{run_experiment, run_replication, ExperimentResult, RegretTrace};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config error: {0}")]
    Config(String),
    #[error("replication {replication} failed: {source}")]
    Replication {
        replication: usize,
        source: crate::Error,
    },
    #[error("unknown verification suite '{0}'")]
    UnknownSuite(String),
    #[error(transparent)]
    Core(#[from] crate::Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("serialization error: {0}")]
    Serde(#[from] serde_json::Error),
}

pub type HarnessResult<T> = std::result::Result<T, HarnessError>;
