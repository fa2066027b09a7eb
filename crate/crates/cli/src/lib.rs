//! Experiment orchestration for `metaoco`: configuration files, seeded runs,
//! parameter sweeps, reports and the lower-bound experiment.

pub mod config;
pub mod report;
pub mod runner;
pub mod sweep;

use metaoco::Error as CoreError;

/// Environment variable naming the directory runs are written under.
pub const OUTPUT_ROOT_ENV: &str = "METAOCO_OUTPUT_ROOT";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("schema error: {0}")]
    Schema(String),
    #[error("io error: {0}")]
    Io(String),
    #[error("integrity error: {0}")]
    Integrity(String),
    #[error(transparent)]
    Core(#[from] CoreError),
}
