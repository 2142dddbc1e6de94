//! Experiment runner for the `hwlab` laboratory: configuration, drivers and manifests.

pub mod config;
pub mod run;

pub use config::{ExperimentConfig, Kind};
pub use run::{execute, RunOutput};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{origin}:{line}: {msg}")]
    Config { origin: String, line: usize, msg: String },
    #[error("invalid configuration: {0}")]
    Invalid(String),
    #[error(transparent)]
    Lab(#[from] hwlab::LabError),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("invariant failure: {0}")]
    Invariant(String),
}

impl CliError {
    /// 1 for configuration problems, 2 for failures during or after the run.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config { .. } | CliError::Invalid(_) => 1,
            _ => 2,
        }
    }
}
