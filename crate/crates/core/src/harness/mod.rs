//! Batch front end: experiment configuration and presets, runs, comparison
//! reports and plot-data files.

pub mod config;
pub mod experiment;
pub mod output;
pub mod report;

use std::path::PathBuf;
use thiserror::Error;

pub use config::{parse_config, ExperimentConfig, GridSpec, OutputKind, PerturbationSpec, Preset, RunSpec, SolitonSpec};
pub use experiment::{predict, simulate, sweep, RunOutput};
pub use report::{ComparisonReport, ComparisonRow, Metric};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid `{field}`: {reason}")]
    Validation { field: String, reason: String },

    #[error("{context}: {source}")]
    Run {
        context: String,
        #[source]
        source: crate::Error,
    },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl HarnessError {
    /// Process exit status: 2 for validation errors, 3 for runtime and IO failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Validation { .. } => 2,
            HarnessError::Run { .. } | HarnessError::Io { .. } => 3,
        }
    }
}
