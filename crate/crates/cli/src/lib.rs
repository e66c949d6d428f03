//! Scenario runner for `natmap-core`: loads scenario files, dispatches the
//! `natmap-lab` commands and emits deterministic CSV or JSON reports.

pub mod commands;
pub mod properties;
pub mod report;
pub mod sampling;
pub mod scenario;

pub use commands::{run, Command, Flags, Outcome, Settings, Status};
pub use report::{Cell, Format, Report};
pub use scenario::{bundled_scenarios, load_scenario, Scenario};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Malformed scenario or flags.
    #[error("{0}")]
    Input(String),

    #[error(transparent)]
    Numerical(#[from] natmap_core::Error),

    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

impl CliError {
    pub fn status(&self) -> Status {
        match self {
            CliError::Numerical(_) => Status::NumericalFailure,
            CliError::Input(_) | CliError::Io { .. } => Status::InputError,
        }
    }
}
