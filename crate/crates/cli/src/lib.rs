//! Driver behind the `qgl` binary: graph generation, solver runs and
//! verification suites, each writing CSV reports and a run manifest.

pub mod config;
mod run;

use std::path::Path;

pub use config::ExperimentConfig;
pub use run::{
    build_graph, default_out_dir, gen_graph, solution_csv, solve, thread_pool, trajectory_csv,
    verify, Manifest, SolveOutput, Stage, VerifyOutput,
};

/// Failure of a command, carrying its process exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{failed} admissible check(s) failed")]
    CheckFailed { failed: usize },
    #[error("config error: {0}")]
    Config(String),
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error(transparent)]
    Run(#[from] qgl_core::Error),
}

impl CliError {
    pub fn io(path: &Path, err: std::io::Error) -> Self {
        CliError::Io { path: path.display().to_string(), message: err.to_string() }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::CheckFailed { .. } => 1,
            CliError::Config(_) | CliError::Run(_) => 2,
            CliError::Io { .. } => 3,
        }
    }
}

macro_rules! from_core {
    ($($t:ty),*) => {$(
        impl From<$t> for CliError {
            fn from(e: $t) -> Self {
                CliError::Run(e.into())
            }
        }
    )*};
}

from_core!(
    qgl_core::GraphError,
    qgl_core::DiscretizationError,
    qgl_core::FieldError,
    qgl_core::SolverError,
    qgl_core::VerificationError
);
