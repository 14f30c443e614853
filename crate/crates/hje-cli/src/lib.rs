//! Experiment harness around the graph Hamilton-Jacobi solvers: configuration
//! parsing, the solve / convergence / oracle-compare / boundary-demo
//! commands, and CSV/JSON reporting.

pub mod config;
pub mod experiments;
pub mod report;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("serialization error: {0}")]
    Json(#[from] serde_json::Error),
}

impl CliError {
    /// Process exit code: 2 for configuration problems, 3 for numerical
    /// failures, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) => 3,
            _ => 1,
        }
    }
}

pub use config::ExperimentConfig;
pub use experiments::{
    boundary_layer_quotient, cmd_boundary_demo, cmd_convergence, cmd_oracle_compare, cmd_solve,
    BoundaryDemoOutcome, SolveOutcome,
};
pub use report::{ErrorReport, ErrorRow};
