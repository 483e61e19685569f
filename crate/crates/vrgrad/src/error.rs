use vrgrad_core::{DualError, ProblemError, RateError, SamplingError, SolverError};

use crate::config::ConfigError;
use crate::data::DataError;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INFEASIBLE: i32 = 2;
pub const EXIT_DIVERGED: i32 = 3;
pub const EXIT_INPUT: i32 = 4;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("no convergent rate for step size {lambda}: the largest admissible step is lambda_max = {lambda_max}")]
    NoConvergentRate { lambda: f64, lambda_max: f64 },
    #[error("iterates became non-finite at iteration {iteration}")]
    Diverged { iteration: usize },
    #[error("experiment `{0}` needs LibSVM dataset paths (set `datasets = a.txt,b.txt`)")]
    MissingDataset(String),
    #[error("{0}")]
    Input(String),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::NoConvergentRate { .. } => EXIT_INFEASIBLE,
            CliError::Diverged { .. } => EXIT_DIVERGED,
            _ => EXIT_INPUT,
        }
    }
}

impl From<RateError> for CliError {
    fn from(e: RateError) -> Self {
        match e {
            RateError::NoConvergentRate { lambda, lambda_max } => CliError::NoConvergentRate { lambda, lambda_max },
            RateError::Solver(s) => s.into(),
            other => CliError::Input(other.to_string()),
        }
    }
}

impl From<SolverError> for CliError {
    fn from(e: SolverError) -> Self {
        match e {
            SolverError::NonFinite { iteration } => CliError::Diverged { iteration },
            other => CliError::Input(other.to_string()),
        }
    }
}

impl From<ProblemError> for CliError {
    fn from(e: ProblemError) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<SamplingError> for CliError {
    fn from(e: SamplingError) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<DualError> for CliError {
    fn from(e: DualError) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(std::io::Error::other(e))
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Io(std::io::Error::other(e))
    }
}
