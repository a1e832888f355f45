//! Problem files, sweep CSVs and the commands behind the `cdk` binary.

pub mod commands;
pub mod problem;
pub mod sweep;

use cdk_core::error::Error;
use cdk_core::model::Status;
use thiserror::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_PARSE: i32 = 1;
pub const EXIT_INFEASIBLE: i32 = 2;
pub const EXIT_UNBOUNDED: i32 = 3;
/// Node or iteration limits, and certificates that could not be verified.
pub const EXIT_LIMIT: i32 = 4;

/// Seed for every sampling step unless `CDK_SEED` says otherwise.
pub const DEFAULT_SEED: u64 = 42;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("i/o error: {0}")]
    Io(String),
    #[error(transparent)]
    Core(#[from] Error),
}

pub fn status_exit_code(s: Status) -> i32 {
    match s {
        Status::Optimal => EXIT_OK,
        Status::Infeasible => EXIT_INFEASIBLE,
        Status::Unbounded => EXIT_UNBOUNDED,
        Status::IterLimit | Status::NodeLimit => EXIT_LIMIT,
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Parse(_) | CliError::Io(_) => EXIT_PARSE,
            CliError::Core(e) => match e {
                Error::OmegaInfeasible | Error::EmptyU => EXIT_INFEASIBLE,
                Error::Solver(s) => status_exit_code(*s),
                Error::IterLimit
                | Error::NodeLimit { .. }
                | Error::NoStrongDuality { .. }
                | Error::VerificationFailed { .. } => EXIT_LIMIT,
                _ => EXIT_PARSE,
            },
        }
    }
}

/// `CDK_SEED`, or [`DEFAULT_SEED`] when unset.
pub fn seed_from_env() -> Result<u64, CliError> {
    match std::env::var("CDK_SEED") {
        Err(_) => Ok(DEFAULT_SEED),
        Ok(s) => s
            .trim()
            .parse()
            .map_err(|_| CliError::Parse(format!("CDK_SEED `{s}` is not an unsigned integer"))),
    }
}
