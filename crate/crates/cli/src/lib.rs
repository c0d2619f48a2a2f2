//! Command-line front end for the `twinphoton` library.
//!
//! Subcommands: `simulate` writes a sweep CSV, `estimate` recovers
//! `(C, psi, delta)` from one, `oracle` checks the closed forms against the
//! Fock-space oracle, `montecarlo` tabulates estimator precision against
//! total counts.
//!
//! Exit codes: 0 success, 1 I/O failure, 2 configuration or parse error,
//! 3 degenerate estimation, 4 oracle mismatch.

pub mod args;
pub mod commands;
pub mod config;
pub mod format;
pub mod sweep_file;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),

    #[error("estimation failed: {0}")]
    Degenerate(String),

    #[error("oracle deviation {deviation} exceeds tolerance {tolerance}")]
    OracleMismatch { deviation: f64, tolerance: f64 },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io(_) => 1,
            CliError::Config(_) => 2,
            CliError::Degenerate(_) => 3,
            CliError::OracleMismatch { .. } => 4,
        }
    }
}

impl From<twinphoton::Error> for CliError {
    fn from(e: twinphoton::Error) -> Self {
        use twinphoton::Error as E;
        match e {
            E::DegenerateTheta1 { .. } | E::Unidentifiable(_) | E::FitFailure { .. } => {
                CliError::Degenerate(e.to_string())
            }
            other => CliError::Config(other.to_string()),
        }
    }
}

pub use args::{run, Cli};
