use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfiguration(String),

    #[error("invalid sample: {0}")]
    InvalidSample(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("unsupported topology: {0}")]
    UnsupportedTopology(String),

    #[error("degenerate analyzer angle theta1 = {theta1} rad (must avoid 0 and pi/2)")]
    DegenerateTheta1 { theta1: f64 },

    #[error("parameters not identifiable: {0}")]
    Unidentifiable(String),

    #[error("fit did not converge after {iterations} iterations: {reason}")]
    FitFailure { iterations: usize, reason: String },
}
