//! CLI failure classification and exit codes.
//!
//! 0 = success / verified, 1 = verification failure, 2 = invalid input,
//! 3 = numerical failure.

use std::fmt;

use heatbloch_core::CoreError;

#[derive(Debug)]
pub enum CliError {
    /// Bad configuration, arguments, or input documents (exit 2).
    Invalid(String),
    /// A verification check did not pass (exit 1).
    Verification(String),
    /// The computation itself failed (exit 3).
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Verification(_) => 1,
            CliError::Invalid(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }

    pub fn invalid(msg: impl Into<String>) -> Self {
        CliError::Invalid(msg.into())
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Invalid(m) => write!(f, "invalid input: {m}"),
            CliError::Verification(m) => write!(f, "verification failed: {m}"),
            CliError::Numerical(m) => write!(f, "numerical failure: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        match &e {
            CoreError::DimensionOutOfRange(_)
            | CoreError::KernelSourceInsideBall(_)
            | CoreError::PolyDegreeTooHigh(_, _)
            | CoreError::DerivativeOrderTooHigh(_, _)
            | CoreError::ComponentCountMismatch { .. }
            | CoreError::TermShapeMismatch { .. }
            | CoreError::NotSquare
            | CoreError::GammaOutOfRange(_)
            | CoreError::R0OutOfRange(_)
            | CoreError::InvalidParameter { .. }
            | CoreError::TargetOutsideDisk { .. }
            | CoreError::KernelSingularity
            | CoreError::Serde(_) => CliError::Invalid(e.to_string()),
            _ => CliError::Numerical(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Invalid(e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;
