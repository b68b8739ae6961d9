//! CLI error type with the exit-code contract: 0 success, 2 configuration
//! error, 3 numerical failure.

use motor_core::error::MotorError;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, CliError>;

#[derive(Debug, Error)]
pub enum CliError {
    /// Unusable input: file not found, parse failure, invalid or
    /// inconsistent parameters, unsupported command/units combination.
    #[error("configuration: {0}")]
    Config(String),

    /// A computation started from a valid configuration and failed.
    #[error(transparent)]
    Compute(MotorError),

    /// A validation command ran to completion and the result was out of
    /// tolerance.
    #[error("check failed: {0}")]
    Check(String),

    /// Output could not be written.
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    /// Process exit code for this error.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            // Parameter rejections surface as configuration errors no matter
            // how deep in the stack they are raised.
            CliError::Compute(MotorError::InvalidParams(_))
            | CliError::Compute(MotorError::Unsupported(_)) => 2,
            CliError::Compute(_) | CliError::Check(_) | CliError::Io(_) => 3,
        }
    }
}

impl From<MotorError> for CliError {
    fn from(e: MotorError) -> Self {
        CliError::Compute(e)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_follow_the_contract() {
        assert_eq!(CliError::Config("x".into()).exit_code(), 2);
        assert_eq!(
            CliError::from(MotorError::InvalidParams("x".into())).exit_code(),
            2
        );
        assert_eq!(
            CliError::from(MotorError::Unsupported("x".into())).exit_code(),
            2
        );
        assert_eq!(
            CliError::from(MotorError::BlowUp { traj: 0, step: 1 }).exit_code(),
            3
        );
        assert_eq!(
            CliError::from(MotorError::NyquistUnderCoverage {
                at_nyquist: 1.0,
                peak: 1.0,
                ratio: 100.0
            })
            .exit_code(),
            3
        );
        assert_eq!(CliError::Check("x".into()).exit_code(), 3);
    }
}
