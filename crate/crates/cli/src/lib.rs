//! Command-line companion to `psyllid-core`: scenario configs, equilibrium
//! and threshold reports, trajectory simulation, and the figure sweeps,
//! all with deterministic file output.
//!
//! Exit codes: 0 success, 2 configuration/usage error, 3 model-level
//! precondition violation, 4 numerical failure.

use psyllid_core::CoreError;

pub mod config;
pub mod experiments;
pub mod output;
pub mod report;

pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_PRECONDITION: i32 = 3;
pub const EXIT_NUMERICAL: i32 = 4;

/// A failure carrying the process exit code it maps to.
#[derive(Debug, Clone)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl Failure {
    pub fn config(message: String) -> Self {
        Failure { code: EXIT_CONFIG, message }
    }
    pub fn precondition(message: String) -> Self {
        Failure { code: EXIT_PRECONDITION, message }
    }
    pub fn numerical(message: String) -> Self {
        Failure { code: EXIT_NUMERICAL, message }
    }
    pub fn io(err: std::io::Error, what: &str) -> Self {
        Failure { code: 1, message: format!("{what}: {err}") }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.message)
    }
}

impl std::error::Error for Failure {}

impl From<CoreError> for Failure {
    fn from(err: CoreError) -> Self {
        let code = match &err {
            CoreError::InvalidParameter(_) | CoreError::InvalidInput(_) => EXIT_CONFIG,
            CoreError::ScarcityRatioNotAboveOne { .. }
            | CoreError::OffspringNumberNotAboveOne { .. } => EXIT_PRECONDITION,
            CoreError::BracketNotFound { .. }
            | CoreError::InternalConsistency(_)
            | CoreError::StepSizeUnderflow { .. }
            | CoreError::NonFiniteState { .. } => EXIT_NUMERICAL,
        };
        Failure { code, message: err.to_string() }
    }
}
