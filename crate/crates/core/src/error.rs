//! Error type shared by all numerical routines in this crate.

use alloc::string::String;
use core::fmt;

/// Failure modes of model construction, analysis, and integration.
#[derive(Debug, Clone, PartialEq)]
pub enum CoreError {
    /// A model parameter violates its domain (non-positive rate, sex ratio
    /// outside (0,1), fertilization factor below 1, ...).
    InvalidParameter(String),
    /// A state or control input is NaN/infinite or violates a sign
    /// constraint.
    InvalidInput(String),
    /// An operation requires the male-scarcity existence ratio to exceed 1;
    /// equivalently, the mean female-egg output per female must exceed the
    /// male basic offspring number.
    ScarcityRatioNotAboveOne { theta_m: f64 },
    /// An operation requires the male basic offspring number to exceed 1.
    OffspringNumberNotAboveOne { n_m: f64 },
    /// A bracketing search did not find a sign change within the allowed
    /// range.
    BracketNotFound { lo: f64, hi: f64 },
    /// Two algebraically equivalent routes produced different values; the
    /// implementation is inconsistent or the inputs are pathological.
    InternalConsistency(String),
    /// The adaptive integrator could not take a step above its minimum size.
    StepSizeUnderflow { t: f64 },
    /// The integrator produced or received a non-finite state.
    NonFiniteState { t: f64 },
}

impl fmt::Display for CoreError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CoreError::InvalidParameter(msg) => write!(f, "invalid parameter: {msg}"),
            CoreError::InvalidInput(msg) => write!(f, "invalid input: {msg}"),
            CoreError::ScarcityRatioNotAboveOne { theta_m } => write!(
                f,
                "male-scarcity existence ratio must exceed 1 (got {theta_m}); \
                 the female-egg output must exceed the male offspring number"
            ),
            CoreError::OffspringNumberNotAboveOne { n_m } => write!(
                f,
                "male basic offspring number must exceed 1 (got {n_m})"
            ),
            CoreError::BracketNotFound { lo, hi } => {
                write!(f, "no sign change found in [{lo}, {hi}]")
            }
            CoreError::InternalConsistency(msg) => {
                write!(f, "internal consistency check failed: {msg}")
            }
            CoreError::StepSizeUnderflow { t } => {
                write!(f, "step size underflow at t = {t}")
            }
            CoreError::NonFiniteState { t } => {
                write!(f, "non-finite state encountered at t = {t}")
            }
        }
    }
}

impl core::error::Error for CoreError {}
