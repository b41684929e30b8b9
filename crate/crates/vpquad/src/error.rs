//! Error types shared across the crate.

use thiserror::Error;

/// A parameter or configuration value violated one of its invariants.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("invalid value for `{field}`: {reason}")]
pub struct ValidationError {
    /// Dotted path of the offending field, e.g. `rotor.radius`.
    pub field: String,
    /// Human-readable description of the violated invariant.
    pub reason: String,
}

impl ValidationError {
    pub fn new(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Self {
            field: field.into(),
            reason: reason.into(),
        }
    }
}

/// Errors from rigid-body kinematics and dynamics evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum DynamicsError {
    /// The Euler-rate kinematics are singular: pitch too close to ±90°.
    #[error("euler-rate kinematics singular: |cos(pitch)| = {cos_pitch:.3e} < {limit:.3e}")]
    SingularAttitude { cos_pitch: f64, limit: f64 },
}

/// Errors from the control stack.
#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum ControlError {
    /// The allocation matrix cannot be inverted reliably.
    #[error("allocation matrix ill-conditioned: cond_1 = {cond:.3e} exceeds {limit:.3e}")]
    IllConditionedAllocation { cond: f64, limit: f64 },
    /// The allocation matrix is exactly singular.
    #[error("allocation matrix is singular")]
    SingularAllocation,
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
}

/// Errors raised while integrating a scenario.
#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum SimError {
    /// A state component became NaN or infinite.
    #[error("non-finite state at t = {t:.6} s")]
    NonFinite { t: f64 },
    /// The controller or plant failed at the given time.
    #[error("at t = {t:.6} s: {source}")]
    Control { t: f64, source: ControlError },
}

impl SimError {
    pub fn control(t: f64, source: impl Into<ControlError>) -> Self {
        Self::Control {
            t,
            source: source.into(),
        }
    }
}

/// Errors from loading or validating a configuration file.
#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Validation(#[from] ValidationError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}
