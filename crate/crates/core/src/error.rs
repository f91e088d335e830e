use thiserror::Error;

use crate::reduction::ReductionResult;

/// Errors raised across the library.
///
/// The variants split into two families that the command line maps onto
/// different exit codes: domain errors (bad input, wrong group) and
/// numerical/resource errors (precision, caps).
#[derive(Debug, Error)]
pub enum ModsymError {
    #[error("membership: {0} is not in Gamma_0({1})")]
    NotInGroup(String, u64),

    #[error("parse: line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("mismatch: {0}")]
    Mismatch(String),

    #[error("invalid: {0}")]
    Invalid(String),

    #[error("precision: {0}")]
    Precision(String),

    #[error("resource: {0}")]
    Resource(String),

    #[error("reduction cap exceeded after {steps} steps")]
    ReductionCap {
        steps: usize,
        best: Box<ReductionResult>,
    },

    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

impl ModsymError {
    /// True for errors caused by the input rather than by numerical limits.
    pub fn is_domain(&self) -> bool {
        matches!(
            self,
            ModsymError::NotInGroup(..)
                | ModsymError::Parse { .. }
                | ModsymError::Mismatch(_)
                | ModsymError::Invalid(_)
                | ModsymError::Io(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, ModsymError>;
