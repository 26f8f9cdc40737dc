//! Error type shared across the crate.
//!
//! The variants mirror the three ways a run can go wrong: a configuration
//! that violates an admissibility condition, an iterative solver that fails
//! to converge, and plain I/O trouble. The CLI maps these onto distinct
//! exit codes.

use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    /// Invalid grid, operator, potential, or run configuration.
    #[error("configuration error: {0}")]
    Config(String),

    /// An iterative solver (CG, Newton, outer fixed point, root finder)
    /// exceeded its budget or observed non-contraction.
    #[error("solver failure in {context}: {message}")]
    Solver {
        /// Which solve failed (e.g. "cg(A_h)", "outer fixed point at step 12").
        context: String,
        /// Diagnostic detail, including the last residuals seen.
        message: String,
    },

    /// A verification check failed (used by the check drivers).
    #[error("check failed: {0}")]
    Check(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn solver(context: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Solver {
            context: context.into(),
            message: message.into(),
        }
    }
}

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;
