//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, SurfError>;

#[derive(Debug, Error)]
pub enum SurfError {
    /// A caller-supplied parameter violates a documented precondition.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// Degenerate node geometry (duplicate points, empty set, ...).
    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),

    /// File parse failure; carries the 1-based line number when known.
    #[error("parse error at {path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    /// The local saddle system for a stencil is numerically rank-deficient.
    #[error("rank-deficient stencil system at node {node}: {message}")]
    RankDeficientStencil { node: usize, message: String },

    /// Not enough admissible neighbors to fill a stencil.
    #[error("node {node}: needs {needed} stencil neighbors, only {available} admissible")]
    InsufficientNeighbors {
        node: usize,
        needed: usize,
        available: usize,
    },

    /// A sparse linear solve failed (singular factorization or no convergence).
    #[error("linear solver failure: {0}")]
    SolverFailure(String),

    /// A time integration produced a non-finite state.
    #[error("non-finite state detected at step {step}")]
    BlowUp { step: usize },

    /// A transported field outgrew its initial magnitude beyond the
    /// instability threshold.
    #[error("instability detected at step {step}: max-norm grew {growth:.2}x over the initial field")]
    Instability { step: usize, growth: f64 },

    /// Eigenvalue iteration did not converge.
    #[error("eigenvalue iteration failed: {0}")]
    EigenFailure(String),
}

impl SurfError {
    pub fn invalid(msg: impl Into<String>) -> Self {
        SurfError::InvalidParameter(msg.into())
    }

    pub fn degenerate(msg: impl Into<String>) -> Self {
        SurfError::DegenerateGeometry(msg.into())
    }
}
