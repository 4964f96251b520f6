use thiserror::Error;

use crate::expr::{EvalError, SourceError};

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("matrix dimension {0} outside the supported range 1..={max}", max = crate::linalg::MAX_DIM)]
    UnsupportedDimension(usize),

    #[error("non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error("matrix is not symmetric (asymmetry {asymmetry:e})")]
    NotSymmetric { asymmetry: f64 },

    #[error("weight matrix is not symmetric positive definite")]
    NotPositiveDefinite,

    #[error("matrix is singular (pivot {pivot:e} at column {column})")]
    Singular { pivot: f64, column: usize },

    #[error("Jacobi eigen solver did not converge after {sweeps} sweeps")]
    NoConvergence { sweeps: usize },

    #[error("Lyapunov equation has no unique solution")]
    LyapunovNotUnique,

    #[error("A is not Hurwitz (Lyapunov solution is not positive definite)")]
    NotHurwitz,

    #[error(transparent)]
    Source(#[from] SourceError),

    #[error(transparent)]
    Eval(#[from] EvalError),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid controller: {0}")]
    Controller(String),

    #[error(
        "stiffness abort at t = {t}: step size pinned at h_min = {h_min:e} for {steps} consecutive steps (mu_cl = {mu_cl:e})"
    )]
    Stiffness {
        t: f64,
        h_min: f64,
        steps: usize,
        mu_cl: f64,
    },

    #[error("non-finite state at t = {t}")]
    NonFiniteState { t: f64 },

    #[error(
        "transition matrix at t = {t} is numerically singular (log|det| = {log_det}, Liouville prediction {liouville})"
    )]
    SingularTransition {
        t: f64,
        log_det: f64,
        liouville: f64,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

impl Error {
    /// True for failures that come from the numerics rather than from the input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NoConvergence { .. }
                | Error::Stiffness { .. }
                | Error::NonFiniteState { .. }
                | Error::SingularTransition { .. }
                | Error::Eval(_)
        )
    }
}
