//! Dense small-matrix arithmetic and the logarithmic norm.
//!
//! Everything here operates on [`Matrix`], a square row-major matrix of
//! dimension `1..=MAX_DIM`. The logarithmic norm
//!
//! ```text
//! mu[M] = lim_{h -> 0+} (||I + hM|| - 1) / h
//! ```
//!
//! has closed forms for the 1-, 2- and infinity-norms (column/row dominance
//! and half the largest eigenvalue of `M + M^T`) and, for a weighted norm
//! `||x||_H = ||Lx||_2` with `H = L^T L`, reduces to the Euclidean case on the
//! similar matrix `L M L^-1`.

mod eigen;
mod lu;
mod lyapunov;
mod matrix;
mod norm;

pub use eigen::{symmetric_eigen_max, symmetric_eigenvalues};
pub use lu::{invert, Lu};
pub use lyapunov::{lyapunov_residual, lyapunov_solve};
pub use matrix::Matrix;
pub use norm::{
    cholesky_upper, induced_norm, lognorm, lognorm_limit_oracle, vector_norm, NormKind,
    WeightedNorm,
};

/// Largest supported matrix dimension.
pub const MAX_DIM: usize = 16;

/// Numerical tolerances shared by the linear algebra kernels and their tests.
pub mod tol {
    /// Relative asymmetry tolerated before a matrix is symmetrized for the eigen solver.
    pub const SYMMETRY: f64 = 1e-12;
    /// Jacobi sweeps stop once the off-diagonal Frobenius norm is below this times `||S||_F`.
    pub const JACOBI_OFF_DIAGONAL: f64 = 1e-14;
    /// Sweep budget before the eigen solver gives up.
    pub const JACOBI_MAX_SWEEPS: usize = 100;
    /// Pivots below this times `||M||_inf` are treated as zero.
    pub const SINGULAR_PIVOT: f64 = 1e-13;
    /// Residual ceiling for `A^T H + H A + 2I` in the Frobenius norm.
    pub const LYAPUNOV_RESIDUAL: f64 = 1e-9;
    /// Round-trip tolerance for `M * M^-1 = I`, elementwise.
    pub const INVERSE_ROUND_TRIP: f64 = 1e-10;
}
