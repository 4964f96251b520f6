//! Closed-loop simulation, fundamental matrices and the logarithmic-norm
//! bounds on state-transition matrices.

mod dopri;
mod trace;
mod transition;

pub use dopri::{integrate, integrate_fixed, Integration, IntegratorOptions, STIFF_STEPS};
pub use trace::{
    convergence_report, non_increasing_on, output_grid, simulate, ConvergenceReport, Trace,
};
pub use transition::{
    fundamental_matrix, transition_between, verify_sandwich, SandwichOptions, SandwichPair,
    SandwichReport, TransitionTrace,
};
