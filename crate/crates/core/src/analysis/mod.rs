//! Integrals of the logarithmic norm along time and finite-horizon evidence
//! for the stability conditions and the assumptions of the convergence result.

mod checks;
mod evidence;
mod quad;

pub use checks::{
    check_a1, check_a1_extended, check_a2_a4, check_a3, classify_stability,
    is_asymptotically_stable, mu_delta_abs, mu_nominal,
};
pub use evidence::{ConditionId, EvidenceEntry, EvidenceReport, Heuristics, Verdict, DISCLAIMER};
pub use quad::{adaptive_simpson, cumulative, integrate_mu, QuadResult, DEFAULT_TOL, MAX_DEPTH};

pub(crate) use evidence::uniform;
