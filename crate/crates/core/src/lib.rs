//! Logarithmic norms, stability evidence for linear time-varying systems,
//! robust adaptive state feedback and closed-loop simulation.
//!
//! ```
//! use lognorm_core::linalg::{lognorm, Matrix, NormKind};
//!
//! let a = Matrix::from_rows(&[[-11.0, 10.0], [2.0, -3.0]]).unwrap();
//! assert_eq!(lognorm(&a, &NormKind::One).unwrap(), 7.0);
//! assert_eq!(lognorm(&a, &NormKind::Inf).unwrap(), -1.0);
//! ```

// `!(x > y)` is used on purpose so NaN inputs are rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod config;
pub mod error;
pub mod expr;
pub mod linalg;
pub mod sim;
pub mod synthesis;
pub mod system;

pub use analysis::{ConditionId, EvidenceEntry, EvidenceReport, Heuristics, Verdict};
pub use config::ConfigDocument;
pub use error::{Error, Result};
pub use expr::{Expr, MatrixFunction, VarSet};
pub use linalg::{Matrix, NormKind};
pub use sim::{IntegratorOptions, Trace, TransitionTrace};
pub use synthesis::GammaRule;
pub use system::{ControllerSpec, SystemSpec};
