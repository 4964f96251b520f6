//! Plant, uncertainty, disturbance and controller data model.
//!
//! The closed loop is
//!
//! ```text
//! x' = [A(t) + Delta(t)] x + B u + omega(x, t),   u = K(t) x,   t >= t0
//! ```
//!
//! with `B` constant, square and invertible. Leaving `omega` out gives the
//! undisturbed system.

use crate::error::{Error, Result};
use crate::expr::{Expr, MatrixFunction, VarSet};
use crate::linalg::{invert, Matrix, NormKind};

#[derive(Debug, Clone, PartialEq)]
pub struct SystemSpec {
    pub n: usize,
    pub a: MatrixFunction,
    pub delta: Option<MatrixFunction>,
    pub b: Matrix,
    pub omega: Option<MatrixFunction>,
    /// Envelope `||omega~(t)||` with `||omega(x, t)|| <= ||omega~(t)||` for all `x`.
    pub omega_bound: Option<Expr>,
    pub t0: f64,
    pub x0: Vec<f64>,
    pub norm: NormKind,
}

impl SystemSpec {
    pub fn new(a: MatrixFunction, b: Matrix, t0: f64, x0: Vec<f64>) -> Result<Self> {
        let spec = Self {
            n: a.rows(),
            a,
            delta: None,
            b,
            omega: None,
            omega_bound: None,
            t0,
            x0,
            norm: NormKind::Two,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn with_delta(mut self, delta: MatrixFunction) -> Result<Self> {
        self.delta = Some(delta);
        self.validate()?;
        Ok(self)
    }

    pub fn with_omega(mut self, omega: MatrixFunction, bound: Option<Expr>) -> Result<Self> {
        self.omega = Some(omega);
        self.omega_bound = bound;
        self.validate()?;
        Ok(self)
    }

    pub fn with_omega_bound(mut self, bound: Expr) -> Result<Self> {
        self.omega_bound = Some(bound);
        self.validate()?;
        Ok(self)
    }

    pub fn with_norm(mut self, norm: NormKind) -> Self {
        self.norm = norm;
        self
    }

    /// Checks that every part agrees with the state dimension.
    pub fn validate(&self) -> Result<()> {
        let n = self.n;
        let square_in_t = |name: &str, f: &MatrixFunction| {
            if f.rows() != n || f.cols() != n {
                return Err(Error::Config(format!(
                    "{name} must be {n}x{n}, got {}x{}",
                    f.rows(),
                    f.cols()
                )));
            }
            if !f.vars().is_subset_of(&VarSet::time()) {
                return Err(Error::Config(format!("{name} may depend on t only")));
            }
            Ok(())
        };
        square_in_t("A", &self.a)?;
        if let Some(d) = &self.delta {
            square_in_t("Delta", d)?;
        }
        if self.b.dim() != n {
            return Err(Error::Config(format!(
                "B must be square {n}x{n}, got {0}x{0}",
                self.b.dim()
            )));
        }
        if let Some(w) = &self.omega {
            if w.rows() != n || w.cols() != 1 {
                return Err(Error::Config(format!("omega must have {n} entries")));
            }
            if !w.vars().is_subset_of(&VarSet::state(n)) {
                return Err(Error::Config(format!(
                    "omega may depend on t and x1..x{n} only"
                )));
            }
        }
        if let Some(bound) = &self.omega_bound {
            if !bound.vars().is_subset_of(&VarSet::time()) {
                return Err(Error::Config("omega_bound may depend on t only".into()));
            }
        }
        if !self.t0.is_finite() {
            return Err(Error::Config("t0 must be finite".into()));
        }
        if self.x0.len() != n || self.x0.iter().any(|v| !v.is_finite()) {
            return Err(Error::Config(format!("x0 must hold {n} finite values")));
        }
        if let NormKind::Weighted(w) = &self.norm {
            if w.weight().dim() != n {
                return Err(Error::Config(
                    "weight matrix dimension differs from n".into(),
                ));
            }
        }
        Ok(())
    }

    /// `||omega~(t)||`, or zero when no envelope is declared.
    pub fn omega_envelope(&self, t: f64) -> Result<f64> {
        match &self.omega_bound {
            Some(e) => Ok(e.eval(t, None)?.abs()),
            None => Ok(0.0),
        }
    }
}

/// State-feedback gain `K(t)`.
///
/// A synthesized controller keeps `lambda`, `gamma` and the two parts of the
/// gain `K = B^-1 (adaptive + robust)` with `adaptive = -A_sym + diag(lambda)`
/// and `robust = diag(gamma)`. An open-loop controller has `K = 0` and no parts.
#[derive(Debug, Clone, PartialEq)]
pub struct ControllerSpec {
    pub(crate) lambda: Vec<f64>,
    pub(crate) gamma: Vec<Expr>,
    pub(crate) b_inv: Matrix,
    pub(crate) adaptive: Option<MatrixFunction>,
    pub(crate) robust: Option<MatrixFunction>,
    pub(crate) k: MatrixFunction,
}

impl ControllerSpec {
    /// `K = 0`.
    pub fn open_loop(spec: &SystemSpec) -> Result<Self> {
        Ok(Self {
            lambda: Vec::new(),
            gamma: Vec::new(),
            b_inv: invert(&spec.b).map_err(|_| Error::Controller("B not invertible".into()))?,
            adaptive: None,
            robust: None,
            k: MatrixFunction::zero(spec.n),
        })
    }

    pub fn is_open_loop(&self) -> bool {
        self.adaptive.is_none()
    }

    pub fn lambda(&self) -> &[f64] {
        &self.lambda
    }

    pub fn gamma(&self) -> &[Expr] {
        &self.gamma
    }

    pub fn b_inv(&self) -> &Matrix {
        &self.b_inv
    }

    pub fn gain(&self) -> &MatrixFunction {
        &self.k
    }

    /// `-A_sym(t) + diag(lambda)`
    pub fn adaptive_part(&self) -> Option<&MatrixFunction> {
        self.adaptive.as_ref()
    }

    /// `diag(gamma(t))`
    pub fn robust_part(&self) -> Option<&MatrixFunction> {
        self.robust.as_ref()
    }

    pub fn gain_at(&self, t: f64) -> Result<Matrix> {
        self.k.eval(t, None)
    }

    /// `Gamma(t) = max_i (lambda_i + gamma_i(t))`; `None` for an open loop.
    pub fn gamma_max(&self, t: f64) -> Result<Option<f64>> {
        if self.is_open_loop() {
            return Ok(None);
        }
        let mut best = f64::NEG_INFINITY;
        for (l, g) in self.lambda.iter().zip(&self.gamma) {
            best = best.max(l + g.eval(t, None)?);
        }
        Ok(Some(best))
    }
}

/// `A(t) + B K(t)`, plus `Delta(t)` when `include_delta` is set.
pub fn closed_loop_matrix(
    spec: &SystemSpec,
    ctrl: &ControllerSpec,
    t: f64,
    include_delta: bool,
) -> Result<Matrix> {
    if t < spec.t0 {
        return Err(Error::InvalidArgument(format!(
            "t = {t} precedes t0 = {}",
            spec.t0
        )));
    }
    let a = spec.a.eval(t, None)?;
    let k = ctrl.k.eval(t, None)?;
    let mut m = &a + &(&spec.b * &k);
    if include_delta {
        if let Some(d) = &spec.delta {
            m = &m + &d.eval(t, None)?;
        }
    }
    Ok(m)
}
