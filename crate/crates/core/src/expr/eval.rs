use std::fmt;

use thiserror::Error;

use super::{BinOp, Expr, ExprKind, Func, Span, Var};

#[derive(Debug, Clone, PartialEq)]
pub enum EvalErrorKind {
    SqrtOfNegative,
    LogOfNonPositive,
    DivisionByZero,
    FractionalPowerOfNegative,
    NonFinite,
    Unbound(Var),
}

impl fmt::Display for EvalErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EvalErrorKind::SqrtOfNegative => f.write_str("square root of a negative number"),
            EvalErrorKind::LogOfNonPositive => f.write_str("logarithm of a non-positive number"),
            EvalErrorKind::DivisionByZero => f.write_str("division by zero"),
            EvalErrorKind::FractionalPowerOfNegative => {
                f.write_str("fractional power of a negative base")
            }
            EvalErrorKind::NonFinite => f.write_str("non-finite result"),
            EvalErrorKind::Unbound(Var::T) => f.write_str("unbound variable t"),
            EvalErrorKind::Unbound(Var::X(i)) => write!(f, "unbound variable x{i}"),
        }
    }
}

/// Evaluation failure, located by the span of the failing subexpression and,
/// for matrix functions, the entry it came from.
#[derive(Debug, Clone, PartialEq, Error)]
pub struct EvalError {
    pub kind: EvalErrorKind,
    pub span: Span,
    /// Rendering of the failing subexpression.
    pub subexpr: String,
    pub t: f64,
    pub entry: Option<(usize, usize)>,
}

impl fmt::Display for EvalError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} in '{}' (offset {}..{}) at t = {}",
            self.kind, self.subexpr, self.span.start, self.span.end, self.t
        )?;
        if let Some((r, c)) = self.entry {
            write!(f, ", entry ({r}, {c})")?;
        }
        Ok(())
    }
}

impl Expr {
    /// Evaluates at time `t` and optional state `x` (one-based `x1..xn`).
    pub fn eval(&self, t: f64, x: Option<&[f64]>) -> Result<f64, EvalError> {
        let fail = |kind| EvalError {
            kind,
            span: self.span,
            subexpr: self.to_string(),
            t,
            entry: None,
        };
        let v = match &self.kind {
            ExprKind::Num(v) => *v,
            ExprKind::Pi => std::f64::consts::PI,
            ExprKind::Var(Var::T) => t,
            ExprKind::Var(v @ Var::X(i)) => match x.and_then(|x| x.get(i - 1)) {
                Some(&xi) => xi,
                None => return Err(fail(EvalErrorKind::Unbound(*v))),
            },
            ExprKind::Neg(a) => -a.eval(t, x)?,
            ExprKind::Binary(op, a, b) => {
                let a = a.eval(t, x)?;
                let b = b.eval(t, x)?;
                match op {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    BinOp::Mul => a * b,
                    BinOp::Div => {
                        if b == 0.0 {
                            return Err(fail(EvalErrorKind::DivisionByZero));
                        }
                        a / b
                    }
                    BinOp::Pow => power(a, b).map_err(fail)?,
                }
            }
            ExprKind::Call(func, args) => {
                let a = args[0].eval(t, x)?;
                let b = match args.get(1) {
                    Some(e) => e.eval(t, x)?,
                    None => 0.0,
                };
                match func {
                    Func::Sin => a.sin(),
                    Func::Cos => a.cos(),
                    Func::Tan => a.tan(),
                    Func::Exp => a.exp(),
                    Func::Log => {
                        if a <= 0.0 {
                            return Err(fail(EvalErrorKind::LogOfNonPositive));
                        }
                        a.ln()
                    }
                    Func::Sqrt => {
                        if a < 0.0 {
                            return Err(fail(EvalErrorKind::SqrtOfNegative));
                        }
                        a.sqrt()
                    }
                    Func::Abs => a.abs(),
                    Func::Pow => power(a, b).map_err(fail)?,
                    Func::Min => a.min(b),
                    Func::Max => a.max(b),
                }
            }
        };
        if v.is_finite() {
            Ok(v)
        } else {
            Err(fail(EvalErrorKind::NonFinite))
        }
    }
}

fn power(base: f64, exponent: f64) -> Result<f64, EvalErrorKind> {
    if base < 0.0 && exponent.fract() != 0.0 {
        return Err(EvalErrorKind::FractionalPowerOfNegative);
    }
    if base == 0.0 && exponent < 0.0 {
        return Err(EvalErrorKind::DivisionByZero);
    }
    Ok(base.powf(exponent))
}
