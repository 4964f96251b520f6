//! Arithmetic expression language for time- and state-dependent coefficients.
//!
//! ```text
//! expr    := term (("+" | "-") term)*
//! term    := unary (("*" | "/") unary)*
//! unary   := ("-" | "+") unary | power
//! power   := primary ("^" unary)?
//! primary := number | "pi" | "t" | "x" digits
//!          | func "(" expr ("," expr)* ")" | "(" expr ")"
//! func    := sin | cos | tan | exp | log | sqrt | abs | pow | min | max
//! ```
//!
//! `^` is right-associative and binds tighter than unary minus, so `-2^2`
//! is `-4` and `2^3^2` is `512`. Evaluation is real-valued: domain errors
//! (square root of a negative, logarithm of a non-positive, division by
//! zero, fractional power of a negative base, overflow) are reported with
//! the byte span of the offending subexpression.

mod eval;
mod matrix_fn;
mod parse;
mod print;

use std::fmt;

use thiserror::Error;

pub use eval::{EvalError, EvalErrorKind};
pub use matrix_fn::MatrixFunction;
pub use parse::parse;

/// Byte range of a node in its source text; synthesized nodes carry `0..0`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

/// Variables an expression may reference: `t` and `x1..x{n_state}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VarSet {
    pub time: bool,
    pub n_state: usize,
}

impl VarSet {
    pub const fn time() -> Self {
        Self {
            time: true,
            n_state: 0,
        }
    }

    pub const fn state(n: usize) -> Self {
        Self {
            time: true,
            n_state: n,
        }
    }

    pub const fn constant() -> Self {
        Self {
            time: false,
            n_state: 0,
        }
    }

    pub fn contains(&self, v: Var) -> bool {
        match v {
            Var::T => self.time,
            Var::X(i) => (1..=self.n_state).contains(&i),
        }
    }

    pub fn is_subset_of(&self, other: &VarSet) -> bool {
        (!self.time || other.time) && self.n_state <= other.n_state
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Var {
    T,
    /// One-based state component.
    X(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Tan,
    Exp,
    Log,
    Sqrt,
    Abs,
    Pow,
    Min,
    Max,
}

impl Func {
    pub fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "tan" => Func::Tan,
            "exp" => Func::Exp,
            "log" => Func::Log,
            "sqrt" => Func::Sqrt,
            "abs" => Func::Abs,
            "pow" => Func::Pow,
            "min" => Func::Min,
            "max" => Func::Max,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tan => "tan",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
            Func::Abs => "abs",
            Func::Pow => "pow",
            Func::Min => "min",
            Func::Max => "max",
        }
    }

    pub fn arity(self) -> usize {
        match self {
            Func::Pow | Func::Min | Func::Max => 2,
            _ => 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ExprKind {
    Num(f64),
    Pi,
    Var(Var),
    Neg(Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Vec<Expr>),
}

/// Parsed expression. Equality is structural and ignores source spans.
#[derive(Debug, Clone)]
pub struct Expr {
    pub kind: ExprKind,
    pub span: Span,
}

impl PartialEq for Expr {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind
    }
}

/// Parse failure with the byte offset of the offending token.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("{message} at offset {offset}{}", fmt_token(.token))]
pub struct SourceError {
    pub offset: usize,
    pub message: String,
    pub token: String,
}

fn fmt_token(token: &str) -> String {
    if token.is_empty() {
        String::new()
    } else {
        format!(" (near '{token}')")
    }
}

// `add`, `mul`, ... build nodes; they are not arithmetic on values.
#[allow(clippy::should_implement_trait)]
impl Expr {
    fn synth(kind: ExprKind) -> Self {
        Self {
            kind,
            span: Span::default(),
        }
    }

    pub fn num(v: f64) -> Self {
        Self::synth(ExprKind::Num(v))
    }

    pub fn t() -> Self {
        Self::synth(ExprKind::Var(Var::T))
    }

    pub fn x(i: usize) -> Self {
        Self::synth(ExprKind::Var(Var::X(i)))
    }

    pub fn neg(e: Expr) -> Self {
        Self::synth(ExprKind::Neg(Box::new(e)))
    }

    pub fn binary(op: BinOp, a: Expr, b: Expr) -> Self {
        Self::synth(ExprKind::Binary(op, Box::new(a), Box::new(b)))
    }

    pub fn call(f: Func, args: Vec<Expr>) -> Self {
        assert_eq!(args.len(), f.arity(), "arity mismatch for {}", f.name());
        Self::synth(ExprKind::Call(f, args))
    }

    pub fn add(a: Expr, b: Expr) -> Self {
        Self::binary(BinOp::Add, a, b)
    }

    pub fn sub(a: Expr, b: Expr) -> Self {
        Self::binary(BinOp::Sub, a, b)
    }

    pub fn mul(a: Expr, b: Expr) -> Self {
        Self::binary(BinOp::Mul, a, b)
    }

    pub fn div(a: Expr, b: Expr) -> Self {
        Self::binary(BinOp::Div, a, b)
    }

    pub fn as_num(&self) -> Option<f64> {
        match self.kind {
            ExprKind::Num(v) => Some(v),
            _ => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.as_num() == Some(0.0)
    }

    /// `c * e`, folding the trivial factors 0, 1 and -1.
    pub fn scaled(c: f64, e: Expr) -> Self {
        if c == 0.0 || e.is_zero() {
            Self::num(0.0)
        } else if c == 1.0 {
            e
        } else if c == -1.0 {
            Self::neg(e)
        } else {
            Self::mul(Self::num(c), e)
        }
    }

    /// Sum of the non-zero terms (`0` when all vanish).
    pub fn sum(terms: impl IntoIterator<Item = Expr>) -> Self {
        terms
            .into_iter()
            .filter(|e| !e.is_zero())
            .reduce(Self::add)
            .unwrap_or_else(|| Self::num(0.0))
    }

    /// Smallest variable set that covers every reference in the tree.
    pub fn vars(&self) -> VarSet {
        let mut set = VarSet::constant();
        self.visit(&mut |e| {
            if let ExprKind::Var(v) = e.kind {
                match v {
                    Var::T => set.time = true,
                    Var::X(i) => set.n_state = set.n_state.max(i),
                }
            }
        });
        set
    }

    fn visit(&self, f: &mut impl FnMut(&Expr)) {
        f(self);
        match &self.kind {
            ExprKind::Neg(a) => a.visit(f),
            ExprKind::Binary(_, a, b) => {
                a.visit(f);
                b.visit(f);
            }
            ExprKind::Call(_, args) => args.iter().for_each(|a| a.visit(f)),
            _ => {}
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        print::write_expr(self, 0, f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builders_fold_trivial_terms() {
        assert_eq!(Expr::scaled(1.0, Expr::t()), Expr::t());
        assert_eq!(Expr::scaled(0.0, Expr::t()), Expr::num(0.0));
        assert_eq!(Expr::scaled(-1.0, Expr::t()).to_string(), "-t");
        assert_eq!(Expr::sum([Expr::num(0.0), Expr::num(0.0)]), Expr::num(0.0));
        assert_eq!(
            Expr::sum([Expr::num(0.0), Expr::t(), Expr::num(2.0)]).to_string(),
            "t+2"
        );
    }

    #[test]
    fn var_collection() {
        let e = parse("t*x3 + sin(x1)", &VarSet::state(3)).unwrap();
        assert_eq!(e.vars(), VarSet::state(3));
        assert_eq!(
            parse("2*pi", &VarSet::time()).unwrap().vars(),
            VarSet::constant()
        );
    }
}
