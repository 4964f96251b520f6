use std::fmt;

use super::{BinOp, Expr, ExprKind, Var};

const ADD: u8 = 1;
const MUL: u8 = 2;
const UNARY: u8 = 3;
const POW: u8 = 4;
const ATOM: u8 = 5;

fn precedence(e: &Expr) -> u8 {
    match &e.kind {
        ExprKind::Num(v) if v.is_sign_negative() => UNARY,
        ExprKind::Num(_) | ExprKind::Pi | ExprKind::Var(_) | ExprKind::Call(..) => ATOM,
        ExprKind::Neg(_) => UNARY,
        ExprKind::Binary(BinOp::Add | BinOp::Sub, ..) => ADD,
        ExprKind::Binary(BinOp::Mul | BinOp::Div, ..) => MUL,
        ExprKind::Binary(BinOp::Pow, ..) => POW,
    }
}

/// Writes `e` with the fewest parentheses that reparse to the same tree.
pub(super) fn write_expr(e: &Expr, min_prec: u8, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    let wrap = precedence(e) < min_prec;
    if wrap {
        f.write_str("(")?;
    }
    match &e.kind {
        ExprKind::Num(v) => write!(f, "{v}")?,
        ExprKind::Pi => f.write_str("pi")?,
        ExprKind::Var(Var::T) => f.write_str("t")?,
        ExprKind::Var(Var::X(i)) => write!(f, "x{i}")?,
        ExprKind::Neg(a) => {
            f.write_str("-")?;
            write_expr(a, UNARY, f)?;
        }
        ExprKind::Binary(op, a, b) => {
            let (sym, left, right) = match op {
                BinOp::Add => ('+', ADD, MUL),
                BinOp::Sub => ('-', ADD, MUL),
                BinOp::Mul => ('*', MUL, UNARY),
                BinOp::Div => ('/', MUL, UNARY),
                BinOp::Pow => ('^', ATOM, UNARY),
            };
            write_expr(a, left, f)?;
            write!(f, "{sym}")?;
            write_expr(b, right, f)?;
        }
        ExprKind::Call(func, args) => {
            write!(f, "{}(", func.name())?;
            for (k, a) in args.iter().enumerate() {
                if k > 0 {
                    f.write_str(",")?;
                }
                write_expr(a, 0, f)?;
            }
            f.write_str(")")?;
        }
    }
    if wrap {
        f.write_str(")")?;
    }
    Ok(())
}
