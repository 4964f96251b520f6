use super::{BinOp, Expr, ExprKind, Func, SourceError, Span, Var, VarSet};

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Op(char),
    LParen,
    RParen,
    Comma,
    End,
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    span: Span,
}

/// Parses `text`, accepting only the variables in `vars`.
pub fn parse(text: &str, vars: &VarSet) -> Result<Expr, SourceError> {
    let tokens = lex(text)?;
    let mut p = Parser {
        text,
        tokens,
        pos: 0,
        vars,
    };
    if p.peek().tok == Tok::End {
        return Err(SourceError {
            offset: 0,
            message: "empty expression".into(),
            token: String::new(),
        });
    }
    let e = p.expr()?;
    match p.peek().tok {
        Tok::End => Ok(e),
        Tok::RParen => Err(p.error_here("unbalanced ')'")),
        _ => Err(p.error_here("unexpected token")),
    }
}

fn lex(text: &str) -> Result<Vec<Token>, SourceError> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        let start = i;
        let tok = match c {
            b' ' | b'\t' | b'\n' | b'\r' => {
                i += 1;
                continue;
            }
            b'0'..=b'9' | b'.' => {
                i = scan_number(bytes, i);
                let lit = &text[start..i];
                match lit.parse::<f64>() {
                    Ok(v) if v.is_finite() => Tok::Num(v),
                    _ => {
                        return Err(SourceError {
                            offset: start,
                            message: "malformed number".into(),
                            token: lit.into(),
                        })
                    }
                }
            }
            b'a'..=b'z' | b'A'..=b'Z' | b'_' => {
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                Tok::Ident(text[start..i].to_string())
            }
            b'+' | b'-' | b'*' | b'/' | b'^' => {
                i += 1;
                Tok::Op(c as char)
            }
            b'(' => {
                i += 1;
                Tok::LParen
            }
            b')' => {
                i += 1;
                Tok::RParen
            }
            b',' => {
                i += 1;
                Tok::Comma
            }
            _ => {
                let ch = text[start..].chars().next().unwrap_or('?');
                return Err(SourceError {
                    offset: start,
                    message: "unexpected character".into(),
                    token: ch.to_string(),
                });
            }
        };
        out.push(Token {
            tok,
            span: Span { start, end: i },
        });
    }
    // End-of-input errors point at the last character so offsets stay inside the text.
    let last = text.char_indices().last().map(|(k, _)| k).unwrap_or(0);
    out.push(Token {
        tok: Tok::End,
        span: Span {
            start: last,
            end: last,
        },
    });
    Ok(out)
}

fn scan_number(bytes: &[u8], mut i: usize) -> usize {
    while i < bytes.len() && bytes[i].is_ascii_digit() {
        i += 1;
    }
    if i < bytes.len() && bytes[i] == b'.' {
        i += 1;
        while i < bytes.len() && bytes[i].is_ascii_digit() {
            i += 1;
        }
    }
    if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
        let mut j = i + 1;
        if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
            j += 1;
        }
        if j < bytes.len() && bytes[j].is_ascii_digit() {
            while j < bytes.len() && bytes[j].is_ascii_digit() {
                j += 1;
            }
            i = j;
        }
    }
    i
}

struct Parser<'a> {
    text: &'a str,
    tokens: Vec<Token>,
    pos: usize,
    vars: &'a VarSet,
}

impl Parser<'_> {
    fn peek(&self) -> &Token {
        &self.tokens[self.pos]
    }

    fn bump(&mut self) -> Token {
        let t = self.tokens[self.pos].clone();
        if t.tok != Tok::End {
            self.pos += 1;
        }
        t
    }

    fn error_at(&self, span: Span, message: &str) -> SourceError {
        SourceError {
            offset: span.start,
            message: message.into(),
            token: self.text[span.start..span.end].to_string(),
        }
    }

    fn error_here(&self, message: &str) -> SourceError {
        let t = self.peek();
        let message = if t.tok == Tok::End {
            format!("{message} (unexpected end of input)")
        } else {
            message.to_string()
        };
        self.error_at(t.span, &message)
    }

    fn expr(&mut self) -> Result<Expr, SourceError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek().tok {
                Tok::Op('+') => BinOp::Add,
                Tok::Op('-') => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.term()?;
            lhs = join(op, lhs, rhs);
        }
    }

    fn term(&mut self) -> Result<Expr, SourceError> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek().tok {
                Tok::Op('*') => BinOp::Mul,
                Tok::Op('/') => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.unary()?;
            lhs = join(op, lhs, rhs);
        }
    }

    fn unary(&mut self) -> Result<Expr, SourceError> {
        match self.peek().tok {
            Tok::Op('-') => {
                let start = self.bump().span.start;
                let operand = self.unary()?;
                let end = operand.span.end;
                Ok(Expr {
                    kind: ExprKind::Neg(Box::new(operand)),
                    span: Span { start, end },
                })
            }
            Tok::Op('+') => {
                self.bump();
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<Expr, SourceError> {
        let base = self.primary()?;
        if self.peek().tok == Tok::Op('^') {
            self.bump();
            let exponent = self.unary()?;
            return Ok(join(BinOp::Pow, base, exponent));
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<Expr, SourceError> {
        let tok = self.peek().clone();
        match tok.tok {
            Tok::Num(v) => {
                self.bump();
                Ok(Expr {
                    kind: ExprKind::Num(v),
                    span: tok.span,
                })
            }
            Tok::LParen => {
                self.bump();
                let mut inner = self.expr()?;
                self.expect_rparen()?;
                inner.span = Span {
                    start: tok.span.start,
                    end: self.tokens[self.pos - 1].span.end,
                };
                Ok(inner)
            }
            Tok::Ident(ref name) => {
                self.bump();
                if let Some(f) = Func::from_name(name) {
                    return self.call(f, tok.span);
                }
                let kind = match name.as_str() {
                    "pi" => ExprKind::Pi,
                    "t" => ExprKind::Var(Var::T),
                    _ => match state_index(name) {
                        Some(i) => ExprKind::Var(Var::X(i)),
                        None => return Err(self.error_at(tok.span, "unknown identifier")),
                    },
                };
                if let ExprKind::Var(v) = kind {
                    if !self.vars.contains(v) {
                        return Err(self.error_at(tok.span, "variable not allowed here"));
                    }
                }
                Ok(Expr {
                    kind,
                    span: tok.span,
                })
            }
            Tok::RParen => Err(self.error_here("unbalanced ')'")),
            _ => Err(self.error_here("expected a number, variable, function or '('")),
        }
    }

    fn call(&mut self, f: Func, name_span: Span) -> Result<Expr, SourceError> {
        if self.peek().tok != Tok::LParen {
            return Err(self.error_at(name_span, "expected '(' after function name"));
        }
        self.bump();
        let mut args = vec![self.expr()?];
        while self.peek().tok == Tok::Comma {
            self.bump();
            args.push(self.expr()?);
        }
        self.expect_rparen()?;
        if args.len() != f.arity() {
            return Err(self.error_at(
                name_span,
                &format!(
                    "{} takes {} argument(s), got {}",
                    f.name(),
                    f.arity(),
                    args.len()
                ),
            ));
        }
        Ok(Expr {
            kind: ExprKind::Call(f, args),
            span: Span {
                start: name_span.start,
                end: self.tokens[self.pos - 1].span.end,
            },
        })
    }

    fn expect_rparen(&mut self) -> Result<(), SourceError> {
        if self.peek().tok == Tok::RParen {
            self.bump();
            Ok(())
        } else {
            Err(self.error_here("expected ')'"))
        }
    }
}

fn join(op: BinOp, lhs: Expr, rhs: Expr) -> Expr {
    let span = Span {
        start: lhs.span.start,
        end: rhs.span.end,
    };
    Expr {
        kind: ExprKind::Binary(op, Box::new(lhs), Box::new(rhs)),
        span,
    }
}

/// `x12` -> `Some(12)`; rejects `x`, `x0` and leading zeros.
fn state_index(name: &str) -> Option<usize> {
    let digits = name.strip_prefix('x')?;
    if digits.is_empty() || digits.starts_with('0') || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    digits.parse().ok()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ev(s: &str) -> f64 {
        parse(s, &VarSet::time()).unwrap().eval(0.0, None).unwrap()
    }

    #[test]
    fn precedence() {
        assert_eq!(ev("2+3*4"), 14.0);
        assert_eq!(ev("2^3^2"), 512.0);
        assert_eq!(ev("-2^2"), -4.0);
        assert_eq!(ev("2^-1"), 0.5);
        assert_eq!(ev("(2+3)*4"), 20.0);
        assert_eq!(ev("8/4/2"), 1.0);
        assert_eq!(ev("1-2-3"), -4.0);
        assert_eq!(ev("+3"), 3.0);
        assert_eq!(ev("1.5e2 + .5"), 150.5);
    }

    #[test]
    fn errors_carry_offsets() {
        let vars = VarSet::time();
        let e = parse("t + foo", &vars).unwrap_err();
        assert_eq!((e.offset, e.token.as_str()), (4, "foo"));
        let e = parse("(t + 1", &vars).unwrap_err();
        assert!(e.message.contains("expected ')'"));
        assert!(e.offset < 6);
        let e = parse("t + 1)", &vars).unwrap_err();
        assert_eq!(e.offset, 5);
        let e = parse("", &vars).unwrap_err();
        assert_eq!((e.offset, e.message.as_str()), (0, "empty expression"));
        let e = parse("   ", &vars).unwrap_err();
        assert_eq!(e.message, "empty expression");
        let e = parse("pow(t)", &vars).unwrap_err();
        assert!(e.message.contains("takes 2"));
        let e = parse("sin t", &vars).unwrap_err();
        assert!(e.message.contains("expected '('"));
        let e = parse("x1 + t", &vars).unwrap_err();
        assert_eq!(e.message, "variable not allowed here");
        let e = parse("t # 2", &vars).unwrap_err();
        assert_eq!((e.offset, e.token.as_str()), (2, "#"));
        assert!(parse("1..2", &vars).is_err());
        assert!(parse("x0", &VarSet::state(2)).is_err());
        assert!(parse("t*", &vars).is_err());
    }

    #[test]
    fn state_variables() {
        let e = parse("x2 - x1", &VarSet::state(2)).unwrap();
        assert_eq!(e.eval(0.0, Some(&[-5.0, 2.0])).unwrap(), 7.0);
        assert!(parse("x3", &VarSet::state(2)).is_err());
    }
}
