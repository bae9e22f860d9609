//! A small arithmetic expression language over the phase-space variables
//! `p` and `q`: numbers, `+ - * / ^`, parentheses and the functions
//! `exp`, `ln`, `sqrt`. There is no implicit multiplication.

use std::fmt;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    P,
    Q,
    Neg(Box<Expr>),
    Bin(Op, Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Op {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Exp,
    Ln,
    Sqrt,
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Sym(char),
}

fn tokenize(src: &str) -> Result<Vec<(usize, Tok)>> {
    let chars: Vec<(usize, char)> = src.char_indices().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let (pos, c) = chars[i];
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || c == '.' {
            let start = i;
            while i < chars.len() && (chars[i].1.is_ascii_digit() || chars[i].1 == '.') {
                i += 1;
            }
            // exponent part, e.g. 1e-3
            if i < chars.len() && (chars[i].1 == 'e' || chars[i].1 == 'E') {
                let mut j = i + 1;
                if j < chars.len() && (chars[j].1 == '+' || chars[j].1 == '-') {
                    j += 1;
                }
                if j < chars.len() && chars[j].1.is_ascii_digit() {
                    i = j;
                    while i < chars.len() && chars[i].1.is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let end = if i < chars.len() { chars[i].0 } else { src.len() };
            let text = &src[chars[start].0..end];
            let v = text
                .parse::<f64>()
                .map_err(|_| Error::Syntax { position: pos, message: format!("malformed number `{text}`") })?;
            out.push((pos, Tok::Num(v)));
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].1.is_ascii_alphanumeric() || chars[i].1 == '_') {
                i += 1;
            }
            let end = if i < chars.len() { chars[i].0 } else { src.len() };
            out.push((pos, Tok::Ident(src[chars[start].0..end].to_string())));
        } else if "+-*/^()".contains(c) {
            out.push((pos, Tok::Sym(c)));
            i += 1;
        } else {
            return Err(Error::Syntax { position: pos, message: format!("unexpected character `{c}`") });
        }
    }
    Ok(out)
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    at: usize,
    end: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.at).map(|t| &t.1)
    }

    fn pos(&self) -> usize {
        self.toks.get(self.at).map_or(self.end, |t| t.0)
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(&Tok::Sym(c)) {
            self.at += 1;
            true
        } else {
            false
        }
    }

    fn error<T>(&self, message: impl Into<String>) -> Result<T> {
        Err(Error::Syntax { position: self.pos(), message: message.into() })
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        loop {
            let op = if self.eat('+') {
                Op::Add
            } else if self.eat('-') {
                Op::Sub
            } else {
                return Ok(lhs);
            };
            let rhs = self.term()?;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        loop {
            let op = if self.eat('*') {
                Op::Mul
            } else if self.eat('/') {
                Op::Div
            } else {
                return Ok(lhs);
            };
            let rhs = self.unary()?;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn unary(&mut self) -> Result<Expr> {
        if self.eat('-') {
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        if self.eat('+') {
            return self.unary();
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr> {
        let base = self.primary()?;
        if self.eat('^') {
            // right associative; the exponent may carry a sign
            let exp = self.unary()?;
            return Ok(Expr::Bin(Op::Pow, Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<Expr> {
        let pos = self.pos();
        match self.peek().cloned() {
            Some(Tok::Num(v)) => {
                self.at += 1;
                Ok(Expr::Num(v))
            }
            Some(Tok::Ident(name)) => {
                self.at += 1;
                match name.as_str() {
                    "p" => Ok(Expr::P),
                    "q" => Ok(Expr::Q),
                    "exp" | "ln" | "sqrt" => {
                        let func = match name.as_str() {
                            "exp" => Func::Exp,
                            "ln" => Func::Ln,
                            _ => Func::Sqrt,
                        };
                        if !self.eat('(') {
                            return self.error(format!("expected `(` after `{name}`"));
                        }
                        let arg = self.expr()?;
                        if !self.eat(')') {
                            return self.error("expected `)`");
                        }
                        Ok(Expr::Call(func, Box::new(arg)))
                    }
                    _ => Err(Error::Syntax { position: pos, message: format!("unknown identifier `{name}`") }),
                }
            }
            Some(Tok::Sym('(')) => {
                self.at += 1;
                let e = self.expr()?;
                if !self.eat(')') {
                    return self.error("expected `)`");
                }
                Ok(e)
            }
            Some(Tok::Sym(c)) => self.error(format!("unexpected `{c}`")),
            None => self.error("unexpected end of expression"),
        }
    }
}

/// Parses `src` into an expression tree.
pub fn parse_expression(src: &str) -> Result<Expr> {
    let toks = tokenize(src)?;
    let mut parser = Parser { toks, at: 0, end: src.len() };
    let e = parser.expr()?;
    if parser.at != parser.toks.len() {
        return parser.error("unexpected token (implicit multiplication is not supported)");
    }
    Ok(e)
}

impl Expr {
    /// Evaluates at `(p, q)`; division by zero and logarithms or square roots
    /// of negative arguments are numeric errors.
    pub fn eval(&self, p: f64, q: f64) -> Result<f64> {
        Ok(match self {
            Expr::Num(v) => *v,
            Expr::P => p,
            Expr::Q => q,
            Expr::Neg(e) => -e.eval(p, q)?,
            Expr::Bin(op, a, b) => {
                let (a, b) = (a.eval(p, q)?, b.eval(p, q)?);
                match op {
                    Op::Add => a + b,
                    Op::Sub => a - b,
                    Op::Mul => a * b,
                    Op::Div => {
                        if b == 0.0 {
                            return Err(Error::Numeric(format!("division by zero at (p, q) = ({p}, {q})")));
                        }
                        a / b
                    }
                    Op::Pow => pow(a, b),
                }
            }
            Expr::Call(f, e) => {
                let v = e.eval(p, q)?;
                match f {
                    Func::Exp => v.exp(),
                    Func::Ln => {
                        if v <= 0.0 {
                            return Err(Error::Numeric(format!("ln({v}) at (p, q) = ({p}, {q})")));
                        }
                        v.ln()
                    }
                    Func::Sqrt => {
                        if v < 0.0 {
                            return Err(Error::Numeric(format!("sqrt({v}) at (p, q) = ({p}, {q})")));
                        }
                        v.sqrt()
                    }
                }
            }
        })
    }

    /// Like [`Expr::eval`] but maps numeric errors to NaN, for use inside integrands.
    pub fn eval_or_nan(&self, p: f64, q: f64) -> f64 {
        self.eval(p, q).unwrap_or(f64::NAN)
    }

    pub fn uses_p(&self) -> bool {
        match self {
            Expr::P => true,
            Expr::Num(_) | Expr::Q => false,
            Expr::Neg(e) | Expr::Call(_, e) => e.uses_p(),
            Expr::Bin(_, a, b) => a.uses_p() || b.uses_p(),
        }
    }

    pub fn uses_q(&self) -> bool {
        match self {
            Expr::Q => true,
            Expr::Num(_) | Expr::P => false,
            Expr::Neg(e) | Expr::Call(_, e) => e.uses_q(),
            Expr::Bin(_, a, b) => a.uses_q() || b.uses_q(),
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Bin(Op::Add | Op::Sub, ..) => 1,
            Expr::Bin(Op::Mul | Op::Div, ..) => 2,
            Expr::Neg(_) => 3,
            Expr::Bin(Op::Pow, ..) => 4,
            _ => 5,
        }
    }
}

fn pow(a: f64, b: f64) -> f64 {
    if b.fract() == 0.0 && b.abs() < 64.0 {
        a.powi(b as i32)
    } else {
        a.powf(b)
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let wrap = |f: &mut fmt::Formatter<'_>, e: &Expr, min: u8| {
            if e.precedence() < min {
                write!(f, "({e})")
            } else {
                write!(f, "{e}")
            }
        };
        match self {
            Expr::Num(v) => {
                if *v < 0.0 {
                    write!(f, "({v:?})")
                } else {
                    write!(f, "{v:?}")
                }
            }
            Expr::P => f.write_str("p"),
            Expr::Q => f.write_str("q"),
            Expr::Neg(e) => {
                f.write_str("-")?;
                wrap(f, e, 4)
            }
            Expr::Call(func, e) => {
                let name = match func {
                    Func::Exp => "exp",
                    Func::Ln => "ln",
                    Func::Sqrt => "sqrt",
                };
                write!(f, "{name}({e})")
            }
            Expr::Bin(op, a, b) => {
                let (sym, lp, rp) = match op {
                    Op::Add => (" + ", 1, 2),
                    Op::Sub => (" - ", 1, 2),
                    Op::Mul => ("*", 2, 3),
                    Op::Div => ("/", 2, 3),
                    Op::Pow => ("^", 5, 3),
                };
                wrap(f, a, lp)?;
                f.write_str(sym)?;
                wrap(f, b, rp)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use std::f64::consts::E;

    #[test]
    fn evaluates_examples() {
        assert_abs_diff_eq!(parse_expression("1/q^2").unwrap().eval(0.0, 2.0).unwrap(), 0.25);
        let f = parse_expression("exp(-p^2)*exp(-(ln(q)-1)^2)").unwrap();
        assert_abs_diff_eq!(f.eval(0.0, E).unwrap(), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(parse_expression("-p^2").unwrap().eval(3.0, 1.0).unwrap(), -9.0);
        assert_abs_diff_eq!(parse_expression("2^-1").unwrap().eval(0.0, 1.0).unwrap(), 0.5);
        assert_abs_diff_eq!(parse_expression("2^3^2").unwrap().eval(0.0, 1.0).unwrap(), 512.0);
        assert_abs_diff_eq!(parse_expression("1.5e-1*sqrt(q)").unwrap().eval(0.0, 4.0).unwrap(), 0.3);
    }

    #[test]
    fn rejects_implicit_multiplication() {
        match parse_expression("p q") {
            Err(Error::Syntax { position, .. }) => assert_eq!(position, 2),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn reports_parse_position() {
        match parse_expression("q+*p") {
            Err(Error::Syntax { position, .. }) => assert_eq!(position, 2),
            other => panic!("{other:?}"),
        }
        assert!(matches!(parse_expression("sin(p)"), Err(Error::Syntax { position: 0, .. })));
        assert!(matches!(parse_expression("(p"), Err(Error::Syntax { position: 2, .. })));
    }

    #[test]
    fn numeric_errors_at_evaluation_time() {
        assert!(matches!(parse_expression("1/p").unwrap().eval(0.0, 1.0), Err(Error::Numeric(_))));
        assert!(matches!(parse_expression("ln(p)").unwrap().eval(-1.0, 1.0), Err(Error::Numeric(_))));
        assert!(parse_expression("ln(p)").unwrap().eval_or_nan(-1.0, 1.0).is_nan());
    }

    #[test]
    fn variable_usage() {
        let e = parse_expression("exp(-q)*3").unwrap();
        assert!(!e.uses_p() && e.uses_q());
    }

    fn arb_expr() -> impl Strategy<Value = Expr> {
        let leaf = prop_oneof![
            (0.0f64..10.0).prop_map(Expr::Num),
            Just(Expr::P),
            Just(Expr::Q),
        ];
        leaf.prop_recursive(4, 24, 2, |inner| {
            prop_oneof![
                inner.clone().prop_map(|e| Expr::Neg(Box::new(e))),
                (inner.clone(), inner.clone(), prop_oneof![Just(Op::Add), Just(Op::Sub), Just(Op::Mul), Just(Op::Div), Just(Op::Pow)])
                    .prop_map(|(a, b, op)| Expr::Bin(op, Box::new(a), Box::new(b))),
                (inner, prop_oneof![Just(Func::Exp), Just(Func::Ln), Just(Func::Sqrt)])
                    .prop_map(|(e, f)| Expr::Call(f, Box::new(e))),
            ]
        })
    }

    proptest! {
        #[test]
        fn display_round_trips(e in arb_expr()) {
            let text = e.to_string();
            let back = parse_expression(&text).unwrap();
            prop_assert_eq!(back.to_string(), text);
            let (a, b) = (e.eval_or_nan(0.7, 1.3), back.eval_or_nan(0.7, 1.3));
            prop_assert!(a.to_bits() == b.to_bits() || (a.is_nan() && b.is_nan()));
        }
    }
}
