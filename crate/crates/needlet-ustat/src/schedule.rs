//! Intensity-schedule mini-grammar: `B^(j*EXPR) [* j^EXPR] [* EXPR]` where
//! EXPR is arithmetic over decimal constants and the named constants s and d.
//! Parsed once into a small AST that evaluates per level; the canonical form
//! is echoed back for audit.

use crate::error::{Error, Result};
use std::fmt;

/// Arithmetic expression over decimals and the named constants {s, d}.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    S,
    D,
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    /// Division remembers the operator column for the divide-by-zero report.
    Div(Box<Expr>, Box<Expr>, usize),
}

impl Expr {
    pub fn eval(&self, s: f64, d: f64) -> Result<f64> {
        Ok(match self {
            Expr::Num(v) => *v,
            Expr::S => s,
            Expr::D => d,
            Expr::Neg(a) => -a.eval(s, d)?,
            Expr::Add(a, b) => a.eval(s, d)? + b.eval(s, d)?,
            Expr::Sub(a, b) => a.eval(s, d)? - b.eval(s, d)?,
            Expr::Mul(a, b) => a.eval(s, d)? * b.eval(s, d)?,
            Expr::Div(a, b, column) => {
                let den = b.eval(s, d)?;
                if den == 0.0 {
                    return Err(Error::Syntax {
                        column: *column,
                        message: "division by zero in schedule expression".into(),
                    });
                }
                a.eval(s, d)? / den
            }
        })
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(v) => write!(f, "{v}"),
            Expr::S => write!(f, "s"),
            Expr::D => write!(f, "d"),
            Expr::Neg(a) => write!(f, "(-{a})"),
            Expr::Add(a, b) => write!(f, "({a}+{b})"),
            Expr::Sub(a, b) => write!(f, "({a}-{b})"),
            Expr::Mul(a, b) => write!(f, "({a}*{b})"),
            Expr::Div(a, b, _) => write!(f, "({a}/{b})"),
        }
    }
}

/// Parsed schedule R_t(j) = B^(j·exponent) · j^j_power · constant.
#[derive(Debug, Clone, PartialEq)]
pub struct Schedule {
    pub exponent: Expr,
    pub j_power: Option<Expr>,
    pub constant: Option<Expr>,
}

impl Schedule {
    /// Evaluate R_t at one level.
    pub fn evaluate(&self, j: usize, b: f64, s: f64, d: f64) -> Result<f64> {
        let mut value = b.powf(j as f64 * self.exponent.eval(s, d)?);
        if let Some(p) = &self.j_power {
            value *= (j as f64).powf(p.eval(s, d)?);
        }
        if let Some(c) = &self.constant {
            value *= c.eval(s, d)?;
        }
        Ok(value)
    }

    /// Canonical text form (fully parenthesized, whitespace-normalized).
    pub fn canonical(&self) -> String {
        let mut out = format!("B^(j*{})", self.exponent);
        if let Some(p) = &self.j_power {
            out.push_str(&format!(" * j^{p}"));
        }
        if let Some(c) = &self.constant {
            out.push_str(&format!(" * {c}"));
        }
        out
    }
}

struct Parser<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Parser<'a> {
    fn new(text: &'a str) -> Self {
        Parser {
            bytes: text.as_bytes(),
            pos: 0,
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.bytes.get(self.pos).copied()
    }

    fn error<T>(&self, message: &str) -> Result<T> {
        Err(Error::Syntax {
            column: self.pos,
            message: message.into(),
        })
    }

    fn expect(&mut self, c: u8) -> Result<()> {
        if self.peek() == Some(c) {
            self.pos += 1;
            Ok(())
        } else {
            self.error(&format!("expected '{}'", c as char))
        }
    }

    fn number(&mut self) -> Result<Expr> {
        let start = self.pos;
        while self
            .bytes
            .get(self.pos)
            .is_some_and(|c| c.is_ascii_digit() || *c == b'.')
        {
            self.pos += 1;
        }
        let text = std::str::from_utf8(&self.bytes[start..self.pos]).expect("ascii");
        match text.parse::<f64>() {
            Ok(v) => Ok(Expr::Num(v)),
            Err(_) => {
                self.pos = start;
                self.error("expected a decimal constant")
            }
        }
    }

    fn primary(&mut self) -> Result<Expr> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect(b')')?;
                Ok(e)
            }
            Some(b's') => {
                self.pos += 1;
                Ok(Expr::S)
            }
            Some(b'd') => {
                self.pos += 1;
                Ok(Expr::D)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            _ => self.error("expected a constant, 's', 'd' or '('"),
        }
    }

    fn unary(&mut self) -> Result<Expr> {
        if self.peek() == Some(b'-') {
            self.pos += 1;
            Ok(Expr::Neg(Box::new(self.unary()?)))
        } else {
            self.primary()
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut left = self.unary()?;
        loop {
            match self.peek() {
                Some(b'*') => {
                    self.pos += 1;
                    left = Expr::Mul(Box::new(left), Box::new(self.unary()?));
                }
                Some(b'/') => {
                    let column = self.pos;
                    self.pos += 1;
                    left = Expr::Div(Box::new(left), Box::new(self.unary()?), column);
                }
                _ => return Ok(left),
            }
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut left = self.term()?;
        loop {
            match self.peek() {
                Some(b'+') => {
                    self.pos += 1;
                    left = Expr::Add(Box::new(left), Box::new(self.term()?));
                }
                Some(b'-') => {
                    self.pos += 1;
                    left = Expr::Sub(Box::new(left), Box::new(self.term()?));
                }
                _ => return Ok(left),
            }
        }
    }

    fn schedule(&mut self) -> Result<Schedule> {
        self.expect(b'B')?;
        self.expect(b'^')?;
        self.expect(b'(')?;
        self.expect(b'j')?;
        self.expect(b'*')?;
        let exponent = self.expr()?;
        self.expect(b')')?;
        let mut j_power = None;
        let mut constant = None;
        while self.peek() == Some(b'*') {
            self.pos += 1;
            if self.peek() == Some(b'j') {
                if j_power.is_some() || constant.is_some() {
                    return self.error("the j factor must appear once, before the constant");
                }
                self.pos += 1;
                if self.peek() == Some(b'^') {
                    self.pos += 1;
                    j_power = Some(self.unary()?);
                } else {
                    j_power = Some(Expr::Num(1.0));
                }
            } else {
                if constant.is_some() {
                    return self.error("at most one trailing constant factor");
                }
                constant = Some(self.expr()?);
            }
        }
        if self.peek().is_some() {
            return self.error("unexpected trailing input");
        }
        Ok(Schedule {
            exponent,
            j_power,
            constant,
        })
    }
}

/// Parse the schedule grammar `B^(j*EXPR) [* j^EXPR] [* EXPR]`.
/// Whitespace-insensitive; errors carry the 0-based column.
pub fn parse_schedule(text: &str) -> Result<Schedule> {
    Parser::new(text).schedule()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grammar_examples() {
        let sched = parse_schedule("B^(j*(2*s+d)) * j").unwrap();
        let v = sched.evaluate(3, 2.0, 1.0, 1.0).unwrap();
        assert_eq!(v, 1536.0); // 2^9 · 3

        let sched = parse_schedule("B^(j*d)").unwrap();
        assert_eq!(sched.evaluate(4, 2.0, 1.0, 1.0).unwrap(), 16.0);

        match parse_schedule("B^(j*").unwrap_err() {
            Error::Syntax { column, .. } => assert_eq!(column, 5),
            e => panic!("unexpected error {e}"),
        }
    }

    #[test]
    fn whitespace_insensitive() {
        let a = parse_schedule("B^(j*(2*s+d))*j^2*3.5").unwrap();
        let b = parse_schedule("  B ^ ( j * ( 2*s + d ) ) * j ^ 2 * 3.5 ").unwrap();
        assert_eq!(a, b);
        assert_eq!(
            a.evaluate(2, 2.0, 1.0, 1.0).unwrap(),
            2.0f64.powi(6) * 4.0 * 3.5
        );
    }

    #[test]
    fn canonical_round_trips() {
        for text in [
            "B^(j*d)",
            "B^(j*(2*s+d)) * j",
            "B^(j*(2*s+d+1))",
            "B^(j*d)*j^2",
            "B^(j*1)*j^-1*2",
            "B^(j*(s-d/2))*0.25",
        ] {
            let parsed = parse_schedule(text).unwrap();
            let canon = parsed.canonical();
            let reparsed = parse_schedule(&canon).unwrap();
            assert_eq!(reparsed.canonical(), canon, "{text}");
            let v1 = parsed.evaluate(5, 2.0, 1.5, 1.0).unwrap();
            let v2 = reparsed.evaluate(5, 2.0, 1.5, 1.0).unwrap();
            assert_eq!(v1.to_bits(), v2.to_bits(), "{text}");
        }
    }

    #[test]
    fn division_by_zero_is_reported_at_the_operator() {
        let sched = parse_schedule("B^(j*1/(s-1))").unwrap();
        assert!(sched.evaluate(3, 2.0, 2.0, 1.0).is_ok());
        match sched.evaluate(3, 2.0, 1.0, 1.0).unwrap_err() {
            Error::Syntax { column, message } => {
                assert_eq!(column, 6);
                assert!(message.contains("division by zero"), "{message}");
            }
            e => panic!("unexpected error {e}"),
        }
    }

    #[test]
    fn malformed_inputs() {
        for (text, col) in [
            ("", 0),
            ("A^(j*d)", 0),
            ("B^(k*d)", 3),
            ("B^(j*d", 6),
            ("B^(j*d) * q", 10),
            ("B^(j*d) extra", 8),
            ("B^(j*x)", 5),
            ("B^(j*d) * j * j", 14),
            ("B^(j*d) * 2 * j", 14),
        ] {
            match parse_schedule(text).unwrap_err() {
                Error::Syntax { column, .. } => {
                    assert_eq!(column, col, "input {text:?}")
                }
                e => panic!("unexpected error for {text:?}: {e}"),
            }
        }
    }

    #[test]
    fn nested_arithmetic_and_precedence() {
        let sched = parse_schedule("B^(j*(s+d*2))").unwrap();
        // s + d·2 with s=1, d=1 → 3 (multiplication binds tighter)
        assert_eq!(sched.evaluate(1, 2.0, 1.0, 1.0).unwrap(), 8.0);
        let sched = parse_schedule("B^(j*((s+d)*2))").unwrap();
        assert_eq!(sched.evaluate(1, 2.0, 1.0, 1.0).unwrap(), 16.0);
        let sched = parse_schedule("B^(j*-s)").unwrap();
        assert_eq!(sched.evaluate(2, 2.0, 1.0, 1.0).unwrap(), 0.25);
    }
}
