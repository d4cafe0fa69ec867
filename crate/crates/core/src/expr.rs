//! Scalar formulas in one positive-integer variable `n`.
//!
//! Grammar (whitespace-insensitive, left-associative):
//!
//! ```text
//! expr  := term (('+' | '-') term)*
//! term  := unary (('*' | '/') unary)*
//! unary := '-' unary | power
//! power := atom ('^' signed-integer)?
//! atom  := number | 'n' | '(' expr ')'
//! ```
//!
//! Unary minus binds looser than `^`, so `-2^2` is `-4`.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const MAX_DEPTH: usize = 64;
pub const MAX_EXPONENT: i32 = 12;

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Number(f64),
    Var,
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, i32),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseErrorKind {
    #[error("unexpected character '{0}'")]
    UnexpectedChar(char),
    #[error("unexpected end of input")]
    UnexpectedEnd,
    #[error("unknown identifier '{0}'")]
    UnknownIdentifier(String),
    #[error("exponent must be an integer in [-{MAX_EXPONENT}, {MAX_EXPONENT}]")]
    ExponentOutOfRange,
    #[error("malformed number")]
    BadNumber,
    #[error("expression nested deeper than {MAX_DEPTH}")]
    TooDeep,
    #[error("empty expression")]
    Empty,
    #[error("non-ASCII input")]
    NonAscii,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("syntax error at byte {offset}: {kind}")]
pub struct ParseError {
    pub offset: usize,
    pub kind: ParseErrorKind,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("division by zero at n = {n}")]
    DivisionByZero { n: u64 },
    #[error("non-finite value at n = {n}")]
    NonFinite { n: u64 },
    #[error("variable n must be at least 1")]
    ZeroIndex,
}

pub fn parse(src: &str) -> Result<Expr, ParseError> {
    if let Some(offset) = src.bytes().position(|b| !b.is_ascii()) {
        return Err(ParseError {
            offset,
            kind: ParseErrorKind::NonAscii,
        });
    }
    let mut p = Parser {
        src: src.as_bytes(),
        pos: 0,
        depth: 0,
    };
    p.skip_ws();
    if p.pos == p.src.len() {
        return Err(p.error(ParseErrorKind::Empty));
    }
    let e = p.expr()?;
    p.skip_ws();
    match p.peek() {
        None => Ok(e),
        Some(c) => Err(p.error(ParseErrorKind::UnexpectedChar(c as char))),
    }
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    depth: usize,
}

impl Parser<'_> {
    fn error(&self, kind: ParseErrorKind) -> ParseError {
        ParseError {
            offset: self.pos,
            kind,
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&self) -> Option<u8> {
        self.src.get(self.pos).copied()
    }

    fn eat(&mut self, c: u8) -> bool {
        self.skip_ws();
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn enter(&mut self) -> Result<(), ParseError> {
        self.depth += 1;
        if self.depth > MAX_DEPTH {
            Err(self.error(ParseErrorKind::TooDeep))
        } else {
            Ok(())
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        self.enter()?;
        let mut lhs = self.term()?;
        loop {
            if self.eat(b'+') {
                lhs = Expr::Add(Box::new(lhs), Box::new(self.term()?));
            } else if self.eat(b'-') {
                lhs = Expr::Sub(Box::new(lhs), Box::new(self.term()?));
            } else {
                break;
            }
        }
        self.depth -= 1;
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            if self.eat(b'*') {
                lhs = Expr::Mul(Box::new(lhs), Box::new(self.unary()?));
            } else if self.eat(b'/') {
                lhs = Expr::Div(Box::new(lhs), Box::new(self.unary()?));
            } else {
                break;
            }
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if self.eat(b'-') {
            self.enter()?;
            let inner = self.unary()?;
            self.depth -= 1;
            Ok(Expr::Neg(Box::new(inner)))
        } else {
            self.power()
        }
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.atom()?;
        if self.eat(b'^') {
            self.skip_ws();
            let start = self.pos;
            let negative = match self.peek() {
                Some(b'-') => {
                    self.pos += 1;
                    true
                }
                Some(b'+') => {
                    self.pos += 1;
                    false
                }
                _ => false,
            };
            let digits_start = self.pos;
            while self.peek().is_some_and(|c| c.is_ascii_digit()) {
                self.pos += 1;
            }
            if self.pos == digits_start {
                return Err(match self.peek() {
                    None => self.error(ParseErrorKind::UnexpectedEnd),
                    Some(_) => ParseError {
                        offset: start,
                        kind: ParseErrorKind::ExponentOutOfRange,
                    },
                });
            }
            let digits = std::str::from_utf8(&self.src[digits_start..self.pos]).expect("ascii");
            let magnitude: i64 = digits.parse().unwrap_or(i64::MAX);
            if magnitude > MAX_EXPONENT as i64 {
                return Err(ParseError {
                    offset: start,
                    kind: ParseErrorKind::ExponentOutOfRange,
                });
            }
            let e = if negative { -magnitude } else { magnitude } as i32;
            return Ok(Expr::Pow(Box::new(base), e));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        self.skip_ws();
        match self.peek() {
            None => Err(self.error(ParseErrorKind::UnexpectedEnd)),
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                if !self.eat(b')') {
                    return Err(match self.peek() {
                        None => self.error(ParseErrorKind::UnexpectedEnd),
                        Some(c) => self.error(ParseErrorKind::UnexpectedChar(c as char)),
                    });
                }
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() || c == b'_' => {
                let start = self.pos;
                while self
                    .peek()
                    .is_some_and(|c| c.is_ascii_alphanumeric() || c == b'_')
                {
                    self.pos += 1;
                }
                let ident = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii");
                if ident == "n" {
                    Ok(Expr::Var)
                } else {
                    Err(ParseError {
                        offset: start,
                        kind: ParseErrorKind::UnknownIdentifier(ident.to_string()),
                    })
                }
            }
            Some(c) => Err(self.error(ParseErrorKind::UnexpectedChar(c as char))),
        }
    }

    fn number(&mut self) -> Result<Expr, ParseError> {
        let start = self.pos;
        let digits = |p: &mut Self| {
            let s = p.pos;
            while p.peek().is_some_and(|c| c.is_ascii_digit()) {
                p.pos += 1;
            }
            p.pos - s
        };
        let mut count = digits(self);
        if self.peek() == Some(b'.') {
            self.pos += 1;
            count += digits(self);
        }
        if count == 0 {
            return Err(ParseError {
                offset: start,
                kind: ParseErrorKind::BadNumber,
            });
        }
        if matches!(self.peek(), Some(b'e' | b'E')) {
            let save = self.pos;
            self.pos += 1;
            if matches!(self.peek(), Some(b'+' | b'-')) {
                self.pos += 1;
            }
            if digits(self) == 0 {
                self.pos = save;
            }
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii");
        text.parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .map(Expr::Number)
            .ok_or(ParseError {
                offset: start,
                kind: ParseErrorKind::BadNumber,
            })
    }
}

impl Expr {
    pub fn eval(&self, n: u64) -> Result<f64, EvalError> {
        if n == 0 {
            return Err(EvalError::ZeroIndex);
        }
        self.eval_at(n)
    }

    fn eval_at(&self, n: u64) -> Result<f64, EvalError> {
        let v = match self {
            Expr::Number(x) => *x,
            Expr::Var => n as f64,
            Expr::Neg(e) => -e.eval_at(n)?,
            Expr::Add(a, b) => a.eval_at(n)? + b.eval_at(n)?,
            Expr::Sub(a, b) => a.eval_at(n)? - b.eval_at(n)?,
            Expr::Mul(a, b) => a.eval_at(n)? * b.eval_at(n)?,
            Expr::Div(a, b) => {
                let num = a.eval_at(n)?;
                let den = b.eval_at(n)?;
                if den == 0.0 {
                    return Err(EvalError::DivisionByZero { n });
                }
                num / den
            }
            Expr::Pow(base, e) => {
                let b = base.eval_at(n)?;
                if b == 0.0 && *e < 0 {
                    return Err(EvalError::DivisionByZero { n });
                }
                b.powi(*e)
            }
        };
        if v.is_finite() {
            Ok(v)
        } else {
            Err(EvalError::NonFinite { n })
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            Expr::Number(_) | Expr::Var => 1,
            Expr::Neg(e) | Expr::Pow(e, _) => 1 + e.depth(),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
                1 + a.depth().max(b.depth())
            }
        }
    }
}

/// Fully parenthesized rendering; reparses to the same tree.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Number(x) => write!(f, "{x}"),
            Expr::Var => write!(f, "n"),
            Expr::Neg(e) => write!(f, "(-{e})"),
            Expr::Add(a, b) => write!(f, "({a} + {b})"),
            Expr::Sub(a, b) => write!(f, "({a} - {b})"),
            Expr::Mul(a, b) => write!(f, "({a} * {b})"),
            Expr::Div(a, b) => write!(f, "({a} / {b})"),
            Expr::Pow(b, e) => write!(f, "({b}^{e})"),
        }
    }
}

pub fn eval(ast: &Expr, n: u64) -> Result<f64, EvalError> {
    ast.eval(n)
}

/// A parsed formula that remembers its source text (serialized as the text).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Formula {
    src: String,
    ast: Expr,
}

impl Formula {
    pub fn parse(src: &str) -> Result<Self, ParseError> {
        Ok(Self {
            src: src.to_string(),
            ast: parse(src)?,
        })
    }

    pub fn source(&self) -> &str {
        &self.src
    }

    pub fn ast(&self) -> &Expr {
        &self.ast
    }

    pub fn eval(&self, n: u64) -> Result<f64, EvalError> {
        self.ast.eval(n)
    }
}

impl TryFrom<String> for Formula {
    type Error = ParseError;

    fn try_from(src: String) -> Result<Self, ParseError> {
        let ast = parse(&src)?;
        Ok(Self { src, ast })
    }
}

impl From<Formula> for String {
    fn from(f: Formula) -> String {
        f.src
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ev(src: &str, n: u64) -> f64 {
        parse(src).unwrap().eval(n).unwrap()
    }

    #[test]
    fn operator_a_of_the_gco_example() {
        assert_eq!(ev("1 + 1/(2*(n+1)^2) + 1/(2*(n+1)^3)", 1), 1.1875);
    }

    #[test]
    fn sequence_examples() {
        assert_eq!(parse("n").unwrap(), Expr::Var);
        assert_eq!(ev("n", 7), 7.0);
        assert_eq!(ev("2 + 2/n^2", 2), 2.5);
        assert_eq!(ev("2 + 2/n^3", 1), 4.0);
        assert_eq!(ev("(n - n)", 13), 0.0);
    }

    #[test]
    fn precedence() {
        assert_eq!(ev("2+3*4", 1), 14.0);
        assert_eq!(ev("-2^2", 1), -4.0);
        assert_eq!(ev("2^-2", 1), 0.25);
        assert_eq!(ev("8/4/2", 1), 1.0);
        assert_eq!(ev("10-4-3", 1), 3.0);
        assert_eq!(ev("--3", 1), 3.0);
        assert_eq!(ev("1.5e1 + .5", 1), 15.5);
    }

    #[test]
    fn eval_errors() {
        assert_eq!(
            parse("1/(n-3)").unwrap().eval(3),
            Err(EvalError::DivisionByZero { n: 3 })
        );
        assert_eq!(
            parse("(n-1)^-2").unwrap().eval(1),
            Err(EvalError::DivisionByZero { n: 1 })
        );
        assert_eq!(
            parse("(n*1e300)^12").unwrap().eval(2),
            Err(EvalError::NonFinite { n: 2 })
        );
        assert_eq!(parse("n").unwrap().eval(0), Err(EvalError::ZeroIndex));
    }

    #[test]
    fn parse_errors_carry_offsets() {
        let e = parse("1 + x").unwrap_err();
        assert_eq!(e.offset, 4);
        assert_eq!(e.kind, ParseErrorKind::UnknownIdentifier("x".into()));
        let e = parse("n^13").unwrap_err();
        assert_eq!(e.kind, ParseErrorKind::ExponentOutOfRange);
        assert_eq!(parse("n^1.5").unwrap_err().kind, ParseErrorKind::UnexpectedChar('.'));
        assert_eq!(parse("n^n").unwrap_err().kind, ParseErrorKind::ExponentOutOfRange);
        assert_eq!(parse("(1 + 2").unwrap_err().kind, ParseErrorKind::UnexpectedEnd);
        assert_eq!(parse("1 +").unwrap_err().kind, ParseErrorKind::UnexpectedEnd);
        assert_eq!(parse("1 2").unwrap_err(), ParseError { offset: 2, kind: ParseErrorKind::UnexpectedChar('2') });
        assert_eq!(parse("   ").unwrap_err().kind, ParseErrorKind::Empty);
        assert_eq!(parse("sin(n)").unwrap_err().kind, ParseErrorKind::UnknownIdentifier("sin".into()));
        assert_eq!(parse("n·2").unwrap_err().kind, ParseErrorKind::NonAscii);
    }

    #[test]
    fn depth_limit() {
        let ok = format!("{}n{}", "(".repeat(60), ")".repeat(60));
        assert!(parse(&ok).is_ok());
        let deep = format!("{}n{}", "(".repeat(70), ")".repeat(70));
        assert_eq!(parse(&deep).unwrap_err().kind, ParseErrorKind::TooDeep);
        let negs = format!("{}n", "-".repeat(70));
        assert_eq!(parse(&negs).unwrap_err().kind, ParseErrorKind::TooDeep);
    }

    #[test]
    fn formula_serializes_as_source() {
        let f = Formula::parse("1/n^2").unwrap();
        assert_eq!(serde_json::to_string(&f).unwrap(), "\"1/n^2\"");
        let back: Formula = serde_json::from_str("\"1/n^2\"").unwrap();
        assert_eq!(back, f);
        assert!(serde_json::from_str::<Formula>("\"1/\"").is_err());
    }

    fn arb_expr() -> impl Strategy<Value = Expr> {
        let leaf = prop_oneof![
            (0u32..1000).prop_map(|v| Expr::Number(v as f64 / 8.0)),
            Just(Expr::Var),
        ];
        leaf.prop_recursive(6, 48, 2, |inner| {
            prop_oneof![
                inner.clone().prop_map(|e| Expr::Neg(Box::new(e))),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::Add(Box::new(a), Box::new(b))),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::Sub(Box::new(a), Box::new(b))),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::Mul(Box::new(a), Box::new(b))),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::Div(Box::new(a), Box::new(b))),
                (inner, -12i32..=12).prop_map(|(a, e)| Expr::Pow(Box::new(a), e)),
            ]
        })
    }

    proptest! {
        #[test]
        fn display_reparses_to_same_tree(e in arb_expr()) {
            let printed = e.to_string();
            prop_assert_eq!(parse(&printed).unwrap(), e);
        }

        #[test]
        fn eval_is_deterministic(e in arb_expr(), n in 1u64..1000) {
            let a = e.eval(n);
            let b = e.eval(n);
            match (a, b) {
                (Ok(x), Ok(y)) => prop_assert_eq!(x.to_bits(), y.to_bits()),
                (x, y) => prop_assert_eq!(x, y),
            }
        }
    }
}
