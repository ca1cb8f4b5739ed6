//! Recursive-descent parser for the expression grammar:
//!
//! ```text
//! expr   := ['+'|'-'] term (('+'|'-') term)*
//! term   := factor (('*'|'/') factor)*       '/' only by a numeric literal
//! factor := atom ('^' integer)?
//! atom   := number | 'x' | 'p' digit+ | ident '\''* | fn '(' expr ')' | '(' expr ')'
//! fn     := 'sin' | 'cos' | 'exp'
//! ```
//!
//! The operator grammar is the same with the reserved symbol `D` as an extra atom.

use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, Zero};
use thiserror::Error;

use super::{Elementary, Expr, FuncSym, Rational, Var};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("parse error at column {}: {message}", .position + 1)]
pub struct ParseError {
    /// Zero-based character offset.
    pub position: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(Rational, String),
    Ident(String),
    Prime,
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Num(_, s) | Tok::Ident(s) => write!(f, "{s}"),
            Tok::Prime => write!(f, "'"),
            Tok::Plus => write!(f, "+"),
            Tok::Minus => write!(f, "-"),
            Tok::Star => write!(f, "*"),
            Tok::Slash => write!(f, "/"),
            Tok::Caret => write!(f, "^"),
            Tok::LParen => write!(f, "("),
            Tok::RParen => write!(f, ")"),
        }
    }
}

fn tokenize(text: &str) -> Result<Vec<(usize, Tok)>, ParseError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let start = i;
        let simple = match c {
            '+' => Some(Tok::Plus),
            '-' | '\u{2212}' => Some(Tok::Minus),
            '*' => Some(Tok::Star),
            '/' => Some(Tok::Slash),
            '^' => Some(Tok::Caret),
            '(' => Some(Tok::LParen),
            ')' => Some(Tok::RParen),
            '\'' | '\u{2032}' => Some(Tok::Prime),
            _ => None,
        };
        if let Some(t) = simple {
            out.push((start, t));
            i += 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || c == '.' {
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            let s: String = chars[start..i].iter().collect();
            let value = decimal(&s).ok_or_else(|| ParseError {
                position: start,
                message: format!("malformed number `{s}`"),
            })?;
            out.push((start, Tok::Num(value, s)));
        } else if c.is_alphabetic() || c == '_' {
            while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            out.push((start, Tok::Ident(chars[start..i].iter().collect())));
        } else {
            return Err(ParseError {
                position: start,
                message: format!("unknown token `{c}`"),
            });
        }
    }
    Ok(out)
}

/// Exact value of a decimal literal such as `12`, `0.25` or `3.`.
fn decimal(s: &str) -> Option<Rational> {
    let (int, frac) = match s.split_once('.') {
        Some((a, b)) => (a, b),
        None => (s, ""),
    };
    if int.is_empty() && frac.is_empty() || frac.contains('.') {
        return None;
    }
    let digits = format!("{int}{frac}");
    let num: BigInt = digits.parse().ok()?;
    let den = num_traits::pow(BigInt::from(10), frac.len());
    Some(Rational::new(num, den))
}

/// Parse tree shared by both grammars.
#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Node {
    Const(Rational),
    Var(Var),
    Func(FuncSym),
    Apply(Elementary, Box<Node>),
    D,
    Sum(Vec<Node>),
    Product(Vec<Node>),
    Pow(Box<Node>, u32),
}

impl Node {
    fn negated(self) -> Node {
        match self {
            Node::Const(c) => Node::Const(-c),
            Node::Product(mut fs) => {
                if let Some(Node::Const(c)) = fs.first_mut() {
                    *c = -c.clone();
                } else {
                    fs.insert(0, Node::Const(-Rational::one()));
                }
                Node::Product(fs)
            }
            other => Node::Product(vec![Node::Const(-Rational::one()), other]),
        }
    }

    /// Converts to an expression tree; `None` if the operator symbol `D` occurs.
    pub(crate) fn to_expr(&self) -> Option<Expr> {
        Some(match self {
            Node::Const(c) => Expr::Const(c.clone()),
            Node::Var(v) => Expr::Var(*v),
            Node::Func(f) => Expr::Func(f.clone()),
            Node::Apply(f, arg) => Expr::Apply(*f, Box::new(arg.to_expr()?)),
            Node::D => return None,
            Node::Sum(ts) => Expr::Sum(ts.iter().map(Node::to_expr).collect::<Option<_>>()?),
            Node::Product(fs) => {
                Expr::Product(fs.iter().map(Node::to_expr).collect::<Option<_>>()?)
            }
            Node::Pow(b, e) => Expr::Pow(Box::new(b.to_expr()?), *e),
        })
    }
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    pos: usize,
    end: usize,
    allow_d: bool,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(_, t)| t)
    }

    fn here(&self) -> usize {
        self.toks.get(self.pos).map_or(self.end, |(p, _)| *p)
    }

    fn err<T>(&self, message: impl Into<String>) -> Result<T, ParseError> {
        Err(ParseError {
            position: self.here(),
            message: message.into(),
        })
    }

    fn bump(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|(_, t)| t.clone());
        self.pos += 1;
        t
    }

    fn expect(&mut self, want: Tok) -> Result<(), ParseError> {
        match self.peek() {
            Some(t) if *t == want => {
                self.pos += 1;
                Ok(())
            }
            Some(t) => self.err(format!("expected `{want}`, found `{t}`")),
            None => self.err(format!("expected `{want}`, found end of input")),
        }
    }

    fn expr(&mut self) -> Result<Node, ParseError> {
        let mut terms = Vec::new();
        let negate_first = match self.peek() {
            Some(Tok::Minus) => {
                self.pos += 1;
                true
            }
            Some(Tok::Plus) => {
                self.pos += 1;
                false
            }
            _ => false,
        };
        let first = self.term()?;
        terms.push(if negate_first { first.negated() } else { first });
        loop {
            match self.peek() {
                Some(Tok::Plus) => {
                    self.pos += 1;
                    terms.push(self.term()?);
                }
                Some(Tok::Minus) => {
                    self.pos += 1;
                    terms.push(self.term()?.negated());
                }
                _ => break,
            }
        }
        Ok(if terms.len() == 1 {
            terms.pop().unwrap()
        } else {
            Node::Sum(terms)
        })
    }

    fn term(&mut self) -> Result<Node, ParseError> {
        let mut factors = vec![self.factor()?];
        loop {
            match self.peek() {
                Some(Tok::Star) => {
                    self.pos += 1;
                    factors.push(self.factor()?);
                }
                Some(Tok::Slash) => {
                    self.pos += 1;
                    let q = match self.bump() {
                        Some(Tok::Num(q, _)) => q,
                        _ => {
                            self.pos -= 1;
                            return self.err("division is only allowed by a numeric literal");
                        }
                    };
                    if q.is_zero() {
                        self.pos -= 1;
                        return self.err("division by zero");
                    }
                    let inv = q.recip();
                    match factors.last_mut() {
                        Some(Node::Const(c)) => *c = &*c * &inv,
                        _ => factors.push(Node::Const(inv)),
                    }
                }
                _ => break,
            }
        }
        Ok(if factors.len() == 1 {
            factors.pop().unwrap()
        } else {
            Node::Product(factors)
        })
    }

    fn factor(&mut self) -> Result<Node, ParseError> {
        let base = self.atom()?;
        if self.peek() != Some(&Tok::Caret) {
            return Ok(base);
        }
        self.pos += 1;
        match self.peek().cloned() {
            Some(Tok::Num(q, s)) if q.is_integer() && !s.contains('.') => {
                let e: u32 = s.parse().or_else(|_| self.err("exponent too large"))?;
                self.pos += 1;
                Ok(Node::Pow(Box::new(base), e))
            }
            _ => self.err("exponent must be a non-negative integer literal"),
        }
    }

    fn atom(&mut self) -> Result<Node, ParseError> {
        let at = self.here();
        match self.bump() {
            Some(Tok::Num(q, _)) => Ok(Node::Const(q)),
            Some(Tok::LParen) => {
                let inner = self.expr()?;
                self.expect(Tok::RParen)?;
                Ok(inner)
            }
            Some(Tok::Ident(name)) => self.ident(at, name),
            Some(t) => {
                self.pos -= 1;
                self.err(format!("unexpected `{t}`"))
            }
            None => self.err("unexpected end of input"),
        }
    }

    fn ident(&mut self, at: usize, name: String) -> Result<Node, ParseError> {
        let primes = self.primes();
        let no_primes = |what: &str| -> Result<(), ParseError> {
            if primes > 0 {
                Err(ParseError {
                    position: at,
                    message: format!("{what} cannot carry primes"),
                })
            } else {
                Ok(())
            }
        };
        if let Some(f) = Elementary::from_name(&name) {
            no_primes(&name)?;
            self.expect(Tok::LParen)?;
            let arg = self.expr()?;
            self.expect(Tok::RParen)?;
            return Ok(Node::Apply(f, Box::new(arg)));
        }
        if name == "x" {
            no_primes("x")?;
            return Ok(Node::Var(Var::X));
        }
        if name == "D" {
            no_primes("D")?;
            if !self.allow_d {
                return Err(ParseError {
                    position: at,
                    message: "`D` is the reserved operator symbol; not allowed in expressions"
                        .into(),
                });
            }
            return Ok(Node::D);
        }
        if let Some(digits) = name.strip_prefix('p') {
            if !digits.is_empty() && digits.chars().all(|c| c.is_ascii_digit()) {
                no_primes("jet variable")?;
                let i = digits.parse().map_err(|_| ParseError {
                    position: at,
                    message: "jet index too large".into(),
                })?;
                return Ok(Node::Var(Var::P(i)));
            }
        }
        Ok(Node::Func(FuncSym::new(name, primes)))
    }

    fn primes(&mut self) -> usize {
        let mut n = 0;
        while self.peek() == Some(&Tok::Prime) {
            self.pos += 1;
            n += 1;
        }
        n
    }
}

pub(crate) fn parse_nodes(text: &str, allow_d: bool) -> Result<Node, ParseError> {
    let toks = tokenize(text)?;
    let mut p = Parser {
        toks,
        pos: 0,
        end: text.chars().count(),
        allow_d,
    };
    if p.peek().is_none() {
        return p.err("empty input");
    }
    let node = p.expr()?;
    if let Some(t) = p.peek() {
        return p.err(format!("unexpected `{t}`"));
    }
    Ok(node)
}

pub(crate) fn parse_expr(text: &str) -> Result<Expr, ParseError> {
    let node = parse_nodes(text, false)?;
    Ok(node.to_expr().expect("operator symbol rejected by the parser"))
}
