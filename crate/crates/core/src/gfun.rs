//! Total functions `g: ℕ → ℕ` given by a small grammar or a table.
//!
//! ```text
//! expr  := term ('+' term)*
//! term  := atom ('*' atom)*
//! atom  := INT | 'n' | 'max' '(' expr ',' expr ')' | '(' expr ')'
//! table := 'table:' INT (',' INT)*
//! ```
//!
//! Arithmetic saturates at `u64::MAX`. Tables are read from index 0 and
//! their last entry extends to the right.

use std::fmt;
use std::rc::Rc;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::engine::GFn;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GParseError {
    #[error("unexpected end of input in {0:?}")]
    UnexpectedEnd(String),
    #[error("unexpected {found:?} at offset {offset} in {input:?}")]
    Unexpected { input: String, offset: usize, found: char },
    #[error("integer literal out of range in {0:?}")]
    Overflow(String),
    #[error("empty table")]
    EmptyTable,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum GExpr {
    Const(u64),
    Var,
    Add(Box<GExpr>, Box<GExpr>),
    Mul(Box<GExpr>, Box<GExpr>),
    Max(Box<GExpr>, Box<GExpr>),
    Table(Vec<u64>),
}

impl GExpr {
    pub fn eval(&self, n: u64) -> u64 {
        match self {
            GExpr::Const(c) => *c,
            GExpr::Var => n,
            GExpr::Add(a, b) => a.eval(n).saturating_add(b.eval(n)),
            GExpr::Mul(a, b) => a.eval(n).saturating_mul(b.eval(n)),
            GExpr::Max(a, b) => a.eval(n).max(b.eval(n)),
            GExpr::Table(t) => {
                let i = usize::try_from(n).unwrap_or(usize::MAX).min(t.len() - 1);
                t[i]
            }
        }
    }

    pub fn is_monotone(&self) -> bool {
        match self {
            GExpr::Const(_) | GExpr::Var => true,
            GExpr::Add(a, b) | GExpr::Mul(a, b) | GExpr::Max(a, b) => a.is_monotone() && b.is_monotone(),
            GExpr::Table(t) => t.windows(2).all(|w| w[0] <= w[1]),
        }
    }

    fn prec(&self) -> u8 {
        match self {
            GExpr::Add(..) => 0,
            GExpr::Mul(..) => 1,
            _ => 2,
        }
    }

    fn fmt_at(&self, f: &mut fmt::Formatter<'_>, min: u8) -> fmt::Result {
        let paren = self.prec() < min;
        if paren {
            write!(f, "(")?;
        }
        match self {
            GExpr::Const(c) => write!(f, "{c}")?,
            GExpr::Var => write!(f, "n")?,
            GExpr::Add(a, b) => {
                a.fmt_at(f, 0)?;
                write!(f, "+")?;
                b.fmt_at(f, 1)?;
            }
            GExpr::Mul(a, b) => {
                a.fmt_at(f, 1)?;
                write!(f, "*")?;
                b.fmt_at(f, 2)?;
            }
            GExpr::Max(a, b) => {
                write!(f, "max(")?;
                a.fmt_at(f, 0)?;
                write!(f, ",")?;
                b.fmt_at(f, 0)?;
                write!(f, ")")?;
            }
            GExpr::Table(t) => {
                let s: Vec<String> = t.iter().map(u64::to_string).collect();
                write!(f, "table:{}", s.join(","))?;
            }
        }
        if paren {
            write!(f, ")")?;
        }
        Ok(())
    }
}

impl fmt::Display for GExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_at(f, 0)
    }
}

struct Parser<'a> {
    src: &'a str,
    chars: Vec<(usize, char)>,
    pos: usize,
}

impl<'a> Parser<'a> {
    fn new(src: &'a str) -> Self {
        let chars = src.char_indices().filter(|(_, c)| !c.is_whitespace()).collect();
        Parser { src, chars, pos: 0 }
    }

    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).map(|&(_, c)| c)
    }

    fn unexpected(&self) -> GParseError {
        match self.chars.get(self.pos) {
            Some(&(offset, found)) => GParseError::Unexpected { input: self.src.into(), offset, found },
            None => GParseError::UnexpectedEnd(self.src.into()),
        }
    }

    fn expect(&mut self, c: char) -> Result<(), GParseError> {
        if self.peek() == Some(c) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.unexpected())
        }
    }

    fn int(&mut self) -> Result<u64, GParseError> {
        let start = self.pos;
        let mut v: u64 = 0;
        while let Some(c) = self.peek().filter(char::is_ascii_digit) {
            v = v
                .checked_mul(10)
                .and_then(|v| v.checked_add(c as u64 - '0' as u64))
                .ok_or_else(|| GParseError::Overflow(self.src.into()))?;
            self.pos += 1;
        }
        if self.pos == start {
            return Err(self.unexpected());
        }
        Ok(v)
    }

    fn expr(&mut self) -> Result<GExpr, GParseError> {
        let mut e = self.term()?;
        while self.peek() == Some('+') {
            self.pos += 1;
            e = GExpr::Add(Box::new(e), Box::new(self.term()?));
        }
        Ok(e)
    }

    fn term(&mut self) -> Result<GExpr, GParseError> {
        let mut e = self.atom()?;
        while self.peek() == Some('*') {
            self.pos += 1;
            e = GExpr::Mul(Box::new(e), Box::new(self.atom()?));
        }
        Ok(e)
    }

    fn keyword(&mut self, kw: &str) -> bool {
        let n = kw.chars().count();
        let got: String = self.chars.iter().skip(self.pos).take(n).map(|&(_, c)| c).collect();
        if got == kw {
            self.pos += n;
            true
        } else {
            false
        }
    }

    fn atom(&mut self) -> Result<GExpr, GParseError> {
        match self.peek() {
            Some(c) if c.is_ascii_digit() => Ok(GExpr::Const(self.int()?)),
            Some('(') => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect(')')?;
                Ok(e)
            }
            Some('m') if self.keyword("max") => {
                self.expect('(')?;
                let a = self.expr()?;
                self.expect(',')?;
                let b = self.expr()?;
                self.expect(')')?;
                Ok(GExpr::Max(Box::new(a), Box::new(b)))
            }
            Some('n') => {
                self.pos += 1;
                Ok(GExpr::Var)
            }
            _ => Err(self.unexpected()),
        }
    }
}

pub fn parse_gexpr(src: &str) -> Result<GExpr, GParseError> {
    let trimmed = src.trim();
    if let Some(rest) = trimmed.strip_prefix("table:") {
        let mut vals = Vec::new();
        for part in rest.split(',') {
            let part = part.trim();
            if part.is_empty() {
                continue;
            }
            vals.push(part.parse::<u64>().map_err(|_| GParseError::Overflow(src.into()))?);
        }
        if vals.is_empty() {
            return Err(GParseError::EmptyTable);
        }
        return Ok(GExpr::Table(vals));
    }
    let mut p = Parser::new(src);
    let e = p.expr()?;
    if p.pos != p.chars.len() {
        return Err(p.unexpected());
    }
    Ok(e)
}

/// A total function on the naturals with a printable description.
#[derive(Clone)]
pub struct GFunction {
    expr: Option<GExpr>,
    f: GFn,
    label: String,
    monotone: bool,
}

impl fmt::Debug for GFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "GFunction({})", self.label)
    }
}

impl fmt::Display for GFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label)
    }
}

impl PartialEq for GFunction {
    fn eq(&self, other: &Self) -> bool {
        self.expr.is_some() && self.expr == other.expr
    }
}

impl GFunction {
    pub fn from_expr(expr: GExpr) -> Self {
        let label = expr.to_string();
        let monotone = expr.is_monotone();
        let e = expr.clone();
        GFunction { expr: Some(expr), f: Rc::new(move |n| e.eval(n)), label, monotone }
    }

    pub fn from_fn(label: impl Into<String>, monotone: bool, f: impl Fn(u64) -> u64 + 'static) -> Self {
        GFunction { expr: None, f: Rc::new(f), label: label.into(), monotone }
    }

    pub fn constant(c: u64) -> Self {
        Self::from_expr(GExpr::Const(c))
    }

    pub fn expr(&self) -> Option<&GExpr> {
        self.expr.as_ref()
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// Nondecreasing, as far as the representation shows.
    pub fn is_monotone(&self) -> bool {
        self.monotone
    }

    pub fn eval(&self, n: u64) -> u64 {
        (self.f)(n)
    }

    /// `g̃(n) = max{n, g(n)}`.
    pub fn tilde(&self, n: u64) -> u64 {
        n.max(self.eval(n))
    }

    /// `g_c(n) = n + c + g(n + c)`.
    pub fn shifted(&self, c: u64) -> GFunction {
        let f = Rc::clone(&self.f);
        GFunction {
            expr: None,
            f: Rc::new(move |n| {
                let m = n.saturating_add(c);
                m.saturating_add(f(m))
            }),
            label: format!("n+{c}+g(n+{c}) with g = {}", self.label),
            monotone: self.monotone,
        }
    }

    pub fn as_gfn(&self) -> GFn {
        Rc::clone(&self.f)
    }
}

impl FromStr for GFunction {
    type Err = GParseError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_gexpr(s).map(GFunction::from_expr)
    }
}

impl Serialize for GFunction {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.label)
    }
}

impl<'de> Deserialize<'de> for GFunction {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}
