//! Prefix grammar:
//!
//! ```text
//! e := n | id | const q | affine a b e | add e e | sub e e | mul e e
//!    | compose e e | max e e | min e e | pow q e | sqrt e | log2 e
//!    | exp2 e | geom q e | floor e | ceil e | inv e | plext e
//!    | logpow k=K a=Q | canon k=K a=Q | table [q,..] e | q | ( e )
//! ```
//!
//! A missing trailing operand means `n`, so `exp2` is `2^n`.

use num_bigint::BigInt;
use num_rational::BigRational;

use super::OrderFn;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Word(String),
    Num(BigRational),
    Kv(String, BigRational),
    List(Vec<BigRational>),
    Open,
    Close,
}

fn perr<T>(pos: usize, msg: impl Into<String>) -> Result<T> {
    Err(Error::Parse { pos, msg: msg.into() })
}

pub(crate) fn parse_rational(s: &str) -> Option<BigRational> {
    let s = s.trim();
    if let Some((a, b)) = s.split_once('/') {
        let a: BigInt = a.trim().parse().ok()?;
        let b: BigInt = b.trim().parse().ok()?;
        if b == BigInt::from(0) {
            return None;
        }
        return Some(BigRational::new(a, b));
    }
    if let Some((a, b)) = s.split_once('.') {
        if b.is_empty() || !b.chars().all(|c| c.is_ascii_digit()) {
            return None;
        }
        let neg = a.starts_with('-');
        let whole: BigInt = if a.is_empty() || a == "-" { BigInt::from(0) } else { a.parse().ok()? };
        let frac: BigInt = b.parse().ok()?;
        let den = BigInt::from(10u32).pow(b.len() as u32);
        let f = BigRational::new(frac, den.clone());
        let w = BigRational::from_integer(whole);
        return Some(if neg { w - f } else { w + f });
    }
    s.parse::<BigInt>().ok().map(BigRational::from_integer)
}

fn lex(src: &str) -> Result<Vec<(usize, Tok)>> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() || c == ',' {
            i += 1;
            continue;
        }
        if c == '(' || c == ')' {
            out.push((i, if c == '(' { Tok::Open } else { Tok::Close }));
            i += 1;
            continue;
        }
        if c == '[' {
            let start = i;
            let end = match chars[i..].iter().position(|&d| d == ']') {
                Some(e) => i + e,
                None => return perr(start, "unclosed '['"),
            };
            let body: String = chars[i + 1..end].iter().collect();
            let mut vals = Vec::new();
            for part in body.split(|d: char| d == ',' || d.is_whitespace()).filter(|p| !p.is_empty()) {
                match parse_rational(part) {
                    Some(q) => vals.push(q),
                    None => return perr(start, format!("bad number {part:?} in list")),
                }
            }
            out.push((start, Tok::List(vals)));
            i = end + 1;
            continue;
        }
        let start = i;
        while i < chars.len() && !chars[i].is_whitespace() && !"()[],".contains(chars[i]) {
            i += 1;
        }
        let word: String = chars[start..i].iter().collect();
        if let Some((k, v)) = word.split_once('=') {
            match parse_rational(v) {
                Some(q) => out.push((start, Tok::Kv(k.to_string(), q))),
                None => return perr(start + k.len() + 1, format!("bad number {v:?}")),
            }
        } else if word.starts_with(|c: char| c.is_ascii_digit() || c == '-' || c == '.') {
            match parse_rational(&word) {
                Some(q) => out.push((start, Tok::Num(q))),
                None => return perr(start, format!("bad number {word:?}")),
            }
        } else {
            out.push((start, Tok::Word(word)));
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
    fn pos(&self) -> usize {
        self.toks.get(self.at).map(|t| t.0).unwrap_or(self.end)
    }

    fn next(&mut self) -> Option<(usize, Tok)> {
        let t = self.toks.get(self.at).cloned();
        self.at += 1;
        t
    }

    fn num(&mut self) -> Result<BigRational> {
        let pos = self.pos();
        match self.next() {
            Some((_, Tok::Num(q))) => Ok(q),
            _ => perr(pos, "expected a number"),
        }
    }

    fn operand(&mut self) -> Result<OrderFn> {
        match self.toks.get(self.at) {
            None | Some((_, Tok::Close)) => Ok(OrderFn::identity()),
            _ => self.expr(),
        }
    }

    fn kv(&mut self, want: &[&str]) -> Result<Vec<BigRational>> {
        let mut got: Vec<Option<BigRational>> = vec![None; want.len()];
        while let Some((pos, Tok::Kv(k, v))) = self.toks.get(self.at).cloned() {
            match want.iter().position(|w| *w == k) {
                Some(i) => got[i] = Some(v),
                None => return perr(pos, format!("unknown key {k:?}")),
            }
            self.at += 1;
        }
        let pos = self.pos();
        got.into_iter()
            .zip(want)
            .map(|(g, w)| g.ok_or_else(|| Error::Parse { pos, msg: format!("missing {w}=") }))
            .collect()
    }

    fn expr(&mut self) -> Result<OrderFn> {
        let pos = self.pos();
        let (pos, tok) = match self.next() {
            Some(t) => t,
            None => return perr(pos, "unexpected end of expression"),
        };
        match tok {
            Tok::Open => {
                let e = self.expr()?;
                let p = self.pos();
                match self.next() {
                    Some((_, Tok::Close)) => Ok(e),
                    _ => perr(p, "expected ')'"),
                }
            }
            Tok::Num(q) => Ok(OrderFn::constant(q)),
            Tok::Close => perr(pos, "unexpected ')'"),
            Tok::Kv(k, _) => perr(pos, format!("unexpected {k}=")),
            Tok::List(_) => perr(pos, "unexpected list"),
            Tok::Word(w) => self.word(pos, &w),
        }
    }

    fn word(&mut self, pos: usize, w: &str) -> Result<OrderFn> {
        let unary = |p: &mut Parser, f: fn(OrderFn) -> OrderFn| -> Result<OrderFn> { Ok(f(p.operand()?)) };
        let binary = |p: &mut Parser, f: fn(OrderFn, OrderFn) -> OrderFn| -> Result<OrderFn> {
            let a = p.operand()?;
            let b = p.operand()?;
            Ok(f(a, b))
        };
        let lift = |r: Result<OrderFn>| r.map_err(|e| Error::Parse { pos, msg: e.to_string() });
        match w {
            "n" | "id" | "identity" => Ok(OrderFn::identity()),
            "const" => Ok(OrderFn::constant(self.num()?)),
            "affine" => {
                let a = self.num()?;
                let b = self.num()?;
                Ok(OrderFn::affine(a, b, self.operand()?))
            }
            "add" => binary(self, OrderFn::add),
            "sub" => binary(self, OrderFn::sub),
            "mul" => binary(self, OrderFn::mul),
            "compose" => binary(self, OrderFn::compose),
            "max" => binary(self, OrderFn::max),
            "min" => binary(self, OrderFn::min),
            "pow" => {
                let a = self.num()?;
                Ok(OrderFn::pow(self.operand()?, a))
            }
            "sqrt" => unary(self, OrderFn::sqrt),
            "log2" => unary(self, OrderFn::log2),
            "exp2" => unary(self, OrderFn::exp2),
            "floor" => unary(self, OrderFn::floor),
            "ceil" => unary(self, OrderFn::ceil),
            "plext" => unary(self, OrderFn::pl_ext),
            "geom" => {
                let b = self.num()?;
                let f = self.operand()?;
                lift(OrderFn::geom(b, f))
            }
            "inv" => {
                let f = self.operand()?;
                lift(OrderFn::inverse(f))
            }
            "logpow" | "canon" => {
                let v = self.kv(&["k", "a"])?;
                if !v[0].is_integer() || v[0] < BigRational::from_integer(0.into()) {
                    return perr(pos, "k must be a natural");
                }
                let k: u32 = v[0].to_integer().try_into().map_err(|_| Error::Parse { pos, msg: "k too large".into() })?;
                if w == "logpow" {
                    lift(OrderFn::log_power_product(k, v[1].clone()))
                } else {
                    lift(OrderFn::canonical(k, v[1].clone()))
                }
            }
            "table" => {
                let p = self.pos();
                let vals = match self.next() {
                    Some((_, Tok::List(v))) => v,
                    _ => return perr(p, "expected [values]"),
                };
                let tail = self.operand()?;
                lift(OrderFn::table(vals, tail))
            }
            other => perr(pos, format!("unknown word {other:?}")),
        }
    }
}

/// Parse an expression; errors carry the character offset.
pub fn parse(src: &str) -> Result<OrderFn> {
    let toks = lex(src)?;
    let mut p = Parser { toks, at: 0, end: src.chars().count() };
    let f = p.expr()?;
    if p.at < p.toks.len() {
        return perr(p.pos(), "trailing input");
    }
    Ok(f)
}
