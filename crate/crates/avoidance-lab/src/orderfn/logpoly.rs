//! Exact polynomials in `log₂ p` (`p` an odd prime) over ℚ.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use super::{Expr, OrderFn};
use crate::error::{Error, Result};
use crate::numerics::{log2_point, Dyadic, DyadInterval, PREC_CAP};

/// Monomials are sorted lists of odd primes; `log₂ 2 = 1` is folded into
/// the coefficients.
#[derive(Clone, PartialEq, Eq, Default)]
pub struct LogPoly {
    terms: BTreeMap<Vec<u64>, BigRational>,
}

impl LogPoly {
    pub fn zero() -> Self {
        LogPoly::default()
    }

    pub fn constant(q: BigRational) -> Self {
        let mut p = LogPoly::zero();
        p.push(Vec::new(), q);
        p
    }

    fn push(&mut self, mono: Vec<u64>, c: BigRational) {
        if c.is_zero() {
            return;
        }
        let e = self.terms.entry(mono.clone()).or_insert_with(BigRational::zero);
        *e += c;
        if e.is_zero() {
            self.terms.remove(&mono);
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// The rational value when no logarithm survives.
    pub fn as_rational(&self) -> Option<BigRational> {
        match self.terms.len() {
            0 => Some(BigRational::zero()),
            1 => self.terms.get(&Vec::new()).cloned(),
            _ => None,
        }
    }

    pub fn add(&self, o: &LogPoly) -> LogPoly {
        let mut r = self.clone();
        for (m, c) in &o.terms {
            r.push(m.clone(), c.clone());
        }
        r
    }

    pub fn neg(&self) -> LogPoly {
        LogPoly { terms: self.terms.iter().map(|(m, c)| (m.clone(), -c)).collect() }
    }

    pub fn sub(&self, o: &LogPoly) -> LogPoly {
        self.add(&o.neg())
    }

    pub fn scale(&self, q: &BigRational) -> LogPoly {
        let mut r = LogPoly::zero();
        for (m, c) in &self.terms {
            r.push(m.clone(), c * q);
        }
        r
    }

    pub fn mul(&self, o: &LogPoly) -> LogPoly {
        let mut r = LogPoly::zero();
        for (m1, c1) in &self.terms {
            for (m2, c2) in &o.terms {
                let mut m = m1.clone();
                m.extend_from_slice(m2);
                m.sort_unstable();
                r.push(m, c1 * c2);
            }
        }
        r
    }

    pub fn eval(&self, prec: u32) -> Result<DyadInterval> {
        let degree = self.terms.keys().map(Vec::len).max().unwrap_or(0) as u32;
        let w = prec + 8 + 4 * degree + self.terms.len() as u32;
        let mut acc = DyadInterval::int(0);
        let mut logs: BTreeMap<u64, DyadInterval> = BTreeMap::new();
        for (m, c) in &self.terms {
            let mut t = DyadInterval::from_rational(c, w + 16);
            for p in m {
                if !logs.contains_key(p) {
                    logs.insert(*p, log2_point(&Dyadic::from(*p as i64), w + 16)?);
                }
                t = t.mul(&logs[p]);
            }
            acc = acc.add(&t);
        }
        Ok(acc.round_out(w))
    }

    /// Exact sign; `Equal` only for the zero polynomial.
    pub fn signum(&self) -> Result<Ordering> {
        if self.is_zero() {
            return Ok(Ordering::Equal);
        }
        if let Some(q) = self.as_rational() {
            return Ok(q.cmp(&BigRational::zero()));
        }
        let mut w = 16;
        while w <= PREC_CAP {
            if let Some(o) = self.eval(w)?.cmp_iv(&DyadInterval::int(0)) {
                if o != Ordering::Equal {
                    return Ok(o);
                }
            }
            w *= 2;
        }
        Err(Error::Indeterminate { at: format!("sign of {self}") })
    }
}

/// `log₂ q` for a positive rational, as a linear form in odd-prime logs.
/// `None` when the factorization is too expensive.
pub fn factor_log2(q: &BigRational) -> Option<LogPoly> {
    if !q.is_positive() {
        return None;
    }
    let mut out = LogPoly::zero();
    for (z, sign) in [(q.numer(), 1i64), (q.denom(), -1i64)] {
        for (p, e) in factor(&z.to_biguint()?)? {
            let c = BigRational::from_integer(BigInt::from(sign * e as i64));
            if p == 2 {
                out.push(Vec::new(), c);
            } else {
                out.push(vec![p], c);
            }
        }
    }
    Some(out)
}

fn factor(n: &BigUint) -> Option<Vec<(u64, u32)>> {
    let mut n = n.to_u64()?;
    let mut out = Vec::new();
    let mut d = 2u64;
    while d * d <= n {
        if d > 1 << 20 {
            return None;
        }
        let mut e = 0;
        while n % d == 0 {
            n /= d;
            e += 1;
        }
        if e > 0 {
            out.push((d, e));
        }
        d += if d == 2 { 1 } else { 2 };
    }
    if n > 1 {
        out.push((n, 1));
    }
    Some(out)
}

fn exact_root(q: &BigRational, r: u32) -> Option<BigRational> {
    let n = q.numer().to_biguint()?;
    let d = q.denom().to_biguint()?;
    let (a, b) = (n.nth_root(r), d.nth_root(r));
    (a.pow(r) == n && b.pow(r) == d).then(|| BigRational::new(a.into(), b.into()))
}

impl OrderFn {
    /// Symbolic value at a rational point, as a polynomial in prime logs.
    /// `None` when some step leaves that ring (e.g. a non-square root).
    pub fn eval_logpoly(&self, x: &BigRational) -> Option<LogPoly> {
        let pure = |p: LogPoly| p.as_rational();
        Some(match self.expr() {
            Expr::Const(q) => LogPoly::constant(q.clone()),
            Expr::Identity => LogPoly::constant(x.clone()),
            Expr::Affine(a, b, g) => g.eval_logpoly(x)?.scale(a).add(&LogPoly::constant(b.clone())),
            Expr::Add(a, b) => a.eval_logpoly(x)?.add(&b.eval_logpoly(x)?),
            Expr::Sub(a, b) => a.eval_logpoly(x)?.sub(&b.eval_logpoly(x)?),
            Expr::Mul(a, b) => a.eval_logpoly(x)?.mul(&b.eval_logpoly(x)?),
            Expr::Compose(a, b) => a.eval_logpoly(&pure(b.eval_logpoly(x)?)?)?,
            Expr::Log2(g) => factor_log2(&pure(g.eval_logpoly(x)?)?)?,
            Expr::Pow(g, a) => {
                let v = pure(g.eval_logpoly(x)?)?;
                if v.is_negative() {
                    return None;
                }
                if v.is_zero() {
                    return Some(LogPoly::constant(if a.is_zero() { BigRational::one() } else { BigRational::zero() }));
                }
                let root = exact_root(&v, a.denom().to_u32()?)?;
                let k = a.numer().abs().to_u32()?;
                let p = num_traits::pow(root, k as usize);
                LogPoly::constant(if a.is_negative() { p.recip() } else { p })
            }
            Expr::Floor(g) => LogPoly::constant(pure(g.eval_logpoly(x)?)?.floor()),
            Expr::Ceil(g) => LogPoly::constant(pure(g.eval_logpoly(x)?)?.ceil()),
            Expr::Table(vals, tail) => {
                if !x.is_integer() || x.is_negative() {
                    return None;
                }
                let i = x.to_integer().to_usize()?;
                match vals.get(i) {
                    Some(v) => LogPoly::constant(v.clone()),
                    None => tail.eval_logpoly(x)?,
                }
            }
            _ => return None,
        })
    }
}

impl fmt::Display for LogPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (m, c) in &self.terms {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            write!(f, "{c}")?;
            for p in m {
                write!(f, "·log2({p})")?;
            }
        }
        Ok(())
    }
}

impl fmt::Debug for LogPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "LogPoly({self})")
    }
}
