use std::cmp::Ordering;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Zero};

use super::eval::{eval_iv, exact};
use super::OrderFn;
use crate::error::{Error, Result};
use crate::numerics::{DyadInterval, PREC_CAP};

/// Outcome of a bounded-range check.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Verdict {
    /// Holds on `[from, N)`.
    Pass { from: u64 },
    Fail(u64),
}

impl Verdict {
    pub fn passed(&self) -> bool {
        matches!(self, Verdict::Pass { .. })
    }
}

fn nat_q(n: &BigUint) -> BigRational {
    BigRational::from_integer(BigInt::from(n.clone()))
}

pub(crate) fn decide(
    a: impl Fn(u32) -> Result<DyadInterval>,
    b: impl Fn(u32) -> Result<DyadInterval>,
    fallback: impl Fn() -> Result<Option<Ordering>>,
    at: impl Fn() -> String,
) -> Result<Ordering> {
    let mut w = 16;
    while w <= PREC_CAP {
        if let Some(o) = a(w)?.cmp_iv(&b(w)?) {
            return Ok(o);
        }
        w *= 2;
    }
    match fallback()? {
        Some(o) => Ok(o),
        None => Err(Error::Indeterminate { at: at() }),
    }
}

pub(crate) fn cmp_with_rational(f: &OrderFn, n: &BigUint, q: &BigRational) -> Result<Ordering> {
    let x = DyadInterval::nat(n);
    decide(
        |w| eval_iv(f, &x, w),
        |w| Ok(DyadInterval::from_rational(q, w + 4)),
        || Ok(exact(f, &nat_q(n))?.map(|v| v.cmp(q))),
        || format!("{f} at {n} vs {q}"),
    )
}

/// Compare `f(a)` with `g(b)`.
pub(crate) fn cmp_fns_at(f: &OrderFn, a: &BigUint, g: &OrderFn, b: &BigUint) -> Result<Ordering> {
    let (xa, xb) = (DyadInterval::nat(a), DyadInterval::nat(b));
    decide(
        |w| eval_iv(f, &xa, w),
        |w| eval_iv(g, &xb, w),
        || {
            Ok(match (exact(f, &nat_q(a))?, exact(g, &nat_q(b))?) {
                (Some(u), Some(v)) => Some(u.cmp(&v)),
                _ => None,
            })
        },
        || format!("{f} at {a} vs {g} at {b}"),
    )
}

const SCAN_CAP: u64 = 1 << 24;

/// Least `m` with `f(m) ≥ x`.
pub fn generalized_inverse(f: &OrderFn, x: &BigRational) -> Result<BigUint> {
    let ge = |m: &BigUint| -> Result<bool> { Ok(cmp_with_rational(f, m, x)? != Ordering::Less) };
    if !f.is_monotone() {
        let mut m = BigUint::zero();
        while m < BigUint::from(SCAN_CAP) {
            if ge(&m)? {
                return Ok(m);
            }
            m += 1u32;
        }
        return Err(Error::Exhausted(format!("no m < {SCAN_CAP} with {f}(m) >= {x}")));
    }
    let zero = BigUint::zero();
    if ge(&zero)? {
        return Ok(zero);
    }
    let mut lo = zero;
    let mut hi = BigUint::one();
    while !ge(&hi)? {
        lo = hi.clone();
        hi <<= 1;
        if hi.bits() > 4096 {
            return Err(Error::Exhausted(format!("{f} never reaches {x}")));
        }
    }
    while &hi - &lo > BigUint::one() {
        let mid = (&lo + &hi) >> 1;
        if ge(&mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// The piecewise-linear extension of `f` at a rational point.
pub fn pl_extend_eval(f: &OrderFn, x: &BigRational, prec: u32) -> Result<DyadInterval> {
    if x < &BigRational::zero() {
        return crate::error::domain("piecewise-linear extension needs x >= 0");
    }
    let g = OrderFn::pl_ext(f.clone());
    if let Some(q) = exact(&g, x)? {
        return Ok(DyadInterval::from_rational(&q, prec));
    }
    let mut w = prec + 8;
    while w <= prec + 4 * PREC_CAP {
        let v = eval_iv(&g, &DyadInterval::from_rational(x, w + 8), w)?;
        if v.fine(prec) {
            return Ok(v);
        }
        w *= 2;
    }
    Err(Error::Indeterminate { at: format!("plext {f} at {x}") })
}

/// `f(n+1) − f(n) ≤ 1` for all `n < horizon`.
pub fn check_convex(f: &OrderFn, horizon: u64) -> Result<Verdict> {
    let one = DyadInterval::int(1);
    for n in 0..horizon {
        let (a, b) = (BigUint::from(n), BigUint::from(n + 1));
        let (xa, xb) = (DyadInterval::nat(&a), DyadInterval::nat(&b));
        let o = decide(
            |w| eval_iv(f, &xb, w),
            |w| Ok(eval_iv(f, &xa, w)?.add(&one)),
            || {
                Ok(match (exact(f, &nat_q(&b))?, exact(f, &nat_q(&a))?) {
                    (Some(u), Some(v)) => Some(u.cmp(&(v + BigRational::one()))),
                    _ => None,
                })
            },
            || format!("convexity at {n}"),
        )?;
        if o == Ordering::Greater {
            return Ok(Verdict::Fail(n));
        }
    }
    Ok(Verdict::Pass { from: 0 })
}

/// Finite surrogate for `n − f(n) → ∞`: passes when `n − f(n) ≥ m` on a
/// tail `[from, horizon)` covering at least the upper half of the range.
pub fn check_subidentical(f: &OrderFn, horizon: u64, m: u64) -> Result<Verdict> {
    let mut from = horizon;
    while from > 0 {
        let n = from - 1;
        let nb = BigUint::from(n);
        let bound = BigRational::from_integer(BigInt::from(n) - BigInt::from(m));
        if cmp_with_rational(f, &nb, &bound)? == Ordering::Greater {
            break;
        }
        from = n;
    }
    if horizon > 0 && from <= horizon / 2 {
        Ok(Verdict::Pass { from })
    } else {
        Ok(Verdict::Fail(from.saturating_sub(1)))
    }
}

/// `f(n) ≤ g(n)` for every `n ∈ [from, horizon]`; fails at the first
/// counterexample.
pub fn dominates_upto(f: &OrderFn, g: &OrderFn, from: u64, horizon: u64) -> Result<Verdict> {
    for n in from..=horizon {
        let b = BigUint::from(n);
        if cmp_fns_at(f, &b, g, &b)? == Ordering::Greater {
            return Ok(Verdict::Fail(n));
        }
    }
    Ok(Verdict::Pass { from })
}
