use std::cmp::Ordering;
use std::fmt;

use num_bigint::{BigInt, Sign};
use num_rational::BigRational;

use super::Dyadic;
use crate::error::{domain, Result};

/// Closed interval `[lo, hi]` with dyadic endpoints.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct DyadInterval {
    pub lo: Dyadic,
    pub hi: Dyadic,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum IvOp {
    Add,
    Sub,
    Mul,
    Div,
    Neg,
    Min,
    Max,
}

impl DyadInterval {
    pub fn new(lo: Dyadic, hi: Dyadic) -> Self {
        assert!(lo <= hi, "interval endpoints out of order");
        DyadInterval { lo, hi }
    }

    pub fn point(x: Dyadic) -> Self {
        DyadInterval { lo: x.clone(), hi: x }
    }

    pub fn int(n: i64) -> Self {
        Self::point(Dyadic::from(n))
    }

    pub fn nat(n: &num_bigint::BigUint) -> Self {
        Self::point(Dyadic::from(n))
    }

    /// Smallest interval on the `2^{-prec}` grid containing `q`; a point
    /// when `q` is dyadic.
    pub fn from_rational(q: &BigRational, prec: u32) -> Self {
        match Dyadic::from_rational(q) {
            Some(d) => Self::point(d),
            None => DyadInterval {
                lo: Dyadic::floor_rational(q, prec as i64),
                hi: Dyadic::ceil_rational(q, prec as i64),
            },
        }
    }

    pub fn width(&self) -> Dyadic {
        &self.hi - &self.lo
    }

    pub fn is_point(&self) -> bool {
        self.lo == self.hi
    }

    /// Width at most `2^{-prec}`.
    pub fn fine(&self, prec: u32) -> bool {
        self.width() <= Dyadic::pow2(-(prec as i64))
    }

    pub fn contains(&self, x: &Dyadic) -> bool {
        &self.lo <= x && x <= &self.hi
    }

    pub fn contains_rational(&self, q: &BigRational) -> bool {
        &self.lo.to_rational() <= q && q <= &self.hi.to_rational()
    }

    pub fn subset_of(&self, other: &DyadInterval) -> bool {
        other.lo <= self.lo && self.hi <= other.hi
    }

    pub fn intersect(&self, other: &DyadInterval) -> Option<DyadInterval> {
        let lo = self.lo.clone().max(other.lo.clone());
        let hi = self.hi.clone().min(other.hi.clone());
        (lo <= hi).then(|| DyadInterval { lo, hi })
    }

    pub fn hull(&self, other: &DyadInterval) -> DyadInterval {
        DyadInterval {
            lo: self.lo.clone().min(other.lo.clone()),
            hi: self.hi.clone().max(other.hi.clone()),
        }
    }

    pub fn contains_zero(&self) -> bool {
        self.lo.sign() != Sign::Plus && self.hi.sign() != Sign::Minus
    }

    /// `Some(ord)` when every point compares the same way; ties only for
    /// two equal points.
    pub fn cmp_iv(&self, other: &DyadInterval) -> Option<Ordering> {
        if self.hi < other.lo {
            Some(Ordering::Less)
        } else if self.lo > other.hi {
            Some(Ordering::Greater)
        } else if self.is_point() && other.is_point() {
            Some(Ordering::Equal)
        } else {
            None
        }
    }

    pub fn cmp_rational(&self, q: &BigRational) -> Option<Ordering> {
        let (lo, hi) = (self.lo.to_rational(), self.hi.to_rational());
        if &hi < q {
            Some(Ordering::Less)
        } else if &lo > q {
            Some(Ordering::Greater)
        } else if lo == hi {
            Some(Ordering::Equal)
        } else {
            None
        }
    }

    /// `self ≤ other` holds at every point.
    pub fn certainly_le(&self, other: &DyadInterval) -> bool {
        self.hi <= other.lo
    }

    pub fn round_out(&self, prec: u32) -> DyadInterval {
        DyadInterval { lo: self.lo.round_down(prec as i64), hi: self.hi.round_up(prec as i64) }
    }

    pub fn add(&self, b: &DyadInterval) -> DyadInterval {
        DyadInterval { lo: &self.lo + &b.lo, hi: &self.hi + &b.hi }
    }

    pub fn sub(&self, b: &DyadInterval) -> DyadInterval {
        DyadInterval { lo: &self.lo - &b.hi, hi: &self.hi - &b.lo }
    }

    pub fn neg(&self) -> DyadInterval {
        DyadInterval { lo: -&self.hi, hi: -&self.lo }
    }

    pub fn mul(&self, b: &DyadInterval) -> DyadInterval {
        let c = [&self.lo * &b.lo, &self.lo * &b.hi, &self.hi * &b.lo, &self.hi * &b.hi];
        let lo = c.iter().min().unwrap().clone();
        let hi = c.iter().max().unwrap().clone();
        DyadInterval { lo, hi }
    }

    pub fn scale(&self, q: &Dyadic) -> DyadInterval {
        self.mul(&DyadInterval::point(q.clone()))
    }

    /// Quotients rounded outward to the `2^{-prec}` grid.
    pub fn div(&self, b: &DyadInterval, prec: u32) -> Result<DyadInterval> {
        if b.contains_zero() {
            return domain(format!("division by interval {b} containing 0"));
        }
        let mut qs = Vec::with_capacity(4);
        for x in [&self.lo, &self.hi] {
            for y in [&b.lo, &b.hi] {
                qs.push(x.to_rational() / y.to_rational());
            }
        }
        let lo = qs.iter().min().unwrap();
        let hi = qs.iter().max().unwrap();
        let lo = Dyadic::from_rational(lo).unwrap_or_else(|| Dyadic::floor_rational(lo, prec as i64));
        let hi = Dyadic::from_rational(hi).unwrap_or_else(|| Dyadic::ceil_rational(hi, prec as i64));
        Ok(DyadInterval { lo, hi })
    }

    pub fn min(&self, b: &DyadInterval) -> DyadInterval {
        DyadInterval { lo: self.lo.clone().min(b.lo.clone()), hi: self.hi.clone().min(b.hi.clone()) }
    }

    pub fn max(&self, b: &DyadInterval) -> DyadInterval {
        DyadInterval { lo: self.lo.clone().max(b.lo.clone()), hi: self.hi.clone().max(b.hi.clone()) }
    }

    pub fn floor(&self) -> DyadInterval {
        DyadInterval { lo: Dyadic::from_int(self.lo.floor()), hi: Dyadic::from_int(self.hi.floor()) }
    }

    pub fn ceil(&self) -> DyadInterval {
        DyadInterval { lo: Dyadic::from_int(self.lo.ceil()), hi: Dyadic::from_int(self.hi.ceil()) }
    }

    /// The integer this interval pins down, if its floor is determined.
    pub fn floor_exact(&self) -> Option<BigInt> {
        let a = self.lo.floor();
        (a == self.hi.floor()).then_some(a)
    }

    pub fn midpoint(&self) -> Dyadic {
        (&self.lo + &self.hi).shl(-1)
    }

    pub fn abs_max(&self) -> Dyadic {
        self.lo.abs().max(self.hi.abs())
    }

    pub fn is_nonnegative(&self) -> bool {
        !self.lo.is_negative()
    }

    pub fn is_positive(&self) -> bool {
        !self.lo.is_negative() && !self.lo.is_zero()
    }

    pub fn lo_rational(&self) -> BigRational {
        self.lo.to_rational()
    }

    pub fn hi_rational(&self) -> BigRational {
        self.hi.to_rational()
    }

    pub fn decimal(&self, digits: usize) -> String {
        format!("[{}, {}]", self.lo.decimal(digits), self.hi.decimal(digits))
    }
}

/// `op(a, b)`; `b` is ignored for `Neg`.
pub fn iv_arith(op: IvOp, a: &DyadInterval, b: &DyadInterval, prec: u32) -> Result<DyadInterval> {
    Ok(match op {
        IvOp::Add => a.add(b),
        IvOp::Sub => a.sub(b),
        IvOp::Mul => a.mul(b),
        IvOp::Div => a.div(b, prec)?,
        IvOp::Neg => a.neg(),
        IvOp::Min => a.min(b),
        IvOp::Max => a.max(b),
    })
}

impl fmt::Display for DyadInterval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.lo, self.hi)
    }
}

impl fmt::Debug for DyadInterval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "DyadInterval{self}")
    }
}
