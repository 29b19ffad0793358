//! log₂, rational powers and exp₂ on intervals. Everything reduces to
//! integer squaring and integer roots; no floats.

use num_bigint::{BigInt, BigUint, Sign};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use super::{Dyadic, DyadInterval};
use crate::error::{domain, Error, Result};

const MAX_WORKING: u64 = 1 << 16;

fn ceil_shr(x: &BigUint, k: u64) -> BigUint {
    let q: BigUint = x >> k;
    if (&q << k) == *x {
        q
    } else {
        q + 1u32
    }
}

fn positive_parts(x: &Dyadic) -> (BigUint, i64) {
    (x.mantissa().to_biguint().expect("positive"), x.exponent())
}

/// `log₂ x` for a positive dyadic point, width `≤ 2^{-prec}`; exact for
/// powers of two.
pub fn log2_point(x: &Dyadic, prec: u32) -> Result<DyadInterval> {
    if x.sign() != Sign::Plus {
        return domain(format!("log2 of nonpositive {x}"));
    }
    let (m, e) = positive_parts(x);
    let n = m.bits() - 1;
    let int = Dyadic::from(e + n as i64);
    if m.is_one() {
        return Ok(DyadInterval::point(int));
    }
    let p = prec as u64;
    let mut w = 2 * p + 64;
    'retry: loop {
        if w > MAX_WORKING {
            return Err(Error::Indeterminate { at: format!("log2({x})") });
        }
        // y = m / 2^n scaled by 2^w
        let (mut lo, mut hi) = if w >= n {
            let v = &m << (w - n);
            (v.clone(), v)
        } else {
            (&m >> (n - w), ceil_shr(&m, n - w))
        };
        let two = BigUint::from(2u32) << w;
        let mut acc = BigUint::zero();
        for _ in 0..p {
            lo = (&lo * &lo) >> w;
            hi = ceil_shr(&(&hi * &hi), w);
            acc <<= 1;
            if lo >= two {
                acc += 1u32;
                lo >>= 1;
                hi = ceil_shr(&hi, 1);
            } else if hi >= two {
                w *= 2;
                continue 'retry;
            }
        }
        let a = Dyadic::new(BigInt::from(acc.clone()), -(p as i64));
        let b = Dyadic::new(BigInt::from(acc + 1u32), -(p as i64));
        return Ok(DyadInterval::new(&int + &a, &int + &b));
    }
}

/// Contains `log₂` of every point; width `≤` image width `+ 2^{-prec}`.
pub fn iv_log2(a: &DyadInterval, prec: u32) -> Result<DyadInterval> {
    if a.lo.sign() != Sign::Plus {
        return domain(format!("log2 of interval {a} reaching 0"));
    }
    let lo = log2_point(&a.lo, prec + 1)?;
    if a.is_point() {
        return Ok(lo);
    }
    let hi = log2_point(&a.hi, prec + 1)?;
    Ok(DyadInterval::new(lo.lo, hi.hi))
}

/// `A^{1/q}` on the `2^{-w}` grid, exact when `A` is a perfect power there.
fn root_grid(a: &Dyadic, q: u32, w: u64) -> DyadInterval {
    if a.is_zero() {
        return DyadInterval::int(0);
    }
    let (m, e) = positive_parts(a);
    let shift = e + (w * q as u64) as i64;
    let (n, exact) = if shift >= 0 {
        (m << shift as u64, true)
    } else {
        let s = (-shift) as u64;
        let f: BigUint = &m >> s;
        let ex = (&f << s) == m;
        (f, ex)
    };
    let t = n.nth_root(q);
    let lo = Dyadic::new(BigInt::from(t.clone()), -(w as i64));
    if exact && t.pow(q) == n {
        return DyadInterval::point(lo);
    }
    let hi = Dyadic::new(BigInt::from(t + 1u32), -(w as i64));
    DyadInterval::new(lo, hi)
}

fn int_pow(x: &Dyadic, k: u32) -> Dyadic {
    Dyadic::new(x.mantissa().pow(k), x.exponent() * k as i64)
}

/// `x^r` for a nonnegative point.
pub fn pow_point(x: &Dyadic, r: &BigRational, prec: u32) -> Result<DyadInterval> {
    if r.is_zero() {
        return Ok(DyadInterval::int(1));
    }
    if x.is_negative() {
        return domain(format!("fractional power of negative {x}"));
    }
    if x.is_zero() {
        if r.is_negative() {
            return domain("negative power of 0");
        }
        return Ok(DyadInterval::int(0));
    }
    let p = r.numer().abs().to_u32().ok_or_else(|| Error::Domain(format!("exponent {r} too large")))?;
    let q = r.denom().to_u32().ok_or_else(|| Error::Domain(format!("exponent {r} too large")))?;
    let a = int_pow(x, p);
    let mag = a.ilog2() / q as i64;
    let mut w = prec as u64 + 8 + if r.is_negative() { 2 * mag.unsigned_abs() } else { 0 };
    loop {
        let y = if q == 1 { DyadInterval::point(a.clone()) } else { root_grid(&a, q, w) };
        let out = if r.is_negative() {
            DyadInterval::int(1).div(&y, prec + 2)?
        } else {
            y
        };
        if out.fine(prec) {
            return Ok(out);
        }
        w *= 2;
        if w > MAX_WORKING {
            return Err(Error::Indeterminate { at: format!("{x}^{r}") });
        }
    }
}

/// Contains `x^r` for every point `x` of `a`.
pub fn iv_pow(a: &DyadInterval, r: &BigRational, prec: u32) -> Result<DyadInterval> {
    if r.is_zero() {
        return Ok(DyadInterval::int(1));
    }
    if r.is_integer() {
        let k = r.numer().abs().to_u32().ok_or_else(|| Error::Domain(format!("exponent {r} too large")))?;
        let up = |x: &Dyadic| int_pow(x, k);
        let pos = if a.is_nonnegative() {
            DyadInterval::new(up(&a.lo), up(&a.hi))
        } else if a.hi.is_negative() || a.hi.is_zero() {
            let b = DyadInterval::new(up(&a.hi), up(&a.lo));
            if k % 2 == 0 { b } else { DyadInterval::new(up(&a.lo), up(&a.hi)) }
        } else if k % 2 == 0 {
            DyadInterval::new(Dyadic::zero(), up(&a.abs_max()))
        } else {
            DyadInterval::new(up(&a.lo), up(&a.hi))
        };
        return if r.is_negative() { DyadInterval::int(1).div(&pos, prec + 1) } else { Ok(pos) };
    }
    if a.lo.is_negative() {
        return domain(format!("fractional power of interval {a} below 0"));
    }
    let (x, y) = if r.is_negative() { (&a.hi, &a.lo) } else { (&a.lo, &a.hi) };
    let lo = pow_point(x, r, prec + 1)?;
    if a.is_point() {
        return Ok(lo);
    }
    let hi = pow_point(y, r, prec + 1)?;
    Ok(DyadInterval::new(lo.lo, hi.hi))
}

pub fn iv_sqrt(a: &DyadInterval, prec: u32) -> Result<DyadInterval> {
    iv_pow(a, &BigRational::new(1.into(), 2.into()), prec)
}

fn isqrt_floor(x: &BigUint) -> BigUint {
    x.sqrt()
}

/// `2^x` for a dyadic point.
pub fn exp2_point(x: &Dyadic, prec: u32) -> Result<DyadInterval> {
    if x.is_integer() {
        let e = x.floor().to_i64().ok_or_else(|| Error::Domain(format!("2^{x} out of range")))?;
        return Ok(DyadInterval::point(Dyadic::pow2(e)));
    }
    let f = x.floor().to_i64().ok_or_else(|| Error::Domain(format!("2^{x} out of range")))?;
    let frac = x - &Dyadic::from(f);
    let k = (-frac.exponent()) as u64;
    let bits = frac.mantissa().to_biguint().expect("fraction positive");
    let mut w = prec as u64 + f.max(0) as u64 + 64 - (k.leading_zeros() as u64).min(64) + 8;
    loop {
        let one = BigUint::one() << w;
        let two_sq = BigUint::from(2u32) << (2 * w);
        let (mut clo, mut chi) = (two_sq.sqrt(), ceil_sqrt(&two_sq));
        let (mut plo, mut phi) = (one.clone(), one.clone());
        for i in 1..=k {
            if i > 1 {
                clo = isqrt_floor(&(&clo << w));
                chi = ceil_sqrt(&(&chi << w));
            }
            if bits.bit(k - i) {
                plo = (&plo * &clo) >> w;
                phi = ceil_shr(&(&phi * &chi), w);
            }
        }
        let lo = Dyadic::new(BigInt::from(plo), -(w as i64)).shl(f);
        let hi = Dyadic::new(BigInt::from(phi), -(w as i64)).shl(f);
        let out = DyadInterval::new(lo, hi);
        if out.fine(prec) {
            return Ok(out);
        }
        w *= 2;
        if w > MAX_WORKING {
            return Err(Error::Indeterminate { at: format!("2^{x}") });
        }
    }
}

fn ceil_sqrt(x: &BigUint) -> BigUint {
    let r = x.sqrt();
    if &(&r * &r) == x {
        r
    } else {
        r + 1u32
    }
}

pub fn iv_exp2(a: &DyadInterval, prec: u32) -> Result<DyadInterval> {
    let top = a.hi.ceil().to_i64().unwrap_or(i64::MAX).max(0) as u32;
    let f = (prec + top + 4) as i64;
    let lo = exp2_point(&a.lo.round_down(f), prec + 1)?;
    if a.is_point() && a.lo.round_down(f) == a.lo {
        return Ok(lo);
    }
    let hi = exp2_point(&a.hi.round_up(f), prec + 1)?;
    Ok(DyadInterval::new(lo.lo, hi.hi))
}

/// `ln 2 = Σ_{k≥1} 1/(k·2^k)`.
pub fn ln2(prec: u32) -> DyadInterval {
    let n = prec as u64 + 3;
    let mut s = BigRational::zero();
    for k in 1..=n {
        s += BigRational::new(BigInt::one(), BigInt::from(k) << k as usize);
    }
    let tail = BigRational::new(BigInt::one(), BigInt::from(n + 1) << n as usize);
    let p = prec as i64 + 2;
    DyadInterval::new(Dyadic::floor_rational(&s, p), Dyadic::ceil_rational(&(s + tail), p))
}

/// `e = Σ 1/k!`.
pub fn euler(prec: u32) -> DyadInterval {
    let target = BigUint::one() << (prec as usize + 3);
    let mut s = BigRational::zero();
    let mut fact = BigUint::one();
    let mut k = 0u64;
    loop {
        s += BigRational::new(BigInt::one(), BigInt::from(fact.clone()));
        k += 1;
        fact *= k;
        if fact >= target {
            break;
        }
    }
    let tail = BigRational::new(BigInt::from(2), BigInt::from(fact));
    let p = prec as i64 + 2;
    DyadInterval::new(Dyadic::floor_rational(&s, p), Dyadic::ceil_rational(&(s + tail), p))
}
