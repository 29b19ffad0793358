use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use super::{checks, tower, Expr, OrderFn};
use crate::error::{domain, Error, Result};
use crate::numerics::{iv_exp2, iv_log2, iv_pow, Dyadic, DyadInterval, PREC_CAP};

pub(super) fn eval_at(f: &OrderFn, x: &DyadInterval, prec: u32) -> Result<DyadInterval> {
    let mut w = prec + 8;
    loop {
        let v = eval_iv(f, x, w)?;
        if v.fine(prec) || !x.is_point() {
            return Ok(v);
        }
        if w > prec + 4 * PREC_CAP {
            return Err(Error::Indeterminate { at: format!("{f} at {x}") });
        }
        w *= 2;
    }
}

pub(super) fn eval_floor(f: &OrderFn, n: &BigUint) -> Result<BigInt> {
    if let Some(q) = exact(f, &BigRational::from_integer(BigInt::from(n.clone())))? {
        return Ok(q.floor().to_integer());
    }
    let x = DyadInterval::nat(n);
    let mut w = 16;
    while w <= PREC_CAP {
        if let Some(k) = eval_iv(f, &x, w)?.floor_exact() {
            return Ok(k);
        }
        w *= 2;
    }
    Err(Error::Indeterminate { at: format!("floor of {f} at {n}") })
}

/// Exact value when it is rational or when intervals collapse to a point.
pub(super) fn eval_integer(f: &OrderFn, n: &BigUint) -> Result<BigRational> {
    if let Some(q) = exact(f, &BigRational::from_integer(BigInt::from(n.clone())))? {
        return Ok(q);
    }
    let x = DyadInterval::nat(n);
    let mut w = 16;
    while w <= PREC_CAP {
        let v = eval_iv(f, &x, w)?;
        if v.is_point() {
            return Ok(v.lo.to_rational());
        }
        w *= 2;
    }
    domain(format!("{f} at {n} is not exactly determined"))
}

pub(super) fn eval_exact_rational(f: &OrderFn, n: &BigUint) -> Result<BigRational> {
    match exact(f, &BigRational::from_integer(BigInt::from(n.clone())))? {
        Some(q) => Ok(q),
        None => domain(format!("{f} at {n} is not an exact rational")),
    }
}

fn int_arg(x: &DyadInterval, what: &str) -> Result<BigUint> {
    if x.is_point() {
        if let Some(n) = x.lo.to_biguint() {
            return Ok(n);
        }
    }
    domain(format!("{what} needs a natural argument, got {x}"))
}

fn rat_iv(q: &BigRational, w: u32) -> DyadInterval {
    DyadInterval::from_rational(q, w)
}

fn log2_rational(q: &BigRational, w: u32) -> Result<DyadInterval> {
    let n = iv_log2(&DyadInterval::point(Dyadic::from_int(q.numer().clone())), w + 1)?;
    let d = iv_log2(&DyadInterval::point(Dyadic::from_int(q.denom().clone())), w + 1)?;
    Ok(n.sub(&d))
}

pub(super) fn eval_iv(f: &OrderFn, x: &DyadInterval, w: u32) -> Result<DyadInterval> {
    Ok(match f.expr() {
        Expr::Const(q) => rat_iv(q, w),
        Expr::Identity => x.clone(),
        Expr::Affine(a, b, g) => {
            let v = eval_iv(g, x, w)?;
            let av = match Dyadic::from_rational(a) {
                Some(d) => v.scale(&d),
                None => v.mul(&rat_iv(a, w + v.abs_max().ilog2_or_zero() + 2)),
            };
            av.add(&rat_iv(b, w + 1)).round_out(w + 2)
        }
        Expr::Add(a, b) => eval_iv(a, x, w + 1)?.add(&eval_iv(b, x, w + 1)?),
        Expr::Sub(a, b) => eval_iv(a, x, w + 1)?.sub(&eval_iv(b, x, w + 1)?),
        Expr::Mul(a, b) => {
            let u = eval_iv(a, x, w)?;
            let v = eval_iv(b, x, w)?;
            let extra = u.abs_max().ilog2_or_zero().max(v.abs_max().ilog2_or_zero()) + 2;
            if extra > 2 && !(u.is_point() && v.is_point()) {
                eval_iv(a, x, w + extra)?.mul(&eval_iv(b, x, w + extra)?)
            } else {
                u.mul(&v)
            }
        }
        Expr::Compose(a, b) => {
            let inner = eval_iv(b, x, w + 8)?;
            eval_iv(a, &inner, w)?
        }
        Expr::Max(a, b) => eval_iv(a, x, w)?.max(&eval_iv(b, x, w)?),
        Expr::Min(a, b) => eval_iv(a, x, w)?.min(&eval_iv(b, x, w)?),
        Expr::Pow(g, a) => iv_pow(&eval_iv(g, x, w + 8)?, a, w)?,
        Expr::Log2(g) => iv_log2(&eval_iv(g, x, w + 8)?, w)?,
        Expr::Exp2(g) => {
            let v = eval_iv(g, x, w + 8)?;
            let top = v.hi.ceil().to_u32().unwrap_or(0);
            let v = if v.is_point() { v } else { eval_iv(g, x, w + 8 + top)? };
            iv_exp2(&v, w)?
        }
        Expr::Geom(b, g) => {
            let v = eval_iv(g, x, w + 8)?;
            if v.is_point() && v.lo.is_integer() {
                let k = v.lo.floor();
                let e = k.abs().to_u32().ok_or_else(|| Error::Domain(format!("exponent {k} too large")))?;
                let p = num_traits::pow(b.clone(), e as usize);
                let p = if k.is_negative() { p.recip() } else { p };
                rat_iv(&p, w)
            } else {
                let top = v.hi.ceil().to_u32().unwrap_or(0) * 4 + 8;
                let v = eval_iv(g, x, w + top)?;
                let lb = log2_rational(b, w + top)?;
                iv_exp2(&v.mul(&lb), w)?
            }
        }
        Expr::Floor(g) => eval_iv(g, x, w)?.floor(),
        Expr::Ceil(g) => eval_iv(g, x, w)?.ceil(),
        Expr::LogPowerProduct(k, a) => lpp(*k, a, x, w)?,
        Expr::Table(vals, tail) => {
            let n = int_arg(x, "table")?;
            match n.to_usize().filter(|&i| i < vals.len()) {
                Some(i) => rat_iv(&vals[i], w),
                None => eval_iv(tail, x, w)?,
            }
        }
        Expr::Inverse(g) => {
            if x.is_point() {
                let m = checks::generalized_inverse(g, &x.lo.to_rational())?;
                DyadInterval::nat(&m)
            } else {
                let a = checks::generalized_inverse(g, &x.lo.to_rational())?;
                let b = checks::generalized_inverse(g, &x.hi.to_rational())?;
                DyadInterval::new(Dyadic::from(&a), Dyadic::from(&b))
            }
        }
        Expr::PiecewiseLinearExt(g) => plext(g, x, w)?,
        Expr::Custom(s) => s.value(&int_arg(x, "sequence")?, w)?,
    })
}

trait Ilog {
    fn ilog2_or_zero(&self) -> u32;
}

impl Ilog for Dyadic {
    fn ilog2_or_zero(&self) -> u32 {
        if self.is_zero() {
            0
        } else {
            self.ilog2().max(0) as u32
        }
    }
}

fn lpp(k: u32, a: &BigRational, x: &DyadInterval, w: u32) -> Result<DyadInterval> {
    if k == 0 {
        if x.lo.is_negative() {
            return domain(format!("logpow at negative {x}"));
        }
        return iv_pow(x, a, w);
    }
    let start = tower(k).ok_or_else(|| Error::Domain("tower too large".into()))?;
    if x.lo < Dyadic::from(start as i64) {
        return domain(format!("logpow k={k} undefined below {start}, got {x}"));
    }
    let guard = w + 2 * x.hi.ilog2_or_zero() + 16;
    let mut prod = x.clone();
    let mut l = x.clone();
    for _ in 1..k {
        l = iv_log2(&l, guard)?;
        prod = prod.mul(&l);
    }
    l = iv_log2(&l, guard)?;
    let last = iv_pow(&l, a, guard)?;
    Ok(prod.mul(&last).round_out(w + 2))
}

fn plext(g: &OrderFn, x: &DyadInterval, w: u32) -> Result<DyadInterval> {
    if x.lo.is_negative() {
        return domain("piecewise-linear extension needs x >= 0");
    }
    let at = |m: &BigInt| -> Result<DyadInterval> {
        eval_iv(g, &DyadInterval::point(Dyadic::from_int(m.clone())), w + 4)
    };
    let point = |t: &Dyadic| -> Result<DyadInterval> {
        let m = t.floor();
        let fm = at(&m)?;
        if t.is_integer() {
            return Ok(fm);
        }
        let fm1 = at(&(&m + 1))?;
        let frac = DyadInterval::point(t - &Dyadic::from_int(m));
        Ok(fm.add(&fm1.sub(&fm).mul(&frac)))
    };
    let mut out = point(&x.lo)?;
    if !x.is_point() {
        out = out.hull(&point(&x.hi)?);
        let mut m = x.lo.floor() + 1;
        let top = x.hi.floor();
        while m <= top {
            out = out.hull(&at(&m)?);
            m += 1;
        }
    }
    Ok(out)
}

fn rational_root(q: &BigRational, r: u32) -> Option<BigRational> {
    if q.is_negative() {
        return None;
    }
    let n = q.numer().to_biguint()?;
    let d = q.denom().to_biguint()?;
    let (a, b) = (n.nth_root(r), d.nth_root(r));
    (a.pow(r) == n && b.pow(r) == d).then(|| BigRational::new(a.into(), b.into()))
}

fn rational_pow(q: &BigRational, a: &BigRational) -> Option<BigRational> {
    if a.is_zero() {
        return Some(BigRational::one());
    }
    let p = a.numer().abs().to_u32()?;
    let r = a.denom().to_u32()?;
    if q.is_zero() {
        return (!a.is_negative()).then(BigRational::zero);
    }
    let root = if r == 1 { q.clone() } else { rational_root(q, r)? };
    let v = num_traits::pow(root, p as usize);
    Some(if a.is_negative() { v.recip() } else { v })
}

/// Exact `log₂ q` when `q` is a power of two.
fn rational_log2(q: &BigRational) -> Option<BigRational> {
    if !q.is_positive() {
        return None;
    }
    let pow2 = |z: &BigInt| -> Option<i64> {
        let u = z.to_biguint()?;
        let t = u.trailing_zeros()?;
        (u >> t).is_one().then_some(t as i64)
    };
    let e = pow2(q.numer())? - pow2(q.denom())?;
    Some(BigRational::from_integer(e.into()))
}

/// Exact rational value of `f` at `x` when every step stays rational.
pub(super) fn exact(f: &OrderFn, x: &BigRational) -> Result<Option<BigRational>> {
    macro_rules! ex {
        ($g:expr, $x:expr) => {
            match exact($g, $x)? {
                Some(v) => v,
                None => return Ok(None),
            }
        };
    }
    let nat = |x: &BigRational| -> Option<BigUint> {
        if x.is_integer() && !x.is_negative() {
            x.to_integer().to_biguint()
        } else {
            None
        }
    };
    Ok(Some(match f.expr() {
        Expr::Const(q) => q.clone(),
        Expr::Identity => x.clone(),
        Expr::Affine(a, b, g) => a * ex!(g, x) + b,
        Expr::Add(a, b) => ex!(a, x) + ex!(b, x),
        Expr::Sub(a, b) => ex!(a, x) - ex!(b, x),
        Expr::Mul(a, b) => ex!(a, x) * ex!(b, x),
        Expr::Compose(a, b) => {
            let inner = ex!(b, x);
            ex!(a, &inner)
        }
        Expr::Max(a, b) => ex!(a, x).max(ex!(b, x)),
        Expr::Min(a, b) => ex!(a, x).min(ex!(b, x)),
        Expr::Pow(g, a) => match rational_pow(&ex!(g, x), a) {
            Some(v) => v,
            None => return Ok(None),
        },
        Expr::Log2(g) => {
            let v = ex!(g, x);
            if !v.is_positive() {
                return domain(format!("log2 of {v}"));
            }
            match rational_log2(&v) {
                Some(l) => l,
                None => return Ok(None),
            }
        }
        Expr::Exp2(g) => {
            let v = ex!(g, x);
            if !v.is_integer() {
                return Ok(None);
            }
            let e = v.to_integer().to_i64().ok_or_else(|| Error::Domain("exponent too large".into()))?;
            let p = BigRational::from_integer(BigInt::one() << e.unsigned_abs() as usize);
            if e < 0 { p.recip() } else { p }
        }
        Expr::Geom(b, g) => {
            let v = ex!(g, x);
            if !v.is_integer() {
                return Ok(None);
            }
            let e = v.to_integer().to_i64().ok_or_else(|| Error::Domain("exponent too large".into()))?;
            let p = num_traits::pow(b.clone(), e.unsigned_abs() as usize);
            if e < 0 { p.recip() } else { p }
        }
        Expr::Floor(g) => BigRational::from_integer(ex!(g, x).floor().to_integer()),
        Expr::Ceil(g) => BigRational::from_integer(ex!(g, x).ceil().to_integer()),
        Expr::LogPowerProduct(k, a) => {
            if *k == 0 {
                match rational_pow(x, a) {
                    Some(v) => v,
                    None => return Ok(None),
                }
            } else {
                let start = tower(*k).ok_or_else(|| Error::Domain("tower too large".into()))?;
                if x < &BigRational::from_integer(start.into()) {
                    return domain(format!("logpow k={k} undefined below {start}, got {x}"));
                }
                let mut prod = x.clone();
                let mut l = x.clone();
                for _ in 1..*k {
                    l = match rational_log2(&l) {
                        Some(v) => v,
                        None => return Ok(None),
                    };
                    prod *= &l;
                }
                let l = match rational_log2(&l) {
                    Some(v) => v,
                    None => return Ok(None),
                };
                match rational_pow(&l, a) {
                    Some(v) => prod * v,
                    None => return Ok(None),
                }
            }
        }
        Expr::Table(vals, tail) => {
            let n = match nat(x) {
                Some(n) => n,
                None => return domain(format!("table needs a natural argument, got {x}")),
            };
            match n.to_usize().filter(|&i| i < vals.len()) {
                Some(i) => vals[i].clone(),
                None => ex!(tail, x),
            }
        }
        Expr::Inverse(g) => {
            BigRational::from_integer(BigInt::from(checks::generalized_inverse(g, x)?))
        }
        Expr::PiecewiseLinearExt(g) => {
            let m = x.floor();
            let fm = ex!(g, &m);
            if x.is_integer() {
                fm
            } else {
                let fm1 = ex!(g, &(&m + BigRational::one()));
                &fm + (fm1 - &fm) * (x - &m)
            }
        }
        Expr::Custom(s) => {
            let n = match nat(x) {
                Some(n) => n,
                None => return domain(format!("sequence needs a natural argument, got {x}")),
            };
            if let Some(q) = s.exact(&n)? {
                return Ok(Some(q));
            }
            let v = s.value(&n, 64)?;
            if v.is_point() {
                v.lo.to_rational()
            } else {
                return Ok(None);
            }
        }
    }))
}
