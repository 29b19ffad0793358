//! Symbolic order functions with monotonicity certificates.

mod checks;
mod eval;
mod logpoly;
mod parse;

pub(crate) use checks::{cmp_fns_at, cmp_with_rational, decide};
pub use checks::{
    check_convex, check_subidentical, dominates_upto, generalized_inverse, pl_extend_eval, Verdict,
};
pub use logpoly::{factor_log2, LogPoly};
pub use parse::parse;

use std::fmt;
use std::sync::Arc;

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::error::{domain, precondition, Result};
use crate::numerics::DyadInterval;

/// Host-defined sequence plugged into an expression, e.g. the output of a
/// series construction. Evaluated only at naturals.
pub trait Sequence: Send + Sync {
    fn value(&self, n: &BigUint, prec: u32) -> Result<DyadInterval>;
    fn describe(&self) -> String;

    fn exact(&self, _n: &BigUint) -> Result<Option<BigRational>> {
        Ok(None)
    }

    /// Bracket for `Σ_{m ≥ from} 1/value(m)`, when the sequence knows one.
    fn reciprocal_tail(&self, _from: &BigUint, _prec: u32) -> Result<Option<DyadInterval>> {
        Ok(None)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Monotone {
    Structural(String),
    Verified { horizon: u64 },
    Uncertified,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Certificate {
    pub monotone: Monotone,
    pub unbounded: bool,
    pub nonnegative: bool,
}

impl Certificate {
    pub fn is_monotone(&self) -> bool {
        !matches!(self.monotone, Monotone::Uncertified)
    }

    pub fn is_order(&self) -> bool {
        self.is_monotone() && self.unbounded
    }
}

#[derive(Clone)]
pub enum Expr {
    Const(BigRational),
    Identity,
    /// `a·f + b`
    Affine(BigRational, BigRational, OrderFn),
    Add(OrderFn, OrderFn),
    Sub(OrderFn, OrderFn),
    Mul(OrderFn, OrderFn),
    /// `f ∘ g`
    Compose(OrderFn, OrderFn),
    Max(OrderFn, OrderFn),
    Min(OrderFn, OrderFn),
    Pow(OrderFn, BigRational),
    Log2(OrderFn),
    Exp2(OrderFn),
    /// `b^f`
    Geom(BigRational, OrderFn),
    Floor(OrderFn),
    Ceil(OrderFn),
    /// `n·log₂n·…·log₂^{k-1}n·(log₂^k n)^α`
    LogPowerProduct(u32, BigRational),
    Table(Vec<BigRational>, OrderFn),
    Inverse(OrderFn),
    PiecewiseLinearExt(OrderFn),
    Custom(Arc<dyn Sequence>),
}

#[derive(Clone)]
pub struct OrderFn {
    expr: Arc<Expr>,
    cert: Certificate,
}

fn structural(rule: &str, unbounded: bool, nonnegative: bool) -> Certificate {
    Certificate { monotone: Monotone::Structural(rule.into()), unbounded, nonnegative }
}

fn uncertified(unbounded: bool, nonnegative: bool) -> Certificate {
    Certificate { monotone: Monotone::Uncertified, unbounded, nonnegative }
}

impl OrderFn {
    fn make(expr: Expr, cert: Certificate) -> Self {
        let mut f = OrderFn { expr: Arc::new(expr), cert };
        if f.cert.is_monotone() && !f.cert.nonnegative {
            let zero = BigRational::zero();
            let at0 = checks::cmp_with_rational(&f, &BigUint::zero(), &zero);
            f.cert.nonnegative = matches!(at0, Ok(std::cmp::Ordering::Greater | std::cmp::Ordering::Equal));
        }
        f
    }

    pub fn expr(&self) -> &Expr {
        &self.expr
    }

    pub fn certificate(&self) -> &Certificate {
        &self.cert
    }

    pub fn is_monotone(&self) -> bool {
        self.cert.is_monotone()
    }

    pub fn constant(q: BigRational) -> Self {
        let nn = !q.is_negative();
        Self::make(Expr::Const(q), structural("constant", false, nn))
    }

    pub fn int(n: i64) -> Self {
        Self::constant(BigRational::from_integer(n.into()))
    }

    pub fn identity() -> Self {
        Self::make(Expr::Identity, structural("identity", true, true))
    }

    pub fn affine(a: BigRational, b: BigRational, f: OrderFn) -> Self {
        let c = &f.cert;
        let cert = if a.is_negative() {
            uncertified(false, false)
        } else {
            let nn = c.nonnegative && !b.is_negative();
            let ub = c.unbounded && !a.is_zero();
            if c.is_monotone() { structural("affine with a >= 0", ub, nn) } else { uncertified(ub, nn) }
        };
        Self::make(Expr::Affine(a, b, f), cert)
    }

    pub fn scale(a: BigRational, f: OrderFn) -> Self {
        Self::affine(a, BigRational::zero(), f)
    }

    pub fn add(f: OrderFn, g: OrderFn) -> Self {
        let both = f.is_monotone() && g.is_monotone();
        let ub = both && (f.cert.unbounded || g.cert.unbounded);
        let nn = f.cert.nonnegative && g.cert.nonnegative;
        let cert = if both { structural("sum of nondecreasing", ub, nn) } else { uncertified(false, nn) };
        Self::make(Expr::Add(f, g), cert)
    }

    pub fn sub(f: OrderFn, g: OrderFn) -> Self {
        Self::make(Expr::Sub(f, g), uncertified(false, false))
    }

    pub fn mul(f: OrderFn, g: OrderFn) -> Self {
        let nn = f.cert.nonnegative && g.cert.nonnegative;
        let both = f.is_monotone() && g.is_monotone() && nn;
        let pos_const = |h: &OrderFn| matches!(h.expr(), Expr::Const(q) if q.is_positive());
        let ub = both
            && ((f.cert.unbounded && g.cert.unbounded)
                || (f.cert.unbounded && pos_const(&g))
                || (g.cert.unbounded && pos_const(&f)));
        let cert = if both { structural("product of nonnegative nondecreasing", ub, nn) } else { uncertified(false, nn) };
        Self::make(Expr::Mul(f, g), cert)
    }

    /// `f ∘ g`.
    pub fn compose(f: OrderFn, g: OrderFn) -> Self {
        let both = f.is_monotone() && g.is_monotone();
        let ub = both && f.cert.unbounded && g.cert.unbounded;
        let nn = f.cert.nonnegative;
        let cert = if both { structural("composition of nondecreasing", ub, nn) } else { uncertified(false, nn) };
        Self::make(Expr::Compose(f, g), cert)
    }

    pub fn max(f: OrderFn, g: OrderFn) -> Self {
        let both = f.is_monotone() && g.is_monotone();
        let ub = both && (f.cert.unbounded || g.cert.unbounded);
        let nn = f.cert.nonnegative || g.cert.nonnegative;
        let cert = if both { structural("max of nondecreasing", ub, nn) } else { uncertified(false, nn) };
        Self::make(Expr::Max(f, g), cert)
    }

    pub fn min(f: OrderFn, g: OrderFn) -> Self {
        let both = f.is_monotone() && g.is_monotone();
        let ub = both && f.cert.unbounded && g.cert.unbounded;
        let nn = f.cert.nonnegative && g.cert.nonnegative;
        let cert = if both { structural("min of nondecreasing", ub, nn) } else { uncertified(false, nn) };
        Self::make(Expr::Min(f, g), cert)
    }

    pub fn pow(f: OrderFn, a: BigRational) -> Self {
        let ok = f.is_monotone() && f.cert.nonnegative && a.is_positive();
        let cert = if ok { structural("positive power of nonnegative nondecreasing", f.cert.unbounded, true) } else { uncertified(false, true) };
        Self::make(Expr::Pow(f, a), cert)
    }

    pub fn sqrt(f: OrderFn) -> Self {
        Self::pow(f, BigRational::new(1.into(), 2.into()))
    }

    pub fn log2(f: OrderFn) -> Self {
        let cert = if f.is_monotone() { structural("log2 of nondecreasing", f.cert.unbounded, false) } else { uncertified(false, false) };
        Self::make(Expr::Log2(f), cert)
    }

    pub fn exp2(f: OrderFn) -> Self {
        let cert = if f.is_monotone() { structural("exp2 of nondecreasing", f.cert.unbounded, true) } else { uncertified(false, true) };
        Self::make(Expr::Exp2(f), cert)
    }

    /// `b^f`, `b > 1`.
    pub fn geom(b: BigRational, f: OrderFn) -> Result<Self> {
        if b <= BigRational::one() {
            return domain(format!("geometric base {b} must exceed 1"));
        }
        let cert = if f.is_monotone() { structural("power of base > 1", f.cert.unbounded, true) } else { uncertified(false, true) };
        Ok(Self::make(Expr::Geom(b, f), cert))
    }

    pub fn floor(f: OrderFn) -> Self {
        let cert = Certificate { monotone: floor_mono(&f), ..f.cert.clone() };
        Self::make(Expr::Floor(f), cert)
    }

    pub fn ceil(f: OrderFn) -> Self {
        let cert = Certificate { monotone: floor_mono(&f), ..f.cert.clone() };
        Self::make(Expr::Ceil(f), cert)
    }

    /// Defined for `n ≥ ^k 2`; see [`OrderFn::canonical`] for a total version.
    pub fn log_power_product(k: u32, alpha: BigRational) -> Result<Self> {
        if !alpha.is_positive() {
            return domain(format!("exponent {alpha} must be positive"));
        }
        Ok(Self::make(Expr::LogPowerProduct(k, alpha), structural("log-power product", true, true)))
    }

    /// The log-power product frozen at its first defined value below `^k 2`.
    pub fn canonical(k: u32, alpha: BigRational) -> Result<Self> {
        let p = Self::log_power_product(k, alpha)?;
        let start = tower(k).ok_or_else(|| crate::Error::Domain(format!("tower of height {k} too large")))?;
        if start == 0 || k == 0 {
            return Ok(p);
        }
        let v = eval::eval_exact_rational(&p, &BigUint::from(start))?;
        Self::table(vec![v; start as usize], p)
    }

    /// Explicit prefix followed by an unbounded tail.
    pub fn table(values: Vec<BigRational>, tail: OrderFn) -> Result<Self> {
        if !tail.cert.unbounded {
            return precondition("table tail must be certified unbounded");
        }
        let sorted = values.windows(2).all(|w| w[0] <= w[1]);
        let nn = values.iter().all(|v| !v.is_negative()) && tail.cert.nonnegative;
        let seam = match values.last() {
            None => true,
            Some(last) => {
                let at = BigUint::from(values.len());
                let t = checks::cmp_with_rational(&tail, &at, last);
                matches!(t, Ok(std::cmp::Ordering::Greater | std::cmp::Ordering::Equal))
            }
        };
        let cert = if sorted && seam && tail.is_monotone() {
            structural("nondecreasing table with nondecreasing tail", true, nn)
        } else {
            uncertified(true, nn)
        };
        Ok(Self::make(Expr::Table(values, tail), cert))
    }

    pub fn inverse(f: OrderFn) -> Result<Self> {
        if !f.cert.unbounded {
            return precondition("generalized inverse needs an unbounded function");
        }
        let cert = structural("generalized inverse", true, true);
        Ok(Self::make(Expr::Inverse(f), cert))
    }

    pub fn pl_ext(f: OrderFn) -> Self {
        let cert = f.cert.clone();
        Self::make(Expr::PiecewiseLinearExt(f), cert)
    }

    /// Sequence with a caller-supplied certificate.
    pub fn custom(seq: Arc<dyn Sequence>, cert: Certificate) -> Self {
        Self::make(Expr::Custom(seq), cert)
    }

    /// Checks `f(n) ≤ f(n+1)` for `n < horizon` and records it.
    pub fn verify_monotone(&self, horizon: u64) -> Result<Self> {
        for n in 0..horizon {
            let a = BigUint::from(n);
            let b = BigUint::from(n + 1);
            if checks::cmp_fns_at(self, &a, self, &b)? == std::cmp::Ordering::Greater {
                return precondition(format!("not nondecreasing at {n}"));
            }
        }
        let mut out = self.clone();
        if !self.is_monotone() {
            out.cert.monotone = Monotone::Verified { horizon };
        }
        Ok(out)
    }

    /// Mark as unbounded (the caller vouches for it).
    pub fn assume_unbounded(mut self) -> Self {
        self.cert.unbounded = true;
        self
    }

    pub fn eval_at(&self, n: &BigUint, prec: u32) -> Result<DyadInterval> {
        eval::eval_at(self, &DyadInterval::nat(n), prec)
    }

    pub fn eval_iv(&self, x: &DyadInterval, prec: u32) -> Result<DyadInterval> {
        eval::eval_at(self, x, prec)
    }

    /// Exact natural value; errors unless `f(n)` is a natural number.
    pub fn eval_nat(&self, n: &BigUint) -> Result<BigUint> {
        let v = eval::eval_integer(self, n)?;
        if !v.is_integer() || v.is_negative() {
            return domain(format!("{self} at {n} is {v}, not a natural"));
        }
        Ok(v.to_integer().to_biguint().unwrap())
    }

    /// `⌊f(n)⌋`, escalating precision until it is determined.
    pub fn eval_floor(&self, n: &BigUint) -> Result<num_bigint::BigInt> {
        eval::eval_floor(self, n)
    }

    /// Exact rational value at `n`, when the expression yields one.
    pub fn exact_at(&self, n: &BigUint) -> Result<Option<BigRational>> {
        eval::exact(self, &BigRational::from_integer(n.clone().into()))
    }

    pub fn at_u64(&self, n: u64, prec: u32) -> Result<DyadInterval> {
        self.eval_at(&BigUint::from(n), prec)
    }
}

fn floor_mono(f: &OrderFn) -> Monotone {
    match &f.cert.monotone {
        Monotone::Uncertified => Monotone::Uncertified,
        Monotone::Verified { horizon } => Monotone::Verified { horizon: *horizon },
        Monotone::Structural(_) => Monotone::Structural("rounding of nondecreasing".into()),
    }
}

/// `^k 2` (tower of twos of height `k`, `^0 2 = 1`).
pub fn tower(k: u32) -> Option<u64> {
    let mut t = 1u64;
    for _ in 0..k {
        if t >= 64 {
            return None;
        }
        t = 1u64 << t;
    }
    Some(t)
}

fn fmt_q(q: &BigRational) -> String {
    if q.is_integer() {
        q.numer().to_string()
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}

impl fmt::Display for OrderFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.expr() {
            Expr::Const(q) => write!(f, "const {}", fmt_q(q)),
            Expr::Identity => write!(f, "n"),
            Expr::Affine(a, b, g) => write!(f, "affine {} {} ({g})", fmt_q(a), fmt_q(b)),
            Expr::Add(a, b) => write!(f, "add ({a}) ({b})"),
            Expr::Sub(a, b) => write!(f, "sub ({a}) ({b})"),
            Expr::Mul(a, b) => write!(f, "mul ({a}) ({b})"),
            Expr::Compose(a, b) => write!(f, "compose ({a}) ({b})"),
            Expr::Max(a, b) => write!(f, "max ({a}) ({b})"),
            Expr::Min(a, b) => write!(f, "min ({a}) ({b})"),
            Expr::Pow(g, a) => write!(f, "pow {} ({g})", fmt_q(a)),
            Expr::Log2(g) => write!(f, "log2 ({g})"),
            Expr::Exp2(g) => write!(f, "exp2 ({g})"),
            Expr::Geom(b, g) => write!(f, "geom {} ({g})", fmt_q(b)),
            Expr::Floor(g) => write!(f, "floor ({g})"),
            Expr::Ceil(g) => write!(f, "ceil ({g})"),
            Expr::LogPowerProduct(k, a) => write!(f, "logpow k={k} a={}", fmt_q(a)),
            Expr::Table(v, t) => {
                let vs: Vec<String> = v.iter().map(fmt_q).collect();
                write!(f, "table [{}] ({t})", vs.join(","))
            }
            Expr::Inverse(g) => write!(f, "inv ({g})"),
            Expr::PiecewiseLinearExt(g) => write!(f, "plext ({g})"),
            Expr::Custom(s) => write!(f, "<{}>", s.describe()),
        }
    }
}

impl fmt::Debug for OrderFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "OrderFn({self})")
    }
}
