//! Reciprocal series of order functions: classification, brackets, and the
//! bounding constructions for families of fast- and slow-growing functions.

use std::cmp::Ordering;
use std::fmt;
use std::sync::{Arc, Mutex};

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{domain, precondition, Error, Result};
use crate::numerics::{iv_log2, iv_pow, ln2, Dyadic, DyadInterval, RealBracket, PREC_CAP};
use crate::orderfn::{
    cmp_fns_at, cmp_with_rational, decide, dominates_upto, tower, Certificate, Expr, Monotone, OrderFn, Sequence,
};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum GrowthTag {
    FastGrowing,
    SlowGrowing,
    /// Nothing decided; carries the largest index examined.
    Unknown(u64),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GrowthClass {
    pub tag: GrowthTag,
    pub certificate: String,
}

impl GrowthClass {
    fn fast(why: impl Into<String>) -> Self {
        GrowthClass { tag: GrowthTag::FastGrowing, certificate: why.into() }
    }

    fn slow(why: impl Into<String>) -> Self {
        GrowthClass { tag: GrowthTag::SlowGrowing, certificate: why.into() }
    }

    pub fn is_fast(&self) -> bool {
        self.tag == GrowthTag::FastGrowing
    }

    pub fn is_slow(&self) -> bool {
        self.tag == GrowthTag::SlowGrowing
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    Condensation,
    IntegralTest,
    ClosedForm,
    DirectComparison,
}

#[derive(Clone)]
pub struct SeriesReport {
    pub subject: OrderFn,
    pub class: GrowthClass,
    /// Bracket of `Σ_{n ≥ from} 1/p(n)` and the precision it was asked at.
    pub bracket: Option<(DyadInterval, u32)>,
    pub method: Method,
}

impl fmt::Debug for SeriesReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SeriesReport")
            .field("subject", &self.subject.to_string())
            .field("class", &self.class)
            .field("bracket", &self.bracket)
            .field("method", &self.method)
            .finish()
    }
}

/// `n·log₂n·…·(log₂^k n)^α` is fast-growing iff `α > 1`.
pub fn classify_canonical(k: u32, alpha: &BigRational) -> Result<GrowthClass> {
    if !alpha.is_positive() {
        return domain(format!("exponent {alpha} must be positive"));
    }
    Ok(if alpha > &BigRational::one() {
        GrowthClass::fast(format!(
            "integral test: tail integral from ^{k}2 equals (ln 2)^{k}/({alpha} - 1)"
        ))
    } else {
        GrowthClass::slow(format!(
            "Cauchy condensation applied {k} times reduces to sum of n^-{alpha}, which diverges"
        ))
    })
}

/// Classification from the shape of the expression.
pub fn classify(p: &OrderFn) -> GrowthClass {
    let one = BigRational::one();
    match p.expr() {
        Expr::LogPowerProduct(k, a) => classify_canonical(*k, a).unwrap_or_else(|e| unknown(e.to_string())),
        Expr::Pow(g, a) if matches!(g.expr(), Expr::Identity) => {
            classify_canonical(0, a).unwrap_or_else(|e| unknown(e.to_string()))
        }
        Expr::Identity => GrowthClass::slow("harmonic series"),
        Expr::Const(_) => GrowthClass::slow("constant terms"),
        Expr::Exp2(g) if matches!(g.expr(), Expr::Identity) => GrowthClass::fast("geometric closed form"),
        Expr::Geom(b, g) if matches!(g.expr(), Expr::Identity) && b > &one => {
            GrowthClass::fast("geometric closed form")
        }
        Expr::Table(_, tail) => classify(tail),
        Expr::Affine(a, _, g) if a.is_positive() => {
            let c = classify(g);
            GrowthClass { certificate: format!("comparison with {g}: {}", c.certificate), ..c }
        }
        Expr::Custom(_) => match recip_tail(p, &BigUint::from(1u32 << 20), 8) {
            Ok(Some(_)) => GrowthClass::fast("construction supplies a tail bound"),
            _ => unknown("custom sequence"),
        },
        _ => unknown(format!("no rule for {p}")),
    }
}

fn unknown(why: impl Into<String>) -> GrowthClass {
    GrowthClass { tag: GrowthTag::Unknown(0), certificate: why.into() }
}

fn recip(v: &DyadInterval, prec: u32) -> Result<DyadInterval> {
    DyadInterval::int(1).div(v, prec)
}

fn one_d() -> Dyadic {
    Dyadic::one()
}

fn small(n: &BigUint) -> Result<u64> {
    n.to_u64().filter(|&v| v < 1 << 40).ok_or_else(|| Error::Domain(format!("index {n} too large")))
}

/// Bracket for `Σ_{n ≥ from} 1/p(n)` from the symbolic shape of `p`, with
/// the rule used.
pub fn recip_tail(p: &OrderFn, from: &BigUint, prec: u32) -> Result<Option<(DyadInterval, Method)>> {
    let w = prec + 8;
    let one = BigRational::one();
    Ok(match p.expr() {
        Expr::Exp2(g) if matches!(g.expr(), Expr::Identity) => {
            let e = from.to_i64().ok_or_else(|| Error::Domain("index too large".into()))?;
            Some((DyadInterval::point(Dyadic::pow2(1 - e)), Method::ClosedForm))
        }
        Expr::Geom(b, g) if matches!(g.expr(), Expr::Identity) && b > &one => {
            let e = small(from)? as usize;
            let q = num_traits::pow(b.recip(), e) * b / (b - &one);
            Some((DyadInterval::from_rational(&q, w), Method::ClosedForm))
        }
        Expr::LogPowerProduct(k, a) if a > &one => integral_tail(p, *k, a, from, w)?,
        Expr::Pow(g, a) if matches!(g.expr(), Expr::Identity) && a > &one => integral_tail(p, 0, a, from, w)?,
        Expr::Table(vals, tail) => {
            let len = BigUint::from(vals.len());
            if from >= &len {
                recip_tail(tail, from, prec)?
            } else {
                let start = small(from)? as usize;
                let mut head = BigRational::zero();
                for v in &vals[start..] {
                    if !v.is_positive() {
                        return Ok(None);
                    }
                    head += v.recip();
                }
                recip_tail(tail, &len, prec + 1)?.map(|(t, m)| (t.add(&DyadInterval::from_rational(&head, w)), m))
            }
        }
        Expr::Affine(a, b, g) if a.is_positive() => {
            let Some((t, m)) = recip_tail(g, from, prec + 2)? else { return Ok(None) };
            let ag = g.eval_at(from, w)?.mul(&DyadInterval::from_rational(a, w + 8));
            let full = ag.add(&DyadInterval::from_rational(b, w + 8));
            if !full.is_positive() || !ag.is_positive() {
                return Ok(None);
            }
            let r = ag.div(&full, w)?;
            let band = DyadInterval::new(r.lo.clone().min(one_d()), r.hi.clone().max(one_d()));
            let inv_a = DyadInterval::from_rational(&a.recip(), w + 8);
            let method = if b.is_zero() { m } else { Method::DirectComparison };
            Some((t.mul(&band).mul(&inv_a).round_out(w), method))
        }
        Expr::Custom(s) => s.reciprocal_tail(from, prec)?.map(|t| (t, Method::DirectComparison)),
        _ => None,
    })
}

/// `∫_N^∞ dx/p̄(x) = (ln 2)^k (log₂^k N)^{1-α}/(α-1)` sandwiched against the sum.
fn integral_tail(p: &OrderFn, k: u32, a: &BigRational, from: &BigUint, w: u32) -> Result<Option<(DyadInterval, Method)>> {
    let start = match tower(k) {
        Some(t) => t.max(1),
        None => return Ok(None),
    };
    if from < &BigUint::from(start) {
        return Ok(None);
    }
    let ww = w + 16;
    let mut u = DyadInterval::nat(from);
    let mut l = DyadInterval::int(1);
    let ln = ln2(ww);
    for _ in 0..k {
        u = iv_log2(&u, ww)?;
        l = l.mul(&ln).round_out(ww);
    }
    let one = BigRational::one();
    let integral = iv_pow(&u, &(&one - a), ww)?
        .mul(&l)
        .mul(&DyadInterval::from_rational(&(a - &one).recip(), ww))
        .round_out(ww);
    let first = recip(&p.eval_at(from, ww)?, ww)?;
    Ok(Some((DyadInterval::new(integral.lo, &integral.hi + &first.hi).round_out(w), Method::IntegralTest)))
}

const TAIL_SEARCH_CAP: u64 = 1 << 32;

/// Interval of width `≤ 2^{-k}` containing `Σ_{n ≥ from} 1/p(n)`.
pub fn sum_reciprocal(p: &OrderFn, from: u64, k: u32) -> Result<DyadInterval> {
    Ok(analyze_bracket(p, from, k)?.0)
}

fn analyze_bracket(p: &OrderFn, from: u64, k: u32) -> Result<(DyadInterval, Method)> {
    if !p.is_monotone() {
        return precondition(format!("{p} has no monotonicity certificate"));
    }
    let mut n = from;
    let (tail, method) = loop {
        if let Some((t, m)) = recip_tail(p, &BigUint::from(n), k + 4)? {
            if t.fine(k + 1) {
                break (t, m);
            }
        }
        n = if n == 0 { 1 } else { n * 2 };
        if n > TAIL_SEARCH_CAP {
            return precondition(format!("{p} is not certified fast-growing with a bracketable tail"));
        }
    };
    let count = n - from;
    let mut w = k + 4 + (64 - count.leading_zeros());
    loop {
        let mut s = DyadInterval::int(0);
        for i in from..n {
            s = s.add(&recip(&p.at_u64(i, w)?, w)?);
        }
        let total = s.add(&tail);
        if total.fine(k) {
            return Ok((total, method));
        }
        if w > k + PREC_CAP {
            return Err(Error::Indeterminate { at: format!("partial sum of 1/({p}) to {n}") });
        }
        w += 16;
    }
}

/// Classification plus, for fast-growing subjects, a bracket of the tail.
pub fn analyze(p: &OrderFn, from: u64, k: u32) -> Result<SeriesReport> {
    let class = classify(p);
    if class.is_fast() {
        let (iv, method) = analyze_bracket(p, from, k)?;
        return Ok(SeriesReport { subject: p.clone(), class, bracket: Some((iv, k)), method });
    }
    Ok(SeriesReport { subject: p.clone(), class, bracket: None, method: Method::Condensation })
}

/// A sequence of order functions `k ↦ p_k`.
#[derive(Clone)]
pub struct Family {
    make: Arc<dyn Fn(usize) -> OrderFn + Send + Sync>,
    distinct: Option<usize>,
    cache: Arc<Mutex<Vec<OrderFn>>>,
}

impl Family {
    pub fn new(make: impl Fn(usize) -> OrderFn + Send + Sync + 'static) -> Self {
        Family { make: Arc::new(make), distinct: None, cache: Arc::new(Mutex::new(Vec::new())) }
    }

    /// `p_0, …, p_{L-1}`, then `p_{L-1}` forever.
    pub fn finite(ps: Vec<OrderFn>) -> Result<Self> {
        if ps.is_empty() {
            return precondition("empty family");
        }
        let len = ps.len();
        let shared = ps.clone();
        Ok(Family {
            make: Arc::new(move |k| shared[k.min(len - 1)].clone()),
            distinct: Some(len),
            cache: Arc::new(Mutex::new(ps)),
        })
    }

    /// `p_k = p / 2^k`.
    pub fn halvings(p: OrderFn) -> Self {
        Family::new(move |k| OrderFn::scale(BigRational::new(BigInt::one(), BigInt::one() << k), p.clone()))
    }

    pub fn get(&self, k: usize) -> OrderFn {
        let k = self.distinct.map_or(k, |d| k.min(d - 1));
        let mut c = self.cache.lock().unwrap();
        while c.len() <= k {
            let next = (self.make)(c.len());
            c.push(next);
        }
        c[k].clone()
    }

    /// Indices `0..=last` with repeats of the final member collapsed.
    fn upto(&self, last: usize) -> usize {
        self.distinct.map_or(last, |d| last.min(d - 1))
    }
}

fn order_cert(rule: &str) -> Certificate {
    Certificate { monotone: Monotone::Structural(rule.into()), unbounded: true, nonnegative: true }
}

fn min_over(fam: &Family, last: usize, n: &BigUint, prec: u32) -> Result<DyadInterval> {
    let mut v = fam.get(0).eval_at(n, prec)?;
    for k in 1..=fam.upto(last) {
        v = v.min(&fam.get(k).eval_at(n, prec)?);
    }
    Ok(v)
}

fn max_over(fam: &Family, last: usize, n: &BigUint, prec: u32) -> Result<DyadInterval> {
    let mut v = fam.get(0).eval_at(n, prec)?;
    for k in 1..=fam.upto(last) {
        v = v.max(&fam.get(k).eval_at(n, prec)?);
    }
    Ok(v)
}

fn exact_fold(
    fam: &Family,
    last: usize,
    n: &BigUint,
    pick: fn(BigRational, BigRational) -> BigRational,
) -> Result<Option<BigRational>> {
    let mut acc: Option<BigRational> = None;
    for k in 0..=fam.upto(last) {
        match fam.get(k).exact_at(n)? {
            Some(v) => acc = Some(match acc { None => v, Some(a) => pick(a, v) }),
            None => return Ok(None),
        }
    }
    Ok(acc)
}

struct SlowLowerSeq {
    fam: Family,
    ms: Mutex<Vec<u64>>,
}

impl SlowLowerSeq {
    fn extend(&self, n: u64) -> Result<u64> {
        let mut ms = self.ms.lock().unwrap();
        while ms.len() as u64 <= n {
            let i = ms.len() as u64;
            let prev = *ms.last().unwrap();
            let cand = BigRational::from_integer((prev + 1).into());
            let at = BigUint::from(i);
            let mut admit = true;
            for k in 0..=self.fam.upto(prev as usize + 1) {
                if cmp_with_rational(&self.fam.get(k), &at, &cand)? == Ordering::Less {
                    admit = false;
                    break;
                }
            }
            ms.push(if admit { prev + 1 } else { prev });
        }
        Ok(ms[n as usize])
    }

    fn floor_value(&self) -> OrderFn {
        self.fam.get(0)
    }
}

impl Sequence for SlowLowerSeq {
    fn value(&self, n: &BigUint, prec: u32) -> Result<DyadInterval> {
        let m = self.extend(small(n)?)?;
        let v = min_over(&self.fam, m as usize, n, prec)?.min(&DyadInterval::int(m as i64 + 1));
        Ok(v.max(&self.floor_value().eval_at(&BigUint::zero(), prec)?))
    }

    fn exact(&self, n: &BigUint) -> Result<Option<BigRational>> {
        let m = self.extend(small(n)?)?;
        let Some(v) = exact_fold(&self.fam, m as usize, n, |a, b| a.min(b))? else { return Ok(None) };
        let Some(base) = self.floor_value().exact_at(&BigUint::zero())? else { return Ok(None) };
        Ok(Some(v.min(BigRational::from_integer((m + 1).into())).max(base)))
    }

    fn describe(&self) -> String {
        "slow lower bound".into()
    }
}

/// Output of [`slow_lower_bound`]: `q⁻` and the counters `M_n` for `n ≤ horizon`.
pub struct SlowLower {
    pub q: OrderFn,
    pub m: Vec<u64>,
}

/// Common slow-growing lower bound of a family (the `(q⁻, M_n)` recursion).
pub fn slow_lower_bound(ps: &Family, horizon: u64) -> Result<SlowLower> {
    let seq = Arc::new(SlowLowerSeq { fam: ps.clone(), ms: Mutex::new(vec![0]) });
    seq.extend(horizon)?;
    let m = seq.ms.lock().unwrap()[..=horizon as usize].to_vec();
    let q = OrderFn::custom(seq, order_cert("slow lower bound recursion"));
    Ok(SlowLower { q, m })
}

struct BlockSum {
    exact: Option<BigRational>,
    approx: DyadInterval,
}

impl BlockSum {
    fn new() -> Self {
        BlockSum { exact: Some(BigRational::zero()), approx: DyadInterval::int(0) }
    }
}

struct SlowUpperState {
    blocks: Vec<u64>,
    scanned: u64,
    sum: BlockSum,
}

struct SlowUpperSeq {
    fam: Family,
    st: Mutex<SlowUpperState>,
}

const SUM_PREC: u32 = 64;

fn block_reaches_one(fam: &Family, m: usize, start: u64, end: u64, sum: &BlockSum) -> Result<bool> {
    let one = BigRational::one();
    if let Some(q) = &sum.exact {
        return Ok(q >= &one);
    }
    if let Some(o) = sum.approx.cmp_rational(&one) {
        return Ok(o != Ordering::Less);
    }
    let p = fam.get(m);
    let mut w = 2 * SUM_PREC;
    while w <= PREC_CAP * 2 {
        let mut s = DyadInterval::int(0);
        for i in start..=end {
            s = s.add(&recip(&p.at_u64(i, w)?, w)?);
        }
        if let Some(o) = s.cmp_rational(&one) {
            return Ok(o != Ordering::Less);
        }
        w *= 2;
    }
    Err(Error::Indeterminate { at: format!("block sum of 1/({p}) over [{start}, {end}]") })
}

impl SlowUpperSeq {
    /// Block index of `n`.
    fn extend(&self, n: u64) -> Result<usize> {
        let mut st = self.st.lock().unwrap();
        while st.scanned <= n {
            let i = st.scanned;
            let m = st.blocks.len() - 1;
            let p = self.fam.get(m);
            let at = BigUint::from(i);
            let term_exact = match (&st.sum.exact, p.exact_at(&at)?) {
                (Some(s), Some(v)) if v.is_positive() => Some(s + v.recip()),
                _ => None,
            };
            let term = recip(&p.eval_at(&at, SUM_PREC)?, SUM_PREC)?;
            st.sum.exact = term_exact;
            st.sum.approx = st.sum.approx.add(&term);
            st.scanned = i + 1;
            let start = *st.blocks.last().unwrap();
            if block_reaches_one(&self.fam, m, start, i, &st.sum)?
                && cmp_fns_at(&p, &at, &self.fam.get(m + 1), &BigUint::from(i + 1))? != Ordering::Greater
            {
                st.blocks.push(i + 1);
                st.sum = BlockSum::new();
            }
        }
        Ok(st.blocks.iter().rposition(|&b| b <= n).unwrap())
    }
}

impl Sequence for SlowUpperSeq {
    fn value(&self, n: &BigUint, prec: u32) -> Result<DyadInterval> {
        let m = self.extend(small(n)?)?;
        self.fam.get(m).eval_at(n, prec)
    }

    fn exact(&self, n: &BigUint) -> Result<Option<BigRational>> {
        let m = self.extend(small(n)?)?;
        self.fam.get(m).exact_at(n)
    }

    fn describe(&self) -> String {
        "slow upper bound".into()
    }
}

/// Output of [`slow_upper_bound`]: `q⁺` and the block starts `N_m ≤ horizon`.
pub struct SlowUpper {
    pub q: OrderFn,
    pub blocks: Vec<u64>,
}

const CHAIN_CHECK: usize = 16;

/// Common slow-growing upper bound of a domination chain (the `N_m` blocks).
pub fn slow_upper_bound(ps: &Family, horizon: u64) -> Result<SlowUpper> {
    let links = ps.distinct.map_or(CHAIN_CHECK, |d| d.saturating_sub(1).min(CHAIN_CHECK));
    for k in 0..links {
        if let crate::orderfn::Verdict::Fail(n) = dominates_upto(&ps.get(k), &ps.get(k + 1), horizon / 2, horizon)? {
            return precondition(format!("chain violation: p_{k}({n}) > p_{}({n})", k + 1));
        }
    }
    let seq = Arc::new(SlowUpperSeq {
        fam: ps.clone(),
        st: Mutex::new(SlowUpperState { blocks: vec![0], scanned: 0, sum: BlockSum::new() }),
    });
    seq.extend(horizon)?;
    let blocks = seq.st.lock().unwrap().blocks.iter().copied().filter(|&b| b <= horizon).collect();
    let q = OrderFn::custom(seq, order_cert("blockwise chain with seams checked"));
    Ok(SlowUpper { q, blocks })
}

struct MaxSeq {
    fam: Family,
}

impl Sequence for MaxSeq {
    fn value(&self, n: &BigUint, prec: u32) -> Result<DyadInterval> {
        max_over(&self.fam, small(n)? as usize, n, prec)
    }

    fn exact(&self, n: &BigUint) -> Result<Option<BigRational>> {
        exact_fold(&self.fam, small(n)? as usize, n, |a, b| a.max(b))
    }

    fn reciprocal_tail(&self, from: &BigUint, prec: u32) -> Result<Option<DyadInterval>> {
        Ok(recip_tail(&self.fam.get(0), from, prec)?
            .map(|(t, _)| DyadInterval::new(Dyadic::zero(), t.hi)))
    }

    fn describe(&self) -> String {
        "diagonal max".into()
    }
}

struct BlockMinSeq {
    fam: Family,
    blocks: Mutex<Vec<u64>>,
}

impl BlockMinSeq {
    /// Upper bound of `Σ_{k ≤ last} Σ_{n ≥ at} 1/p_k(n)`, if bracketable.
    fn tails_upper(&self, last: usize, at: u64, prec: u32) -> Result<Option<Dyadic>> {
        let at = BigUint::from(at);
        let top = self.fam.upto(last);
        let mut total = Dyadic::zero();
        for k in 0..=top {
            let Some((t, _)) = recip_tail(&self.fam.get(k), &at, prec)? else { return Ok(None) };
            let copies = if k == top { (last - top + 1) as i64 } else { 1 };
            total = &total + &(&t.hi * &Dyadic::from(copies));
        }
        Ok(Some(total))
    }

    fn ok_at(&self, m: usize, n: u64) -> Result<bool> {
        let bound = Dyadic::pow2(-(m as i64 + 1));
        Ok(matches!(self.tails_upper(m + 1, n, m as u32 + 8)?, Some(t) if t <= bound))
    }

    fn next_block(&self, m: usize, start: u64) -> Result<u64> {
        let mut lo = start;
        let mut step = 1u64;
        let hi = loop {
            let cand = start + step;
            if self.ok_at(m, cand)? {
                break cand;
            }
            lo = cand;
            step *= 2;
            if step > TAIL_SEARCH_CAP {
                return precondition(format!("tails of the first {} members are not bracketable", m + 2));
            }
        };
        let (mut lo, mut hi) = (lo, hi);
        while hi - lo > 1 {
            let mid = lo + (hi - lo) / 2;
            if self.ok_at(m, mid)? {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Ok(hi)
    }

    fn ensure_blocks(&self, count: usize) -> Result<Vec<u64>> {
        let mut b = self.blocks.lock().unwrap();
        while b.len() < count {
            let m = b.len() - 1;
            let next = self.next_block(m, b[m])?;
            b.push(next);
        }
        Ok(b.clone())
    }

    fn block_of(&self, n: u64) -> Result<usize> {
        loop {
            let b = self.blocks.lock().unwrap().clone();
            if *b.last().unwrap() > n {
                return Ok(b.iter().rposition(|&x| x <= n).unwrap());
            }
            self.ensure_blocks(b.len() + 1)?;
        }
    }
}

impl Sequence for BlockMinSeq {
    fn value(&self, n: &BigUint, prec: u32) -> Result<DyadInterval> {
        let m = self.block_of(small(n)?)?;
        min_over(&self.fam, m, n, prec)
    }

    fn exact(&self, n: &BigUint) -> Result<Option<BigRational>> {
        let m = self.block_of(small(n)?)?;
        exact_fold(&self.fam, m, n, |a, b| a.min(b))
    }

    fn reciprocal_tail(&self, from: &BigUint, _prec: u32) -> Result<Option<DyadInterval>> {
        let i = self.block_of(small(from)?)?;
        if i == 0 {
            return Ok(None);
        }
        Ok(Some(DyadInterval::new(Dyadic::zero(), Dyadic::pow2(1 - i as i64))))
    }

    fn describe(&self) -> String {
        "blockwise min".into()
    }
}

/// Output of [`fast_bounds`].
pub struct FastBounds {
    pub q_plus: OrderFn,
    pub q_minus: OrderFn,
    /// Block starts `N_0 = 0 < N_1 < …` reaching past the horizon.
    pub blocks: Vec<u64>,
    /// `β_i = Σ_{n < N_i} 1/q⁻(n) + 2^{-(i-1)}` for `i ≥ 1` with `N_i ≤ horizon`.
    pub betas: Vec<DyadInterval>,
}

/// Fast-growing upper and lower bounds of a family.
pub fn fast_bounds(ps: &Family, horizon: u64) -> Result<FastBounds> {
    let q_plus = OrderFn::custom(Arc::new(MaxSeq { fam: ps.clone() }), order_cert("diagonal max"));
    let seq = Arc::new(BlockMinSeq { fam: ps.clone(), blocks: Mutex::new(vec![0]) });
    seq.block_of(horizon)?;
    let mut blocks = seq.ensure_blocks(2)?;
    if blocks.len() < 3 {
        blocks = seq.ensure_blocks(3)?;
    }
    let q_minus = OrderFn::custom(seq, order_cert("blockwise min with summable tails"));
    let mut betas = Vec::new();
    let mut partial = DyadInterval::int(0);
    let mut at = 0u64;
    for (i, &end) in blocks.iter().enumerate().skip(1) {
        if end > horizon && i > 2 {
            break;
        }
        while at < end {
            partial = partial.add(&recip(&q_minus.at_u64(at, SUM_PREC)?, SUM_PREC)?);
            at += 1;
        }
        betas.push(partial.add(&DyadInterval::point(Dyadic::pow2(1 - i as i64))));
    }
    Ok(FastBounds { q_plus, q_minus, blocks, betas })
}

/// Sequence of rationals indexed by naturals.
pub type RatSeq = Arc<dyn Fn(u64) -> BigRational + Send + Sync>;

struct StrictSeq {
    p: OrderFn,
    eps: RatSeq,
}

impl Sequence for StrictSeq {
    fn value(&self, n: &BigUint, prec: u32) -> Result<DyadInterval> {
        let e = (self.eps)(small(n)?);
        Ok(self.p.eval_at(n, prec + 1)?.sub(&DyadInterval::from_rational(&e, prec + 1)))
    }

    fn exact(&self, n: &BigUint) -> Result<Option<BigRational>> {
        let e = (self.eps)(small(n)?);
        Ok(self.p.exact_at(n)?.map(|v| v - e))
    }

    fn reciprocal_tail(&self, from: &BigUint, prec: u32) -> Result<Option<DyadInterval>> {
        let Some((t, _)) = recip_tail(&self.p, from, prec + 2)? else { return Ok(None) };
        let w = prec + 8;
        let pv = self.p.eval_at(from, w)?;
        let hat = self.value(from, w)?;
        if !hat.is_positive() {
            return Ok(None);
        }
        let r = pv.div(&hat, w)?;
        Ok(Some(DyadInterval::new(t.lo.clone(), (&t.hi * &r.hi).round_up(w as i64))))
    }

    fn describe(&self) -> String {
        format!("{} minus a strictly decreasing offset", self.p)
    }
}

fn require_not_slow(p: &OrderFn) -> Result<()> {
    let c = classify(p);
    if c.is_slow() {
        return precondition(format!("{p} is slow-growing ({})", c.certificate));
    }
    Ok(())
}

/// `p̂(n) = p(n) − ε_n`: a strictly increasing lower bound of `p`.
pub fn strict_increasing_lower(p: &OrderFn, eps: RatSeq, horizon: u64) -> Result<OrderFn> {
    require_not_slow(p)?;
    let mut prev = eps(0);
    if !prev.is_positive() {
        return precondition("eps_0 must be positive");
    }
    for n in 1..=horizon {
        let e = eps(n);
        if !e.is_positive() || e >= prev {
            return precondition(format!("eps not positive and strictly decreasing at {n}"));
        }
        prev = e;
    }
    let floor = BigRational::one() + eps(0);
    if cmp_with_rational(p, &BigUint::zero(), &floor)? != Ordering::Greater {
        return precondition("need 1 < p(0) - eps_0");
    }
    let q = OrderFn::custom(Arc::new(StrictSeq { p: p.clone(), eps }), order_cert("strictly decreasing offset"));
    for n in 0..horizon {
        if cmp_fns_at(&q, &BigUint::from(n), &q, &BigUint::from(n + 1))? != Ordering::Less {
            return precondition(format!("p - eps not strictly increasing at {n}"));
        }
    }
    Ok(q)
}

struct JumpSeq {
    p: OrderFn,
    alpha: BigRational,
    last_hit: Mutex<Vec<u64>>,
}

impl JumpSeq {
    fn power(&self, e: u64) -> BigRational {
        num_traits::pow(self.alpha.clone(), e as usize)
    }

    fn scaled(&self, j: u64, e: u64, w: u32) -> Result<DyadInterval> {
        let a = self.power(e);
        let bits = a.to_integer().bits() as u32;
        let v = self.p.at_u64(j, w + bits + 2)?;
        Ok(v.mul(&DyadInterval::from_rational(&a, w + 2 + v.abs_max().ilog2().max(0) as u32)).round_out(w))
    }

    fn extend(&self, n: u64) -> Result<u64> {
        let mut hits = self.last_hit.lock().unwrap();
        while hits.len() as u64 <= n {
            let i = hits.len() as u64;
            let j = *hits.last().unwrap();
            let e = i - j;
            let at = BigUint::from(i);
            let o = decide(
                |w| self.p.eval_at(&at, w),
                |w| self.scaled(j, e, w),
                || {
                    Ok(match (self.p.exact_at(&at)?, self.p.exact_at(&BigUint::from(j))?) {
                        (Some(a), Some(b)) => Some(a.cmp(&(b * self.power(e)))),
                        _ => None,
                    })
                },
                || format!("p({i}) vs alpha^{e} p({j})"),
            )?;
            hits.push(if o == Ordering::Greater { j } else { i });
        }
        Ok(hits[n as usize])
    }
}

impl Sequence for JumpSeq {
    fn value(&self, n: &BigUint, prec: u32) -> Result<DyadInterval> {
        let n = small(n)?;
        let j = self.extend(n)?;
        self.scaled(j, n - j, prec)
    }

    fn exact(&self, n: &BigUint) -> Result<Option<BigRational>> {
        let n = small(n)?;
        let j = self.extend(n)?;
        Ok(self.p.exact_at(&BigUint::from(j))?.map(|v| v * self.power(n - j)))
    }

    fn reciprocal_tail(&self, from: &BigUint, prec: u32) -> Result<Option<DyadInterval>> {
        let Some((t, _)) = recip_tail(&self.p, from, prec + 4)? else { return Ok(None) };
        let w = prec + 8;
        let first = recip(&self.value(from, w)?, w)?;
        let k = &self.alpha / (&self.alpha - BigRational::one());
        let hi = first.add(&t).mul(&DyadInterval::from_rational(&k, w));
        Ok(Some(DyadInterval::new(t.lo, hi.hi).round_out(w)))
    }

    fn describe(&self) -> String {
        format!("{} with jumps capped at {}", self.p, self.alpha)
    }
}

/// Output of [`bounded_jumps`]: `p̂` and `I ∩ [0, horizon]`.
pub struct BoundedJumps {
    pub p_hat: OrderFn,
    pub hits: Vec<u64>,
}

/// `p̂(0) = p(0)`, `p̂(n+1) = min(α p̂(n), p(n+1))`.
pub fn bounded_jumps(p: &OrderFn, alpha: &BigRational, horizon: u64) -> Result<BoundedJumps> {
    if alpha <= &BigRational::one() {
        return domain(format!("ratio bound {alpha} must exceed 1"));
    }
    require_not_slow(p)?;
    let seq = Arc::new(JumpSeq { p: p.clone(), alpha: alpha.clone(), last_hit: Mutex::new(vec![0]) });
    seq.extend(horizon)?;
    let lh = seq.last_hit.lock().unwrap().clone();
    let hits = (0..=horizon).filter(|&n| lh[n as usize] == n).collect();
    let p_hat = OrderFn::custom(seq, order_cert("min of a nondecreasing function and a geometric step"));
    Ok(BoundedJumps { p_hat, hits })
}

/// Output of [`gap_sequence`].
#[derive(Clone, Debug)]
pub struct GapSequence {
    pub gamma: Vec<u64>,
    pub delta: Vec<u64>,
    /// Block ends `n_1 < n_2 < …`.
    pub ends: Vec<u64>,
    /// Bracket of `Σ ε_m γ_m`.
    pub weighted: DyadInterval,
}

const GAP_SCAN_CAP: u64 = 1 << 24;

/// Nondecreasing unbounded weights `γ_m` keeping `Σ ε_m γ_m` a recursive real.
pub fn gap_sequence(eps: RatSeq, total: &RealBracket, horizon: u64) -> Result<GapSequence> {
    let mut gamma = Vec::new();
    let mut delta: Vec<u64> = Vec::new();
    let mut ends = Vec::new();
    let mut partial = BigRational::zero();
    let mut weighted_d = BigRational::zero();
    let mut weighted_g = BigRational::zero();
    let mut budget = BigRational::zero();
    let mut last = 0u64;
    let mut j = 0u64;
    let mut m = 0u64;
    while ends.is_empty() || last < horizon {
        let frac = BigRational::one() - BigRational::new(BigInt::one(), BigInt::one() << (j + 1));
        let g = j + 1;
        let end = loop {
            let e = eps(m);
            if !e.is_positive() {
                return precondition(format!("eps_{m} is not positive"));
            }
            partial += &e;
            let done = m > last && reached(total, &frac, &partial)?;
            gamma.push(g);
            weighted_g += &e * BigRational::from_integer(g.into());
            if done {
                break m;
            }
            delta.push(g);
            weighted_d += &e * BigRational::from_integer(g.into());
            m += 1;
            if m - last > GAP_SCAN_CAP {
                return Err(Error::Exhausted(format!("block {j} of the gap sequence")));
            }
        };
        budget += BigRational::new(g.into(), BigInt::one() << j);
        let e = eps(end);
        let room = |w: u32| -> Result<BigInt> {
            let t = total.at(w)?;
            let lo = (t.lo.to_rational() * &budget - &weighted_d) / &e;
            Ok(lo.floor().to_integer())
        };
        let d = room(64)?.max(BigInt::from(g)).to_u64().unwrap_or(u64::MAX);
        delta.push(d);
        weighted_d += &e * BigRational::from_integer(d.into());
        ends.push(end);
        last = end;
        j += 1;
        m = end + 1;
    }
    let k = j as i64;
    let t = total.at(64)?;
    let tail = &t.hi * &Dyadic::from(k + 2);
    let tail = tail.shl(1 - k);
    let base = DyadInterval::from_rational(&weighted_g, 64);
    let weighted = DyadInterval::new(base.lo, &base.hi + &tail);
    Ok(GapSequence { gamma, delta, ends, weighted })
}

/// Certifies `Σ_{m ≤ n} ε_m ≥ frac · ε`.
fn reached(total: &RealBracket, frac: &BigRational, partial: &BigRational) -> Result<bool> {
    let mut w = 32;
    while w <= PREC_CAP {
        let t = total.at(w)?;
        if &(t.hi.to_rational() * frac) <= partial {
            return Ok(true);
        }
        if &(t.lo.to_rational() * frac) > partial {
            return Ok(false);
        }
        w *= 2;
    }
    Ok(false)
}

/// `q` with `p/q` nondecreasing and unbounded: the blockwise min of `p/2^k`.
pub fn mult_gap_lower(p: &OrderFn, horizon: u64) -> Result<FastBounds> {
    require_not_slow(p)?;
    if recip_tail(p, &BigUint::from(1u32 << 16), 8)?.is_none() {
        return precondition(format!("{p} has no bracketable reciprocal sum"));
    }
    fast_bounds(&Family::halvings(p.clone()), horizon)
}
