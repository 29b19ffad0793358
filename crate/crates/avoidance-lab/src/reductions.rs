//! Explicit reductions between complexity, avoidance and randomness: the
//! prefix transforms, the progression spreader, interval maps, the
//! regularity condition, the exponent algebra, `P_a^{b,c}` reductions,
//! reindexing and a shift-complexity checker.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::sync::{Arc, Mutex, Weak};

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::encodings::{str_encode, BitString, BoundFamily, BoundedWord, NatString};
use crate::error::{domain, precondition, Error, Result};
use crate::machine::Registry;
use crate::numerics::{iv_exp2, iv_log2, Dyadic, DyadInterval};
use crate::orderfn::{cmp_fns_at, factor_log2, LogPoly, OrderFn};

fn nat(n: u64) -> BigUint {
    BigUint::from(n)
}

fn q_int(n: impl Into<num_bigint::BigInt>) -> BigRational {
    BigRational::from_integer(n.into())
}

/// `(f⁻∘h)(n)`: the least `m` with `f(m) ≥ h(n)`.
pub fn inverse_at(f: &OrderFn, h: &OrderFn, n: u64) -> Result<u64> {
    let at = nat(n);
    let ge = |m: u64| -> Result<bool> { Ok(cmp_fns_at(f, &nat(m), h, &at)? != Ordering::Less) };
    if !f.is_monotone() {
        return (0..1u64 << 20).find_map(|m| ge(m).map(|b| b.then_some(m)).transpose()).unwrap_or_else(|| Err(Error::Exhausted(format!("{f} never reaches {h}({n})"))));
    }
    if ge(0)? {
        return Ok(0);
    }
    let (mut lo, mut hi) = (0u64, 1u64);
    while !ge(hi)? {
        lo = hi;
        hi = hi.checked_mul(2).ok_or_else(|| Error::Exhausted(format!("{f} never reaches {h}({n})")))?;
    }
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if ge(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// `Y(n) = str⁻¹(X ↾ (f⁻∘h)(n))` for `n < N`.
pub fn complex_to_lua(x: &BitString, f: &OrderFn, h: &OrderFn, n: u64) -> Result<Vec<BigUint>> {
    let lens = (0..n).map(|i| inverse_at(f, h, i)).collect::<Result<Vec<u64>>>()?;
    let need = lens.iter().copied().max().unwrap_or(0) as usize;
    if x.len() < need {
        return Err(Error::Length { need, have: x.len() });
    }
    let mut out = Vec::with_capacity(lens.len());
    for (i, &l) in lens.iter().enumerate() {
        let y = str_encode(&x.prefix(l as usize));
        if y >= BigUint::one() << (l + 1) {
            return Err(Error::Hypothesis { clause: "bound".into(), detail: format!("Y({i}) = {y} >= 2^{}", l + 1) });
        }
        out.push(y);
    }
    Ok(out)
}

/// `⌊log₂ p(i)⌋` for `i < N` (negative values clamp to 0).
pub fn block_widths(p: &OrderFn, n: u64) -> Result<Vec<u64>> {
    let lg = OrderFn::log2(p.clone());
    (0..n)
        .map(|i| {
            let v = lg.eval_floor(&nat(i))?;
            Ok(if v.is_negative() { 0 } else { v.to_u64().ok_or_else(|| Error::Domain(format!("log2 p({i}) too large")))? })
        })
        .collect()
}

/// `q(n) = Σ_{i<n} ⌊log₂ p(i)⌋` for `n ≤ N`.
pub fn pack_offsets(p: &OrderFn, n: u64) -> Result<Vec<u64>> {
    let mut q = vec![0u64];
    for w in block_widths(p, n)? {
        q.push(q.last().unwrap() + w);
    }
    Ok(q)
}

/// Packs `X(n)` little-endian into the bits `[q(n), q(n+1))` of `Y`.
pub fn lua_to_complex(x: &[BigUint], p: &OrderFn, n: u64) -> Result<BitString> {
    if (x.len() as u64) < n {
        return Err(Error::Length { need: n as usize, have: x.len() });
    }
    let widths = block_widths(p, n)?;
    let mut y = BitString::new();
    for (i, &w) in widths.iter().enumerate() {
        if x[i].bits() > w {
            return domain(format!("X({i}) = {} does not fit in {w} bits", x[i]));
        }
        for b in 0..w {
            y.push(x[i].bit(b) as u8);
        }
    }
    Ok(y)
}

/// Inverse of [`lua_to_complex`].
pub fn lua_unpack(y: &BitString, p: &OrderFn, n: u64) -> Result<Vec<BigUint>> {
    let q = pack_offsets(p, n)?;
    let need = *q.last().unwrap() as usize;
    if y.len() < need {
        return Err(Error::Length { need, have: y.len() });
    }
    Ok(q.windows(2)
        .map(|w| {
            let mut v = BigUint::zero();
            for b in (w[0]..w[1]).rev() {
                v <<= 1;
                if y.bits()[b as usize] == 1 {
                    v += 1u32;
                }
            }
            v
        })
        .collect())
}

type RatFn = Arc<dyn Fn(u64) -> BigRational + Send + Sync>;

/// A coefficient sequence with a geometric majorant `a_m ≤ C·r^m`.
#[derive(Clone)]
pub struct Coefficients {
    term: RatFn,
    c: BigRational,
    r: BigRational,
}

impl Coefficients {
    pub fn new(term: impl Fn(u64) -> BigRational + Send + Sync + 'static, c: BigRational, r: BigRational) -> Result<Self> {
        if !r.is_positive() || r >= BigRational::one() || c.is_negative() {
            return domain("majorant needs C >= 0 and 0 < r < 1");
        }
        Ok(Coefficients { term: Arc::new(term), c, r })
    }

    /// `a_m = ⌈√(2^m)⌉ / 2^m`.
    pub fn ceil_sqrt() -> Self {
        let term = |m: u64| {
            let p = BigUint::one() << m;
            let s = p.sqrt();
            let s = if &s * &s == p { s } else { s + 1u32 };
            BigRational::new(s.into(), p.into())
        };
        Coefficients { term: Arc::new(term), c: q_int(2), r: BigRational::new(3.into(), 4.into()) }
    }

    /// `b_m = 2a_m + m²/2^m`.
    pub fn adjusted(&self) -> Self {
        let a = self.term.clone();
        let term = move |m: u64| a(m) * q_int(2) + BigRational::new((m * m).into(), (BigUint::one() << m).into());
        let three_quarters = BigRational::new(3.into(), 4.into());
        let r = if self.r > three_quarters { self.r.clone() } else { three_quarters };
        Coefficients { term: Arc::new(term), c: &self.c * q_int(2) + q_int(4), r }
    }

    pub fn at(&self, m: u64) -> BigRational {
        (self.term)(m)
    }

    /// Bracket for `Σ_{k≥m} a_k`, of width below `2^{-40}`.
    pub fn tail(&self, m: u64) -> (BigRational, BigRational) {
        let eps = BigRational::new(1.into(), (BigUint::one() << 40u32).into());
        let one = BigRational::one();
        let mut sum = BigRational::zero();
        let mut rk = num_traits::pow(self.r.clone(), m as usize);
        let mut k = m;
        loop {
            let rest = &self.c * &rk / (&one - &self.r);
            if rest < eps || k > m + 4000 {
                return (sum.clone(), sum + rest);
            }
            sum += self.at(k);
            rk *= &self.r;
            k += 1;
        }
    }

    /// Least `m` with `Σ_{k≥m} a_k ≤ 1`.
    pub fn start(&self) -> Result<u32> {
        let one = BigRational::one();
        for m in 0..256u32 {
            let (lo, hi) = self.tail(m as u64);
            if hi <= one {
                return Ok(m);
            }
            if lo <= one {
                return Err(Error::Indeterminate { at: format!("tail from {m} against 1") });
            }
        }
        Err(Error::Exhausted("tail never drops to 1".into()))
    }
}

/// One stage: residues mod `2^exp` whose progressions copy `X(0), X(1), …`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Stage {
    pub exp: u32,
    pub offsets: Vec<u64>,
}

#[derive(Clone, Debug)]
pub struct ProgressionMap {
    pub m0: u32,
    pub stages: Vec<Stage>,
    /// Residues mod `2^{m0+stages−1}` still free after the last stage.
    pub remaining: Vec<u64>,
}

/// Splits `ℕ` into progressions of difference `2^{m0+s}` and hands the first
/// `⌈a_{m0+s}·2^{m0+s}⌉` free ones to sources `0, 1, …` at stage `s`.
pub fn rumyantsev_plan(a: &Coefficients, stages: usize) -> Result<ProgressionMap> {
    let m0 = a.start()?;
    let mut plan = ProgressionMap { m0, stages: Vec::new(), remaining: Vec::new() };
    for s in 0..stages {
        let exp = m0 + s as u32;
        if exp > 40 {
            return precondition("plan modulus beyond 2^40");
        }
        let free: Vec<u64> = if s == 0 {
            (0..1u64 << exp).collect()
        } else {
            let half = 1u64 << (exp - 1);
            let mut v: Vec<u64> = plan.remaining.iter().flat_map(|&r| [r, r + half]).collect();
            v.sort_unstable();
            v
        };
        let scaled = a.at(exp as u64) * q_int(BigUint::one() << exp);
        let count = scaled.ceil().to_integer().to_usize().ok_or_else(|| Error::Domain("stage count".into()))?;
        if count > free.len() {
            return Err(Error::Hypothesis { clause: "tail".into(), detail: format!("stage {s} needs {count} progressions, {} free", free.len()) });
        }
        plan.stages.push(Stage { exp, offsets: free[..count].to_vec() });
        plan.remaining = free[count..].to_vec();
    }
    Ok(plan)
}

impl ProgressionMap {
    /// Density assigned by the first `stages` stages.
    pub fn coverage(&self, stages: usize) -> BigRational {
        self.stages.iter().take(stages).map(|s| BigRational::new(s.offsets.len().into(), (BigUint::one() << s.exp).into())).sum()
    }

    /// Stage and source index feeding cell `i`.
    pub fn source(&self, i: u64) -> Option<(usize, usize)> {
        self.stages.iter().enumerate().find_map(|(s, st)| st.offsets.binary_search(&(i & ((1u64 << st.exp) - 1))).ok().map(|j| (s, j)))
    }
}

/// `Ψ(X) ↾ N`. Cells left free by the planned stages take `fill`, or are an
/// error when `fill` is `None`.
pub fn rumyantsev_apply(plan: &ProgressionMap, x: &BitString, n: u64, fill: Option<u8>) -> Result<BitString> {
    let mut out = BitString::new();
    for i in 0..n {
        let Some((_, j)) = plan.source(i) else {
            match fill {
                Some(b) => out.push(b),
                None => return precondition(format!("cell {i} unassigned by {} stages", plan.stages.len())),
            }
            continue;
        };
        let b = *x.bits().get(j).ok_or(Error::Length { need: j + 1, have: x.len() })?;
        out.push(b);
    }
    Ok(out)
}

/// Reads `X ↾ count_m` back from `Ψ(X)` on `[k, k+2^m)` given `k mod 2^m`.
pub fn rumyantsev_recover(plan: &ProgressionMap, segment: &BitString, k_mod: u64, m: u32) -> Result<BitString> {
    let st = m
        .checked_sub(plan.m0)
        .and_then(|s| plan.stages.get(s as usize))
        .ok_or_else(|| Error::Precondition(format!("no stage with modulus 2^{m}")))?;
    let modulus = 1u64 << m;
    if segment.len() as u64 != modulus {
        return Err(Error::Length { need: modulus as usize, have: segment.len() });
    }
    if k_mod >= modulus {
        return domain(format!("{k_mod} is not a residue mod 2^{m}"));
    }
    Ok(BitString(st.offsets.iter().map(|&o| segment.bits()[((o + modulus - k_mod) % modulus) as usize]).collect()))
}

/// `π^h(σ)` as exact endpoints: `σ⌢i` is the `i`-th of `h(|σ|)` equal
/// subintervals of `π^h(σ)`.
pub fn pi_h_interval(w: &BoundedWord) -> (BigRational, BigRational) {
    let mut lo = BigRational::zero();
    for (i, &d) in w.word.0.iter().enumerate() {
        lo += BigRational::new(d.into(), w.family.level_size(i + 1).into());
    }
    let width = BigRational::new(1.into(), w.family.level_size(w.word.len()).into());
    (lo.clone(), lo + width)
}

/// The word of `h^n` whose `π^h` cell is the `j`-th from the left.
pub fn pi_h_cell(h: &BoundFamily, n: usize, j: &BigUint) -> NatString {
    let mut digits = vec![0u64; n];
    let mut r = j.clone();
    for i in (0..n).rev() {
        let hi = h.at(i);
        digits[i] = (&r % &hi).to_u64().unwrap();
        r /= hi;
    }
    NatString(digits)
}

/// `0.σ`.
pub fn unbin(bits: &BitString) -> BigRational {
    let v = bits.bits().iter().fold(BigUint::zero(), |acc, &b| (acc << 1) + b as u32);
    BigRational::new(v.into(), (BigUint::one() << bits.len()).into())
}

/// First `n` bits of the binary expansion of `x ∈ [0,1]` (all ones at 1).
pub fn bin(x: &BigRational, n: usize) -> Result<BitString> {
    if x.is_negative() || x > &BigRational::one() {
        return domain(format!("{x} is outside [0,1]"));
    }
    let top = BigUint::one() << n;
    let k = (x * q_int(top.clone())).floor().to_integer().to_biguint().unwrap().min(&top - 1u32);
    Ok(BitString((0..n).rev().map(|i| k.bit(i as u64) as u8).collect()))
}

/// Two adjacent cylinders of length `|I|` whose reals cover `I ∈ 𝒥`.
pub fn interval_to_cylinders(lo: &BigRational, hi: &BigRational) -> Result<(BitString, BitString)> {
    if lo.is_negative() || hi > &BigRational::one() || lo > hi {
        return domain(format!("[{lo}, {hi}] is not a subinterval of [0,1]"));
    }
    let len = hi - lo;
    let n = if len.is_zero() {
        None
    } else {
        let (num, den) = (len.numer().to_biguint().unwrap(), len.denom().to_biguint().unwrap());
        (num.is_one() && den.count_ones() == 1).then(|| den.bits() as usize - 1)
    };
    let n = n.ok_or_else(|| Error::Domain(format!("length {len} is not a power of 1/2")))?;
    let scaled = lo * q_int(BigUint::one() << n);
    let k = scaled.floor().to_integer().to_biguint().unwrap();
    let word = |k: &BigUint| BitString((0..n).rev().map(|i| k.bit(i as u64) as u8).collect());
    let sigma = word(&k);
    let tau = if scaled.is_integer() { sigma.clone() } else { word(&(k + 1u32)) };
    Ok((sigma, tau))
}

/// Per-level logarithms of the ratio in the regularity condition and the
/// bracket for its maximum over `1 ≤ n ≤ N`.
#[derive(Clone, Debug)]
pub struct StarReport {
    pub horizon: u64,
    pub logs: Vec<DyadInterval>,
    pub sup: DyadInterval,
}

fn log2_nat(x: &BigUint, prec: u32) -> Result<DyadInterval> {
    iv_log2(&DyadInterval::nat(x), prec)
}

/// `log₂` of `exp_{h(n−1)}(1 − f(ns)/(ns)) / exp₂(s·g(n) − f(ns))` where
/// `|h^n| = 2^{n·s(n)}`.
pub fn star_log_ratio(g: &OrderFn, f: &OrderFn, h: &BoundFamily, n: u64, prec: u32) -> Result<DyadInterval> {
    if n == 0 {
        return domain("the regularity ratio starts at n = 1");
    }
    let w = prec + 16;
    let big = log2_nat(&h.level_size(n as usize), w)?;
    let step = log2_nat(&h.at(n as usize - 1), w)?;
    let fl = f.eval_iv(&big, w)?;
    let frac = DyadInterval::int(1).sub(&fl.div(&big, w)?);
    let sg = big.mul(&g.at_u64(n, w)?).div(&DyadInterval::int(n as i64), w)?;
    Ok(step.mul(&frac).sub(&sg).add(&fl).round_out(prec))
}

pub fn star_condition(g: &OrderFn, f: &OrderFn, h: &BoundFamily, horizon: u64, prec: u32) -> Result<StarReport> {
    if horizon == 0 {
        return domain("empty range");
    }
    let logs = (1..=horizon).map(|n| star_log_ratio(g, f, h, n, prec)).collect::<Result<Vec<_>>>()?;
    let mut sup: Option<DyadInterval> = None;
    for l in &logs {
        let v = iv_exp2(l, prec)?;
        sup = Some(match sup {
            None => v,
            Some(s) => s.max(&v),
        });
    }
    Ok(StarReport { horizon, logs, sup: sup.unwrap() })
}

fn exact_rational(f: &OrderFn, x: &BigRational, what: &str) -> Result<BigRational> {
    f.eval_logpoly(x).and_then(|p| p.as_rational()).ok_or_else(|| Error::Domain(format!("{what} is not an exact rational at {x}")))
}

fn logpoly_at(f: &OrderFn, x: &BigRational) -> Result<LogPoly> {
    if x.is_zero() {
        return Ok(LogPoly::zero());
    }
    f.eval_logpoly(x).ok_or_else(|| Error::Domain(format!("{f} has no closed form at {x}")))
}

/// `((1−ε) − ((n−1)/n)·(s(n−1)/s(n)))·j(n·s(n))`, exactly.
pub fn star_log_closed_form(j: &OrderFn, s: &OrderFn, eps: &BigRational, n: u64) -> Result<LogPoly> {
    if n == 0 {
        return domain("closed form starts at n = 1");
    }
    let sn = exact_rational(s, &q_int(n), "s")?;
    let sp = exact_rational(s, &q_int(n - 1), "s")?;
    if sn.is_zero() {
        return domain(format!("s({n}) = 0"));
    }
    let coeff = (BigRational::one() - eps) - BigRational::new((n - 1).into(), n.into()) * sp / &sn;
    Ok(logpoly_at(j, &(q_int(n) * sn))?.scale(&coeff))
}

/// Least `n0 ≤ horizon` with the closed form negative on `[n0, horizon]`.
pub fn star_threshold(j: &OrderFn, s: &OrderFn, eps: &BigRational, horizon: u64) -> Result<Option<u64>> {
    let mut n0 = None;
    for n in (1..=horizon).rev() {
        if star_log_closed_form(j, s, eps, n)?.signum()? == Ordering::Less {
            n0 = Some(n);
        } else {
            break;
        }
    }
    Ok(n0)
}

/// Covering of an interval by the `π^h` cells at the level `n_I`.
#[derive(Clone, Debug)]
pub struct Pullback {
    pub level: usize,
    pub k: BigUint,
    pub words: Vec<NatString>,
    /// `dwt_g` of the cover.
    pub weight: DyadInterval,
    /// `α·2^{−f(|I|)}`.
    pub bound: DyadInterval,
    pub holds: bool,
}

/// Pulls `I = [lo, hi]` back to `h^*`; `α` is computed over `n ≤ max(horizon, n_I)`.
pub fn interval_pullback(lo: &BigRational, hi: &BigRational, h: &BoundFamily, g: &OrderFn, f: &OrderFn, horizon: u64, prec: u32) -> Result<Pullback> {
    if lo.is_negative() || hi > &BigRational::one() || lo >= hi {
        return domain(format!("[{lo}, {hi}] is not a nondegenerate subinterval of [0,1]"));
    }
    let len = hi - lo;
    let level = (1..=4096usize)
        .find(|&n| &len * q_int(h.level_size(n)) > BigRational::one())
        .ok_or_else(|| Error::Exhausted("no level resolves the interval".into()))?;
    let big = q_int(h.level_size(level));
    let k = (&len * &big).floor().to_integer().to_biguint().unwrap();
    let first = (lo * &big).floor().to_integer().to_biguint().unwrap();
    let last = (hi * &big).ceil().to_integer().to_biguint().unwrap();
    let mut words = Vec::new();
    let mut j = first;
    while j < last {
        words.push(pi_h_cell(h, level, &j));
        j += 1u32;
    }
    let w = prec + 16;
    let logh = log2_nat(&h.level_size(level), w)?;
    let expo = logh.mul(&g.at_u64(level as u64, w)?).div(&DyadInterval::int(level as i64), w)?;
    let weight = DyadInterval::int(words.len() as i64).mul(&iv_exp2(&expo.neg(), w)?).round_out(prec);
    let norm = iv_log2(&DyadInterval::from_rational(&len, w + 8), w)?.neg();
    let star = star_condition(g, f, h, horizon.max(level as u64), w)?;
    let bound = star.sup.scale(&Dyadic::from_int(3)).mul(&iv_exp2(&f.eval_iv(&norm, w)?.neg(), w)?).round_out(prec);
    let holds = weight.certainly_le(&bound);
    Ok(Pullback { level, k, words, weight, bound, holds })
}

/// Exponents (base 2) of the functions built from `j`, `s`, `ε` at one `n`.
#[derive(Clone, Debug)]
pub struct GmRow {
    pub n: u64,
    pub s: BigRational,
    /// `j̃(n)`.
    pub jt: LogPoly,
    pub g: LogPoly,
    /// `log₂ K(n)`, `log₂ L(n)`, `log₂ H(n)`.
    pub big_k: LogPoly,
    pub big_l: LogPoly,
    pub big_h: LogPoly,
    /// `log₂ k(n)`, `log₂ ℓ(n)`, `log₂ h(n)`.
    pub k: LogPoly,
    pub l: LogPoly,
    pub h: LogPoly,
    /// `k(n), ℓ(n), h(n) ≥ 1`.
    pub regular: bool,
}

#[derive(Clone, Debug)]
pub struct GmAlgebra {
    pub eps: BigRational,
    pub rows: Vec<GmRow>,
}

/// Builds `K = 2^{s·g}`, `L = 2^{s·j̃}`, `H = 2^{s·n}` and their ratios for
/// `n ≤ N`, checking `H = K·L`, `L = K^{(n−g)/g}` and `h(n) ∈ ℕ`. Rows with
/// some of `k, ℓ, h` below 1 are kept but marked irregular.
pub fn gm_algebra(j: &OrderFn, s: &OrderFn, eps: &BigRational, horizon: u64) -> Result<GmAlgebra> {
    let one = BigRational::one();
    let keep = &one - eps;
    let mut base = Vec::new();
    for n in 0..=horizon + 1 {
        let sv = exact_rational(s, &q_int(n), "s")?;
        let sn = &sv * q_int(n);
        let jv = logpoly_at(j, &sn)?;
        let big_l = jv.scale(&keep);
        let jt = if sv.is_zero() { LogPoly::zero() } else { big_l.scale(&sv.recip()) };
        let big_h = LogPoly::constant(sn);
        let big_k = big_h.sub(&big_l);
        let g = LogPoly::constant(q_int(n)).sub(&jt);
        base.push((sv, jt, g, big_k, big_l, big_h));
    }
    let fail = |c: &str, d: String| Error::Hypothesis { clause: c.into(), detail: d };
    let mut rows = Vec::new();
    for n in 0..=horizon as usize {
        let (sv, jt, g, big_k, big_l, big_h) = base[n].clone();
        let next = &base[n + 1];
        let k = next.3.sub(&big_k);
        let l = next.4.sub(&big_l);
        let h = next.5.sub(&big_h);
        if !big_k.add(&big_l).sub(&big_h).is_zero() {
            return Err(fail("H = K·L", format!("n = {n}")));
        }
        if n > 0 && !g.is_zero() && !big_l.mul(&g).sub(&big_k.mul(&jt)).is_zero() {
            return Err(fail("L = K^((n-g)/g)", format!("n = {n}")));
        }
        let mut regular = true;
        for e in [&k, &l, &h] {
            regular &= e.signum()? != Ordering::Less;
        }
        match h.as_rational() {
            Some(q) if q.is_integer() => {}
            _ => return Err(fail("i", format!("h({n}) = 2^({h}) is not a natural number"))),
        }
        rows.push(GmRow { n: n as u64, s: sv, jt, g, big_k, big_l, big_h, k, l, h, regular });
    }
    Ok(GmAlgebra { eps: eps.clone(), rows })
}

impl GmAlgebra {
    /// Least `n₀` with every row from `n₀` on regular.
    pub fn regular_from(&self) -> Option<u64> {
        let bad = self.rows.iter().rposition(|r| !r.regular);
        match bad {
            None => Some(0),
            Some(i) if i + 1 < self.rows.len() => Some(i as u64 + 1),
            Some(_) => None,
        }
    }
}

impl GmRow {
    /// `h(n)` as a natural number.
    pub fn h_value(&self) -> BigUint {
        let e = self.h.as_rational().unwrap().to_integer().to_biguint().unwrap();
        BigUint::one() << e.to_usize().expect("h exponent")
    }

    pub fn ell(&self, prec: u32) -> Result<DyadInterval> {
        iv_exp2(&self.l.eval(prec + 8)?, prec)
    }
}

/// Per-level budget for the supermartingale check: `h(n)`, `log₂ k(n)` and
/// `log₂ L(n)` (the latter one entry longer).
#[derive(Clone, Debug)]
pub struct Budget {
    pub h: Vec<u64>,
    pub log_k: Vec<LogPoly>,
    pub log_l: Vec<LogPoly>,
}

fn log_of(q: &BigRational) -> Result<LogPoly> {
    factor_log2(q).ok_or_else(|| Error::Domain(format!("cannot factor {q}")))
}

impl Budget {
    pub fn from_values(h: Vec<u64>, k: &[BigRational], big_l: &[BigRational]) -> Result<Self> {
        if k.len() != h.len() || big_l.len() != h.len() + 1 {
            return precondition("budget tables have mismatched lengths");
        }
        Ok(Budget { h, log_k: k.iter().map(log_of).collect::<Result<_>>()?, log_l: big_l.iter().map(log_of).collect::<Result<_>>()? })
    }
}

impl GmAlgebra {
    pub fn budget(&self, depth: usize) -> Result<Budget> {
        if depth + 1 > self.rows.len() {
            return precondition(format!("algebra computed to {}, need {}", self.rows.len(), depth + 1));
        }
        let h = self.rows[..depth].iter().map(|r| r.h_value().to_u64().ok_or_else(|| Error::Domain(format!("h({}) too large", r.n)))).collect::<Result<_>>()?;
        Ok(Budget {
            h,
            log_k: self.rows[..depth].iter().map(|r| r.k.clone()).collect(),
            log_l: self.rows[..=depth].iter().map(|r| r.big_l.clone()).collect(),
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum BudgetVerdict {
    Pass,
    Fail(NatString),
}

/// `q ≤ 2^e`, exactly.
fn le_pow2(q: &BigRational, e: &LogPoly) -> Result<bool> {
    if !q.is_positive() {
        return Ok(true);
    }
    Ok(log_of(q)?.sub(e).signum()? != Ordering::Greater)
}

/// Validates `Σ_i d(σ⌢i) ≤ h(|σ|)·d(σ)`, then checks that whenever
/// `d(σ) ≤ L(|σ|)` at most `k(|σ|)` children exceed `L(|σ|+1)`.
pub fn supermartingale_budget_check(d: &BTreeMap<NatString, BigRational>, budget: &Budget) -> Result<BudgetVerdict> {
    let mut kids: BTreeMap<NatString, Vec<&BigRational>> = BTreeMap::new();
    for (w, v) in d {
        if v.is_negative() {
            return domain(format!("d({w}) is negative"));
        }
        if let Some(&last) = w.0.last() {
            let n = w.len() - 1;
            if n < budget.h.len() && last >= budget.h[n] {
                return domain(format!("{w} is not a word of h^*"));
            }
            kids.entry(w.prefix(n)).or_default().push(v);
        }
    }
    for (p, cs) in &kids {
        let n = p.len();
        if n >= budget.h.len() {
            continue;
        }
        let parent = d.get(p).cloned().unwrap_or_else(BigRational::zero);
        let total: BigRational = cs.iter().copied().sum();
        if total > parent.clone() * q_int(budget.h[n]) {
            return Err(Error::Hypothesis { clause: "supermartingale".into(), detail: format!("children of {p} sum to {total}") });
        }
    }
    for (p, cs) in &kids {
        let n = p.len();
        if n >= budget.h.len() {
            continue;
        }
        let parent = d.get(p).cloned().unwrap_or_else(BigRational::zero);
        if !le_pow2(&parent, &budget.log_l[n])? {
            continue;
        }
        let mut heavy = 0u64;
        for c in cs {
            if !le_pow2(c, &budget.log_l[n + 1])? {
                heavy += 1;
            }
        }
        if heavy > 0 && !le_pow2(&q_int(heavy), &budget.log_k[n])? {
            return Ok(BudgetVerdict::Fail(p.clone()));
        }
    }
    Ok(BudgetVerdict::Pass)
}

/// Index bookkeeping for the `P_a^{b,c}` reductions: the registry supplies
/// `f(σ, n)` with `φ_{f(σ,n)}(j) ≃ min{i : φ_n(j) = σ(i)}` and `g(n, j)`
/// with `φ_{g(n,j)}(y) ≃ φ_n(j)`. Convergence is read at a fixed budget.
pub struct PabcEnv {
    registry: Arc<Registry>,
    budget: u64,
    f_idx: Mutex<HashMap<(Vec<u64>, BigUint), BigUint>>,
    g_idx: Mutex<HashMap<(BigUint, u64), BigUint>>,
}

/// An output set with the input cells it consulted.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Lifted {
    pub set: BTreeSet<u64>,
    pub cells: Vec<BigUint>,
}

pub type Table<'a> = &'a dyn Fn(&BigUint) -> Option<u64>;

impl PabcEnv {
    pub fn new(registry: Arc<Registry>, budget: u64) -> Self {
        PabcEnv { registry, budget, f_idx: Mutex::default(), g_idx: Mutex::default() }
    }

    pub fn registry(&self) -> &Registry {
        &self.registry
    }

    pub fn phi(&self, e: &BigUint, x: u64) -> Option<u64> {
        self.registry.step_eval(e, &nat(x), self.budget).and_then(|v| v.to_u64())
    }

    pub fn f_index(&self, sigma: &[u64], n: &BigUint) -> BigUint {
        let key = (sigma.to_vec(), n.clone());
        let mut m = self.f_idx.lock().unwrap();
        if let Some(e) = m.get(&key) {
            return e.clone();
        }
        let (reg, budget, sigma, n) = (Arc::downgrade(&self.registry), self.budget, sigma.to_vec(), n.clone());
        let e = self.registry.register(Arc::new(move |j| {
            let reg: Arc<Registry> = Weak::upgrade(&reg)?;
            let (v, cost) = reg.timed_eval(&n, j, budget)?;
            let v = v.to_u64()?;
            sigma.iter().position(|&x| x == v).map(|i| (nat(i as u64), cost + 1))
        }));
        m.insert(key, e.clone());
        e
    }

    pub fn g_index(&self, n: &BigUint, j: u64) -> BigUint {
        let key = (n.clone(), j);
        let mut m = self.g_idx.lock().unwrap();
        if let Some(e) = m.get(&key) {
            return e.clone();
        }
        let (reg, budget, n) = (Arc::downgrade(&self.registry), self.budget, n.clone());
        let e = self.registry.register(Arc::new(move |_| {
            let reg: Arc<Registry> = Weak::upgrade(&reg)?;
            reg.timed_eval(&n, &nat(j), budget).map(|(v, c)| (v, c + 1))
        }));
        m.insert(key, e.clone());
        e
    }

    /// The least value below `a` avoiding every converged `φ_m(j)`, `j < c`:
    /// a member of `P_a^{1,c}` relative to the budget.
    pub fn avoiding_table(&self, a: u64, c: u64) -> impl Fn(&BigUint) -> Option<u64> + '_ {
        move |m| {
            let hit: HashSet<u64> = (0..c).filter_map(|j| self.phi(m, j)).collect();
            (0..a).find(|v| !hit.contains(v))
        }
    }

    fn check_avoids(&self, n: &BigUint, set: &BTreeSet<u64>, c: u64, what: &str) -> Result<()> {
        for j in 0..c {
            if let Some(v) = self.phi(n, j) {
                if set.contains(&v) {
                    return Err(Error::Hypothesis { clause: what.into(), detail: format!("phi_{n}({j}) = {v} lies in the output") });
                }
            }
        }
        Ok(())
    }
}

/// `F_d(n)` from `X ∈ P_a^{1,c}`: `F_{d'+1}(n) = F_{d'}(n) ∪ {σ_S(X(f(σ_S, n)))}`
/// with `S = (a+d'+1) ∖ F_{d'}(n)`. `F_0(n) = {X(n)}`.
pub fn pabc_lift(x: Table, a: u64, d: u64, c: u64, n: &BigUint, env: &PabcEnv) -> Result<Lifted> {
    if a < 2 || c < 1 {
        return domain("need a >= 2 and c >= 1");
    }
    let read = |m: &BigUint| -> Result<u64> {
        let v = x(m).ok_or_else(|| Error::Unresolved(vec![m.to_string()]))?;
        if v >= a {
            return domain(format!("X({m}) = {v} is not below {a}"));
        }
        if let Some(j) = (0..c).find(|&j| env.phi(m, j) == Some(v)) {
            return Err(Error::Hypothesis { clause: "input".into(), detail: format!("X({m}) = phi_{m}({j})") });
        }
        Ok(v)
    };
    let mut cells = vec![n.clone()];
    let mut set: BTreeSet<u64> = [read(n)?].into();
    for k in 0..d {
        let s: Vec<u64> = (0..a + k + 1).filter(|v| !set.contains(v)).collect();
        debug_assert_eq!(s.len() as u64, a);
        let idx = env.f_index(&s, n);
        let v = read(&idx)?;
        cells.push(idx);
        set.insert(s[v as usize]);
    }
    env.check_avoids(n, &set, c, "lift")?;
    Ok(Lifted { set, cells })
}

/// `G(n)`: the first `c+b` elements of `F(n) ∩ ⋂_{i<c−1} F(g(n, e+i+1))`,
/// for `F ∈ P_{ca+b}^{d+1,e+1}`, `d = (c−1)a+b`.
pub fn pabc_merge(f: &dyn Fn(&BigUint) -> Result<Lifted>, a: u64, b: u64, c: u64, e: u64, n: &BigUint, env: &PabcEnv) -> Result<Lifted> {
    if a < 2 || c < 1 {
        return domain("need a >= 2 and c >= 1");
    }
    let first = f(n)?;
    let mut h = first.set.clone();
    let mut cells = first.cells;
    for i in 0..c - 1 {
        let m = env.g_index(n, e + i + 1);
        let part = f(&m)?;
        h = h.intersection(&part.set).copied().collect();
        cells.extend(part.cells);
    }
    if (h.len() as u64) < c + b {
        return Err(Error::Hypothesis { clause: "counting".into(), detail: format!("|H({n})| = {} < {}", h.len(), c + b) });
    }
    let set: BTreeSet<u64> = h.into_iter().take((c + b) as usize).collect();
    env.check_avoids(n, &set, c + e, "merge")?;
    Ok(Lifted { set, cells })
}

/// `X ∈ P_a^{1,1}` to `G ∈ P_{ca+b}^{c+b,c}` through `P_{a+d}^{d+1,1}`.
pub fn pabc_reduce(x: Table, a: u64, b: u64, c: u64, n: &BigUint, env: &PabcEnv) -> Result<Lifted> {
    let d = (c - 1) * a + b;
    pabc_merge(&|m| pabc_lift(x, a, d, 1, m, env), a, b, c, 0, n, env)
}

/// `C(n, k)`.
pub fn binomial(n: u64, k: u64) -> BigUint {
    (0..k).fold(BigUint::one(), |acc, i| acc * (n - i) / (i + 1))
}

/// `Y(x) = X(ax+b)` where defined.
pub fn affine_pullback<T: Clone>(x: &[T], a: u64, b: u64) -> Result<Vec<T>> {
    if a == 0 {
        return domain("a must be positive");
    }
    let len = x.len() as u64;
    let n = if len > b { (len - 1 - b) / a + 1 } else { 0 };
    Ok((0..n).map(|i| x[(a * i + b) as usize].clone()).collect())
}

/// `Y(ax+b) = X(x)`, other cells `fill`.
pub fn affine_pushforward<T: Clone>(x: &[T], a: u64, b: u64, fill: T) -> Result<Vec<T>> {
    if a == 0 {
        return domain("a must be positive");
    }
    if x.is_empty() {
        return Ok(Vec::new());
    }
    let len = a * (x.len() as u64 - 1) + b + 1;
    let mut y = vec![fill; len as usize];
    for (i, v) in x.iter().enumerate() {
        y[(a * i as u64 + b) as usize] = v.clone();
    }
    Ok(y)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ShiftVerdict {
    /// `K_s(τ) < δ|τ| − c` for the substring at `start`.
    Violated { start: usize, tau: BitString, k: u64 },
    /// Substrings with a positive threshold and no short description yet.
    Unresolved(Vec<BitString>),
    Consistent,
}

/// Checks `K(τ) ≥ δ|τ| − c` for every substring `τ` of `w` against `K_s`.
/// Violations are sound since `K ≤ K_s`; substrings by increasing length.
pub fn shift_complex_check(w: &BitString, delta: &BigRational, c: u64, reg: &Registry, s: u64) -> ShiftVerdict {
    let mut open = Vec::new();
    for len in 1..=w.len() {
        let t = delta * q_int(len as u64) - q_int(c);
        if !t.is_positive() {
            continue;
        }
        let limit = t.ceil().to_integer().to_u64().unwrap_or(u64::MAX);
        let mut seen = HashSet::new();
        for start in 0..=w.len() - len {
            let tau = BitString(w.bits()[start..start + len].to_vec());
            if !seen.insert(tau.clone()) {
                continue;
            }
            match reg.k_bound_below(&tau, s, limit) {
                Some(k) => return ShiftVerdict::Violated { start, tau, k },
                None => open.push(tau),
            }
        }
    }
    if open.is_empty() {
        ShiftVerdict::Consistent
    } else {
        ShiftVerdict::Unresolved(open)
    }
}
