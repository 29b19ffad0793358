//! Weighted sets of strings, Kraft sums, an online Kraft–Chaitin allocator
//! and the sparse-block codec.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive};

use crate::encodings::{BitString, BoundFamily, BoundedWord};
use crate::error::{domain, precondition, Error, Result};
use crate::numerics::{iv_exp2, iv_pow, Dyadic, DyadInterval};
use crate::orderfn::OrderFn;

/// The exponent `f` in `2^{-f(σ)}`.
#[derive(Clone)]
pub enum Weight {
    /// `f(σ) = |σ|`.
    Length,
    /// `f(σ) = g(|σ|)`.
    OfLength(OrderFn),
    Rule(Arc<dyn Fn(&[u64]) -> BigRational + Send + Sync>),
}

impl fmt::Debug for Weight {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Weight::Length => write!(f, "Length"),
            Weight::OfLength(g) => write!(f, "OfLength({g})"),
            Weight::Rule(_) => write!(f, "Rule(..)"),
        }
    }
}

impl Weight {
    /// `f(σ)` as an interval.
    pub fn exponent(&self, s: &[u64], prec: u32) -> Result<DyadInterval> {
        Ok(match self {
            Weight::Length => DyadInterval::int(s.len() as i64),
            Weight::OfLength(g) => g.at_u64(s.len() as u64, prec)?,
            Weight::Rule(r) => DyadInterval::from_rational(&r(s), prec),
        })
    }

    /// `2^{-f(σ)}`.
    pub fn term(&self, s: &[u64], prec: u32) -> Result<DyadInterval> {
        let e = self.exponent(s, prec + 8)?;
        if e.is_point() && e.lo.is_integer() {
            let k = e.lo.floor().to_i64().ok_or_else(|| Error::Domain("weight exponent too large".into()))?;
            return Ok(DyadInterval::point(Dyadic::pow2(-k)));
        }
        iv_exp2(&e.neg(), prec)
    }
}

#[derive(Clone, Debug)]
pub struct WeightedSet {
    pub strings: Vec<BitString>,
    pub weight: Weight,
}

impl WeightedSet {
    pub fn new(mut strings: Vec<BitString>, weight: Weight) -> Self {
        strings.sort();
        strings.dedup();
        WeightedSet { strings, weight }
    }

    pub fn by_length(strings: Vec<BitString>) -> Self {
        Self::new(strings, Weight::Length)
    }

    fn keys(&self) -> Vec<Vec<u64>> {
        self.strings.iter().map(|s| s.bits().iter().map(|&b| b as u64).collect()).collect()
    }
}

fn sum_terms(keys: &[Vec<u64>], term: impl Fn(&[u64], u32) -> Result<DyadInterval>, prec: u32) -> Result<DyadInterval> {
    let w = prec + 2 + (usize::BITS - keys.len().leading_zeros());
    let mut s = DyadInterval::int(0);
    for k in keys {
        s = s.add(&term(k, w)?);
    }
    Ok(s)
}

/// `dwt_f(S) = Σ_{σ∈S} 2^{-f(σ)}`.
pub fn dwt(s: &WeightedSet, prec: u32) -> Result<DyadInterval> {
    sum_terms(&s.keys(), |k, w| s.weight.term(k, w), prec)
}

/// Maximum weight of an antichain: `value(σ) = max(w(σ), Σ_children value)`.
fn antichain_max(items: Vec<(Vec<u64>, DyadInterval)>) -> DyadInterval {
    let mut nodes: BTreeMap<Vec<u64>, (Option<DyadInterval>, DyadInterval)> = BTreeMap::new();
    for (k, w) in items {
        for l in 0..=k.len() {
            nodes.entry(k[..l].to_vec()).or_insert((None, DyadInterval::int(0)));
        }
        nodes.get_mut(&k).unwrap().0 = Some(w);
    }
    let mut keys: Vec<Vec<u64>> = nodes.keys().cloned().collect();
    keys.sort_by(|a, b| b.len().cmp(&a.len()));
    for k in keys {
        let (own, below) = nodes[&k].clone();
        let v = match own {
            Some(w) => w.max(&below),
            None => below,
        };
        if k.is_empty() {
            return v;
        }
        let parent = nodes.get_mut(&k[..k.len() - 1]).unwrap();
        parent.1 = parent.1.add(&v);
    }
    DyadInterval::int(0)
}

/// `pwt_f(S)`: the largest `dwt_f(A)` over prefix-free `A ⊆ S`.
pub fn pwt(s: &WeightedSet, prec: u32) -> Result<DyadInterval> {
    let keys = s.keys();
    let w = prec + 2 + (usize::BITS - keys.len().leading_zeros());
    let items = keys.into_iter().map(|k| s.weight.term(&k, w).map(|t| (k, t))).collect::<Result<Vec<_>>>()?;
    Ok(antichain_max(items))
}

/// `γ(σ) = μ_h(σ)^{1/|σ|}` with `μ_h(σ) = 1/|h^{|σ|}|`, and `γ(⟨⟩) = 1`.
pub fn gamma(s: &BoundedWord, prec: u32) -> Result<DyadInterval> {
    let len = s.word.len();
    if len == 0 {
        return Ok(DyadInterval::int(1));
    }
    let size = s.family.level_size(len);
    let mu = DyadInterval::from_rational(&BigRational::new(BigInt::one(), BigInt::from(size.clone())), prec + 64);
    let mu = if mu.is_point() { mu } else { return gamma_inexact(&size, len, prec) };
    iv_pow(&mu, &BigRational::new(BigInt::one(), BigInt::from(len)), prec)
}

fn gamma_inexact(size: &BigUint, len: usize, prec: u32) -> Result<DyadInterval> {
    let root = iv_pow(&DyadInterval::nat(size), &BigRational::new(BigInt::one(), BigInt::from(len)), prec + 8)?;
    DyadInterval::int(1).div(&root, prec)
}

/// `dwt_f(S) = Σ γ(σ)^{f(σ)}` in `h^*`.
pub fn dwt_h(strings: &[BoundedWord], weight: &Weight, prec: u32) -> Result<DyadInterval> {
    let keys: Vec<_> = strings.iter().map(|w| w.word.0.clone()).collect();
    let by_key: BTreeMap<Vec<u64>, &BoundedWord> = strings.iter().map(|w| (w.word.0.clone(), w)).collect();
    let keys: Vec<_> = {
        let mut k = keys;
        k.sort();
        k.dedup();
        k
    };
    sum_terms(&keys, |k, w| gamma_power(by_key[k], weight, w), prec)
}

/// `pwt_f(S)` in `h^*`.
pub fn pwt_h(strings: &[BoundedWord], weight: &Weight, prec: u32) -> Result<DyadInterval> {
    let w = prec + 2 + (usize::BITS - strings.len().leading_zeros());
    let mut seen = BTreeMap::new();
    for s in strings {
        seen.insert(s.word.0.clone(), gamma_power(s, weight, w)?);
    }
    Ok(antichain_max(seen.into_iter().collect()))
}

/// `γ(σ)^{f(σ)} = |h^{|σ|}|^{-f(σ)/|σ|}`.
fn gamma_power(s: &BoundedWord, weight: &Weight, prec: u32) -> Result<DyadInterval> {
    let len = s.word.len();
    if len == 0 {
        return Ok(DyadInterval::int(1));
    }
    let size = s.family.level_size(len);
    let e = weight.exponent(&s.word.0, prec + 16)?;
    if e.is_point() {
        let r = e.lo.to_rational() / BigRational::from_integer(BigInt::from(len));
        let base = DyadInterval::point(Dyadic::one()).div(&DyadInterval::nat(&size), prec + 64)?;
        if base.is_point() {
            return iv_pow(&base, &r, prec);
        }
        let up = iv_pow(&DyadInterval::nat(&size), &r, prec + 8)?;
        return DyadInterval::int(1).div(&up, prec);
    }
    let g = gamma(s, prec + 16)?;
    let lg = crate::numerics::iv_log2(&g, prec + 16)?;
    iv_exp2(&lg.mul(&e), prec)
}

/// Outcome of [`kraft_check`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Kraft {
    Ok { slack: Dyadic },
    /// Two codes are comparable.
    Compatible(BitString, BitString),
    /// `Σ 2^{-|τ|}` exceeds one.
    Overflow(Dyadic),
}

impl Kraft {
    pub fn is_ok(&self) -> bool {
        matches!(self, Kraft::Ok { .. })
    }
}

/// Prefix-freeness and `Σ 2^{-|τ|} ≤ 1`, with exact slack.
pub fn kraft_check(codes: &[BitString]) -> Kraft {
    let mut sorted: Vec<&BitString> = codes.iter().collect();
    sorted.sort_by(|a, b| a.bits().cmp(b.bits()));
    for w in sorted.windows(2) {
        if w[0].is_prefix_of(w[1]) {
            return Kraft::Compatible(w[0].clone(), w[1].clone());
        }
    }
    let total = codes.iter().fold(Dyadic::zero(), |acc, c| &acc + &Dyadic::pow2(-(c.len() as i64)));
    if total > Dyadic::one() {
        return Kraft::Overflow(total);
    }
    Kraft::Ok { slack: &Dyadic::one() - &total }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CodeAllocation {
    pub codes: Vec<BitString>,
    pub lengths: Vec<usize>,
}

/// Online Kraft–Chaitin allocation, leftmost fit on the list of maximal
/// free cylinders. Free cylinders have strictly decreasing lengths from left
/// to right, so a request fits whenever the budget allows it.
#[derive(Clone, Debug)]
pub struct KcAllocator {
    free: Vec<BitString>,
    used: Dyadic,
    out: CodeAllocation,
}

impl Default for KcAllocator {
    fn default() -> Self {
        Self::new()
    }
}

impl KcAllocator {
    pub fn new() -> Self {
        KcAllocator { free: vec![BitString::new()], used: Dyadic::zero(), out: CodeAllocation::default() }
    }

    pub fn request(&mut self, d: usize) -> Result<BitString> {
        let index = self.out.codes.len();
        let next = &self.used + &Dyadic::pow2(-(d as i64));
        if next > Dyadic::one() {
            return Err(Error::Budget { index });
        }
        let at = self.free.iter().position(|c| c.len() <= d).ok_or(Error::Budget { index })?;
        let c = self.free.remove(at);
        let mut code = c.clone();
        let mut rest = Vec::new();
        while code.len() < d {
            let mut sib = code.clone();
            sib.push(1);
            rest.push(sib);
            code.push(0);
        }
        rest.reverse();
        self.free.splice(at..at, rest);
        self.used = next;
        self.out.codes.push(code.clone());
        self.out.lengths.push(d);
        Ok(code)
    }

    pub fn used(&self) -> &Dyadic {
        &self.used
    }

    pub fn free_cylinders(&self) -> &[BitString] {
        &self.free
    }

    pub fn allocation(&self) -> &CodeAllocation {
        &self.out
    }

    pub fn into_allocation(self) -> CodeAllocation {
        self.out
    }
}

pub fn kc_allocate(ds: impl IntoIterator<Item = usize>) -> Result<CodeAllocation> {
    let mut a = KcAllocator::new();
    for d in ds {
        a.request(d)?;
    }
    Ok(a.into_allocation())
}

fn sparse_params(p: usize, q: usize, alpha: &BigRational) -> Result<(usize, usize)> {
    if q == 0 || p % q != 0 {
        return precondition(format!("block length {q} does not divide {p}"));
    }
    let aq = alpha * BigRational::from_integer(BigInt::from(q));
    if !aq.is_integer() || !alpha.is_positive() {
        return domain(format!("{alpha}·{q} is not a positive integer"));
    }
    let aq = aq.to_integer().to_usize().filter(|&v| v < 48).ok_or_else(|| Error::Domain("index width too large".into()))?;
    Ok((aq, (1usize << aq) - 1))
}

/// Length of every sparse encoding: `αp + 2(q+1)(2^{αq} − 1)`.
pub fn sparse_len(p: usize, q: usize, alpha: &BigRational) -> Result<usize> {
    let (aq, cap) = sparse_params(p, q, alpha)?;
    Ok(aq * (p / q) + 2 * (q + 1) * cap)
}

/// Block indices into the sorted dictionary, then the dictionary, each
/// entry with its bits interleaved with zeros and closed by `11`, padded
/// with ones. Absent when `σ` has `2^{αq}` or more distinct blocks.
pub fn sparse_encode(s: &BitString, q: usize, alpha: &BigRational) -> Result<Option<BitString>> {
    let p = s.len();
    let (aq, cap) = sparse_params(p, q, alpha)?;
    let blocks: Vec<&[u8]> = s.bits().chunks(q).collect();
    let mut dict: Vec<&[u8]> = blocks.clone();
    dict.sort();
    dict.dedup();
    if dict.len() > cap {
        return Ok(None);
    }
    let mut out = BitString::new();
    for b in &blocks {
        let i = dict.binary_search(b).unwrap();
        for k in (0..aq).rev() {
            out.push(((i >> k) & 1) as u8);
        }
    }
    for d in &dict {
        for &bit in d.iter() {
            out.push(bit);
            out.push(0);
        }
        out.push(1);
        out.push(1);
    }
    let target = sparse_len(p, q, alpha)?;
    while out.len() < target {
        out.push(1);
    }
    Ok(Some(out))
}

/// Inverse of [`sparse_encode`] for strings of length `p`.
pub fn sparse_decode(t: &BitString, p: usize, q: usize, alpha: &BigRational) -> Result<BitString> {
    let (aq, _) = sparse_params(p, q, alpha)?;
    let need = sparse_len(p, q, alpha)?;
    if t.len() != need {
        return Err(Error::Length { need, have: t.len() });
    }
    let bits = t.bits();
    let nblocks = p / q;
    let (idx, dict_bits) = bits.split_at(aq * nblocks);
    let mut dict: Vec<Vec<u8>> = Vec::new();
    let mut cur = Vec::new();
    for pair in dict_bits.chunks(2) {
        match pair {
            [1, 1] if cur.is_empty() => break,
            [1, 1] => dict.push(std::mem::take(&mut cur)),
            [b, 0] => cur.push(*b),
            _ => return domain("malformed dictionary"),
        }
    }
    let mut out = BitString::new();
    for chunk in idx.chunks(aq.max(1)).take(nblocks) {
        let i = if aq == 0 { 0 } else { chunk.iter().fold(0usize, |a, &b| a * 2 + b as usize) };
        let block = dict.get(i).ok_or_else(|| Error::Domain(format!("index {i} outside dictionary")))?;
        if block.len() != q {
            return domain("dictionary entry of the wrong length");
        }
        for &b in block {
            out.push(b);
        }
    }
    Ok(out)
}

pub fn family_words(h: &BoundFamily, words: &[Vec<u64>]) -> Result<Vec<BoundedWord>> {
    words.iter().map(|w| BoundedWord::new(w.clone().into(), h.clone())).collect()
}
