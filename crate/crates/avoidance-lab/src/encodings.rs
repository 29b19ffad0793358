//! String machinery: `str`, `#_∞`, the pairing functions `π^(k)`, shortlex
//! indexing of `h^*`, and the homeomorphism `h^ℕ ≅ {0,1}^ℕ` on finite words.

use std::cmp::Ordering;
use std::fmt;
use std::sync::{Arc, RwLock};

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};

use crate::error::{domain, Result};
use crate::orderfn::OrderFn;

/// Finite binary string. Ordered shortlex.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct BitString(pub Vec<u8>);

impl BitString {
    pub fn new() -> Self {
        BitString(Vec::new())
    }

    /// Panics on a symbol other than 0 or 1.
    pub fn from_bits(bits: &[u8]) -> Self {
        assert!(bits.iter().all(|&b| b <= 1), "bit out of range");
        BitString(bits.to_vec())
    }

    pub fn parse(s: &str) -> Result<Self> {
        let mut v = Vec::new();
        for (i, c) in s.chars().enumerate() {
            match c {
                '0' => v.push(0),
                '1' => v.push(1),
                c if c.is_whitespace() => {}
                _ => return Err(crate::Error::Parse { pos: i, msg: format!("unexpected {c:?}") }),
            }
        }
        Ok(BitString(v))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn bits(&self) -> &[u8] {
        &self.0
    }

    pub fn push(&mut self, b: u8) {
        assert!(b <= 1);
        self.0.push(b);
    }

    pub fn concat(&self, other: &BitString) -> BitString {
        let mut v = self.0.clone();
        v.extend_from_slice(&other.0);
        BitString(v)
    }

    pub fn prefix(&self, n: usize) -> BitString {
        BitString(self.0[..n].to_vec())
    }

    pub fn is_prefix_of(&self, other: &BitString) -> bool {
        other.0.starts_with(&self.0)
    }

    pub fn compatible(&self, other: &BitString) -> bool {
        self.is_prefix_of(other) || other.is_prefix_of(self)
    }

    /// All binary strings of length `n` in lexicographic order.
    pub fn all_of_length(n: usize) -> impl Iterator<Item = BitString> {
        assert!(n < 64);
        (0u64..(1u64 << n)).map(move |v| {
            BitString((0..n).map(|i| ((v >> (n - 1 - i)) & 1) as u8).collect())
        })
    }
}

impl Ord for BitString {
    fn cmp(&self, other: &Self) -> Ordering {
        shortlex_cmp(&self.0, &other.0)
    }
}

impl PartialOrd for BitString {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "<>");
        }
        for b in &self.0 {
            write!(f, "{b}")?;
        }
        Ok(())
    }
}

impl fmt::Debug for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitString({self})")
    }
}

/// Finite string of naturals. Ordered shortlex.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct NatString(pub Vec<u64>);

impl NatString {
    pub fn new() -> Self {
        NatString(Vec::new())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn child(&self, i: u64) -> NatString {
        let mut v = self.0.clone();
        v.push(i);
        NatString(v)
    }

    pub fn prefix(&self, n: usize) -> NatString {
        NatString(self.0[..n].to_vec())
    }

    pub fn is_prefix_of(&self, other: &NatString) -> bool {
        other.0.starts_with(&self.0)
    }

    pub fn compatible(&self, other: &NatString) -> bool {
        self.is_prefix_of(other) || other.is_prefix_of(self)
    }
}

impl From<Vec<u64>> for NatString {
    fn from(v: Vec<u64>) -> Self {
        NatString(v)
    }
}

impl Ord for NatString {
    fn cmp(&self, other: &Self) -> Ordering {
        shortlex_cmp(&self.0, &other.0)
    }
}

impl PartialOrd for NatString {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for NatString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "<")?;
        for (i, x) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{x}")?;
        }
        write!(f, ">")
    }
}

impl fmt::Debug for NatString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "NatString{self}")
    }
}

pub fn shortlex_cmp<T: Ord>(a: &[T], b: &[T]) -> Ordering {
    a.len().cmp(&b.len()).then_with(|| a.cmp(b))
}

#[derive(Clone)]
enum BoundRule {
    Constant(BigUint),
    Table { head: Vec<BigUint>, tail: Box<BoundFamily> },
    Symbolic(OrderFn),
}

/// The bound `h` of `h^*`. Symbolic bounds are evaluated lazily and cached
/// per level.
#[derive(Clone)]
pub struct BoundFamily {
    rule: BoundRule,
    cache: Arc<RwLock<Vec<BigUint>>>,
}

impl fmt::Debug for BoundFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.rule {
            BoundRule::Constant(h) => write!(f, "BoundFamily(const {h})"),
            BoundRule::Table { head, tail } => write!(f, "BoundFamily({head:?} then {tail:?})"),
            BoundRule::Symbolic(e) => write!(f, "BoundFamily({e})"),
        }
    }
}

impl BoundFamily {
    fn with_rule(rule: BoundRule) -> Self {
        BoundFamily { rule, cache: Arc::new(RwLock::new(Vec::new())) }
    }

    pub fn constant(h: u64) -> Self {
        assert!(h >= 2, "bound must be at least 2");
        Self::with_rule(BoundRule::Constant(BigUint::from(h)))
    }

    /// `head[0], head[1], …` then `tail(n)` for `n ≥ head.len()`.
    pub fn table(head: &[u64], tail: BoundFamily) -> Self {
        assert!(head.iter().all(|&h| h >= 2), "bound must be at least 2");
        Self::with_rule(BoundRule::Table {
            head: head.iter().map(|&h| BigUint::from(h)).collect(),
            tail: Box::new(tail),
        })
    }

    /// Bound given by an order function with exact natural values.
    pub fn symbolic(f: OrderFn) -> Self {
        Self::with_rule(BoundRule::Symbolic(f))
    }

    pub fn try_at(&self, n: usize) -> Result<BigUint> {
        if let BoundRule::Constant(h) = &self.rule {
            return Ok(h.clone());
        }
        if let Some(v) = self.cache.read().unwrap().get(n) {
            return Ok(v.clone());
        }
        let mut out = Vec::new();
        let start = self.cache.read().unwrap().len();
        for m in start..=n {
            out.push(self.compute(m)?);
        }
        let mut c = self.cache.write().unwrap();
        if c.len() == start {
            c.extend(out);
        }
        Ok(c[n].clone())
    }

    fn compute(&self, n: usize) -> Result<BigUint> {
        let v = match &self.rule {
            BoundRule::Constant(h) => h.clone(),
            BoundRule::Table { head, tail } => match head.get(n) {
                Some(h) => h.clone(),
                None => tail.try_at(n)?,
            },
            BoundRule::Symbolic(f) => f.eval_nat(&BigUint::from(n))?,
        };
        if v < BigUint::from(2u32) {
            return domain(format!("h({n}) = {v} < 2"));
        }
        Ok(v)
    }

    /// Panics if the bound cannot be evaluated at `n`.
    pub fn at(&self, n: usize) -> BigUint {
        self.try_at(n).expect("bound family evaluation")
    }

    /// The bound as a machine word; panics when it does not fit.
    pub fn small(&self, n: usize) -> u64 {
        self.at(n).to_u64().expect("bound exceeds u64")
    }

    /// `|h^n| = h(0)·…·h(n-1)`.
    pub fn level_size(&self, n: usize) -> BigUint {
        (0..n).fold(BigUint::one(), |acc, i| acc * self.at(i))
    }

    pub fn nondecreasing_upto(&self, n: usize) -> bool {
        (0..n).all(|i| self.at(i) <= self.at(i + 1))
    }

    pub fn admits(&self, w: &NatString) -> bool {
        w.0.iter().enumerate().all(|(i, &x)| BigUint::from(x) < self.at(i))
    }

    /// All words of `h^n` in lexicographic order.
    pub fn words(&self, n: usize) -> Vec<NatString> {
        let mut out = vec![NatString::new()];
        for i in 0..n {
            let h = self.small(i);
            out = out.iter().flat_map(|w| (0..h).map(move |x| w.child(x))).collect();
        }
        out
    }

    /// All words of `h^{≤n}` in shortlex order.
    pub fn words_upto(&self, n: usize) -> Vec<NatString> {
        (0..=n).flat_map(|k| self.words(k)).collect()
    }
}

/// A word of `h^*` together with its bound.
#[derive(Clone, Debug)]
pub struct BoundedWord {
    pub word: NatString,
    pub family: BoundFamily,
}

impl BoundedWord {
    pub fn new(word: NatString, family: BoundFamily) -> Result<Self> {
        if !family.admits(&word) {
            return domain(format!("{word} is not a word of h^*"));
        }
        Ok(BoundedWord { word, family })
    }
}

/// `str(n)`: binary string with `n+1 = 2^k + Σ σ(i)·2^{k-1-i}`, `k = |σ|`.
/// Drops the leading one of the binary expansion of `n+1`.
pub fn str_decode(n: &BigUint) -> BitString {
    let m = n + 1u32;
    let k = m.bits() as usize - 1;
    BitString((0..k).rev().map(|i| m.bit(i as u64) as u8).collect())
}

pub fn str_encode(s: &BitString) -> BigUint {
    let mut m = BigUint::one();
    for &b in s.bits() {
        m <<= 1;
        if b == 1 {
            m += 1u32;
        }
    }
    m - 1u32
}

/// `π^(2)(x, y) = 2^x(2y+1) - 1`.
pub fn pair2(x: &BigUint, y: &BigUint) -> BigUint {
    let x = x.to_u64().expect("pairing exponent exceeds u64");
    (((y << 1u32) + 1u32) << x) - 1u32
}

pub fn unpair2(n: &BigUint) -> (BigUint, BigUint) {
    let m = n + 1u32;
    let x = m.trailing_zeros().unwrap_or(0);
    let odd = m >> x;
    (BigUint::from(x), (odd - 1u32) >> 1u32)
}

/// `π^(k)` for `k ≥ 1`; `π^(1)` is the identity.
pub fn pair(xs: &[BigUint]) -> Result<BigUint> {
    let (first, rest) = match xs.split_first() {
        Some(p) => p,
        None => return domain("pairing needs k >= 1"),
    };
    Ok(rest.iter().fold(first.clone(), |acc, y| pair2(&acc, y)))
}

pub fn unpair(k: usize, n: &BigUint) -> Result<Vec<BigUint>> {
    if k == 0 {
        return domain("pairing needs k >= 1");
    }
    let mut out = Vec::with_capacity(k);
    let mut cur = n.clone();
    for _ in 1..k {
        let (a, b) = unpair2(&cur);
        out.push(b);
        cur = a;
    }
    out.push(cur);
    out.reverse();
    Ok(out)
}

/// `#_∞(σ) = Σ_i 2^{σ(0)+…+σ(i)+i}`.
pub fn seq_index(s: &NatString) -> BigUint {
    let mut acc = BigUint::zero();
    let mut pos = BigUint::zero();
    for (i, &x) in s.0.iter().enumerate() {
        pos += x;
        let p = (&pos + i).to_u64().expect("exponent exceeds u64");
        acc.set_bit(p, true);
    }
    acc
}

pub fn seq_unindex(n: &BigUint) -> NatString {
    let mut out = Vec::new();
    let mut prev: Option<u64> = None;
    for p in 0..n.bits() {
        if n.bit(p) {
            out.push(match prev {
                None => p,
                Some(q) => p - q - 1,
            });
            prev = Some(p);
        }
    }
    NatString(out)
}

/// `#_h`: position of `σ` in the shortlex enumeration of `h^*`.
pub fn shortlex_index(w: &BoundedWord) -> BigUint {
    let n = w.word.len();
    let mut base = BigUint::zero();
    let mut level = BigUint::one();
    for i in 0..n {
        base += &level;
        level *= w.family.at(i);
    }
    let mut rank = BigUint::zero();
    for (i, &x) in w.word.0.iter().enumerate() {
        rank = rank * w.family.at(i) + x;
    }
    base + rank
}

pub fn shortlex_unindex(n: &BigUint, family: &BoundFamily) -> BoundedWord {
    let mut rem = n.clone();
    let mut len = 0usize;
    let mut level = BigUint::one();
    while rem >= level {
        rem -= &level;
        level *= family.at(len);
        len += 1;
    }
    let mut digits = vec![0u64; len];
    for i in (0..len).rev() {
        let (q, r) = rem.div_rem(&family.at(i));
        digits[i] = r.to_u64().expect("digit exceeds u64");
        rem = q;
    }
    BoundedWord { word: NatString(digits), family: family.clone() }
}

/// `ψ` on finite words: child `i` appends `1^i 0`, the last child `1^{h-1}`.
pub fn h_to_cantor(w: &BoundedWord) -> BitString {
    let mut out = Vec::new();
    for (n, &i) in w.word.0.iter().enumerate() {
        let h = w.family.small(n);
        out.extend(std::iter::repeat(1u8).take(i as usize));
        if i + 1 < h {
            out.push(0);
        }
    }
    BitString(out)
}

/// Inverse of [`h_to_cantor`]: the longest word whose image is a prefix of
/// `bits`, and the number of bits consumed.
pub fn cantor_to_h(bits: &BitString, family: &BoundFamily) -> (BoundedWord, usize) {
    let b = bits.bits();
    let mut word = Vec::new();
    let mut pos = 0usize;
    'outer: loop {
        let h = family.small(word.len());
        let mut i = 0u64;
        let mut p = pos;
        loop {
            if i + 1 == h {
                word.push(i);
                pos = p;
                continue 'outer;
            }
            match b.get(p) {
                None => break 'outer,
                Some(0) => {
                    word.push(i);
                    pos = p + 1;
                    continue 'outer;
                }
                Some(_) => {
                    i += 1;
                    p += 1;
                }
            }
        }
    }
    (BoundedWord { word: NatString(word), family: family.clone() }, pos)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn n(x: u64) -> BigUint {
        BigUint::from(x)
    }

    #[test]
    fn str_small_values() {
        assert_eq!(str_decode(&n(0)), BitString::new());
        assert_eq!(str_decode(&n(1)), BitString::from_bits(&[0]));
        assert_eq!(str_decode(&n(2)), BitString::from_bits(&[1]));
        assert_eq!(str_decode(&n(3)), BitString::from_bits(&[0, 0]));
        assert_eq!(str_decode(&n(4)), BitString::from_bits(&[0, 1]));
    }

    #[test]
    fn pair_values() {
        assert_eq!(pair2(&n(0), &n(0)), n(0));
        assert_eq!(pair2(&n(1), &n(1)), n(5));
        assert_eq!(pair2(&n(2), &n(0)), n(3));
        assert_eq!(unpair(3, &pair(&[n(3), n(1), n(4)]).unwrap()).unwrap(), vec![n(3), n(1), n(4)]);
    }

    #[test]
    fn seq_index_values() {
        assert_eq!(seq_index(&NatString::new()), n(0));
        assert_eq!(seq_index(&NatString(vec![0])), n(1));
        assert_eq!(seq_index(&NatString(vec![1])), n(2));
        assert_eq!(seq_index(&NatString(vec![0, 0])), n(3));
    }

    #[test]
    fn shortlex_mixed_radix() {
        let h = BoundFamily::table(&[3], BoundFamily::constant(2));
        let w = |v: Vec<u64>| BoundedWord::new(NatString(v), h.clone()).unwrap();
        assert_eq!(shortlex_index(&w(vec![2])), n(3));
        assert_eq!(shortlex_index(&w(vec![0, 0])), n(4));
        assert_eq!(shortlex_unindex(&n(4), &h).word, NatString(vec![0, 0]));
    }

    #[test]
    fn cantor_roundtrip_ternary() {
        let h = BoundFamily::constant(3);
        let w = BoundedWord::new(NatString(vec![1, 2, 0]), h.clone()).unwrap();
        let b = h_to_cantor(&w);
        assert_eq!(b, BitString::from_bits(&[1, 0, 1, 1, 0]));
        let (back, used) = cantor_to_h(&b, &h);
        assert_eq!(back.word, w.word);
        assert_eq!(used, 5);
    }
}
