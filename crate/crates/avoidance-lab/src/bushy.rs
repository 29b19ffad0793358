//! Bushy trees: big and small sets, closures, the labeling behind smallness
//! preservation, and desk-scale replays of the forcing steps with table
//! functionals.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::ToPrimitive;

use crate::encodings::{BoundFamily, NatString};
use crate::error::{domain, precondition, Error, Result};
use crate::orderfn::{cmp_with_rational, OrderFn};

/// A finite set of words of `h^*`. An upward set stands for the upward
/// closure of its (minimal) strings.
#[derive(Clone, Debug)]
pub struct BadSet {
    strings: BTreeSet<NatString>,
    pub h: BoundFamily,
    upward: bool,
}

impl BadSet {
    pub fn new(strings: impl IntoIterator<Item = NatString>, h: &BoundFamily) -> Result<Self> {
        let strings: BTreeSet<NatString> = strings.into_iter().collect();
        if let Some(w) = strings.iter().find(|w| !h.admits(w)) {
            return domain(format!("{w} is not a word of h^*"));
        }
        Ok(BadSet { strings, h: h.clone(), upward: false })
    }

    pub fn upward(strings: impl IntoIterator<Item = NatString>, h: &BoundFamily) -> Result<Self> {
        let mut b = Self::new(strings, h)?;
        b.upward = true;
        b.minimize();
        Ok(b)
    }

    pub fn empty(h: &BoundFamily) -> Self {
        BadSet { strings: BTreeSet::new(), h: h.clone(), upward: true }
    }

    fn minimize(&mut self) {
        let all: Vec<NatString> = self.strings.iter().cloned().collect();
        let mut keep = BTreeSet::new();
        for w in all {
            if !(0..w.len()).any(|k| keep.contains(&w.prefix(k))) {
                keep.insert(w);
            }
        }
        self.strings = keep;
    }

    pub fn strings(&self) -> impl Iterator<Item = &NatString> {
        self.strings.iter()
    }

    pub fn len(&self) -> usize {
        self.strings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.strings.is_empty()
    }

    pub fn is_upward(&self) -> bool {
        self.upward
    }

    /// Longest stored string.
    pub fn depth(&self) -> usize {
        self.strings.iter().map(NatString::len).max().unwrap_or(0)
    }

    /// Some prefix of `w` is stored.
    pub fn covers(&self, w: &NatString) -> bool {
        (0..=w.len()).any(|k| self.strings.contains(&w.prefix(k)))
    }

    pub fn contains(&self, w: &NatString) -> bool {
        if self.upward {
            self.covers(w)
        } else {
            self.strings.contains(w)
        }
    }

    /// Union of two sets of the same kind.
    pub fn union(&self, other: &BadSet) -> Result<BadSet> {
        if self.upward != other.upward {
            return domain("union of an upward set with a literal set");
        }
        let all = self.strings.iter().chain(&other.strings).cloned();
        if self.upward {
            BadSet::upward(all, &self.h)
        } else {
            BadSet::new(all, &self.h)
        }
    }

    /// Every member of `self` is a member of `other`.
    pub fn subset_of(&self, other: &BadSet) -> bool {
        self.strings.iter().all(|w| other.contains(w))
            && (!self.upward || other.upward || self.strings.is_empty())
    }
}

fn bigness_at(strs: &[&NatString], tau: &NatString, h: &BoundFamily, out: &mut Option<&mut BTreeMap<NatString, Option<u64>>>) -> Option<u64> {
    let v = if strs.iter().any(|w| w.len() == tau.len()) {
        None
    } else {
        let d = tau.len();
        let hd = h.at(d);
        let mut groups: BTreeMap<u64, Vec<&NatString>> = BTreeMap::new();
        for w in strs {
            let i = w.0[d];
            if BigUint::from(i) < hd {
                groups.entry(i).or_default().push(w);
            }
        }
        let mut kids: Vec<Option<u64>> = groups.into_iter().map(|(i, g)| bigness_at(&g, &tau.child(i), h, out)).collect();
        kids.sort_by(|a, b| b.map_or(u64::MAX, |x| x).cmp(&a.map_or(u64::MAX, |x| x)));
        let mut best = 0;
        for (j, b) in kids.iter().enumerate() {
            let v = b.map_or(u64::MAX, |x| x).min(j as u64 + 1);
            best = best.max(v);
        }
        Some(best)
    };
    if let Some(m) = out.as_deref_mut() {
        m.insert(tau.clone(), v);
    }
    v
}

/// The largest `k` with `B` `k`-big above `σ`; `None` when `σ` is already
/// in `B↑` (big for every `k`). `Some(0)` means not even 1-big.
pub fn bigness(b: &BadSet, sigma: &NatString) -> Option<u64> {
    if b.covers(sigma) {
        return None;
    }
    let ext: Vec<&NatString> = b.strings.iter().filter(|w| sigma.is_prefix_of(w)).collect();
    bigness_at(&ext, sigma, &b.h, &mut None)
}

/// A finite `k`-bushy tree above `σ` with leaves in `B↑` exists. For `k = 0`
/// this is the same as `k = 1`.
pub fn is_big(b: &BadSet, sigma: &NatString, k: u64) -> bool {
    bigness(b, sigma).map_or(true, |m| k.max(1) <= m)
}

fn bigness_map(b: &BadSet) -> BTreeMap<NatString, Option<u64>> {
    let mut map = BTreeMap::new();
    let all: Vec<&NatString> = b.strings.iter().collect();
    bigness_at(&all, &NatString::new(), &b.h, &mut Some(&mut map));
    map
}

/// `k`-closure: the upward closure of `{τ : B is k-big above τ}`. Stays
/// `k`-small above any `σ` none of whose prefixes carry a big `B`.
pub fn closure(b: &BadSet, k: u64) -> BadSet {
    let map = bigness_map(b);
    let big = map.iter().filter(|(_, v)| v.map_or(true, |m| k.max(1) <= m)).map(|(w, _)| w.clone());
    BadSet::upward(big.chain(b.strings.iter().cloned()), &b.h).expect("closure stays in h^*")
}

/// `B` is `k`-closed: whenever `B` is `k`-big above `ρ`, `ρ ∈ B`.
pub fn is_closed(b: &BadSet, k: u64) -> bool {
    bigness_map(b).iter().all(|(w, v)| !v.map_or(true, |m| k.max(1) <= m) || b.contains(w))
}

/// An explicit finite tree: a prefix-closed set of words.
pub type Tree = BTreeSet<NatString>;

pub fn children<'a>(t: &'a Tree, tau: &'a NatString) -> impl Iterator<Item = &'a NatString> + 'a {
    t.iter().filter(move |w| w.len() == tau.len() + 1 && tau.is_prefix_of(w))
}

pub fn leaves(t: &Tree) -> Vec<NatString> {
    t.iter().filter(|w| children(t, w).next().is_none()).cloned().collect()
}

/// Prefix-closed, compatible with `σ`, and every node extending `σ` is a
/// leaf or has at least `k` children.
pub fn is_bushy_above(t: &Tree, sigma: &NatString, k: u64) -> bool {
    if t.is_empty() {
        return false;
    }
    t.iter().all(|w| {
        w.compatible(sigma)
            && (w.is_empty() || t.contains(&w.prefix(w.len() - 1)))
            && (!sigma.is_prefix_of(w) || {
                let c = children(t, w).count() as u64;
                c == 0 || c >= k
            })
    })
}

/// The half of a labeled split.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Split {
    B(Tree),
    C(Tree),
}

/// Labels `T` from the leaves down: a leaf is `B` if it lies in `B`, an
/// inner node is `B` when at least `m` children are. Returns the side of
/// the stem, keeping the leftmost `m` (resp. `n`) children of each node.
pub fn label_split(t: &Tree, sigma: &NatString, b: &BadSet, c: &BadSet, m: u64, n: u64) -> Result<Split> {
    if m == 0 || n == 0 {
        return precondition("m and n must be positive");
    }
    if !t.contains(sigma) || !is_bushy_above(t, sigma, n + m - 1) {
        return precondition(format!("tree is not {}-bushy above {sigma}", n + m - 1));
    }
    if let Some(l) = leaves(t).into_iter().find(|l| !b.contains(l) && !c.contains(l)) {
        return precondition(format!("leaf {l} lies in neither set"));
    }
    let mut label: BTreeMap<NatString, bool> = BTreeMap::new();
    for w in t.iter().rev().filter(|w| sigma.is_prefix_of(w)) {
        let kids: Vec<&NatString> = children(t, w).collect();
        let is_b = if kids.is_empty() { b.contains(w) } else { kids.iter().filter(|k| label[**k]).count() as u64 >= m };
        label.insert(w.clone(), is_b);
    }
    let side = label[sigma];
    let want = if side { m } else { n };
    let mut out: Tree = (0..sigma.len()).map(|k| sigma.prefix(k)).collect();
    let mut stack = vec![sigma.clone()];
    while let Some(w) = stack.pop() {
        let kids: Vec<&NatString> = children(t, &w).filter(|k| label[*k] == side).take(want as usize).collect();
        for k in kids {
            stack.push(k.clone());
        }
        out.insert(w);
    }
    Ok(if side { Split::B(out) } else { Split::C(out) })
}

/// Shortlex-first `τ ⊇ σ` in `C ∖ B` with `|τ| ≤ depth`.
fn first_in_difference(c: &BadSet, b: &BadSet, sigma: &NatString, depth: usize) -> Option<NatString> {
    let mut queue = VecDeque::from([sigma.clone()]);
    while let Some(t) = queue.pop_front() {
        if c.contains(&t) && !b.contains(&t) {
            return Some(t);
        }
        if t.len() >= depth || (b.is_upward() && b.covers(&t)) {
            continue;
        }
        let hd = c.h.small(t.len());
        let open = c.is_upward() && c.covers(&t);
        for i in 0..hd {
            let u = t.child(i);
            if open || c.strings.iter().any(|w| u.is_prefix_of(w)) {
                queue.push_back(u);
            }
        }
    }
    None
}

/// An extension of `σ` in `C ∖ B`, shortlex-least among witnesses.
pub fn find_extension(c: &BadSet, b: &BadSet, sigma: &NatString, k: u64) -> Result<NatString> {
    if !b.h.admits(sigma) {
        return domain(format!("{sigma} is not a word of h^*"));
    }
    if is_big(b, sigma, k) {
        return precondition(format!("B is {k}-big above {sigma}"));
    }
    if !is_closed(b, k) {
        return precondition(format!("B is not {k}-closed"));
    }
    if !is_big(c, sigma, k) {
        return precondition(format!("C is {k}-small above {sigma}"));
    }
    let depth = c.depth().max(sigma.len()) + usize::from(c.is_upward());
    first_in_difference(c, b, sigma, depth).ok_or_else(|| Error::Exhausted(format!("no extension of {sigma} in C \\ B")))
}

/// Lexicographically first extension of `σ` of length `len` accepted by
/// `ok`, never entering `avoid`.
fn leftmost(sigma: &NatString, len: usize, h: &BoundFamily, avoid: &BadSet, ok: &dyn Fn(&NatString) -> bool) -> Option<NatString> {
    if avoid.contains(sigma) && avoid.is_upward() {
        return None;
    }
    if sigma.len() == len {
        return (!avoid.contains(sigma) && ok(sigma)).then(|| sigma.clone());
    }
    (0..h.small(sigma.len())).find_map(|i| leftmost(&sigma.child(i), len, h, avoid, ok))
}

/// A finite table functional: `Γ^τ(x) = v` whenever an entry `(ρ, x, v)`
/// has `ρ ⊆ τ`.
#[derive(Clone, Debug, Default)]
pub struct MockFunctional {
    entries: Vec<(NatString, u64, u64)>,
}

impl MockFunctional {
    /// Rejects tables where compatible inputs disagree on an argument.
    pub fn new(entries: Vec<(NatString, u64, u64)>) -> Result<Self> {
        for (i, a) in entries.iter().enumerate() {
            for b in &entries[i + 1..] {
                if a.1 == b.1 && a.0.compatible(&b.0) && a.2 != b.2 {
                    return precondition(format!("{} and {} disagree at {}", a.0, b.0, a.1));
                }
            }
        }
        Ok(MockFunctional { entries })
    }

    pub fn entries(&self) -> &[(NatString, u64, u64)] {
        &self.entries
    }

    pub fn eval(&self, tau: &NatString, x: u64) -> Option<u64> {
        self.entries.iter().find(|(r, y, _)| *y == x && r.is_prefix_of(tau)).map(|e| e.2)
    }

    /// `{τ ∈ h^* : Γ^τ(x)↓ ∈ keep}` as an upward set.
    pub fn preimage(&self, x: u64, keep: impl Fn(u64) -> bool, h: &BoundFamily) -> BadSet {
        let s = self.entries.iter().filter(|(r, y, v)| *y == x && keep(*v) && h.admits(r)).map(|e| e.0.clone());
        BadSet::upward(s, h).expect("filtered to h^*")
    }
}

/// A forcing condition `⟨σ, B⟩` with its smallness parameter.
#[derive(Clone, Debug)]
pub struct StemCondition {
    pub stem: NatString,
    pub bad: BadSet,
    pub k: u64,
}

impl StemCondition {
    pub fn new(stem: NatString, bad: BadSet, k: u64, q: &BoundFamily) -> Result<Self> {
        let c = StemCondition { stem, bad, k };
        c.validate(q)?;
        Ok(c)
    }

    /// `σ ≠ ⟨⟩` in `q^*`, `B` upward, `k`-closed and `k`-small above `σ`,
    /// `k ≤ q(|σ|−1)`.
    pub fn validate(&self, q: &BoundFamily) -> Result<()> {
        let s = &self.stem;
        if s.is_empty() || !q.admits(s) {
            return precondition(format!("stem {s} is empty or outside q^*"));
        }
        if !self.bad.is_upward() {
            return precondition("bad set is not upward closed");
        }
        if BigUint::from(self.k) > q.at(s.len() - 1) {
            return precondition(format!("k = {} exceeds q({})", self.k, s.len() - 1));
        }
        if is_big(&self.bad, s, self.k) {
            return precondition(format!("bad set is {}-big above {s}", self.k));
        }
        if !is_closed(&self.bad, self.k) {
            return precondition(format!("bad set is not {}-closed", self.k));
        }
        Ok(())
    }

    pub fn extends(&self, other: &StemCondition) -> bool {
        other.stem.is_prefix_of(&self.stem) && other.bad.subset_of(&self.bad)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Step3Case {
    /// Bad set grown to the `c`-closure.
    Grow { c: u64 },
    /// Stem extended to force `Γ^τ(θ) = value`.
    Force { value: u64 },
}

#[derive(Clone, Debug)]
pub struct Step3Trace {
    pub case: Step3Case,
    pub theta: u64,
    /// `p1(θ)·q(x−1)`, rounded up in the first factor.
    pub budget: u64,
    pub stem: NatString,
    pub bad_size: usize,
}

impl fmt::Display for Step3Trace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let case = match &self.case {
            Step3Case::Grow { c } => format!("I c={c}"),
            Step3Case::Force { value } => format!("II value={value}"),
        };
        write!(f, "step3 theta={} case={case} stem={} bad={} budget={}", self.theta, self.stem, self.bad_size, self.budget)
    }
}

/// `#{v ∈ ℕ : v < p(x)}`.
fn below_count(p: &OrderFn, x: u64) -> Result<u64> {
    let at = BigUint::from(x);
    let f = p.eval_floor(&at)?;
    let f = f.to_u64().ok_or_else(|| Error::Domain(format!("p({x}) out of range")))?;
    let exact = cmp_with_rational(p, &at, &BigRational::from_integer(f.into()))? == std::cmp::Ordering::Equal;
    Ok(if exact { f } else { f + 1 })
}

/// One density step against `Γ` at argument `θ`: with
/// `A = {τ : Γ^τ(θ)↓ < p1(θ)}`, either grow the bad set to the `c`-closure of
/// `A ∪ B` and step past it, or force a converged value.
pub fn forcing_step3(cond: &StemCondition, q: &BoundFamily, gamma: &MockFunctional, p1: &OrderFn, theta: u64) -> Result<(StemCondition, Step3Trace)> {
    cond.validate(q)?;
    let sigma = &cond.stem;
    let x = sigma.len();
    let qx1 = q.small(x - 1);
    let count = below_count(p1, theta)?;
    let budget = count * qx1;
    let a = gamma.preimage(theta, |v| v < count, q);
    let (next, case) = if !is_big(&a, sigma, budget) {
        let c = budget + cond.k - 1;
        let u = a.union(&cond.bad)?;
        if is_big(&u, sigma, c) {
            return Err(Error::Hypothesis { clause: "smallness preservation".into(), detail: format!("A u B is {c}-big above {sigma}") });
        }
        let closed = closure(&u, c);
        if BigUint::from(c) > q.at(x) {
            return Err(Error::Exhausted(format!("q({x}) = {} leaves no room above the {c}-closure", q.at(x))));
        }
        let tau = (0..q.small(x))
            .map(|i| sigma.child(i))
            .find(|t| !closed.contains(t))
            .ok_or_else(|| Error::Exhausted(format!("every child of {sigma} is in the closure")))?;
        (StemCondition { stem: tau, bad: closed, k: c }, Step3Case::Grow { c })
    } else {
        let (j, aj) = (0..count)
            .map(|j| (j, gamma.preimage(theta, |v| v == j, q)))
            .find(|(_, aj)| is_big(aj, sigma, qx1))
            .ok_or_else(|| Error::Hypothesis { clause: "splitting".into(), detail: format!("no value class is {qx1}-big above {sigma}") })?;
        let tau = find_extension(&aj, &cond.bad, sigma, cond.k)?;
        debug_assert_eq!(gamma.eval(&tau, theta), Some(j));
        (StemCondition { stem: tau, bad: cond.bad.clone(), k: cond.k }, Step3Case::Force { value: j })
    };
    next.validate(q)?;
    if !next.extends(cond) {
        return Err(Error::Hypothesis { clause: "extension".into(), detail: "result does not extend the input".into() });
    }
    let trace = Step3Trace { case, theta, budget, stem: next.stem.clone(), bad_size: next.bad.len() };
    Ok((next, trace))
}

/// One requirement of the second replay: functional, argument `θ`, and the
/// value `(q∘u)(θ)`.
#[derive(Clone, Debug)]
pub struct Step4Target {
    pub gamma: MockFunctional,
    pub theta: u64,
    pub qu: u64,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Step4Case {
    /// Some `A_j` was big; the stem now forces `Γ^τ(θ) = value`.
    Agree { value: u64 },
    /// Every `A_j` was small; the bad set absorbs them under budget `c`.
    Absorb { c: u64 },
}

#[derive(Clone, Debug)]
pub struct Step4Record {
    pub stage: usize,
    pub case: Option<Step4Case>,
    pub stem: NatString,
    pub bad: BadSet,
    /// `n_i = |σ_i|`.
    pub n: usize,
}

impl fmt::Display for Step4Record {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let case = match &self.case {
            None => "start".to_string(),
            Some(Step4Case::Agree { value }) => format!("1 value={value}"),
            Some(Step4Case::Absorb { c }) => format!("2 c={c}"),
        };
        write!(f, "step4 stage={} case={case} stem={} n={} bad={}", self.stage, self.stem, self.n, self.bad.len())
    }
}

/// Strings of `p2^*` with a position agreeing with `ψ`, as an upward set.
pub fn clash_set(p2: &BoundFamily, psi: &[Option<u64>], depth: usize) -> BadSet {
    let mut out = Vec::new();
    for (n, v) in psi.iter().enumerate().take(depth) {
        if let Some(v) = v {
            if BigUint::from(*v) < p2.at(n) {
                out.extend(p2.words(n).into_iter().map(|w| w.child(*v)));
            }
        }
    }
    BadSet::upward(out, p2).expect("clash strings lie in p2^*")
}

fn p2_small(p2: &BoundFamily, n: usize) -> u64 {
    p2.small(n)
}

/// Replays the alternation of the second forcing argument: each target
/// either yields a forced agreement (`B` unchanged) or enlarges `B` by the
/// union of the value classes. Invariants checked after every stage:
/// `σ_i ∈ p2^{n_i} ∖ B_i`, `B_i` is `p2(n_i)`-small above `σ_i`, nesting.
pub fn forcing_step4(p2: &BoundFamily, psi: &[Option<u64>], targets: &[Step4Target], depth: usize) -> Result<Vec<Step4Record>> {
    let bad = clash_set(p2, psi, depth);
    let n1 = 1usize;
    let stem = leftmost(&NatString::new(), n1, p2, &bad, &|s| !is_big(&bad, s, p2_small(p2, n1)))
        .ok_or_else(|| Error::Exhausted("no admissible first stem".into()))?;
    let mut out = vec![Step4Record { stage: 1, case: None, stem, bad, n: n1 }];
    for (i, t) in targets.iter().enumerate() {
        let cur = out.last().unwrap().clone();
        let pn = p2_small(p2, cur.n);
        let need = BigUint::from(t.qu + 1) * pn;
        let k = (cur.n + 1..=depth)
            .find(|&k| p2.at(k) >= need)
            .ok_or_else(|| Error::Exhausted(format!("no level up to {depth} with p2 >= {need}")))?;
        let rho = leftmost(&cur.stem, k, p2, &cur.bad, &|_| true)
            .ok_or_else(|| Error::Exhausted(format!("no extension of {} at level {k}", cur.stem)))?;
        let classes: Vec<BadSet> = (0..t.qu).map(|j| t.gamma.preimage(t.theta, |v| v == j, p2)).collect();
        let big = classes.iter().position(|a| is_big(a, &rho, pn));
        let next = match big {
            Some(j) => {
                let tau = first_in_difference(&classes[j], &cur.bad, &rho, depth)
                    .ok_or_else(|| Error::Exhausted(format!("no extension of {rho} forcing value {j}")))?;
                let n = k.max(tau.len());
                let pn1 = p2_small(p2, n);
                let stem = leftmost(&tau, n, p2, &cur.bad, &|s| !is_big(&cur.bad, s, pn1))
                    .ok_or_else(|| Error::Exhausted(format!("no admissible extension of {tau}")))?;
                Step4Record { stage: i + 2, case: Some(Step4Case::Agree { value: j as u64 }), stem, bad: cur.bad.clone(), n }
            }
            None => {
                let c = pn * (t.qu + 1) - t.qu;
                let mut union = cur.bad.clone();
                for a in &classes {
                    union = union.union(a)?;
                }
                if is_big(&union, &rho, c) {
                    return Err(Error::Hypothesis { clause: "smallness preservation".into(), detail: format!("union is {c}-big above {rho}") });
                }
                Step4Record { stage: i + 2, case: Some(Step4Case::Absorb { c }), stem: rho, bad: union, n: k }
            }
        };
        check_step4(p2, &cur, &next)?;
        out.push(next);
    }
    Ok(out)
}

fn check_step4(p2: &BoundFamily, prev: &Step4Record, r: &Step4Record) -> Result<()> {
    let fail = |c: &str, d: String| Err(Error::Hypothesis { clause: c.into(), detail: d });
    if r.stem.len() != r.n || !p2.admits(&r.stem) || r.bad.contains(&r.stem) {
        return fail("i", format!("stem {} not in p2^{} minus B", r.stem, r.n));
    }
    if is_big(&r.bad, &r.stem, p2_small(p2, r.n)) {
        return fail("ii", format!("B is p2({})-big above {}", r.n, r.stem));
    }
    if !prev.stem.is_prefix_of(&r.stem) || !prev.bad.subset_of(&r.bad) {
        return fail("iii", format!("stage {} does not extend stage {}", r.stage, prev.stage));
    }
    Ok(())
}
