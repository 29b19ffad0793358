//! Exhaustive tree oracle for bushy combinatorics over a full finite tree.
#![allow(dead_code)]

use std::collections::HashMap;

use avoidance_lab::bushy::{bigness, BadSet};
use avoidance_lab::encodings::{BoundFamily, NatString};

/// The full `h`-ary tree of depth `depth`, with every node a bit.
pub struct Universe {
    pub h: u64,
    pub depth: usize,
    pub nodes: Vec<NatString>,
    index: HashMap<NatString, usize>,
    pub cone: Vec<u64>,
    shapes: Vec<Vec<(u64, Option<u64>)>>,
}

fn min_deg(a: Option<u64>, b: Option<u64>) -> Option<u64> {
    match (a, b) {
        (None, x) | (x, None) => x,
        (Some(x), Some(y)) => Some(x.min(y)),
    }
}

impl Universe {
    pub fn new(h: u64, depth: usize) -> Self {
        let mut u = Self::bare(h, depth);
        for i in (0..u.nodes.len()).rev() {
            u.shapes[i] = u.build_shapes(i);
        }
        u
    }

    /// Without the tree shapes, so `oracle` is unavailable.
    pub fn bare(h: u64, depth: usize) -> Self {
        let mut nodes = vec![NatString::new()];
        let mut level = vec![NatString::new()];
        for _ in 0..depth {
            level = level.iter().flat_map(|w| (0..h).map(move |i| w.child(i))).collect();
            nodes.extend(level.iter().cloned());
        }
        assert!(nodes.len() <= 64);
        let index: HashMap<NatString, usize> = nodes.iter().cloned().enumerate().map(|(i, w)| (w, i)).collect();
        let cone = nodes
            .iter()
            .map(|w| nodes.iter().enumerate().filter(|(_, v)| w.is_prefix_of(v)).fold(0u64, |m, (i, _)| m | 1 << i))
            .collect();
        let shapes = vec![Vec::new(); nodes.len()];
        Universe { h, depth, nodes, index, cone, shapes }
    }

    fn kids(&self, i: usize) -> Vec<usize> {
        let w = &self.nodes[i];
        if w.len() == self.depth {
            return Vec::new();
        }
        (0..self.h).map(|c| self.index[&w.child(c)]).collect()
    }

    /// Every finite tree rooted at node `i`: its leaf set and the least
    /// branching of an inner node (`None` for a single leaf).
    fn build_shapes(&self, i: usize) -> Vec<(u64, Option<u64>)> {
        let mut out = vec![(1u64 << i, None)];
        let kids = self.kids(i);
        for mask in 1u32..(1 << kids.len()) {
            let pick: Vec<usize> = (0..kids.len()).filter(|b| mask >> b & 1 == 1).map(|b| kids[b]).collect();
            let mut acc = vec![(0u64, Some(pick.len() as u64))];
            for c in pick {
                acc = acc.iter().flat_map(|(l, d)| self.shapes[c].iter().map(move |(l2, d2)| (l | l2, min_deg(*d, *d2)))).collect();
            }
            out.extend(acc);
        }
        out
    }

    pub fn idx(&self, w: &NatString) -> usize {
        self.index[w]
    }

    fn antichains_at(&self, i: usize) -> Vec<u64> {
        let mut prod = vec![0u64];
        for c in self.kids(i) {
            let sub = self.antichains_at(c);
            prod = prod.iter().flat_map(|p| sub.iter().map(move |s| p | s)).collect();
        }
        if self.kids(i).is_empty() {
            prod = vec![0];
        }
        prod.push(1 << i);
        prod
    }

    /// All antichains, as node masks.
    pub fn antichains(&self) -> Vec<u64> {
        self.antichains_at(0)
    }

    pub fn strings(&self, mask: u64) -> Vec<NatString> {
        (0..self.nodes.len()).filter(|i| mask >> i & 1 == 1).map(|i| self.nodes[i].clone()).collect()
    }

    pub fn up(&self, mask: u64) -> u64 {
        (0..self.nodes.len()).filter(|i| mask >> i & 1 == 1).fold(0, |m, i| m | self.cone[i])
    }

    pub fn bad(&self, mask: u64) -> BadSet {
        BadSet::upward(self.strings(mask), &BoundFamily::constant(self.h)).unwrap()
    }

    /// Largest `k` admitting a `k`-bushy tree above node `s` with leaves in
    /// the up-closed set `up`; `None` when unbounded.
    pub fn oracle(&self, up: u64, s: usize) -> Option<u64> {
        let mut best = Some(0);
        for (leaves, d) in &self.shapes[s] {
            if leaves & !up == 0 {
                best = match (best, d) {
                    (_, None) | (None, _) => None,
                    (Some(a), Some(b)) => Some(a.max(*b)),
                };
            }
        }
        best
    }
}

fn at_least(b: Option<u64>, k: u64) -> bool {
    b.map_or(true, |m| m >= k.max(1))
}

#[derive(Default, Debug)]
pub struct LemmaReport {
    pub cases: u64,
    pub failures: Vec<String>,
}

impl LemmaReport {
    fn check(&mut self, ok: bool, what: impl FnOnce() -> String) {
        self.cases += 1;
        if !ok && self.failures.len() < 20 {
            self.failures.push(what());
        }
    }
}

/// Checks the library against the oracle on every up-closed set and stem,
/// then smallness preservation (`m + n ≤ 5`), splitting, concatenation and
/// monotonicity over all pairs of up-closed sets.
pub fn exhaustive_lemmas(u: &Universe) -> LemmaReport {
    let mut rep = LemmaReport::default();
    let sets = u.antichains();
    let n = u.nodes.len();
    let mut table: HashMap<u64, Vec<Option<u64>>> = HashMap::new();
    for &a in &sets {
        let up = u.up(a);
        let bad = u.bad(a);
        let row: Vec<Option<u64>> = (0..n).map(|s| u.oracle(up, s)).collect();
        for s in 0..n {
            let lib = bigness(&bad, &u.nodes[s]);
            rep.check(lib == row[s], || format!("bigness {:?} at {}: {lib:?} vs {:?}", u.strings(a), u.nodes[s], row[s]));
            for k in 1..5 {
                rep.check(!at_least(row[s], k + 1) || at_least(row[s], k), || format!("monotone {:?} at {}", u.strings(a), u.nodes[s]));
            }
        }
        table.insert(up, row);
    }
    for &a in &sets {
        let ua = u.up(a);
        for &c in &sets {
            let uc = u.up(c);
            let (ra, rc, ru) = (&table[&ua], &table[&uc], &table[&(ua | uc)]);
            for s in 0..n {
                for m in 1..=4u64 {
                    for k in 1..=5 - m {
                        if !at_least(ra[s], m) && !at_least(rc[s], k) {
                            rep.check(!at_least(ru[s], m + k - 1), || format!("preservation {:?} {:?} at {} m={m} n={k}", u.strings(a), u.strings(c), u.nodes[s]));
                        }
                    }
                }
                for k in 1..=2 {
                    if at_least(ru[s], 2 * k) {
                        rep.check(at_least(ra[s], k) || at_least(rc[s], k), || format!("splitting {:?} {:?} at {}", u.strings(a), u.strings(c), u.nodes[s]));
                    }
                }
                if a & !u.cone[s] == 0 {
                    let cones = u.up(a);
                    let union = uc & cones;
                    let members: Vec<usize> = (0..n).filter(|i| a >> i & 1 == 1).collect();
                    for k in 1..=3 {
                        if at_least(ra[s], k) && members.iter().all(|&t| at_least(rc[t], k)) {
                            rep.check(at_least(table[&union][s], k), || format!("concatenation {:?} {:?} at {}", u.strings(a), u.strings(c), u.nodes[s]));
                        }
                    }
                }
            }
        }
    }
    rep
}

/// The same lemmas on random pairs of up-closed sets, decided by the
/// library alone.
pub fn sampled_lemmas(u: &Universe, pairs: usize, seed: u64) -> LemmaReport {
    let mut rep = LemmaReport::default();
    let mut x = seed | 1;
    let mut next = move || {
        x ^= x << 13;
        x ^= x >> 7;
        x ^= x << 17;
        x
    };
    let n = u.nodes.len();
    let row = |up: u64| -> Vec<Option<u64>> {
        let bad = u.bad(up);
        u.nodes.iter().map(|s| bigness(&bad, s)).collect()
    };
    for _ in 0..pairs {
        let mut pick = || {
            let density = next() % 6 + 1;
            (0..n).filter(|_| next() % 24 < density).fold(0u64, |m, i| m | u.cone[i])
        };
        let (ua, uc) = (pick(), pick());
        let (ra, rc, ru) = (row(ua), row(uc), row(ua | uc));
        for s in 0..n {
            for k in 1..5 {
                rep.check(!at_least(ra[s], k + 1) || at_least(ra[s], k), || format!("monotone at {}", u.nodes[s]));
            }
            for m in 1..=4u64 {
                for k in 1..=5 - m {
                    if !at_least(ra[s], m) && !at_least(rc[s], k) {
                        rep.check(!at_least(ru[s], m + k - 1), || format!("preservation {:?} {:?} at {}", u.strings(ua), u.strings(uc), u.nodes[s]));
                    }
                }
            }
            for k in 1..=2 {
                if at_least(ru[s], 2 * k) {
                    rep.check(at_least(ra[s], k) || at_least(rc[s], k), || format!("splitting at {}", u.nodes[s]));
                }
            }
        }
    }
    rep
}
