//! A concrete effective enumeration: counter-machine programs and host
//! closures, the linearly universal diagonal, prefix-free machines, a
//! resource-bounded complexity, and monotone machines built from staged
//! semimeasures.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::sync::{Arc, Mutex, RwLock};

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rand::Rng;

use crate::encodings::{pair2, seq_index, seq_unindex, str_decode, str_encode, unpair2, BitString, BoundFamily, NatString};
use crate::error::{domain, precondition, Error, Result};
use crate::numerics::Dyadic;
use crate::orderfn::{cmp_with_rational, OrderFn};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Instr {
    Inc(u64),
    Dec(u64),
    /// Jump to the target when the register is zero.
    Jz(u64, usize),
    Halt,
}

impl Instr {
    fn code(&self) -> Result<u64> {
        let c = match *self {
            Instr::Inc(r) => r.checked_mul(4),
            Instr::Dec(r) => r.checked_mul(4).and_then(|v| v.checked_add(1)),
            Instr::Jz(r, l) => {
                let p = pair2(&BigUint::from(r), &BigUint::from(l)).to_u64();
                p.and_then(|p| p.checked_mul(4)).and_then(|v| v.checked_add(2))
            }
            Instr::Halt => Some(3),
        };
        c.ok_or_else(|| Error::Domain(format!("instruction {self} has no u64 code")))
    }

    fn decode(c: u64) -> Instr {
        match c % 4 {
            0 => Instr::Inc(c / 4),
            1 => Instr::Dec(c / 4),
            2 => {
                let (r, l) = unpair2(&BigUint::from(c / 4));
                Instr::Jz(r.to_u64().unwrap(), l.to_usize().unwrap_or(usize::MAX))
            }
            _ => Instr::Halt,
        }
    }
}

impl fmt::Display for Instr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Instr::Inc(r) => write!(f, "INC {r}"),
            Instr::Dec(r) => write!(f, "DEC {r}"),
            Instr::Jz(r, l) => write!(f, "JZ {r} {l}"),
            Instr::Halt => write!(f, "HALT"),
        }
    }
}

/// A counter-machine program. Input in register 0, output register 0 on
/// halting; running off the end halts. `DEC` on zero is a no-op.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Program {
    instrs: Vec<Instr>,
}

impl Program {
    pub fn new(instrs: Vec<Instr>) -> Result<Self> {
        for (i, ins) in instrs.iter().enumerate() {
            if let Instr::Jz(_, l) = ins {
                if *l > instrs.len() {
                    return domain(format!("instruction {i}: jump target {l} out of bounds"));
                }
            }
        }
        Ok(Program { instrs })
    }

    pub fn instrs(&self) -> &[Instr] {
        &self.instrs
    }

    /// Text form: one of `INC r`, `DEC r`, `JZ r label`, `HALT` per line.
    /// Labels are instruction numbers or names declared as `name:`; `#`
    /// starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut labels = HashMap::new();
        let mut lines = Vec::new();
        for (ln, raw) in text.lines().enumerate() {
            let mut line = raw.split('#').next().unwrap().trim();
            while let Some(pos) = line.find(':') {
                let name = line[..pos].trim();
                if name.is_empty() || name.contains(char::is_whitespace) {
                    return Err(Error::Parse { pos: ln + 1, msg: format!("bad label in {raw:?}") });
                }
                labels.insert(name.to_string(), lines.len());
                line = line[pos + 1..].trim();
            }
            if !line.is_empty() {
                lines.push((ln + 1, line.to_string()));
            }
        }
        let reg = |ln: usize, tok: Option<&str>| -> Result<u64> {
            tok.and_then(|t| t.parse().ok()).ok_or_else(|| Error::Parse { pos: ln, msg: "expected register number".into() })
        };
        let mut instrs = Vec::new();
        for (ln, line) in &lines {
            let mut toks = line.split_whitespace();
            let op = toks.next().unwrap().to_ascii_uppercase();
            let ins = match op.as_str() {
                "INC" => Instr::Inc(reg(*ln, toks.next())?),
                "DEC" => Instr::Dec(reg(*ln, toks.next())?),
                "JZ" => {
                    let r = reg(*ln, toks.next())?;
                    let t = toks.next().ok_or_else(|| Error::Parse { pos: *ln, msg: "expected label".into() })?;
                    let l = match t.parse::<usize>() {
                        Ok(l) => l,
                        Err(_) => *labels.get(t).ok_or_else(|| Error::Parse { pos: *ln, msg: format!("unknown label {t}") })?,
                    };
                    Instr::Jz(r, l)
                }
                "HALT" => Instr::Halt,
                _ => return Err(Error::Parse { pos: *ln, msg: format!("unknown instruction {op}") }),
            };
            if toks.next().is_some() {
                return Err(Error::Parse { pos: *ln, msg: "trailing tokens".into() });
            }
            instrs.push(ins);
        }
        Program::new(instrs).map_err(|e| Error::Parse { pos: 0, msg: e.to_string() })
    }

    /// Even index `2·#_∞(codes)`.
    pub fn index(&self) -> Result<BigUint> {
        let codes = self.instrs.iter().map(Instr::code).collect::<Result<Vec<_>>>()?;
        Ok(seq_index(&NatString(codes)) << 1u32)
    }

    /// The program at an even index; jump targets past the end are clamped
    /// to the end. Odd indices are closures.
    pub fn from_index(e: &BigUint) -> Option<Program> {
        if e.bit(0) {
            return None;
        }
        let codes = seq_unindex(&(e >> 1u32));
        let n = codes.len();
        let instrs = codes
            .0
            .iter()
            .map(|&c| match Instr::decode(c) {
                Instr::Jz(r, l) => Instr::Jz(r, l.min(n)),
                i => i,
            })
            .collect();
        Some(Program { instrs })
    }

    /// Value and halting step, if the program halts within `s` steps.
    pub fn run(&self, x: &BigUint, s: u64) -> Option<(BigUint, u64)> {
        let c = Compiled::new(self);
        let mut ex = c.start(x.clone());
        match ex.advance(&c, s) {
            Status::Halted(v, t) => Some((v, t)),
            _ => None,
        }
    }
}

impl fmt::Display for Program {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in &self.instrs {
            writeln!(f, "{i}")?;
        }
        Ok(())
    }
}

#[derive(Clone, Copy)]
enum Op {
    Inc(usize),
    Dec(usize),
    Jz(usize, usize),
    Halt,
}

/// Registers renumbered densely; register 0 stays first.
struct Compiled {
    ops: Vec<Op>,
    nregs: usize,
    watched: Vec<usize>,
}

impl Compiled {
    fn new(p: &Program) -> Self {
        let mut map: HashMap<u64, usize> = HashMap::from([(0, 0)]);
        let mut dense = |r: u64| {
            let n = map.len();
            *map.entry(r).or_insert(n)
        };
        let mut watched = Vec::new();
        let ops: Vec<Op> = p
            .instrs
            .iter()
            .map(|i| match *i {
                Instr::Inc(r) => Op::Inc(dense(r)),
                Instr::Dec(r) => Op::Dec(dense(r)),
                Instr::Jz(r, l) => {
                    let d = dense(r);
                    watched.push(d);
                    Op::Jz(d, l)
                }
                Instr::Halt => Op::Halt,
            })
            .collect();
        watched.sort();
        watched.dedup();
        Compiled { ops, nregs: map.len(), watched }
    }

    fn start(&self, x: BigUint) -> Exec {
        let mut regs = vec![BigUint::zero(); self.nregs];
        regs[0] = x;
        Exec { pc: 0, regs, steps: 0, saved: None, power: 1, lam: 0 }
    }
}

enum Status {
    Halted(BigUint, u64),
    Diverges,
    Running,
}

/// Resumable execution with Brent cycle detection on the program counter
/// and the registers that are ever tested.
struct Exec {
    pc: usize,
    regs: Vec<BigUint>,
    steps: u64,
    saved: Option<(usize, Vec<BigUint>)>,
    power: u64,
    lam: u64,
}

impl Exec {
    fn advance(&mut self, c: &Compiled, budget: u64) -> Status {
        loop {
            if self.pc >= c.ops.len() {
                return Status::Halted(self.regs[0].clone(), self.steps);
            }
            if self.steps >= budget {
                return Status::Running;
            }
            self.steps += 1;
            match c.ops[self.pc] {
                Op::Halt => return Status::Halted(self.regs[0].clone(), self.steps),
                Op::Inc(r) => {
                    self.regs[r] += 1u32;
                    self.pc += 1;
                }
                Op::Dec(r) => {
                    if !self.regs[r].is_zero() {
                        self.regs[r] -= 1u32;
                    }
                    self.pc += 1;
                }
                Op::Jz(r, l) => self.pc = if self.regs[r].is_zero() { l } else { self.pc + 1 },
            }
            if let Some((pc, w)) = &self.saved {
                if *pc == self.pc && c.watched.iter().zip(w).all(|(&r, v)| self.regs[r] == *v) {
                    return Status::Diverges;
                }
            }
            self.lam += 1;
            if self.lam == self.power {
                self.saved = Some((self.pc, c.watched.iter().map(|&r| self.regs[r].clone()).collect()));
                self.power *= 2;
                self.lam = 0;
            }
        }
    }
}

/// A host partial function: value and the step at which it converges.
pub type PartialFn = Arc<dyn Fn(&BigUint) -> Option<(BigUint, u64)> + Send + Sync>;
pub type PartialFn2 = Arc<dyn Fn(&BigUint, &BigUint) -> Option<(BigUint, u64)> + Send + Sync>;

/// A table entry of a prefix-free machine: admitted at `stage`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PfPair {
    pub input: BitString,
    pub output: BitString,
    pub stage: u64,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct PfTable {
    pub pairs: Vec<PfPair>,
}

impl PfTable {
    pub fn get(&self, tau: &BitString) -> Option<&BitString> {
        self.pairs.iter().find(|p| &p.input == tau).map(|p| &p.output)
    }
}

enum Source {
    Program(Compiled),
    Closure(PartialFn),
    Nothing,
}

struct Sweep {
    source: Source,
    stage: u64,
    live: Vec<(u64, Exec)>,
    pending: BTreeMap<u64, Vec<(u64, BigUint)>>,
    domain: HashSet<BitString>,
    prefixes: HashSet<BitString>,
    broken: bool,
    admitted: Vec<PfPair>,
}

impl Sweep {
    fn new(source: Source) -> Self {
        Sweep {
            source,
            stage: 0,
            live: Vec::new(),
            pending: BTreeMap::new(),
            domain: HashSet::new(),
            prefixes: HashSet::new(),
            broken: false,
            admitted: Vec::new(),
        }
    }

    fn clashes(&self, tau: &BitString) -> bool {
        self.prefixes.contains(tau) || (0..=tau.len()).any(|k| self.domain.contains(&tau.prefix(k)))
    }

    /// Advances to stage `s`: `dom(M_{e,t})` holds the inputs `x < t` that
    /// converge within `t` steps.
    fn advance(&mut self, s: u64) {
        while self.stage < s && !self.broken {
            let t = self.stage + 1;
            let mut fresh: Vec<(u64, BigUint)> = self.pending.remove(&t).unwrap_or_default();
            let x = t - 1;
            match &self.source {
                Source::Program(c) => {
                    let mut keep = Vec::with_capacity(self.live.len() + 1);
                    for (y, mut ex) in std::mem::take(&mut self.live) {
                        match ex.advance(c, t) {
                            Status::Halted(v, _) => fresh.push((y, v)),
                            Status::Running => keep.push((y, ex)),
                            Status::Diverges => {}
                        }
                    }
                    let mut ex = c.start(BigUint::from(x));
                    match ex.advance(c, t) {
                        Status::Halted(v, _) => fresh.push((x, v)),
                        Status::Running => keep.push((x, ex)),
                        Status::Diverges => {}
                    }
                    self.live = keep;
                }
                Source::Closure(f) => {
                    if let Some((v, cost)) = f(&BigUint::from(x)) {
                        if cost <= t {
                            fresh.push((x, v));
                        } else {
                            self.pending.entry(cost).or_default().push((x, v));
                        }
                    }
                }
                Source::Nothing => {}
            }
            self.stage = t;
            if fresh.is_empty() {
                continue;
            }
            fresh.sort_by_key(|(y, _)| *y);
            let taus: Vec<BitString> = fresh.iter().map(|(y, _)| str_decode(&BigUint::from(*y))).collect();
            let clash = taus.iter().enumerate().any(|(i, a)| self.clashes(a) || taus[..i].iter().any(|b| a.compatible(b)));
            if clash {
                self.broken = true;
                self.live.clear();
                self.pending.clear();
                break;
            }
            for (tau, (_, v)) in taus.into_iter().zip(fresh) {
                for k in 0..tau.len() {
                    self.prefixes.insert(tau.prefix(k));
                }
                self.domain.insert(tau.clone());
                self.admitted.push(PfPair { input: tau, output: str_decode(&v), stage: t });
            }
        }
        if self.broken {
            self.stage = self.stage.max(s);
        }
    }
}

/// Append-only store of closures at odd indices `2j+1`; even indices are
/// programs. Unfilled or reserved slots diverge everywhere.
#[derive(Default)]
pub struct Registry {
    closures: RwLock<Vec<Option<PartialFn>>>,
    sweeps: Mutex<HashMap<BigUint, Arc<Mutex<Sweep>>>>,
}

/// `ψ(A(x)·y + B(x)) ≃ θ(x, y)` with `A(x) = a·2^{x+1}`, `B(x) = a(2^x − 1) + b`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Parametrization {
    pub index: BigUint,
    pub a: BigUint,
    pub b: BigUint,
}

impl Parametrization {
    pub fn coeff_a(&self, x: &BigUint) -> BigUint {
        &self.a << (x.to_usize().expect("parameter too large") + 1)
    }

    pub fn coeff_b(&self, x: &BigUint) -> BigUint {
        let p = (BigUint::one() << x.to_usize().expect("parameter too large")) - 1u32;
        &self.a * p + &self.b
    }

    pub fn point(&self, x: &BigUint, y: &BigUint) -> BigUint {
        self.coeff_a(x) * y + self.coeff_b(x)
    }
}

/// Which partial function an avoidance check runs against.
#[derive(Clone, Debug)]
pub enum Psi {
    LinUniversal,
    Registered(BigUint),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Avoidance {
    Ok,
    Clash(u64),
    BoundViolation(u64),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AvoidReport {
    pub verdict: Avoidance,
    /// Cells `n` where `ψ(n)` had not converged within the budget.
    pub unresolved: u64,
}

impl Registry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn register(&self, f: PartialFn) -> BigUint {
        let mut c = self.closures.write().unwrap();
        c.push(Some(f));
        BigUint::from(2 * (c.len() as u64 - 1) + 1)
    }

    /// A closure that converges in one step wherever it is defined.
    pub fn register_partial(&self, f: impl Fn(&BigUint) -> Option<BigUint> + Send + Sync + 'static) -> BigUint {
        self.register(Arc::new(move |x| f(x).map(|v| (v, 1))))
    }

    pub fn register_total(&self, f: impl Fn(&BigUint) -> BigUint + Send + Sync + 'static) -> BigUint {
        self.register(Arc::new(move |x| Some((f(x), 1))))
    }

    /// Reserves an index that diverges until filled.
    pub fn reserve(&self) -> BigUint {
        let mut c = self.closures.write().unwrap();
        c.push(None);
        BigUint::from(2 * (c.len() as u64 - 1) + 1)
    }

    pub fn fill(&self, e: &BigUint, f: PartialFn) -> Result<()> {
        let j = self.slot(e).ok_or_else(|| Error::Domain(format!("{e} is not a closure index")))?;
        let mut c = self.closures.write().unwrap();
        match c.get_mut(j) {
            Some(slot @ None) => *slot = Some(f),
            Some(Some(_)) => return precondition(format!("index {e} already filled")),
            None => return precondition(format!("index {e} was never reserved")),
        }
        self.sweeps.lock().unwrap().remove(e);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.closures.read().unwrap().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn slot(&self, e: &BigUint) -> Option<usize> {
        if !e.bit(0) {
            return None;
        }
        (e >> 1u32).to_usize()
    }

    fn closure(&self, e: &BigUint) -> Option<PartialFn> {
        let j = self.slot(e)?;
        self.closures.read().unwrap().get(j).cloned().flatten()
    }

    /// `φ_{e,s}(x)` with the step at which it converged.
    pub fn timed_eval(&self, e: &BigUint, x: &BigUint, s: u64) -> Option<(BigUint, u64)> {
        match Program::from_index(e) {
            Some(p) => p.run(x, s),
            None => self.closure(e)?(x).filter(|(_, c)| *c <= s),
        }
    }

    /// `φ_{e,s}(x)`: absent unless program `e` halts on `x` within `s` steps.
    pub fn step_eval(&self, e: &BigUint, x: &BigUint, s: u64) -> Option<BigUint> {
        self.timed_eval(e, x, s).map(|(v, _)| v)
    }

    /// `ψ(π^(2)(e, x)) ≃ φ_e(x)`.
    pub fn lin_universal(&self, m: &BigUint, s: u64) -> Option<BigUint> {
        let (e, x) = unpair2(m);
        self.step_eval(&e, &x, s)
    }

    pub fn register2(&self, theta: PartialFn2) -> BigUint {
        self.register(Arc::new(move |m| {
            let (x, y) = unpair2(m);
            theta(&x, &y)
        }))
    }

    /// Registers `θ` through the pairing and returns its coefficients.
    pub fn parametrize(&self, theta: PartialFn2) -> Parametrization {
        let index = self.register2(theta);
        let e = index.to_usize().expect("registry index");
        let a = BigUint::one() << (e + 1);
        let b = (BigUint::one() << e) - 1u32;
        Parametrization { index, a, b }
    }

    fn sweep(&self, e: &BigUint) -> Arc<Mutex<Sweep>> {
        let mut m = self.sweeps.lock().unwrap();
        m.entry(e.clone())
            .or_insert_with(|| {
                let source = match Program::from_index(e) {
                    Some(p) => Source::Program(Compiled::new(&p)),
                    None => match self.closure(e) {
                        Some(f) => Source::Closure(f),
                        None => Source::Nothing,
                    },
                };
                Arc::new(Mutex::new(Sweep::new(source)))
            })
            .clone()
    }

    /// `M̃_e` up to stage `s`: `M_e(τ) = σ` iff `φ_e(#τ) = #σ`, with a pair
    /// admitted only if the domain is prefix-free at the stage it appears.
    pub fn prefix_free_ify(&self, e: &BigUint, s: u64) -> PfTable {
        let sw = self.sweep(e);
        let mut sw = sw.lock().unwrap();
        sw.advance(s);
        PfTable { pairs: sw.admitted.iter().filter(|p| p.stage <= s).cloned().collect() }
    }

    /// `U(0^e 1 τ) ≃ M̃_e(τ)` at stage `s`.
    pub fn universal_pf(&self, tau: &BitString, s: u64) -> Option<BitString> {
        let e = tau.bits().iter().position(|&b| b == 1)?;
        let rest = BitString::from_bits(&tau.bits()[e + 1..]);
        if str_encode(&rest) >= BigUint::from(s) {
            return None;
        }
        self.prefix_free_ify(&BigUint::from(e), s).get(&rest).cloned()
    }

    /// `K_s(σ)`: the least `|τ| ≤ s` with `U_s(τ) = σ`; `None` is infinity.
    pub fn k_bound(&self, sigma: &BitString, s: u64) -> Option<u64> {
        self.k_bound_below(sigma, s, s.saturating_add(1))
    }

    /// `K_s(σ)` if it is below `limit`, else `None`.
    pub fn k_bound_below(&self, sigma: &BitString, s: u64, limit: u64) -> Option<u64> {
        let top = limit.min(s.saturating_add(1));
        let mut best: Option<u64> = None;
        for e in 0..top.saturating_sub(1) {
            if best.is_some_and(|b| e + 1 >= b) {
                break;
            }
            let table = self.prefix_free_ify(&BigUint::from(e), s);
            for p in &table.pairs {
                let l = e + 1 + p.input.len() as u64;
                if &p.output == sigma && l < top && best.map_or(true, |b| l < b) {
                    best = Some(l);
                }
            }
        }
        best
    }

    /// All `(τ, U_s(τ))` with header `e < max_header`.
    pub fn universal_domain(&self, s: u64, max_header: u64) -> Vec<(BitString, BitString)> {
        let mut out = Vec::new();
        for e in 0..max_header {
            let mut head = BitString(vec![0; e as usize]);
            head.push(1);
            for p in self.prefix_free_ify(&BigUint::from(e), s).pairs {
                out.push((head.concat(&p.input), p.output));
            }
        }
        out
    }

    /// Checks `X ∩ ψ = ∅` and `X(n) < p(n)` for `n < N` at step budget `s`.
    /// A clash is reported only on a converged value.
    pub fn avoidance_check(&self, x: &[u64], psi: &Psi, p: &OrderFn, n: u64, s: u64) -> Result<AvoidReport> {
        if (x.len() as u64) < n {
            return Err(Error::Length { need: n as usize, have: x.len() });
        }
        let mut unresolved = 0;
        for i in 0..n {
            let xi = x[i as usize];
            let at = BigUint::from(i);
            if cmp_with_rational(p, &at, &BigRational::from_integer(xi.into()))? != std::cmp::Ordering::Greater {
                return Ok(AvoidReport { verdict: Avoidance::BoundViolation(i), unresolved });
            }
            let v = match psi {
                Psi::LinUniversal => self.lin_universal(&at, s),
                Psi::Registered(e) => self.step_eval(e, &at, s),
            };
            match v {
                Some(v) if v == BigUint::from(xi) => return Ok(AvoidReport { verdict: Avoidance::Clash(i), unresolved }),
                Some(_) => {}
                None => unresolved += 1,
            }
        }
        Ok(AvoidReport { verdict: Avoidance::Ok, unresolved })
    }
}

/// `λ(⟦σ⟧)` in `h^ℕ`.
pub fn cylinder_measure(w: &NatString, h: &BoundFamily) -> BigRational {
    BigRational::new(BigUint::one().into(), h.level_size(w.len()).into())
}

/// `R ⊆ h^s` with `⟦R⟧ = ⟦S⟧ ∖ ⟦T⟧`, in lexicographic order.
pub fn lz_set_difference(s_set: &[NatString], t_set: &[NatString], depth: usize, h: &BoundFamily) -> Result<Vec<NatString>> {
    if let Some(w) = s_set.iter().chain(t_set).find(|w| w.len() > depth) {
        return precondition(format!("{w} is longer than {depth}"));
    }
    if let Some(w) = s_set.iter().chain(t_set).find(|w| !h.admits(w)) {
        return domain(format!("{w} is not a word of h^*"));
    }
    let s: HashSet<&NatString> = s_set.iter().collect();
    let t: HashSet<&NatString> = t_set.iter().collect();
    let mut out = Vec::new();
    let mut cur = NatString::new();
    fill_difference(&mut cur, depth, h, &s, &t, false, &mut out);
    Ok(out)
}

fn fill_difference(
    cur: &mut NatString,
    depth: usize,
    h: &BoundFamily,
    s: &HashSet<&NatString>,
    t: &HashSet<&NatString>,
    inside: bool,
    out: &mut Vec<NatString>,
) {
    if t.contains(cur) {
        return;
    }
    let inside = inside || s.contains(cur);
    if cur.len() == depth {
        if inside {
            out.push(cur.clone());
        }
        return;
    }
    if !inside && !s.iter().any(|w| cur.is_prefix_of(w)) {
        return;
    }
    for i in 0..h.small(cur.len()) {
        cur.0.push(i);
        fill_difference(cur, depth, h, s, t, inside, out);
        cur.0.pop();
    }
}

/// Approximations `ν(σ, s)` given by increments: `steps[s] = (σ, n)` means
/// `ν(σ, s+1) = ν(σ, s) + n/2^{s+1}`.
#[derive(Clone, Debug)]
pub struct StagedSemimeasure {
    pub h: BoundFamily,
    pub steps: Vec<Option<(NatString, u64)>>,
}

impl StagedSemimeasure {
    pub fn new(h: BoundFamily, steps: Vec<Option<(NatString, u64)>>) -> Self {
        StagedSemimeasure { h, steps }
    }

    /// Reads increments off a rule `ν(σ, s)` for `s ≤ stages`, checking the
    /// hypotheses on every word of `h^{<stages+1}`.
    pub fn from_rule(h: BoundFamily, stages: usize, rule: impl Fn(&NatString, usize) -> Dyadic) -> Result<Self> {
        let words = h.words_upto(stages);
        for s in 0..=stages {
            for w in &words {
                if w.len() >= s && !rule(w, s).is_zero() {
                    return Err(hyp("ii", format!("nu({w}, {s}) != 0")));
                }
            }
        }
        let mut steps = Vec::new();
        for s in 0..stages {
            let mut changed = None;
            for w in &words {
                let d = &rule(w, s + 1) - &rule(w, s);
                if d.is_zero() {
                    continue;
                }
                if changed.is_some() {
                    return Err(hyp("iii", format!("more than one word changes at stage {s}")));
                }
                let n = d.shl(s as i64 + 1);
                if n.is_negative() || !n.is_integer() {
                    return Err(hyp("iv", format!("increment of nu({w}) at stage {s} is {d}")));
                }
                changed = Some((w.clone(), n.to_biguint().and_then(|v| v.to_u64()).unwrap_or(u64::MAX)));
            }
            steps.push(changed);
        }
        let nu = StagedSemimeasure { h, steps };
        nu.validate()?;
        Ok(nu)
    }

    pub fn stages(&self) -> usize {
        self.steps.len()
    }

    /// Values at every stage `0..=stages`.
    pub fn table(&self) -> Vec<BTreeMap<NatString, Dyadic>> {
        let mut out = vec![BTreeMap::new()];
        for (s, st) in self.steps.iter().enumerate() {
            let mut next = out[s].clone();
            if let Some((w, n)) = st {
                let inc = Dyadic::new((*n).into(), -(s as i64 + 1));
                let v = next.entry(w.clone()).or_insert_with(Dyadic::zero);
                *v = &*v + &inc;
            }
            out.push(next);
        }
        out
    }

    pub fn value(&self, w: &NatString, s: usize) -> Dyadic {
        let mut v = Dyadic::zero();
        for (t, st) in self.steps.iter().enumerate().take(s) {
            if let Some((u, n)) = st {
                if u == w {
                    v = &v + &Dyadic::new((*n).into(), -(t as i64 + 1));
                }
            }
        }
        v
    }

    /// Hypotheses (ii) and (v) and `ν(⟨⟩) ≤ 1` at every stage; (i), (iii)
    /// and (iv) hold by representation.
    pub fn validate(&self) -> Result<()> {
        let table = self.table();
        for (s, vals) in table.iter().enumerate() {
            for (w, v) in vals {
                if !self.h.admits(w) {
                    return Err(hyp("i", format!("{w} is not a word of h^*")));
                }
                if w.len() >= s && !v.is_zero() {
                    return Err(hyp("ii", format!("nu({w}, {s}) = {v} with |w| >= {s}")));
                }
            }
            if vals.get(&NatString::new()).is_some_and(|v| *v > Dyadic::one()) {
                return Err(hyp("v", format!("nu(<>, {s}) exceeds 1")));
            }
            let mut parents: BTreeMap<NatString, Dyadic> = BTreeMap::new();
            for (w, v) in vals {
                if !w.is_empty() {
                    let e = parents.entry(w.prefix(w.len() - 1)).or_insert_with(Dyadic::zero);
                    *e = &*e + v;
                }
            }
            for (w, sum) in parents {
                let v = vals.get(&w).cloned().unwrap_or_else(Dyadic::zero);
                if sum > v {
                    return Err(hyp("v", format!("children of {w} sum to {sum} > {v} at stage {s}")));
                }
            }
        }
        Ok(())
    }

    /// A random instance: each stage raises one word of length `≤ depth`
    /// (or none) by as much as the hypotheses allow.
    pub fn random(h: BoundFamily, depth: usize, stages: usize, rng: &mut impl Rng) -> Self {
        let mut steps = Vec::new();
        let mut vals: BTreeMap<NatString, Dyadic> = BTreeMap::new();
        for s in 0..stages {
            let words = h.words_upto(depth.min(s));
            if rng.gen_bool(0.15) {
                steps.push(None);
                continue;
            }
            let w = words[rng.gen_range(0..words.len())].clone();
            let get = |u: &NatString| vals.get(u).cloned().unwrap_or_else(Dyadic::zero);
            let slack = if w.is_empty() {
                &Dyadic::one() - &get(&w)
            } else {
                let up = w.prefix(w.len() - 1);
                let kids = (0..h.small(up.len())).fold(Dyadic::zero(), |acc, i| &acc + &get(&up.child(i)));
                &get(&up) - &kids
            };
            let room = slack.shl(s as i64 + 1).floor().to_u64().unwrap_or(0);
            let n = if room == 0 { 0 } else { rng.gen_range(0..=room.min(1 << 20)) };
            if n == 0 {
                steps.push(None);
                continue;
            }
            let v = &get(&w) + &Dyadic::new(n.into(), -(s as i64 + 1));
            vals.insert(w.clone(), v);
            steps.push(Some((w, n)));
        }
        StagedSemimeasure { h, steps }
    }
}

fn hyp(clause: &str, detail: String) -> Error {
    Error::Hypothesis { clause: clause.into(), detail }
}

/// A finite monotone machine: `(τ, σ)` pairs added at `stage`.
#[derive(Clone, Debug)]
pub struct MonotoneMachineTable {
    pub h: BoundFamily,
    pub pairs: Vec<(BitString, NatString, usize)>,
}

impl MonotoneMachineTable {
    pub fn empty(h: BoundFamily) -> Self {
        MonotoneMachineTable { h, pairs: Vec::new() }
    }

    /// Pairs present at stage `s`.
    pub fn at_stage(&self, s: usize) -> impl Iterator<Item = &(BitString, NatString, usize)> {
        self.pairs.iter().filter(move |p| p.2 <= s)
    }

    /// `D_s(σ)`.
    pub fn d_set(&self, sigma: &NatString, s: usize) -> Vec<BitString> {
        self.at_stage(s).filter(|p| &p.1 == sigma).map(|p| p.0.clone()).collect()
    }
}

/// `λ(⟦A⟧)` for a finite set of binary strings.
pub fn union_measure(strings: &[BitString]) -> Dyadic {
    let mut v: Vec<&BitString> = strings.iter().collect();
    v.sort();
    v.dedup();
    let minimal: Vec<&BitString> = v.iter().filter(|a| !v.iter().any(|b| b != *a && b.is_prefix_of(a))).copied().collect();
    minimal.iter().fold(Dyadic::zero(), |acc, s| &acc + &Dyadic::pow2(-(s.len() as i64)))
}

/// `ν_M(σ)`: measure of inputs whose output extends `σ`.
pub fn machine_semimeasure(m: &MonotoneMachineTable, sigma: &NatString) -> Dyadic {
    let ins: Vec<BitString> = m.pairs.iter().filter(|p| sigma.is_prefix_of(&p.1)).map(|p| p.0.clone()).collect();
    union_measure(&ins)
}

fn bits_of(w: &NatString) -> BitString {
    BitString(w.0.iter().map(|&b| b as u8).collect())
}

fn nat_of(b: &BitString) -> NatString {
    NatString(b.bits().iter().map(|&x| x as u64).collect())
}

/// Builds `M_0 ⊆ … ⊆ M_S` with `λ(⟦D_s(σ)⟧) = ν(σ, s)`, checking the
/// invariants of the construction after every stage.
pub fn lz_build(nu: &StagedSemimeasure, stages: usize) -> Result<MonotoneMachineTable> {
    nu.validate()?;
    if stages > nu.stages() {
        return precondition(format!("only {} stages supplied", nu.stages()));
    }
    let two = BoundFamily::constant(2);
    let mut m = MonotoneMachineTable::empty(nu.h.clone());
    let mut d: BTreeMap<NatString, Vec<BitString>> = BTreeMap::new();
    for s in 0..stages {
        if let Some((sigma, n)) = &nu.steps[s] {
            let n = *n as usize;
            let r = if sigma.is_empty() {
                let own: Vec<NatString> = d.get(sigma).map(|v| v.iter().map(nat_of).collect()).unwrap_or_default();
                lz_set_difference(&[NatString::new()], &own, s + 1, &two)?
            } else {
                let up = sigma.prefix(sigma.len() - 1);
                let parent: Vec<NatString> = d.get(&up).map(|v| v.iter().map(nat_of).collect()).unwrap_or_default();
                let kids: Vec<NatString> = (0..nu.h.small(up.len()))
                    .flat_map(|i| d.get(&up.child(i)).cloned().unwrap_or_default())
                    .map(|b| nat_of(&b))
                    .collect();
                lz_set_difference(&parent, &kids, s + 1, &two)?
            };
            if r.len() < n {
                return Err(hyp("v", format!("stage {s}: only {} free strings for {n}", r.len())));
            }
            for w in r.into_iter().take(n) {
                let tau = bits_of(&w);
                d.entry(sigma.clone()).or_default().push(tau.clone());
                m.pairs.push((tau, sigma.clone(), s + 1));
            }
        }
        check_lz_invariants(&m, nu, s + 1)?;
    }
    Ok(m)
}

fn check_lz_invariants(m: &MonotoneMachineTable, nu: &StagedSemimeasure, s: usize) -> Result<()> {
    let bad = |c: &str, d: String| Err(hyp(&format!("invariant {c}"), d));
    let pairs: Vec<_> = m.at_stage(s).collect();
    for a in &pairs {
        for b in &pairs {
            if a.0.is_prefix_of(&b.0) && !a.1.is_prefix_of(&b.1) {
                return bad("I", format!("{} -> {} but {} -> {}", a.0, a.1, b.0, b.1));
            }
        }
    }
    let mut outs: Vec<&NatString> = pairs.iter().map(|p| &p.1).collect();
    outs.sort();
    outs.dedup();
    let table = nu.table();
    for sigma in &outs {
        let ds = m.d_set(sigma, s);
        if ds.iter().enumerate().any(|(i, a)| ds[i + 1..].iter().any(|b| a.compatible(b))) {
            return bad("II", format!("D_{s}({sigma}) is not prefix-free"));
        }
        if ds.iter().any(|t| t.len() > s) {
            return bad("IV", format!("D_{s}({sigma}) has a string longer than {s}"));
        }
        for tau in &outs {
            if sigma.is_prefix_of(tau) {
                let inner = m.d_set(tau, s);
                if !inner.iter().all(|t| ds.iter().any(|u| u.is_prefix_of(t))) {
                    return bad("V", format!("[[D_{s}({tau})]] not inside [[D_{s}({sigma})]]"));
                }
            }
        }
    }
    for (sigma, v) in &table[s] {
        if union_measure(&m.d_set(sigma, s)) != *v {
            return bad("III", format!("measure of D_{s}({sigma}) differs from nu"));
        }
    }
    for sigma in &outs {
        if !table[s].contains_key(*sigma) {
            return bad("III", format!("D_{s}({sigma}) is nonempty but nu vanishes"));
        }
    }
    Ok(())
}
