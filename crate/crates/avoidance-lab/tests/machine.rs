use std::sync::Arc;

use avoidance_lab::encodings::{str_decode, str_encode, BitString, BoundFamily, NatString};
use avoidance_lab::machine::*;
use avoidance_lab::numerics::Dyadic;
use avoidance_lab::orderfn::OrderFn;
use avoidance_lab::Error;
use num_bigint::BigUint;
use num_rational::BigRational;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn big(n: u64) -> BigUint {
    BigUint::from(n)
}

fn bs(s: &str) -> BitString {
    BitString::parse(s).unwrap()
}

fn ns(v: &[u64]) -> NatString {
    NatString(v.to_vec())
}

/// Plain interpreter with no cycle detection.
fn naive(p: &Program, x: u64, s: u64) -> Option<u64> {
    let mut regs: std::collections::HashMap<u64, u64> = [(0, x)].into();
    let mut pc = 0;
    let mut steps = 0;
    loop {
        if pc >= p.instrs().len() {
            return Some(regs[&0]);
        }
        if steps == s {
            return None;
        }
        steps += 1;
        match p.instrs()[pc] {
            Instr::Halt => return Some(regs[&0]),
            Instr::Inc(r) => {
                *regs.entry(r).or_default() += 1;
                pc += 1;
            }
            Instr::Dec(r) => {
                let v = regs.entry(r).or_default();
                *v = v.saturating_sub(1);
                pc += 1;
            }
            Instr::Jz(r, l) => pc = if regs.get(&r).copied().unwrap_or(0) == 0 { l } else { pc + 1 },
        }
    }
}

fn prog(text: &str) -> Program {
    Program::parse(text).unwrap()
}

#[test]
fn step_eval_examples() {
    let reg = Registry::new();
    let id = prog("HALT").index().unwrap();
    assert_eq!(reg.step_eval(&id, &big(7), 100), Some(big(7)));
    let looping = prog("top: JZ 1 top").index().unwrap();
    for s in [0, 1, 10, 100, 10_000] {
        assert_eq!(reg.step_eval(&looping, &big(3), s), None);
    }
    let succ = prog("INC 0\nHALT").index().unwrap();
    assert_eq!(reg.timed_eval(&succ, &big(4), 100), Some((big(5), 2)));
    assert_eq!(reg.step_eval(&succ, &big(4), 1), None);
}

#[test]
fn program_text_and_index() {
    let p = prog("# double\nloop: JZ 0 done\nDEC 0\nINC 1\nINC 1\nJZ 2 loop\ndone: JZ 1 end\nDEC 1\nINC 0\nJZ 2 done\nend:\n");
    assert_eq!(p.instrs().len(), 9);
    assert_eq!(p.run(&big(6), 1000).map(|r| r.0), Some(big(12)));
    assert_eq!(Program::parse(&p.to_string()).unwrap(), p);
    let e = p.index().unwrap();
    assert!(!e.bit(0));
    assert_eq!(Program::from_index(&e).unwrap(), p);
    assert!(matches!(Program::parse("JZ 0 nowhere"), Err(Error::Parse { .. })));
    assert!(matches!(Program::parse("FOO 1"), Err(Error::Parse { .. })));
    assert!(Program::new(vec![Instr::Jz(0, 5)]).is_err());
}

#[test]
fn lin_universal_examples() {
    let reg = Registry::new();
    let id = prog("HALT").index().unwrap();
    let m = avoidance_lab::encodings::pair2(&id, &big(3));
    assert_eq!(reg.lin_universal(&m, 100), Some(big(3)));
    for x in 0..=100u64 {
        assert_eq!(reg.lin_universal(&big(2 * x), 10), Some(big(x)));
    }
    let looping = prog("a: JZ 1 a").index().unwrap();
    assert_eq!(reg.lin_universal(&avoidance_lab::encodings::pair2(&looping, &big(0)), 1000), None);
    let sq = reg.register_total(|x| x * x);
    let e = sq.to_u64().unwrap();
    for x in 0..50u64 {
        let m = (big(x) << (e + 1)) + (big(1) << e) - 1u32;
        assert_eq!(reg.lin_universal(&m, 5), Some(big(x * x)));
    }
}

use num_traits::ToPrimitive;

#[test]
fn parametrize_examples() {
    let reg = Registry::new();
    let first = reg.parametrize(Arc::new(|x: &BigUint, _y: &BigUint| Some((x.clone(), 1))));
    let a3 = first.coeff_a(&big(3));
    assert_eq!(reg.lin_universal(&(a3 * 0u32 + first.coeff_b(&big(3))), 10), Some(big(3)));
    let second = reg.parametrize(Arc::new(|_x: &BigUint, y: &BigUint| Some((y.clone(), 1))));
    for x in 0..=20u64 {
        for y in 0..=20u64 {
            assert_eq!(reg.lin_universal(&second.point(&big(x), &big(y)), 10), Some(big(y)));
            assert_eq!(reg.lin_universal(&first.point(&big(x), &big(y)), 10), Some(big(x)));
        }
    }
    for x in 0..=100u64 {
        assert!(second.coeff_a(&big(x)) > big(0));
    }
}

#[test]
fn prefix_free_ify_examples() {
    let reg = Registry::new();
    let on_bits = reg.register_partial(|x| (*x == big(1) || *x == big(2)).then(|| x.clone()));
    let t = reg.prefix_free_ify(&on_bits, 100);
    let pairs: Vec<(String, String)> = t.pairs.iter().map(|p| (p.input.to_string(), p.output.to_string())).collect();
    assert_eq!(pairs, [("0".into(), "0".into()), ("1".into(), "1".into())]);

    let zero = str_encode(&bs("0"));
    let zz = str_encode(&bs("00"));
    let (z1, z2) = (zero.clone(), zz.clone());
    let e = reg.register(Arc::new(move |x| {
        if *x == z1 {
            Some((big(5), 10))
        } else if *x == z2 {
            Some((big(6), 1))
        } else {
            None
        }
    }));
    let t = reg.prefix_free_ify(&e, 100);
    assert_eq!(t.pairs.len(), 1);
    assert_eq!(t.pairs[0].input, bs("00"));
    assert_eq!(t.pairs[0].stage, 4);

    let empty = reg.register_partial(|_| None);
    assert!(reg.prefix_free_ify(&empty, 1000).pairs.is_empty());
    let unused = reg.reserve();
    assert!(reg.prefix_free_ify(&unused, 50).pairs.is_empty());

    let id = prog("HALT").index().unwrap();
    let t = reg.prefix_free_ify(&id, 100);
    assert_eq!(t.pairs.len(), 1);
    assert_eq!(t.pairs[0].input, BitString::new());
}

fn literal(reg: &Registry, sigma: &BitString) -> BigUint {
    let code = str_encode(sigma);
    reg.register_partial(move |x| (*x == code).then(|| x.clone()))
}

#[test]
fn universal_pf_examples() {
    let reg = Registry::new();
    assert_eq!(reg.universal_pf(&bs("0000"), 100), None);
    let _ = reg.register_partial(|_| None);
    let sigma = bs("1011");
    let e = literal(&reg, &sigma).to_usize().unwrap();
    let mut tau = BitString(vec![0; e]);
    tau.push(1);
    let tau = tau.concat(&sigma);
    assert_eq!(reg.universal_pf(&tau, 100), Some(sigma.clone()));
    assert_eq!(reg.universal_pf(&tau, 10), None);
    let k = reg.k_bound(&sigma, 100).unwrap();
    assert!(k <= (e + 1 + sigma.len()) as u64);
    assert_eq!(reg.k_bound(&bs("0110100110"), 40), None);
}

#[test]
fn universal_domain_prefix_free_and_kraft() {
    let reg = Registry::new();
    for w in ["", "1", "0110", "111000"] {
        literal(&reg, &bs(w));
    }
    reg.register_partial(|x| (x.bits() % 2 == 1).then(|| x * 3u32));
    for s in [10, 100, 1000, 4000] {
        let dom = reg.universal_domain(s, 14);
        for (i, (a, _)) in dom.iter().enumerate() {
            for (b, _) in &dom[i + 1..] {
                assert!(!a.compatible(b), "{a} ~ {b} at stage {s}");
            }
        }
        let kraft = dom.iter().fold(Dyadic::zero(), |acc, (t, _)| &acc + &Dyadic::pow2(-(t.len() as i64)));
        assert!(kraft <= Dyadic::one());
        for (t, v) in &dom {
            assert_eq!(reg.universal_pf(t, s).as_ref(), Some(v));
        }
    }
}

#[test]
fn k_bound_monotone_and_kraft() {
    let reg = Registry::new();
    for w in ["0", "01", "0110"] {
        literal(&reg, &bs(w));
    }
    let sample: Vec<BitString> = (0..40u64).map(|n| str_decode(&big(n))).collect();
    let mut prev: Vec<Option<u64>> = vec![None; sample.len()];
    for s in [4u64, 16, 64, 256, 1024] {
        let ks: Vec<Option<u64>> = sample.iter().map(|w| reg.k_bound_below(w, s, 16)).collect();
        for (a, b) in prev.iter().zip(&ks) {
            if let Some(a) = a {
                assert!(b.is_some_and(|b| b <= *a));
            }
        }
        let kraft = ks.iter().flatten().fold(Dyadic::zero(), |acc, &k| &acc + &Dyadic::pow2(-(k as i64)));
        assert!(kraft <= Dyadic::one());
        prev = ks;
    }
}

#[test]
fn lz_set_difference_examples() {
    let two = BoundFamily::constant(2);
    let r = lz_set_difference(&[ns(&[])], &[ns(&[0])], 1, &two).unwrap();
    assert_eq!(r, vec![ns(&[1])]);
    let r = lz_set_difference(&[ns(&[0]), ns(&[1, 1])], &[], 2, &two).unwrap();
    assert_eq!(r, vec![ns(&[0, 0]), ns(&[0, 1]), ns(&[1, 1])]);
    assert!(lz_set_difference(&[ns(&[0, 0, 0])], &[], 2, &two).is_err());
}

fn random_words(rng: &mut ChaCha8Rng, h: &BoundFamily, depth: usize) -> Vec<NatString> {
    let n = rng.gen_range(0..4);
    (0..n)
        .map(|_| {
            let len = rng.gen_range(0..=depth);
            NatString((0..len).map(|i| rng.gen_range(0..h.small(i))).collect())
        })
        .collect()
}

#[test]
fn lz_set_difference_measure_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..100 {
        let h = BoundFamily::constant(rng.gen_range(2..=3));
        let depth = rng.gen_range(0..=4);
        let s = random_words(&mut rng, &h, depth);
        let t = random_words(&mut rng, &h, depth);
        let r = lz_set_difference(&s, &t, depth, &h).unwrap();
        let leaf = cylinder_measure(&NatString::new(), &h) / BigRational::from_integer(h.level_size(depth).into());
        let under = |set: &[NatString], w: &NatString| set.iter().any(|u| u.is_prefix_of(w));
        let leaves = h.words(depth);
        let in_s = leaves.iter().filter(|w| under(&s, w)).count();
        let in_both = leaves.iter().filter(|w| under(&s, w) && under(&t, w)).count();
        let want = &leaf * BigRational::from_integer((in_s - in_both).into());
        assert_eq!(&leaf * BigRational::from_integer(r.len().into()), want);
        assert!(r.iter().all(|w| w.len() == depth));
    }
}

fn staged(h: u64, steps: &[Option<(&[u64], u64)>]) -> StagedSemimeasure {
    StagedSemimeasure::new(BoundFamily::constant(h), steps.iter().map(|s| s.map(|(w, n)| (ns(w), n))).collect())
}

#[test]
fn lz_build_examples() {
    let nu = staged(2, &[Some((&[], 2)), None, None]);
    let m = lz_build(&nu, 3).unwrap();
    for s in 1..=3 {
        assert_eq!(union_measure(&m.d_set(&ns(&[]), s)), Dyadic::one());
    }

    let nu = staged(2, &[Some((&[], 1)), Some((&[0], 1))]);
    let m = lz_build(&nu, 2).unwrap();
    assert_eq!(m.d_set(&ns(&[]), 2), vec![bs("0")]);
    assert_eq!(m.d_set(&ns(&[0]), 2), vec![bs("00")]);
    assert_eq!(machine_semimeasure(&m, &ns(&[0])), Dyadic::pow2(-2));

    let nu = staged(2, &[Some((&[], 2)), Some((&[0], 2)), Some((&[0, 1], 3))]);
    let m = lz_build(&nu, 3).unwrap();
    let outer = m.d_set(&ns(&[0]), 3);
    let inner = m.d_set(&ns(&[0, 1]), 3);
    assert!(!inner.is_empty());
    assert!(inner.iter().all(|t| outer.iter().any(|u| u.is_prefix_of(t))));
    assert_eq!(union_measure(&inner), Dyadic::new(3.into(), -3));
}

#[test]
fn lz_hypotheses_are_validated() {
    let nu = staged(2, &[Some((&[0], 1))]);
    assert!(matches!(lz_build(&nu, 1), Err(Error::Hypothesis { clause, .. }) if clause == "ii"));
    let nu = staged(2, &[Some((&[], 1)), Some((&[0], 2)), Some((&[1], 2))]);
    assert!(matches!(lz_build(&nu, 3), Err(Error::Hypothesis { clause, .. }) if clause == "v"));
    let nu = staged(2, &[Some((&[], 3))]);
    assert!(matches!(lz_build(&nu, 1), Err(Error::Hypothesis { clause, .. }) if clause == "v"));
    let r = StagedSemimeasure::from_rule(BoundFamily::constant(2), 3, |w, s| {
        if s >= 2 && w.len() <= 1 {
            Dyadic::pow2(-2)
        } else {
            Dyadic::zero()
        }
    });
    assert!(matches!(r, Err(Error::Hypothesis { clause, .. }) if clause == "iii"));
}

#[test]
fn lz_from_rule() {
    let nu = StagedSemimeasure::from_rule(BoundFamily::constant(3), 3, |w, s| match (w.0.as_slice(), s) {
        ([], s) if s >= 1 => Dyadic::one(),
        ([2], s) if s >= 2 => Dyadic::pow2(-2),
        _ => Dyadic::zero(),
    })
    .unwrap();
    let m = lz_build(&nu, 3).unwrap();
    assert_eq!(machine_semimeasure(&m, &ns(&[2])), Dyadic::pow2(-2));
    assert_eq!(machine_semimeasure(&m, &ns(&[])), Dyadic::one());
    assert_eq!(machine_semimeasure(&MonotoneMachineTable::empty(BoundFamily::constant(3)), &ns(&[1])), Dyadic::zero());
}

#[test]
fn lz_random_staged_semimeasures() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..20 {
        let h = BoundFamily::constant(rng.gen_range(2..=3));
        let stages = rng.gen_range(1..=8);
        let nu = StagedSemimeasure::random(h.clone(), 3, stages, &mut rng);
        nu.validate().unwrap();
        let m = lz_build(&nu, stages).unwrap();
        let table = nu.table();
        for s in 0..=stages {
            for w in h.words_upto(3) {
                let want = table[s].get(&w).cloned().unwrap_or_else(Dyadic::zero);
                assert_eq!(union_measure(&m.d_set(&w, s)), want);
            }
        }
        for w in h.words_upto(3) {
            assert_eq!(machine_semimeasure(&m, &w), nu.value(&w, stages));
        }
        assert!(machine_semimeasure(&m, &NatString::new()) <= Dyadic::one());
    }
}

#[test]
fn avoidance_check_examples() {
    let reg = Registry::new();
    let p = OrderFn::int(100);
    let never = reg.register_partial(|_| None);
    let r = reg.avoidance_check(&[0; 10], &Psi::Registered(never), &p, 10, 100).unwrap();
    assert_eq!(r, AvoidReport { verdict: Avoidance::Ok, unresolved: 10 });

    let sq = reg.register_partial(|x| (x.bits() % 2 == 0).then(|| x * x % 50u32));
    let vals: Vec<u64> = (0..20u64).map(|n| reg.step_eval(&sq, &big(n), 5).map_or(0, |v| v.to_u64().unwrap() + 1)).collect();
    let r = reg.avoidance_check(&vals, &Psi::Registered(sq.clone()), &p, 20, 5).unwrap();
    assert_eq!(r.verdict, Avoidance::Ok);
    let mut clash = vals.clone();
    clash[3] = 9;
    let r = reg.avoidance_check(&clash, &Psi::Registered(sq.clone()), &p, 20, 5).unwrap();
    assert_eq!(r.verdict, Avoidance::Clash(3));
    let r = reg.avoidance_check(&[0, 1, 2, 7], &Psi::LinUniversal, &OrderFn::int(5), 4, 10).unwrap();
    assert_eq!(r.verdict, Avoidance::Clash(0));
    let r = reg.avoidance_check(&[1, 1, 2, 7], &Psi::LinUniversal, &OrderFn::int(5), 4, 10).unwrap();
    assert_eq!(r.verdict, Avoidance::BoundViolation(3));
    assert!(matches!(reg.avoidance_check(&[1], &Psi::LinUniversal, &p, 4, 10), Err(Error::Length { .. })));
}

#[test]
fn reserved_index_fills_once() {
    let reg = Registry::new();
    let e = reg.reserve();
    assert_eq!(reg.step_eval(&e, &big(1), 10), None);
    reg.fill(&e, Arc::new(|x| Some((x + 1u32, 1)))).unwrap();
    assert_eq!(reg.step_eval(&e, &big(1), 10), Some(big(2)));
    assert!(reg.fill(&e, Arc::new(|_| None)).is_err());
    assert!(reg.fill(&big(4), Arc::new(|_| None)).is_err());
}

#[test]
fn step_monotonicity_fuzz() {
    let reg = Registry::new();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..1000 {
        let e = BigUint::from(rng.gen_range(0u64..1 << 24)) << 1u32;
        let p = Program::from_index(&e).unwrap();
        let x = rng.gen_range(0..20u64);
        let s = rng.gen_range(0..300u64);
        let t = s + rng.gen_range(0..300u64);
        let a = reg.step_eval(&e, &big(x), s);
        let b = reg.step_eval(&e, &big(x), t);
        assert_eq!(a.as_ref().map(|v| v.to_u64().unwrap()), naive(&p, x, s));
        assert_eq!(b.as_ref().map(|v| v.to_u64().unwrap()), naive(&p, x, t));
        if let Some(v) = a {
            assert_eq!(b, Some(v));
        }
    }
}

proptest! {
    #[test]
    fn program_index_round_trip(ops in proptest::collection::vec((0u8..4, 0u64..5, 0usize..8), 0..8)) {
        let n = ops.len();
        let instrs: Vec<Instr> = ops.iter().map(|&(k, r, l)| match k {
            0 => Instr::Inc(r),
            1 => Instr::Dec(r),
            2 => Instr::Jz(r, l.min(n)),
            _ => Instr::Halt,
        }).collect();
        let p = Program::new(instrs).unwrap();
        prop_assert_eq!(Program::from_index(&p.index().unwrap()).unwrap(), p.clone());
        prop_assert_eq!(Program::parse(&p.to_string()).unwrap(), p);
    }

    #[test]
    fn cycle_detection_agrees_with_naive(code in 0u64..1 << 30, x in 0u64..30, s in 0u64..2000) {
        let e = BigUint::from(code) << 1u32;
        let p = Program::from_index(&e).unwrap();
        prop_assert_eq!(p.run(&big(x), s).map(|r| r.0.to_u64().unwrap()), naive(&p, x, s));
    }
}
