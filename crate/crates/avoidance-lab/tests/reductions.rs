use std::collections::BTreeMap;
use std::sync::Arc;

use avoidance_lab::encodings::{str_decode, BitString, BoundFamily, BoundedWord, NatString};
use avoidance_lab::machine::Registry;
use avoidance_lab::orderfn::{parse, OrderFn};
use avoidance_lab::reductions::*;
use avoidance_lab::Error;
use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive};
use proptest::prelude::*;

fn big(n: u64) -> BigUint {
    BigUint::from(n)
}

fn q(a: i64, b: i64) -> BigRational {
    BigRational::new(a.into(), b.into())
}

fn ns(v: &[u64]) -> NatString {
    NatString(v.to_vec())
}

fn bs(s: &str) -> BitString {
    BitString::parse(s).unwrap()
}

fn f(src: &str) -> OrderFn {
    parse(src).unwrap()
}

fn contains_f64(iv: &avoidance_lab::numerics::DyadInterval, x: f64, tol: f64) -> bool {
    iv.lo.to_f64_lossy() - tol <= x && x <= iv.hi.to_f64_lossy() + tol
}

#[test]
fn inverse_matches_scan() {
    let cases = [("n", "affine 2 0 n"), ("pow 2 n", "n"), ("exp2", "affine 3 1 n"), ("affine 3 0 n", "pow 2 n")];
    for (fs, hs) in cases {
        let (fa, ha) = (f(fs), f(hs));
        for n in 0..40u64 {
            let want = (0u64..).find(|&m| fa.exact_at(&big(m)).unwrap().unwrap() >= ha.exact_at(&big(n)).unwrap().unwrap()).unwrap();
            assert_eq!(inverse_at(&fa, &ha, n).unwrap(), want, "{fs} against {hs} at {n}");
        }
    }
}

#[test]
fn complex_to_lua_reads_prefixes() {
    let x = bs("1101001110010111");
    let y = complex_to_lua(&x, &f("n"), &f("n"), 12).unwrap();
    for (n, v) in y.iter().enumerate() {
        assert_eq!(str_decode(v), x.prefix(n));
        assert!(*v < BigUint::one() << (n + 1));
    }
    let y = complex_to_lua(&x, &f("affine 2 0 n"), &f("n"), 12).unwrap();
    assert_eq!(str_decode(&y[5]), x.prefix(3));
    assert!(matches!(complex_to_lua(&x, &f("n"), &f("affine 2 0 n"), 12), Err(Error::Length { need: 22, have: 16 })));
}

#[test]
fn pack_offsets_triangular() {
    let q = pack_offsets(&f("exp2"), 20).unwrap();
    for (n, v) in q.iter().enumerate() {
        assert_eq!(*v as usize, n * n.saturating_sub(1) / 2);
    }
    let w = block_widths(&f("affine 1 1 n"), 9).unwrap();
    assert_eq!(w, vec![0, 1, 1, 2, 2, 2, 2, 3, 3]);
}

#[test]
fn lua_to_complex_rejects_wide_values() {
    let x = vec![big(0), big(1), big(4)];
    assert!(matches!(lua_to_complex(&x, &f("exp2"), 3), Err(Error::Domain(_))));
    let y = lua_to_complex(&[big(0), big(1), big(3)], &f("exp2"), 3).unwrap();
    assert_eq!(y, bs("111"));
    let y = lua_to_complex(&[big(0), big(1), big(2)], &f("exp2"), 3).unwrap();
    assert_eq!(y, bs("101"));
}

proptest! {
    #[test]
    fn lua_pack_round_trip(seed in proptest::collection::vec(any::<u64>(), 12)) {
        let p = f("exp2");
        let widths = block_widths(&p, 12).unwrap();
        let x: Vec<BigUint> = seed.iter().zip(&widths).map(|(s, &w)| big(if w == 0 { 0 } else { s & ((1u64 << w) - 1) })).collect();
        let y = lua_to_complex(&x, &p, 12).unwrap();
        prop_assert_eq!(y.len() as u64, *pack_offsets(&p, 12).unwrap().last().unwrap());
        prop_assert_eq!(lua_unpack(&y, &p, 12).unwrap(), x);
    }
}

fn ceil_sqrt_f64(m: u32) -> f64 {
    let p = 2f64.powi(m as i32);
    p.sqrt().ceil() / p
}

#[test]
fn rumyantsev_start_and_stages() {
    let a = Coefficients::ceil_sqrt();
    let float_tail = |m: u32| (m..200).map(ceil_sqrt_f64).sum::<f64>();
    let m0 = (0..).find(|&m| float_tail(m) <= 1.0).unwrap();
    assert_eq!(a.start().unwrap(), m0);
    assert_eq!(m0, 4);
    let plan = rumyantsev_plan(&a, 3).unwrap();
    assert_eq!(plan.stages[0], Stage { exp: 4, offsets: (0..4).collect() });
    assert_eq!(plan.stages[1], Stage { exp: 5, offsets: (4..10).collect() });
    let third: Vec<u64> = (10..16).chain([20, 21]).collect();
    assert_eq!(plan.stages[2], Stage { exp: 6, offsets: third });
    assert_eq!(plan.coverage(2), q(7, 16));
    assert_eq!(plan.coverage(3), q(9, 16));
}

#[test]
fn rumyantsev_stages_disjoint_to_4096() {
    let plan = rumyantsev_plan(&Coefficients::ceil_sqrt(), 8).unwrap();
    let n = 1u64 << 12;
    let mut assigned = 0u64;
    for i in 0..n {
        let claims = plan.stages.iter().filter(|s| s.offsets.contains(&(i % (1u64 << s.exp)))).count();
        assert!(claims <= 1, "cell {i} claimed {claims} times");
        assigned += claims as u64;
    }
    let want = plan.coverage(8) * BigRational::from_integer(n.into());
    assert_eq!(BigRational::from_integer(assigned.into()), want);
    assert!(plan.coverage(8) <= BigRational::one());
}

#[test]
fn rumyantsev_adjusted_is_larger() {
    let a = Coefficients::ceil_sqrt();
    let b = a.adjusted();
    for m in 0..30 {
        assert!(b.at(m) >= a.at(m) * BigRational::from_integer(2.into()));
    }
    assert!(b.start().unwrap() >= a.start().unwrap());
    let (lo, hi) = b.tail(b.start().unwrap() as u64);
    assert!(lo <= hi && hi <= BigRational::one());
}

#[test]
fn rumyantsev_recovers_prefix_from_any_window() {
    let plan = rumyantsev_plan(&Coefficients::ceil_sqrt(), 4).unwrap();
    let x = bs("1011001110001011");
    let psi = rumyantsev_apply(&plan, &x, 600, Some(0)).unwrap();
    assert!(matches!(rumyantsev_apply(&plan, &x, 600, None), Err(Error::Precondition(_))));
    for st in &plan.stages {
        let width = 1u64 << st.exp;
        for k in [0u64, 1, 7, 33, 100, 255, 600 - width] {
            let seg = BitString(psi.bits()[k as usize..(k + width) as usize].to_vec());
            let got = rumyantsev_recover(&plan, &seg, k % width, st.exp).unwrap();
            assert_eq!(got, x.prefix(st.offsets.len()), "stage 2^{} at {k}", st.exp);
        }
    }
}

#[test]
fn pi_h_examples() {
    let two = BoundFamily::constant(2);
    let w = BoundedWord::new(ns(&[1]), two.clone()).unwrap();
    assert_eq!(pi_h_interval(&w), (q(1, 2), q(1, 1)));
    let three = BoundFamily::constant(3);
    let w = BoundedWord::new(ns(&[2]), three.clone()).unwrap();
    assert_eq!(pi_h_interval(&w), (q(2, 3), q(1, 1)));
    let w = BoundedWord::new(ns(&[1, 0, 2]), three).unwrap();
    assert_eq!(pi_h_interval(&w), (q(11, 27), q(12, 27)));
    let mixed = BoundFamily::table(&[2, 3], BoundFamily::constant(4));
    let w = BoundedWord::new(ns(&[1, 2, 3]), mixed).unwrap();
    assert_eq!(pi_h_interval(&w), (q(23, 24), q(1, 1)));
}

proptest! {
    #[test]
    fn pi_h_children_tile_parent(digits in proptest::collection::vec(0u64..5, 0..5), h in 2u64..6) {
        let fam = BoundFamily::table(&[h, 3, 5], BoundFamily::constant(2));
        let word: Vec<u64> = digits.iter().enumerate().map(|(i, d)| d % fam.small(i)).collect();
        let parent = BoundedWord::new(NatString(word.clone()), fam.clone()).unwrap();
        let (lo, hi) = pi_h_interval(&parent);
        let mut at = lo.clone();
        for c in 0..fam.small(word.len()) {
            let child = BoundedWord::new(parent.word.child(c), fam.clone()).unwrap();
            let (a, b) = pi_h_interval(&child);
            prop_assert_eq!(&a, &at);
            at = b;
        }
        prop_assert_eq!(at, hi);
        let j = (lo * BigRational::from_integer(fam.level_size(word.len()).into())).to_integer().to_biguint().unwrap();
        prop_assert_eq!(pi_h_cell(&fam, word.len(), &j), NatString(word));
    }

    #[test]
    fn bin_unbin_round_trip(bits in proptest::collection::vec(0u8..2, 0..24)) {
        let b = BitString(bits);
        prop_assert_eq!(bin(&unbin(&b), b.len()).unwrap(), b);
    }

    #[test]
    fn cylinders_cover_interval(n in 0usize..12, k in 0u64..4096, frac in 0u64..8) {
        let scale = 1u64 << n;
        let k = k % scale;
        let lo = q(k as i64, scale as i64) + q(frac as i64, 8 * scale as i64);
        let hi = &lo + q(1, scale as i64);
        prop_assume!(hi <= BigRational::one());
        let (s, t) = interval_to_cylinders(&lo, &hi).unwrap();
        prop_assert_eq!(s.len(), n);
        prop_assert!(unbin(&s) <= lo);
        prop_assert!(unbin(&t) + q(1, scale as i64) >= hi);
        prop_assert!(unbin(&t) - unbin(&s) <= q(1, scale as i64));
    }
}

#[test]
fn interval_to_cylinders_examples() {
    assert_eq!(interval_to_cylinders(&q(1, 4), &q(1, 2)).unwrap(), (bs("01"), bs("01")));
    assert_eq!(interval_to_cylinders(&q(3, 8), &q(5, 8)).unwrap(), (bs("01"), bs("10")));
    assert!(matches!(interval_to_cylinders(&q(0, 1), &q(1, 3)), Err(Error::Domain(_))));
}

#[test]
fn pullback_third_interval() {
    let two = BoundFamily::constant(2);
    let p = interval_pullback(&q(1, 3), &q(2, 3), &two, &f("n"), &f("n"), 8, 40).unwrap();
    assert_eq!(p.level, 2);
    assert_eq!(p.k, big(1));
    assert_eq!(p.words, vec![ns(&[0, 1]), ns(&[1, 0])]);
    assert!(p.weight.contains_rational(&q(1, 2)));
    assert!(p.holds);
    let three = BoundFamily::constant(3);
    let p = interval_pullback(&q(1, 4), &q(1, 2), &three, &f("n"), &f("n"), 8, 40).unwrap();
    assert_eq!(p.level, 2);
    assert_eq!(p.words, vec![ns(&[0, 2]), ns(&[1, 0]), ns(&[1, 1])]);
}

fn sqrt_log() -> OrderFn {
    f("mul (sqrt n) (log2 n)")
}

#[test]
fn star_threshold_for_linear_exponent() {
    let eps = q(1, 10);
    let t = star_threshold(&sqrt_log(), &f("n"), &eps, 80).unwrap().unwrap();
    let oracle = (1..=80u64).find(|&n| (n..=80).all(|m| 0.9 - ((m - 1) as f64 / m as f64).powi(2) < 0.0)).unwrap();
    assert_eq!(t, oracle);
    assert_eq!(t, 20);
    let cf = star_log_closed_form(&sqrt_log(), &f("n"), &eps, 7).unwrap();
    let want = (0.9 - (6.0f64 / 7.0).powi(2)) * 7.0 * 2.0 * 7f64.log2();
    assert!(contains_f64(&cf.eval(40).unwrap(), want, 1e-9));
}

#[test]
fn star_condition_matches_closed_form() {
    let h = BoundFamily::symbolic(f("exp2 (affine 2 1 n)"));
    let j = sqrt_log();
    let ff = f("sub n (mul (sqrt n) (log2 n))");
    let g = f("sub n (affine 9/5 0 (log2 n))");
    let eps = q(1, 10);
    let report = star_condition(&g, &ff, &h, 40, 30).unwrap();
    for (i, l) in report.logs.iter().enumerate() {
        let n = i as u64 + 1;
        let cf = star_log_closed_form(&j, &f("n"), &eps, n).unwrap().eval(40).unwrap();
        assert!(l.intersect(&cf).is_some(), "n = {n}: {l} vs {cf}");
    }
    let wider = star_condition(&g, &ff, &h, 60, 30).unwrap();
    assert!(wider.sup.intersect(&report.sup).is_some());
    assert!(report.sup.hi.to_f64_lossy() < 1e6);
}

#[test]
fn gm_algebra_linear_exponent() {
    let eps = q(1, 10);
    let alg = gm_algebra(&sqrt_log(), &f("n"), &eps, 30).unwrap();
    for r in &alg.rows {
        let n = r.n;
        assert_eq!(r.h_value(), BigUint::one() << (2 * n + 1));
        assert_eq!(r.big_h.as_rational().unwrap(), q((n * n) as i64, 1));
        let nl = |m: u64| if m == 0 { 0.0 } else { 1.8 * m as f64 * (m as f64).log2() };
        let want = (nl(n + 1) - nl(n)).exp2();
        let ell = r.ell(30).unwrap();
        assert!(contains_f64(&ell, want, want * 1e-9), "l({n})");
        let bound = 2.0 * 0.9 * (1.0 / std::f64::consts::LN_2 + ((n + 1) as f64).log2());
        assert!(ell.lo.to_f64_lossy() >= 1.0 && ell.hi.to_f64_lossy() <= bound.exp2() * (1.0 + 1e-9));
    }
    assert_eq!(alg.regular_from(), Some(2));
    assert!(!alg.rows[1].regular);
}

#[test]
fn gm_algebra_rejects_fractional_h() {
    let r = gm_algebra(&f("log2 n"), &f("affine 1/2 0 n"), &q(1, 10), 4);
    assert!(matches!(r, Err(Error::Hypothesis { clause, .. }) if clause == "i"));
}

#[test]
fn supermartingale_budget_examples() {
    let budget = Budget::from_values(vec![2, 2], &[q(1, 1), q(1, 1)], &[q(1, 1), q(2, 1), q(4, 1)]).unwrap();
    let mut d = BTreeMap::new();
    d.insert(ns(&[]), q(1, 1));
    d.insert(ns(&[0]), q(2, 1));
    d.insert(ns(&[1]), q(0, 1));
    assert_eq!(supermartingale_budget_check(&d, &budget).unwrap(), BudgetVerdict::Pass);
    let tight = Budget::from_values(vec![2, 2], &[q(1, 2), q(1, 2)], &[q(1, 1), q(1, 1), q(1, 1)]).unwrap();
    assert_eq!(supermartingale_budget_check(&d, &tight).unwrap(), BudgetVerdict::Fail(ns(&[])));
    d.insert(ns(&[0]), q(3, 1));
    assert!(matches!(supermartingale_budget_check(&d, &budget), Err(Error::Hypothesis { clause, .. }) if clause == "supermartingale"));
}

#[test]
fn supermartingale_budget_from_algebra() {
    let alg = gm_algebra(&sqrt_log(), &f("n"), &q(1, 10), 6).unwrap();
    let budget = alg.budget(4).unwrap();
    assert_eq!(budget.h, vec![2, 8, 32, 128]);
    let mut d = BTreeMap::new();
    d.insert(ns(&[]), BigRational::one());
    for i in 0..2 {
        d.insert(ns(&[i]), BigRational::one());
    }
    assert_eq!(supermartingale_budget_check(&d, &budget).unwrap(), BudgetVerdict::Pass);
}

fn toy_env() -> (Arc<Registry>, Vec<BigUint>) {
    let reg = Arc::new(Registry::new());
    let mut idx = Vec::new();
    idx.push(reg.register_total(|x| x % 3u32));
    idx.push(reg.register_total(|_| big(1)));
    idx.push(reg.register_partial(|x| (x == &big(0)).then(|| big(2))));
    idx.push(reg.register_partial(|_| None));
    idx.push(reg.register_total(|x| x + 1u32));
    (reg, idx)
}

#[test]
fn pabc_lift_toy() {
    let (reg, idx) = toy_env();
    let env = PabcEnv::new(reg, 100);
    let x = env.avoiding_table(2, 1);
    for n in &idx {
        let out = pabc_lift(&x, 2, 1, 1, n, &env).unwrap();
        assert_eq!(out.set.len(), 2);
        assert!(out.set.iter().all(|&v| v < 3));
        if let Some(v) = env.phi(n, 0) {
            assert!(!out.set.contains(&v));
        }
        assert_eq!(out.cells.len(), 2);
    }
    let base = pabc_lift(&x, 2, 0, 1, &idx[1], &env).unwrap();
    assert_eq!(base.set.into_iter().collect::<Vec<_>>(), vec![0]);
}

#[test]
fn pabc_lift_reports_unresolved_and_bad_input() {
    let (reg, idx) = toy_env();
    let env = PabcEnv::new(reg, 100);
    let none = |_: &BigUint| None;
    assert!(matches!(pabc_lift(&none, 2, 1, 1, &idx[0], &env), Err(Error::Unresolved(_))));
    let ones = |_: &BigUint| Some(1u64);
    assert!(matches!(pabc_lift(&ones, 2, 1, 1, &idx[1], &env), Err(Error::Hypothesis { .. })));
    let big_value = |_: &BigUint| Some(5u64);
    assert!(matches!(pabc_lift(&big_value, 2, 1, 1, &idx[3], &env), Err(Error::Domain(_))));
}

#[test]
fn pabc_reduce_toy() {
    let (reg, idx) = toy_env();
    let env = PabcEnv::new(reg, 100);
    let x = env.avoiding_table(2, 1);
    for (a, b, c) in [(2u64, 0u64, 2u64), (2, 1, 2), (3, 0, 2), (2, 0, 3)] {
        for n in &idx {
            let out = pabc_reduce(&x, a, b, c, n, &env).unwrap();
            assert_eq!(out.set.len() as u64, c + b);
            assert!(out.set.iter().all(|&v| v < c * a + b));
            for j in 0..c {
                if let Some(v) = env.phi(n, j) {
                    assert!(!out.set.contains(&v), "phi_{n}({j}) = {v} in {:?}", out.set);
                }
            }
            let d = (c - 1) * a + b;
            assert_eq!(out.cells.len() as u64, c * (d + 1));
            assert!(BigUint::from(out.cells.len()) <= BigUint::from(c) * binomial(c * a + b, a));
        }
    }
}

#[test]
fn binomial_small() {
    let row: Vec<u64> = (0..=6).map(|k| binomial(6, k).to_u64().unwrap()).collect();
    assert_eq!(row, vec![1, 6, 15, 20, 15, 6, 1]);
}

#[test]
fn affine_examples() {
    let x: Vec<u64> = (0..10).collect();
    assert_eq!(affine_pullback(&x, 3, 1).unwrap(), vec![1, 4, 7]);
    assert_eq!(affine_pushforward(&[5u64, 6], 2, 1, 0).unwrap(), vec![0, 5, 0, 6]);
    assert!(affine_pullback(&x, 2, 20).unwrap().is_empty());
    assert!(matches!(affine_pullback(&x, 0, 1), Err(Error::Domain(_))));
}

proptest! {
    #[test]
    fn affine_round_trip(x in proptest::collection::vec(0u64..100, 0..30), a in 1u64..5, b in 0u64..5) {
        let y = affine_pushforward(&x, a, b, 999).unwrap();
        prop_assert_eq!(affine_pullback(&y, a, b).unwrap(), x);
    }
}

#[test]
fn shift_check_finds_short_description_of_zeros() {
    let reg = Registry::new();
    let e = reg.register_partial(|x| {
        let w = str_decode(x);
        let k = w.bits().iter().take_while(|&&b| b == 1).count();
        (w.len() == k + 1 && w.bits()[k] == 0 && k < 12).then(|| avoidance_lab::encodings::str_encode(&BitString(vec![0; 1 << k])))
    });
    let zeros = BitString(vec![0; 64]);
    let verdict = shift_complex_check(&zeros, &q(1, 2), 2, &reg, 200);
    match verdict {
        ShiftVerdict::Violated { start, tau, k } => {
            assert!(tau.len() <= 32);
            assert_eq!(BitString(zeros.bits()[start..start + tau.len()].to_vec()), tau);
            assert!(BigRational::from_integer(k.into()) < q(tau.len() as i64, 2) - q(2, 1));
            assert_eq!(reg.k_bound(&tau, 200), Some(k));
        }
        other => panic!("expected a violation, got {other:?}"),
    }
    let e = e.to_usize().unwrap() as u64;
    assert!(reg.k_bound(&BitString(vec![0; 32]), 200).unwrap() <= e + 1 + 6);
}

#[test]
fn shift_check_unresolved_without_machines() {
    let reg = Registry::new();
    let w = bs("0110100110010110");
    match shift_complex_check(&w, &q(1, 2), 2, &reg, 30) {
        ShiftVerdict::Unresolved(open) => {
            assert!(open.iter().all(|t| t.len() >= 5));
            assert!(open.contains(&w));
        }
        ShiftVerdict::Violated { tau, k, .. } => assert!(BigRational::from_integer(k.into()) < q(tau.len() as i64, 2) - q(2, 1)),
        ShiftVerdict::Consistent => panic!("nothing can be certified here"),
    }
    assert_eq!(shift_complex_check(&bs("0101"), &q(1, 2), 2, &reg, 30), ShiftVerdict::Consistent);
}
