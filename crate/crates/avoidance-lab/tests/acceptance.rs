//! The ten acceptance criteria, one PASS/FAIL line each.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use avoidance_lab::encodings::*;
use avoidance_lab::machine::{lz_build, machine_semimeasure, union_measure, Program, Registry, StagedSemimeasure};
use avoidance_lab::numerics::{euler, iv_log2, ln2, Dyadic, DyadInterval};
use avoidance_lab::orderfn::{factor_log2, parse};
use avoidance_lab::reductions::*;
use avoidance_lab::series::{recip_tail, sum_reciprocal};
use avoidance_lab::weights::{kc_allocate, kraft_check, Kraft};
use common::{exhaustive_lemmas, sampled_lemmas, Universe};
use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = fn() -> Result<String, String>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn q(a: i64, b: i64) -> BigRational {
    BigRational::new(a.into(), b.into())
}

fn big(n: u64) -> BigUint {
    BigUint::from(n)
}

fn rumyantsev_example() -> Result<String, String> {
    let start = Instant::now();
    let plan = rumyantsev_plan(&Coefficients::ceil_sqrt(), 3).map_err(|e| e.to_string())?;
    ensure(plan.m0 == 4, || format!("m0 = {}", plan.m0))?;
    let want: [(u32, Vec<u64>); 3] = [(4, (0..4).collect()), (5, (4..10).collect()), (6, (10..16).chain([20, 21]).collect())];
    for (st, (exp, offs)) in plan.stages.iter().zip(&want) {
        ensure(st.exp == *exp && &st.offsets == offs, || format!("stage mod 2^{}: {:?}", st.exp, st.offsets))?;
    }
    ensure(plan.coverage(2) == q(7, 16), || format!("coverage {}", plan.coverage(2)))?;
    let t = start.elapsed();
    ensure(t < Duration::from_secs(1), || format!("took {t:?}"))?;
    Ok("m0=4, offsets and coverage 7/16 exact".into())
}

fn spread_recover() -> Result<String, String> {
    let plan = rumyantsev_plan(&Coefficients::ceil_sqrt(), 3).map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut checks = 0;
    for _ in 0..200 {
        let x = BitString((0..64).map(|_| rng.gen_range(0..2u8)).collect());
        let psi = rumyantsev_apply(&plan, &x, 4096 + 64, Some(0)).map_err(|e| e.to_string())?;
        for st in &plan.stages {
            let width = 1u64 << st.exp;
            for _ in 0..10 {
                let k = rng.gen_range(0..4096u64);
                let seg = BitString(psi.bits()[k as usize..(k + width) as usize].to_vec());
                let got = rumyantsev_recover(&plan, &seg, k % width, st.exp).map_err(|e| e.to_string())?;
                ensure(got == x.prefix(st.offsets.len()), || format!("window at {k} mod 2^{}", st.exp))?;
                checks += 1;
            }
        }
    }
    Ok(format!("{checks} recoveries exact"))
}

fn series_closed_forms() -> Result<String, String> {
    let start = Instant::now();
    let geo = sum_reciprocal(&parse("exp2").unwrap(), 0, 20).map_err(|e| e.to_string())?;
    ensure(geo.contains_rational(&q(2, 1)) && geo.fine(20), || format!("geometric {geo}"))?;
    let p = parse("logpow k=1 a=2").unwrap();
    let (tail, _) = recip_tail(&p, &big(2), 30).map_err(|e| e.to_string())?.ok_or("no tail bound")?;
    let l = ln2(40);
    let tol = Dyadic::pow2(-12);
    ensure(&l.lo - &tol <= tail.lo && tail.lo <= &l.hi + &tol, || format!("integral {} vs ln 2 {l}", tail.lo))?;
    let (lo, hi) = Coefficients::ceil_sqrt().tail(4);
    let mut partial = BigRational::zero();
    for m in 4..=90u32 {
        let n = BigUint::one() << m;
        let r = n.sqrt();
        let c = if &r * &r == n { r } else { r + 1u32 };
        partial += BigRational::new(c.into(), (BigUint::one() << m).into());
    }
    let rest = q(1, 1 << 20);
    ensure(lo <= &partial + &rest && partial <= hi, || format!("tail from 4 in [{lo}, {hi}] vs oracle {partial}"))?;
    ensure(hi < BigRational::one(), || format!("tail from 4 reaches {hi}"))?;
    // (2 + sqrt 2)/4 + 1/8 with sqrt 2 in [r0, r1]
    let (r0, r1) = (q(141_421_356, 100_000_000), q(141_421_357, 100_000_000));
    ensure(&r0 * &r0 < q(2, 1) && q(2, 1) < &r1 * &r1, || "sqrt 2 bracket".into())?;
    let bound = |r: &BigRational| (q(2, 1) + r) / q(4, 1) + q(1, 8);
    ensure(hi <= bound(&r0) && bound(&r0) > q(95, 100) && bound(&r1) < BigRational::one(), || format!("bound [{}, {}]", bound(&r0), bound(&r1)))?;
    let t = start.elapsed();
    ensure(t < Duration::from_secs(10), || format!("took {t:?}"))?;
    Ok(format!(
        "geometric {geo}; sqrt tail in [{:.6}, {:.6}] < 1, under the geometric bound {:.6} in (0.95, 1)",
        lo.to_f64().unwrap(),
        hi.to_f64().unwrap(),
        bound(&r0).to_f64().unwrap()
    ))
}

fn block_packing() -> Result<String, String> {
    let p = parse("exp2").unwrap();
    let qs = pack_offsets(&p, 64).map_err(|e| e.to_string())?;
    for (n, &v) in qs.iter().enumerate() {
        ensure(v as usize == n * n.saturating_sub(1) / 2, || format!("q({n}) = {v}"))?;
    }
    let widths = block_widths(&p, 24).map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..1000 {
        let n = rng.gen_range(0..24u64);
        let x: Vec<BigUint> = widths[..n as usize].iter().map(|&w| if w == 0 { BigUint::zero() } else { big(rng.gen::<u64>() & ((1u64 << w.min(63)) - 1)) }).collect();
        let y = lua_to_complex(&x, &p, n).map_err(|e| e.to_string())?;
        ensure(lua_unpack(&y, &p, n).map_err(|e| e.to_string())? == x, || format!("round trip failed at N = {n}"))?;
    }
    Ok("q(n) = n(n-1)/2 for n <= 64; 1000 round trips".into())
}

/// Leftmost aligned free block, found by jumping over occupied intervals.
fn leftmost_fit(codes: &[BitString], d: usize) -> Option<BitString> {
    const W: usize = 16;
    let occupied: Vec<(u64, u64)> = codes
        .iter()
        .map(|c| {
            let v = c.bits().iter().fold(0u64, |a, &b| a << 1 | b as u64) << (W - c.len());
            (v, v + (1 << (W - c.len())))
        })
        .collect();
    let step = 1u64 << (W - d);
    let mut at = 0u64;
    while at < 1 << W {
        match occupied.iter().find(|(a, b)| *a < at + step && at < *b) {
            Some(&(_, b)) => at = b.div_ceil(step) * step,
            None => return Some(BitString((0..d).map(|i| ((at >> (W - 1 - i)) & 1) as u8).collect())),
        }
    }
    None
}

fn kraft_chaitin() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut total = 0;
    for case in 0..1000 {
        let mut budget = 1u64 << 16;
        let mut ds = Vec::new();
        for _ in 0..rng.gen_range(1..40) {
            let d = rng.gen_range(1..=16usize);
            if 1u64 << (16 - d) <= budget {
                budget -= 1 << (16 - d);
                ds.push(d);
            }
        }
        let alloc = kc_allocate(ds.iter().copied()).map_err(|e| format!("case {case}: {e}"))?;
        ensure(alloc.lengths == ds && alloc.codes.iter().zip(&ds).all(|(c, &d)| c.len() == d), || format!("case {case}: lengths"))?;
        ensure(matches!(kraft_check(&alloc.codes), Kraft::Ok { .. }), || format!("case {case}: codes compatible"))?;
        let mut oracle = Vec::new();
        for &d in &ds {
            oracle.push(leftmost_fit(&oracle, d).ok_or_else(|| format!("case {case}: oracle found no room"))?);
        }
        ensure(oracle == alloc.codes, || format!("case {case}: {:?} vs oracle {:?}", alloc.codes, oracle))?;
        total += ds.len();
    }
    Ok(format!("1000 sequences, {total} requests, leftmost-fit agreement"))
}

fn bushy_exhaustive() -> Result<String, String> {
    let start = Instant::now();
    let mut cases = 0;
    for (h, depth) in [(2, 1), (2, 2), (2, 3), (3, 1), (3, 2)] {
        let rep = exhaustive_lemmas(&Universe::new(h, depth));
        ensure(rep.failures.is_empty(), || format!("h={h} depth={depth}: {:?}", rep.failures))?;
        cases += rep.cases;
    }
    let rep = sampled_lemmas(&Universe::bare(3, 3), 3000, 17);
    ensure(rep.failures.is_empty(), || format!("h=3 depth=3: {:?}", rep.failures))?;
    let t = start.elapsed();
    ensure(t < Duration::from_secs(60), || format!("took {t:?}"))?;
    Ok(format!("{cases} exhaustive cases (h=3 depth=3 on 3000 sampled pairs, {} cases)", rep.cases))
}

fn levin_zvonkin() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for run in 0..20 {
        let h = BoundFamily::constant(rng.gen_range(2..=3));
        let stages = rng.gen_range(1..=8);
        let nu = StagedSemimeasure::random(h.clone(), 3, stages, &mut rng);
        nu.validate().map_err(|e| format!("run {run}: {e}"))?;
        let m = lz_build(&nu, stages).map_err(|e| format!("run {run}: {e}"))?;
        let table = nu.table();
        for s in 0..=stages {
            for w in h.words_upto(3) {
                let want = table[s].get(&w).cloned().unwrap_or_else(Dyadic::zero);
                ensure(union_measure(&m.d_set(&w, s)) == want, || format!("run {run}: D_{s}({w})"))?;
            }
        }
        for w in h.words_upto(3) {
            ensure(machine_semimeasure(&m, &w) == nu.value(&w, stages), || format!("run {run}: final {w}"))?;
        }
    }
    Ok("20 semimeasures reproduced exactly".into())
}

fn gm_algebra_check() -> Result<String, String> {
    let j = parse("mul (sqrt n) (log2 n)").unwrap();
    let s = parse("n").unwrap();
    let eps = q(1, 10);
    let keep = q(9, 5);
    let alg = gm_algebra(&j, &s, &eps, 200).map_err(|e| e.to_string())?;
    let prec = 40;
    let log2e = iv_log2(&euler(prec + 8), prec).map_err(|e| e.to_string())?;
    for r in &alg.rows {
        let n1 = BigRational::from_integer((r.n + 1).into());
        let floor = factor_log2(&n1).unwrap().scale(&keep);
        ensure(r.l.sub(&floor).signum().map_err(|e| e.to_string())? != std::cmp::Ordering::Less, || format!("l({}) below (n+1)^(2(1-e))", r.n))?;
        let top = floor.eval(prec).map_err(|e| e.to_string())?.add(&log2e.mul(&DyadInterval::from_rational(&keep, prec)));
        let l = r.l.eval(prec).map_err(|e| e.to_string())?;
        ensure(l.hi <= top.lo, || format!("l({}) above e^(2(1-e))(n+1)^(2(1-e))", r.n))?;
    }
    let t = star_threshold(&j, &s, &eps, 200).map_err(|e| e.to_string())?.ok_or("closed form never negative")?;
    ensure(t <= 30, || format!("threshold {t}"))?;
    Ok(format!("H = K L and L = K^((n-g)/g) for n <= 200; l bracket holds; threshold {t}"))
}

fn encodings() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let fam = BoundFamily::table(&[2, 3, 5], BoundFamily::constant(4));
    for _ in 0..10_000 {
        let n = big(rng.gen_range(0..1u64 << 40));
        ensure(str_encode(&str_decode(&n)) == n, || format!("str at {n}"))?;
        let (a, b) = unpair2(&n);
        ensure(pair2(&a, &b) == n, || format!("pair at {n}"))?;
        ensure(seq_index(&seq_unindex(&n)) == n, || format!("seq at {n}"))?;
        ensure(shortlex_index(&shortlex_unindex(&n, &fam)) == n, || format!("shortlex at {n}"))?;
    }
    let mut prev: Option<BitString> = None;
    for n in 0..(1u64 << 13) - 1 {
        let s = str_decode(&big(n));
        if let Some(p) = &prev {
            ensure(shortlex_cmp(p.bits(), s.bits()) == std::cmp::Ordering::Less, || format!("str not monotone at {n}"))?;
        }
        ensure(str_encode(&s) <= BigUint::one() << (s.len() + 1), || format!("bound at {s}"))?;
        prev = Some(s);
    }
    let mut count = 0;
    for len in 0..=12 {
        for s in BitString::all_of_length(len) {
            ensure(str_encode(&s) <= BigUint::one() << (len + 1), || format!("bound at {s}"))?;
            count += 1;
        }
    }
    Ok(format!("4 bijections x 10^4; bound on {count} strings"))
}

fn machine_substrate() -> Result<String, String> {
    let reg = Registry::new();
    for w in ["", "1", "0110", "111000"] {
        let code = str_encode(&BitString::parse(w).unwrap());
        reg.register_partial(move |x| (*x == code).then(|| x.clone()));
    }
    reg.register_partial(|x| {
        let w = str_decode(x);
        let k = w.bits().iter().take_while(|&&b| b == 1).count();
        (w.len() == k + 1 && k < 10).then(|| str_encode(&BitString(vec![0; 1 << k])))
    });
    for s in [10u64, 100, 1000, 4000] {
        let dom = reg.universal_domain(s, 12);
        for (i, (a, _)) in dom.iter().enumerate() {
            for (b, _) in &dom[i + 1..] {
                ensure(!a.compatible(b), || format!("{a} ~ {b} at stage {s}"))?;
            }
        }
    }
    let sample: Vec<BitString> = (0..60u64).map(|n| str_decode(&big(n))).collect();
    for s in [16u64, 256, 1024] {
        let kraft = sample.iter().filter_map(|w| reg.k_bound_below(w, s, 16)).fold(Dyadic::zero(), |acc, k| &acc + &Dyadic::pow2(-(k as i64)));
        ensure(kraft <= Dyadic::one(), || format!("Kraft sum {kraft} at {s}"))?;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    for _ in 0..1000 {
        let e = big(rng.gen_range(0u64..1 << 24)) << 1u32;
        Program::from_index(&e).ok_or("even index without program")?;
        let x = big(rng.gen_range(0..20u64));
        let s = rng.gen_range(0..300u64);
        let t = s + rng.gen_range(0..300u64);
        if let Some(v) = reg.step_eval(&e, &x, s) {
            ensure(reg.step_eval(&e, &x, t) == Some(v), || format!("program {e} on {x} changed between {s} and {t}"))?;
        }
    }
    let words = ["0".repeat(64), "01".repeat(32), "0110100110010110".repeat(2), "1".repeat(40)];
    let mut violations = 0;
    for w in &words {
        let w = BitString::parse(w).unwrap();
        let budgets = [100u64, 1000, 10_000];
        for (i, &s) in budgets.iter().enumerate() {
            if let ShiftVerdict::Violated { tau, k, .. } = shift_complex_check(&w, &q(1, 2), 2, &reg, s) {
                violations += 1;
                for &t in &budgets[i + 1..] {
                    ensure(reg.k_bound_below(&tau, t, k + 1).is_some_and(|k2| k2 <= k), || format!("violation on {tau} retracted at budget {t}"))?;
                    ensure(matches!(shift_complex_check(&w, &q(1, 2), 2, &reg, t), ShiftVerdict::Violated { .. }), || format!("{w} consistent at budget {t}"))?;
                }
            }
        }
    }
    Ok(format!("prefix-free, Kraft <= 1, 1000 monotone runs, {violations} stable violations"))
}

fn main() {
    let criteria: [(&str, Check); 10] = [
        ("progression spreader worked example", rumyantsev_example),
        ("spread/recover inverse", spread_recover),
        ("series closed forms", series_closed_forms),
        ("block packing", block_packing),
        ("Kraft-Chaitin allocation", kraft_chaitin),
        ("bushy combinatorics", bushy_exhaustive),
        ("Levin-Zvonkin machine", levin_zvonkin),
        ("exponent algebra", gm_algebra_check),
        ("encodings", encodings),
        ("machine substrate", machine_substrate),
    ];
    std::panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let r = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| Err(p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_else(|| "panic".into())));
        let t = start.elapsed().as_secs_f64();
        match r {
            Ok(msg) => println!("PASS {:>2} {name}: {msg} ({t:.2}s)", i + 1),
            Err(msg) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {msg} ({t:.2}s)", i + 1);
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
