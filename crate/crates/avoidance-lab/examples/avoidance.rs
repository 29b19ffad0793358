//! Check a finite sequence against a partial function and an order bound.

use avoidance_lab::machine::{Avoidance, Psi, Registry};
use avoidance_lab::orderfn::parse;
use num_bigint::BigUint;

fn main() -> avoidance_lab::Result<()> {
    let reg = Registry::new();
    let psi = reg.register_partial(|x| (x.bits() % 2 == 0).then(|| x * x % 7u32));
    let p = parse("affine 0 8 n")?;
    let x: Vec<u64> = (0..16u64).map(|n| (reg.step_eval(&psi, &BigUint::from(n), 10).map_or(0, |v| u64::try_from(v).unwrap()) + 1) % 8).collect();
    println!("x = {x:?}");
    let r = reg.avoidance_check(&x, &Psi::Registered(psi.clone()), &p, 16, 10)?;
    println!("{:?}, {} unresolved", r.verdict, r.unresolved);
    let mut bad = x.clone();
    bad[2] = 4;
    let r = reg.avoidance_check(&bad, &Psi::Registered(psi), &p, 16, 10)?;
    assert_eq!(r.verdict, Avoidance::Clash(2));
    println!("after setting x(2) = 4: {:?}", r.verdict);
    Ok(())
}
