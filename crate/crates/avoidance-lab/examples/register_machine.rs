//! Register programs, the closure registry and prefix-free complexity bounds.

use avoidance_lab::encodings::{str_encode, BitString};
use avoidance_lab::machine::{Program, Registry};
use num_bigint::BigUint;

fn main() -> avoidance_lab::Result<()> {
    let double = Program::parse("loop: JZ 0 done\nDEC 0\nINC 1\nINC 1\nJZ 2 loop\ndone: JZ 1 end\nDEC 1\nINC 0\nJZ 2 done\nend:\n")?;
    println!("{double}");
    println!("double(21) = {:?}", double.run(&BigUint::from(21u32), 1000));
    println!("index = {}", double.index()?);

    let reg = Registry::new();
    let target = BitString::parse("0000000000000000000000000000000000000000").unwrap();
    let t = target.clone();
    let e = reg.register_partial(move |x| (*x == BigUint::from(0u32)).then(|| str_encode(&t)));
    println!("closure registered at {e}");
    for s in [10, 100, 1000] {
        println!("K_{s}({} zeros) <= {:?}", target.len(), reg.k_bound(&target, s));
    }
    println!("domain at stage 200: {} programs", reg.universal_domain(200, 8).len());
    Ok(())
}
