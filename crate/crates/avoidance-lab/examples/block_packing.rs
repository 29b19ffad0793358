//! Pack bounded sequences into a binary string and back, and read prefixes as numbers.

use avoidance_lab::encodings::BitString;
use avoidance_lab::orderfn::parse;
use avoidance_lab::reductions::{complex_to_lua, lua_to_complex, lua_unpack, pack_offsets};
use num_bigint::BigUint;

fn main() -> avoidance_lab::Result<()> {
    let p = parse("exp2")?;
    println!("q = {:?}", pack_offsets(&p, 10)?);
    let x: Vec<BigUint> = [0u32, 1, 3, 2, 5, 7, 0, 1, 9, 12].iter().map(|&v| BigUint::from(v)).collect();
    let packed = lua_to_complex(&x, &p, 10)?;
    println!("packed {packed:?}");
    assert_eq!(lua_unpack(&packed, &p, 10)?, x);

    let bits = BitString::parse("0110100110010110").unwrap();
    let y = complex_to_lua(&bits, &parse("n")?, &parse("n")?, 12)?;
    println!("prefix codes {:?}", y.iter().map(|v| v.to_string()).collect::<Vec<_>>());
    Ok(())
}
