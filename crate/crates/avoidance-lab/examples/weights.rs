//! Direct and prefix-free weights, and the sparse codec.

use avoidance_lab::encodings::BitString;
use avoidance_lab::weights::{dwt, pwt, sparse_decode, sparse_encode, Weight, WeightedSet};
use avoidance_lab::BigRational;

fn main() -> avoidance_lab::Result<()> {
    let strings: Vec<BitString> = ["0", "10", "110", "11", "0110"].iter().map(|s| BitString::parse(s).unwrap()).collect();
    let set = WeightedSet::new(strings, Weight::Length);
    println!("dwt = {}", dwt(&set, 20)?);
    println!("pwt = {}", pwt(&set, 20)?);

    let alpha = BigRational::new(1.into(), 4.into());
    let s = BitString((0..4096).map(|i| u8::from(i % 512 == 7 || i % 1024 == 515)).collect());
    match sparse_encode(&s, 8, &alpha)? {
        Some(t) => {
            println!("sparse {} bits -> {} bits", s.len(), t.len());
            assert_eq!(sparse_decode(&t, s.len(), 8, &alpha)?, s);
        }
        None => println!("too dense to encode"),
    }
    Ok(())
}
