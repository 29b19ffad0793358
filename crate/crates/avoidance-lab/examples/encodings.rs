use avoidance_lab::encodings::*;
use num_bigint::BigUint;

fn main() {
    for n in 0u64..8 {
        let s = str_decode(&BigUint::from(n));
        println!("str^-1({n}) = {s:?}");
    }
    let (a, b) = unpair2(&BigUint::from(17u32));
    println!("unpair(17) = ({a}, {b}), pair back = {}", pair2(&a, &b));
    let seq = seq_unindex(&BigUint::from(1000u32));
    println!("seq 1000 = {seq:?}, index back = {}", seq_index(&seq));

    let h = BoundFamily::table(&[2, 3], BoundFamily::constant(2));
    for n in 0u64..10 {
        let w = shortlex_unindex(&BigUint::from(n), &h);
        println!("h-word #{n}: {}", w.word);
    }
    println!("level sizes: {:?}", (0..5).map(|d| h.level_size(d)).collect::<Vec<_>>());
}
