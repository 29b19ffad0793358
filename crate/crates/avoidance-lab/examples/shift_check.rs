//! Look for low-complexity substrings in a candidate shift-complex word.

use avoidance_lab::encodings::{str_decode, str_encode, BitString};
use avoidance_lab::machine::Registry;
use avoidance_lab::reductions::{shift_complex_check, ShiftVerdict};
use avoidance_lab::BigRational;

fn main() {
    let reg = Registry::new();
    reg.register_partial(|x| {
        let w = str_decode(x);
        let k = w.bits().iter().take_while(|&&b| b == 1).count();
        (w.len() == k + 1 && k < 10).then(|| str_encode(&BitString(vec![0; 1 << k])))
    });
    let half = BigRational::new(1.into(), 2.into());
    for w in ["0".repeat(64), "0110100110010110".to_string(), "0101".to_string()] {
        let w = BitString::parse(&w).unwrap();
        match shift_complex_check(&w, &half, 2, &reg, 500) {
            ShiftVerdict::Violated { start, tau, k } => println!("{} bits: K({} bits at {start}) <= {k}", w.len(), tau.len()),
            ShiftVerdict::Unresolved(open) => println!("{} bits: {} substrings unresolved", w.len(), open.len()),
            ShiftVerdict::Consistent => println!("{} bits: consistent", w.len()),
        }
    }
}
