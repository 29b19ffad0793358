//! Bigness, closure and the avoidance stage of the forcing construction.

use avoidance_lab::bushy::{bigness, closure, forcing_step4, BadSet, MockFunctional, Step4Target};
use avoidance_lab::encodings::{BoundFamily, NatString};

fn main() -> avoidance_lab::Result<()> {
    let h = BoundFamily::constant(3);
    let b = BadSet::new([NatString(vec![0, 0]), NatString(vec![0, 1]), NatString(vec![1, 0]), NatString(vec![1, 2])], &h)?;
    for k in 1..=3 {
        println!("k={k}: root bigness {:?}, closure has {} strings", bigness(&b, &NatString::new()), closure(&b, k).len());
    }

    let p2 = BoundFamily::table(&[2, 4, 8, 16, 32], BoundFamily::constant(64));
    let gamma = MockFunctional::new((0..16).map(|i| (NatString(vec![1, 0, 0, i]), 5, 0)).chain([(NatString(vec![1, 1]), 5, 0)]).collect())?;
    let targets = [Step4Target { gamma: MockFunctional::default(), theta: 0, qu: 1 }, Step4Target { gamma, theta: 5, qu: 1 }];
    for rec in forcing_step4(&p2, &[Some(0)], &targets, 6)? {
        println!("{rec}");
    }
    Ok(())
}
