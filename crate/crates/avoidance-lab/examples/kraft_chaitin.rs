//! Online prefix-code allocation.

use avoidance_lab::weights::{kraft_check, KcAllocator};

fn main() -> avoidance_lab::Result<()> {
    let mut kc = KcAllocator::new();
    for d in [3, 1, 4, 2, 5, 5] {
        let code = kc.request(d)?;
        println!("request {d}: {code:?}  used {}", kc.used());
    }
    println!("free cylinders: {:?}", kc.free_cylinders());
    match kc.request(2) {
        Ok(c) => println!("unexpected {c:?}"),
        Err(e) => println!("request 2: {e}"),
    }
    println!("{:?}", kraft_check(&kc.into_allocation().codes));
    Ok(())
}
