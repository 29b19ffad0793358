//! The exponent bookkeeping for the gap between complexity and avoidance.

use avoidance_lab::orderfn::parse;
use avoidance_lab::reductions::{gm_algebra, star_threshold};
use avoidance_lab::BigRational;

fn main() -> avoidance_lab::Result<()> {
    let j = parse("mul (sqrt n) (log2 n)")?;
    let s = parse("n")?;
    let eps = BigRational::new(1.into(), 10.into());
    let alg = gm_algebra(&j, &s, &eps, 12)?;
    for r in &alg.rows {
        println!("n={:>2} h={} l in {} regular={}", r.n, r.h_value(), r.ell(16)?, r.regular);
    }
    println!("regular from {:?}", alg.regular_from());
    println!("log ratio negative from n = {:?}", star_threshold(&j, &s, &eps, 200)?);
    Ok(())
}
