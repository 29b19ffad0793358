use avoidance_lab::orderfn::{check_convex, generalized_inverse, parse};
use avoidance_lab::BigRational;
use num_bigint::BigUint;

fn main() -> avoidance_lab::Result<()> {
    let f = parse("mul (sqrt n) (log2 n)")?;
    println!("f = {f}");
    for n in [1u64, 2, 16, 256, 4096] {
        let exact = f.exact_at(&BigUint::from(n))?;
        let iv = f.at_u64(n, 24)?;
        println!("f({n}) = {iv}{}", exact.map(|q| format!(" = {q}")).unwrap_or_default());
    }
    let g = parse("exp2 n")?;
    for x in [10, 1000, 1_000_000] {
        let m = generalized_inverse(&g, &BigRational::from_integer(x.into()))?;
        println!("least n with 2^n >= {x}: {m}");
    }
    println!("convexity of n^2 up to 64: {:?}", check_convex(&parse("pow 2 n")?, 64)?);
    Ok(())
}
