//! Growth classes and reciprocal-sum brackets for a few order functions.

use avoidance_lab::orderfn::parse;
use avoidance_lab::series::analyze;

fn main() -> avoidance_lab::Result<()> {
    for src in ["exp2", "geom 3", "pow 2 n", "logpow k=1 a=2", "logpow k=1 a=1", "logpow k=2 a=3/2"] {
        let r = analyze(&parse(src)?, 4, 16)?;
        print!("{src:<20} {:?}", r.class.tag);
        match r.bracket {
            Some((iv, k)) => println!("  sum from 4 in {iv} (2^-{k}, {:?})", r.method),
            None => println!("  diverges"),
        }
    }
    Ok(())
}
