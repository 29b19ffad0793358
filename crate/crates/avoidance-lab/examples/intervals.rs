//! Map h-bounded words to subintervals of [0, 1] and cover intervals by words.

use avoidance_lab::encodings::{BoundFamily, BoundedWord, NatString};
use avoidance_lab::orderfn::parse;
use avoidance_lab::reductions::{interval_pullback, interval_to_cylinders, pi_h_interval};
use avoidance_lab::BigRational;

fn main() -> avoidance_lab::Result<()> {
    let h = BoundFamily::table(&[2, 3], BoundFamily::constant(4));
    for w in [vec![1], vec![1, 2], vec![1, 2, 3], vec![0, 0, 0]] {
        let bw = BoundedWord::new(NatString(w), h.clone())?;
        let (lo, hi) = pi_h_interval(&bw);
        println!("{} -> [{lo}, {hi}]", bw.word);
    }
    let q = |a: i64, b: i64| BigRational::new(a.into(), b.into());
    let (s, t) = interval_to_cylinders(&q(3, 8), &q(5, 8))?;
    println!("[3/8, 5/8] sits between cylinders {s:?} and {t:?}");

    let p = interval_pullback(&q(1, 3), &q(2, 3), &BoundFamily::constant(2), &parse("n")?, &parse("n")?, 8, 40)?;
    let words: Vec<String> = p.words.iter().map(|w| w.to_string()).collect();
    println!("[1/3, 2/3] pulls back at level {} to {words:?}", p.level);
    println!("weight {} vs bound {}: {}", p.weight, p.bound, if p.holds { "holds" } else { "fails" });
    Ok(())
}
