//! Dyadic rationals, outward-rounded intervals and refinable brackets.

mod bracket;
mod dyadic;
mod functions;
mod interval;

pub use bracket::{bracket_eval, RealBracket};
pub use dyadic::Dyadic;
pub use functions::{euler, exp2_point, iv_exp2, iv_log2, iv_pow, iv_sqrt, ln2, log2_point, pow_point};
pub use interval::{iv_arith, DyadInterval, IvOp};

/// Default cap for precision escalation: widths below `2^{-256}`.
pub const PREC_CAP: u32 = 256;

use num_bigint::BigInt;
use num_rational::BigRational;

pub fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

pub fn rat_int(n: impl Into<BigInt>) -> BigRational {
    BigRational::from_integer(n.into())
}
