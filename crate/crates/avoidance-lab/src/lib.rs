//! Exact workbench for avoidance classes, partial randomness, prefix-free
//! coding and bushy tree forcing.
//!
//! Every quantity is either an exact natural/rational/dyadic or a
//! [`numerics::DyadInterval`] bracketing a real. No computation goes through floats.

pub mod bushy;
pub mod cli;
pub mod encodings;
pub mod error;
pub mod formats;
pub mod machine;
pub mod numerics;
pub mod orderfn;
pub mod reductions;
pub mod series;
pub mod weights;

pub use error::{Error, Result};
pub use num_bigint::{BigInt, BigUint};
pub use num_rational::BigRational;
