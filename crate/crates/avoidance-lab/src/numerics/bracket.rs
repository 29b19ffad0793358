use std::fmt;
use std::sync::{Arc, Mutex};

use super::{Dyadic, DyadInterval};
use crate::error::{Error, Result};

type Refine = dyn Fn(u32) -> Result<DyadInterval> + Send + Sync;

/// A recursive real: `refine(k)` brackets the value with width `≤ 2^{-k}`.
/// [`RealBracket::at`] intersects successive answers so brackets nest.
#[derive(Clone)]
pub struct RealBracket {
    refine: Arc<Refine>,
    cache: Arc<Mutex<Vec<DyadInterval>>>,
}

impl fmt::Debug for RealBracket {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let c = self.cache.lock().unwrap();
        match c.last() {
            Some(iv) => write!(f, "RealBracket(k={}, {iv})", c.len() - 1),
            None => write!(f, "RealBracket(..)"),
        }
    }
}

impl RealBracket {
    pub fn new(refine: impl Fn(u32) -> Result<DyadInterval> + Send + Sync + 'static) -> Self {
        RealBracket { refine: Arc::new(refine), cache: Arc::new(Mutex::new(Vec::new())) }
    }

    pub fn constant(x: Dyadic) -> Self {
        Self::new(move |_| Ok(DyadInterval::point(x.clone())))
    }

    pub fn at(&self, k: u32) -> Result<DyadInterval> {
        let mut c = self.cache.lock().unwrap();
        while c.len() <= k as usize {
            let j = c.len() as u32;
            let fresh = (self.refine)(j)?;
            if !fresh.fine(j) {
                return Err(Error::Precondition(format!("bracket at {j} has width {}", fresh.width())));
            }
            let next = match c.last() {
                None => fresh,
                Some(prev) => prev.intersect(&fresh).ok_or_else(|| {
                    Error::Precondition(format!("bracket at {j} disjoint from its predecessor"))
                })?,
            };
            c.push(next);
        }
        Ok(c[k as usize].clone())
    }
}

pub fn bracket_eval(r: &RealBracket, k: u32) -> Result<DyadInterval> {
    r.at(k)
}
