//! Online Kraft–Chaitin allocation.
//!
//! Requests arrive one at a time as lengths `n`; each is answered with an
//! `n`-bit string so that no answer is ever a prefix of another. As long as
//! the requested `2^-n` never exceed what is left, every request succeeds.
//!
//! The free space is kept like a buddy allocator with at most one free block
//! per size: the free intervals spell out the binary expansion of the
//! remaining measure.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::dyadic::{BitString, DyadicMeasure, MAX_LEN};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum AllocError {
    #[error("request for length {requested} exceeds remaining measure {remaining}")]
    KraftExceeded {
        requested: u32,
        remaining: DyadicMeasure,
    },
    #[error("requested length {0} exceeds the 64-bit string limit")]
    TooLong(u32),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Allocator {
    // length -> the unique free interval of that length
    free: BTreeMap<u32, BitString>,
    spent: DyadicMeasure,
    issued: usize,
}

impl Default for Allocator {
    fn default() -> Self {
        Allocator::new()
    }
}

impl Allocator {
    pub fn new() -> Allocator {
        Allocator {
            free: BTreeMap::from([(0, BitString::EMPTY)]),
            spent: DyadicMeasure::ZERO,
            issued: 0,
        }
    }

    /// Allocates an `n`-bit string.
    ///
    /// Takes the longest free interval of length `<= n`, hands out its
    /// leftmost depth-`n` extension and frees the right siblings along the
    /// path (one per length strictly between). On failure the state is
    /// left untouched.
    pub fn allocate(&mut self, n: u32) -> Result<BitString, AllocError> {
        if n > MAX_LEN {
            return Err(AllocError::TooLong(n));
        }
        let (&len, &base) = match self.free.range(..=n).next_back() {
            Some(entry) => entry,
            None => {
                return Err(AllocError::KraftExceeded {
                    requested: n,
                    remaining: self.remaining(),
                })
            }
        };
        self.free.remove(&len);
        let mut path = base;
        for _ in len..n {
            self.free.insert(path.len() + 1, path.child(true));
            path = path.child(false);
        }
        self.spent = self.spent + DyadicMeasure::pow2_neg(n);
        self.issued += 1;
        Ok(path)
    }

    /// `1 - spent`, which always equals the total measure of the free intervals.
    pub fn remaining(&self) -> DyadicMeasure {
        DyadicMeasure::ONE
            .checked_sub(self.spent)
            .expect("spent never exceeds 1")
    }

    pub fn spent(&self) -> DyadicMeasure {
        self.spent
    }

    /// Free intervals, shortest first.
    pub fn free_intervals(&self) -> impl Iterator<Item = BitString> + '_ {
        self.free.values().copied()
    }

    pub fn issued(&self) -> usize {
        self.issued
    }
}
