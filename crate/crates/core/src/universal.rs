//! The decidable allowed set `A`.
//!
//! Levels are grouped into blocks `[n, 2n]`. Inside a block every layer
//! `A ∩ {0,1}^m` represents one fixed basic set of measure at least the
//! threshold; levels outside all blocks are fully allowed. Block `k` carries
//! the set whose index is the first coordinate of the `k`-th pair in the
//! diagonal enumeration of ℕ×ℕ, so every enumerated set comes back in
//! infinitely many blocks.

use std::sync::Mutex;

use num_bigint::BigUint;
use thiserror::Error;

use crate::dyadic::{BasicSet, BasicSetEnumerator, BitString, Threshold, MAX_LEN};

pub const DEFAULT_GRANULARITY: u32 = 4;
pub const DEFAULT_DEPTH_LIMIT: u32 = 24;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum UniversalError {
    #[error("level {level} exceeds the depth limit {limit}")]
    DepthExceeded { level: u32, limit: u32 },
    #[error("invalid block schedule: {0}")]
    InvalidSchedule(String),
}

/// A run of levels `[lo, hi]` with `hi = 2·lo` on which `A` represents `set`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Block {
    pub index: u64,
    pub set_index: u64,
    pub lo: BigUint,
    pub hi: BigUint,
    pub set: BasicSet,
}

impl Block {
    pub fn spans(&self, level: u64) -> bool {
        let m = BigUint::from(level);
        self.lo <= m && m <= self.hi
    }

    /// `lo` as a string length, if it is one.
    pub fn lo_level(&self) -> Option<u32> {
        u32::try_from(&self.lo).ok().filter(|&l| l <= MAX_LEN)
    }

    /// `hi` as a `u64`, saturating.
    pub fn hi_level(&self) -> u64 {
        u64::try_from(&self.hi).unwrap_or(u64::MAX)
    }
}

/// How the block schedule is produced.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ScheduleSpec {
    /// Diagonal pairing over [`BasicSetEnumerator`] with the given granularity.
    Diagonal { granularity: u32 },
    /// A finite list of `(lo, set)` blocks; every later level is fully allowed.
    Explicit(Vec<(u32, BasicSet)>),
}

#[derive(Debug)]
struct LazySchedule {
    enumerator: BasicSetEnumerator,
    exhausted: bool,
    sets: Vec<BasicSet>,
    blocks: Vec<Block>,
}

impl LazySchedule {
    fn set(&mut self, index: u64) -> (u64, BasicSet) {
        while !self.exhausted && (self.sets.len() as u64) < index {
            match self.enumerator.next() {
                Some(set) => self.sets.push(set),
                None => self.exhausted = true,
            }
        }
        // The family is finite for a fixed granularity; indices past its end wrap.
        let pos = ((index - 1) % self.sets.len() as u64) as usize;
        (index, self.sets[pos].clone())
    }

    fn extend_to(&mut self, count: usize) {
        while self.blocks.len() < count {
            let k = self.blocks.len() as u64 + 1;
            let (set_index, _) = diagonal_pair(k);
            let (set_index, set) = self.set(set_index);
            let after_prev = self
                .blocks
                .last()
                .map(|b| &b.hi + 1u32)
                .unwrap_or_else(|| BigUint::from(1u32));
            let lo = after_prev
                .max(BigUint::from(set.min_level()))
                .max(BigUint::from(1u32));
            let hi = &lo * 2u32;
            self.blocks.push(Block {
                index: k,
                set_index,
                lo,
                hi,
                set,
            });
        }
    }
}

/// The `k`-th pair (1-based) of the diagonal enumeration
/// `(1,1), (1,2), (2,1), (1,3), (2,2), (3,1), …`.
pub fn diagonal_pair(k: u64) -> (u64, u64) {
    assert!(k >= 1, "pairs are numbered from 1");
    // diagonal d holds d pairs; find the d with d(d-1)/2 < k <= d(d+1)/2
    let mut d = ((2.0 * k as f64).sqrt() as u64).max(1);
    while d * (d + 1) / 2 < k {
        d += 1;
    }
    while d > 1 && (d - 1) * d / 2 >= k {
        d -= 1;
    }
    let pos = k - (d - 1) * d / 2;
    (pos, d + 1 - pos)
}

#[derive(Debug)]
pub struct UniversalSet {
    threshold: Threshold,
    spec: ScheduleSpec,
    depth_limit: u32,
    // Blocks that start at a level a string can have.
    near_blocks: Vec<Block>,
    // level (0..=64) -> index into near_blocks
    layer_block: Vec<Option<usize>>,
    lazy: Option<Mutex<LazySchedule>>,
}

impl UniversalSet {
    /// Threshold 1/3, granularity 4.
    pub fn standard() -> UniversalSet {
        UniversalSet::new(Threshold::ONE_THIRD, DEFAULT_GRANULARITY)
    }

    pub fn new(threshold: Threshold, granularity: u32) -> UniversalSet {
        let mut lazy = LazySchedule {
            enumerator: BasicSetEnumerator::new(threshold, granularity),
            exhausted: false,
            sets: Vec::new(),
            blocks: Vec::new(),
        };
        let mut count = 1;
        loop {
            lazy.extend_to(count);
            if lazy.blocks[count - 1].lo_level().is_none() {
                break;
            }
            count += 1;
        }
        let near: Vec<Block> = lazy.blocks[..count - 1].to_vec();
        UniversalSet::assemble(
            threshold,
            ScheduleSpec::Diagonal { granularity },
            near,
            Some(Mutex::new(lazy)),
        )
    }

    /// A finite hand-written schedule. Each block `[lo, 2·lo]` must start at
    /// level 1 or later, at or after its set's `min_level`, after the
    /// previous block ends, and carry a set meeting the threshold.
    pub fn explicit(
        threshold: Threshold,
        blocks: Vec<(u32, BasicSet)>,
    ) -> Result<UniversalSet, UniversalError> {
        let mut out: Vec<Block> = Vec::with_capacity(blocks.len());
        for (i, (lo, set)) in blocks.iter().enumerate() {
            let invalid = |why: &str| {
                Err(UniversalError::InvalidSchedule(format!(
                    "block {} at level {lo}: {why}",
                    i + 1
                )))
            };
            if *lo == 0 || *lo > MAX_LEN {
                return invalid("lo must be in 1..=64");
            }
            if *lo < set.min_level() {
                return invalid("set cannot be represented that high up");
            }
            if !threshold.is_met_by(set.measure()) {
                return invalid("set measure is below the threshold");
            }
            if let Some(prev) = out.last() {
                if BigUint::from(*lo) <= prev.hi {
                    return invalid("overlaps the previous block");
                }
            }
            out.push(Block {
                index: i as u64 + 1,
                set_index: i as u64 + 1,
                lo: BigUint::from(*lo),
                hi: BigUint::from(*lo) * 2u32,
                set: set.clone(),
            });
        }
        Ok(UniversalSet::assemble(
            threshold,
            ScheduleSpec::Explicit(blocks),
            out,
            None,
        ))
    }

    fn assemble(
        threshold: Threshold,
        spec: ScheduleSpec,
        near_blocks: Vec<Block>,
        lazy: Option<Mutex<LazySchedule>>,
    ) -> UniversalSet {
        let layer_block = (0..=u64::from(MAX_LEN))
            .map(|m| near_blocks.iter().position(|b| b.spans(m)))
            .collect();
        UniversalSet {
            threshold,
            spec,
            depth_limit: DEFAULT_DEPTH_LIMIT,
            near_blocks,
            layer_block,
            lazy,
        }
    }

    /// Sets the largest level accepted by [`UniversalSet::allowed_count`].
    pub fn with_depth_limit(mut self, limit: u32) -> UniversalSet {
        assert!(limit <= 62, "depth limit must stay below 63");
        self.depth_limit = limit;
        self
    }

    pub fn threshold(&self) -> Threshold {
        self.threshold
    }

    pub fn spec(&self) -> &ScheduleSpec {
        &self.spec
    }

    pub fn depth_limit(&self) -> u32 {
        self.depth_limit
    }

    /// The first `count` blocks of the schedule (fewer for a short explicit one).
    pub fn schedule_prefix(&self, count: usize) -> Vec<Block> {
        match &self.lazy {
            Some(lazy) => {
                let mut lazy = lazy.lock().expect("schedule lock poisoned");
                lazy.extend_to(count);
                lazy.blocks[..count].to_vec()
            }
            None => self.near_blocks.iter().take(count).cloned().collect(),
        }
    }

    /// Blocks that begin at or below level 64, i.e. every block a string can touch.
    pub fn near_blocks(&self) -> &[Block] {
        &self.near_blocks
    }

    pub fn block_at_level(&self, m: u64) -> Option<Block> {
        if m <= u64::from(MAX_LEN) {
            return self.layer_block[m as usize].map(|i| self.near_blocks[i].clone());
        }
        let lazy = self.lazy.as_ref()?;
        let mut lazy = lazy.lock().expect("schedule lock poisoned");
        let target = BigUint::from(m);
        let mut k = 0;
        loop {
            lazy.extend_to(k + 1);
            let block = &lazy.blocks[k];
            if block.lo > target {
                return None;
            }
            if block.hi >= target {
                return Some(block.clone());
            }
            k += 1;
        }
    }

    /// The basic set layer `m` represents; `None` means the layer is unrestricted.
    pub fn layer_set(&self, m: u32) -> Option<&BasicSet> {
        self.layer_block
            .get(m as usize)
            .copied()
            .flatten()
            .map(|i| &self.near_blocks[i].set)
    }

    /// Index (into [`UniversalSet::near_blocks`]) of the block containing level `m`.
    pub fn layer_block_index(&self, m: u32) -> Option<usize> {
        self.layer_block.get(m as usize).copied().flatten()
    }

    pub fn contains(&self, x: &BitString) -> bool {
        match self.layer_set(x.len()) {
            None => true,
            Some(set) => set.interval_contained(x),
        }
    }

    /// `|A ∩ {0,1}^m|`, computed from the block's set.
    pub fn allowed_count(&self, m: u32) -> Result<u64, UniversalError> {
        if m > self.depth_limit {
            return Err(UniversalError::DepthExceeded {
                level: m,
                limit: self.depth_limit,
            });
        }
        Ok(match self.layer_set(m) {
            None => 1u64 << m,
            Some(set) => set.count_at_level(m) as u64,
        })
    }

    /// Number of strings in `A` of length `m` that extend `v`.
    pub fn allowed_under(&self, v: &BitString, m: u32) -> u64 {
        if m < v.len() {
            return 0;
        }
        match self.layer_set(m) {
            None => 1u64 << (m - v.len()),
            Some(set) => set.count_under(v, m) as u64,
        }
    }

    /// The `rank`-th string of `A ∩ {0,1}^m` in lexicographic order.
    pub fn nth_allowed(&self, m: u32, rank: u64) -> Option<BitString> {
        match self.layer_set(m) {
            None => (m == 64 || rank < 1u64 << m)
                .then(|| BitString::from_value(rank, m))
                .flatten(),
            Some(set) => set.nth_at_level(m, u128::from(rank)),
        }
    }
}
