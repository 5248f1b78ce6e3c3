use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use super::{BitString, DyadicError, DyadicMeasure, MAX_LEN};

/// Half-open run `[start, end)` of `[0, 2^64)`, in units of `2^-64`.
type Run = (u128, u128);

const FULL: u128 = 1u128 << MAX_LEN;

/// A finite union of basic intervals `I_x`, kept as its canonical antichain.
///
/// The antichain is prefix-free, contains no sibling pair, and is sorted in
/// tree order. It is exactly the set of maximal basic intervals inside the
/// union, so two `BasicSet`s are equal iff they cover the same subset of Ω.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct BasicSet {
    antichain: Vec<BitString>,
}

impl BasicSet {
    pub fn empty() -> BasicSet {
        BasicSet::default()
    }

    /// `{ε}`, the whole space.
    pub fn full() -> BasicSet {
        BasicSet {
            antichain: vec![BitString::EMPTY],
        }
    }

    pub fn singleton(x: BitString) -> BasicSet {
        BasicSet { antichain: vec![x] }
    }

    /// Union of `I_x` over the given strings, canonicalized. Duplicates and
    /// nested strings are fine.
    pub fn from_strings<I: IntoIterator<Item = BitString>>(strings: I) -> BasicSet {
        let mut runs: Vec<Run> = strings
            .into_iter()
            .map(|x| {
                let start = x.interval_start();
                (start, start + x.interval_span())
            })
            .collect();
        runs.sort_unstable();
        BasicSet::from_runs(merge_sorted(runs))
    }

    pub fn antichain(&self) -> &[BitString] {
        &self.antichain
    }

    pub fn is_empty(&self) -> bool {
        self.antichain.is_empty()
    }

    pub fn len(&self) -> usize {
        self.antichain.len()
    }

    pub fn measure(&self) -> DyadicMeasure {
        let total: u128 = self.antichain.iter().map(BitString::interval_span).sum();
        DyadicMeasure::new(total, MAX_LEN)
    }

    /// Longest antichain element; the lowest level the set can be represented at.
    pub fn min_level(&self) -> u32 {
        self.antichain.iter().map(BitString::len).max().unwrap_or(0)
    }

    /// The `n`-bit strings whose intervals tile this set.
    pub fn represent_at(&self, n: u32) -> Result<Vec<BitString>, DyadicError> {
        let min_level = self.min_level();
        if n < min_level {
            return Err(DyadicError::LevelTooLow {
                level: n,
                min_level,
            });
        }
        if n > MAX_LEN {
            return Err(DyadicError::TooLong(n));
        }
        let mut out = Vec::new();
        for x in &self.antichain {
            let k = n - x.len();
            let count = 1u128 << k;
            for suffix in 0..count {
                out.push(x.concat_value(suffix as u64, k));
            }
        }
        Ok(out)
    }

    /// `I_x ⊆ self`: some antichain element is a prefix of `x`.
    pub fn interval_contained(&self, x: &BitString) -> bool {
        // A prefix of x, if present, is x's tree-order predecessor in the antichain.
        let idx = self
            .antichain
            .partition_point(|y| y.tree_cmp(x) != Ordering::Greater);
        idx > 0 && self.antichain[idx - 1].is_prefix_of(x)
    }

    /// Number of `m`-bit strings extending `v` whose intervals lie in this set.
    pub fn count_under(&self, v: &BitString, m: u32) -> u128 {
        if m < v.len() {
            return 0;
        }
        if self.interval_contained(v) {
            return 1u128 << (m - v.len());
        }
        let start = self
            .antichain
            .partition_point(|y| y.tree_cmp(v) == Ordering::Less);
        self.antichain[start..]
            .iter()
            .take_while(|y| v.is_prefix_of(y))
            .filter(|y| y.len() <= m)
            .map(|y| 1u128 << (m - y.len()))
            .sum()
    }

    /// Number of `m`-bit strings whose intervals lie in this set.
    pub fn count_at_level(&self, m: u32) -> u128 {
        self.count_under(&BitString::EMPTY, m)
    }

    /// The `rank`-th (0-based, tree order) `m`-bit string inside this set.
    pub fn nth_at_level(&self, m: u32, rank: u128) -> Option<BitString> {
        let mut rank = rank;
        for x in self.antichain.iter().filter(|x| x.len() <= m) {
            let k = m - x.len();
            let size = 1u128 << k;
            if rank < size {
                return Some(x.concat_value(rank as u64, k));
            }
            rank -= size;
        }
        None
    }

    pub fn union(&self, other: &BasicSet) -> BasicSet {
        let mut runs = self.runs();
        runs.extend(other.runs());
        runs.sort_unstable();
        BasicSet::from_runs(merge_sorted(runs))
    }

    pub fn intersection(&self, other: &BasicSet) -> BasicSet {
        let a = self.runs();
        let b = other.runs();
        let (mut i, mut j) = (0, 0);
        let mut out = Vec::new();
        while i < a.len() && j < b.len() {
            let start = a[i].0.max(b[j].0);
            let end = a[i].1.min(b[j].1);
            if start < end {
                out.push((start, end));
            }
            if a[i].1 < b[j].1 {
                i += 1;
            } else {
                j += 1;
            }
        }
        BasicSet::from_runs(out)
    }

    pub fn complement(&self) -> BasicSet {
        let mut out = Vec::new();
        let mut cursor = 0;
        for (start, end) in self.runs() {
            if cursor < start {
                out.push((cursor, start));
            }
            cursor = end;
        }
        if cursor < FULL {
            out.push((cursor, FULL));
        }
        BasicSet::from_runs(out)
    }

    pub fn difference(&self, other: &BasicSet) -> BasicSet {
        self.intersection(&other.complement())
    }

    pub fn disjoint(&self, other: &BasicSet) -> bool {
        self.intersection(other).is_empty()
    }

    pub fn is_subset(&self, other: &BasicSet) -> bool {
        self.difference(other).is_empty()
    }

    fn runs(&self) -> Vec<Run> {
        let mut runs: Vec<Run> = Vec::with_capacity(self.antichain.len());
        for x in &self.antichain {
            let start = x.interval_start();
            let end = start + x.interval_span();
            match runs.last_mut() {
                Some(last) if last.1 == start => last.1 = end,
                _ => runs.push((start, end)),
            }
        }
        runs
    }

    /// Greedy split of each run into maximal aligned dyadic blocks.
    fn from_runs(runs: Vec<Run>) -> BasicSet {
        let mut antichain = Vec::new();
        for (mut start, end) in runs {
            while start < end {
                let align = if start == 0 {
                    MAX_LEN
                } else {
                    start.trailing_zeros().min(MAX_LEN)
                };
                let mut k = align;
                while start + (1u128 << k) > end {
                    k -= 1;
                }
                let len = MAX_LEN - k;
                let value = if k == MAX_LEN { 0 } else { (start >> k) as u64 };
                antichain.push(BitString::from_value(value, len).expect("aligned block"));
                start += 1u128 << k;
            }
        }
        BasicSet { antichain }
    }
}

fn merge_sorted(runs: Vec<Run>) -> Vec<Run> {
    let mut merged: Vec<Run> = Vec::with_capacity(runs.len());
    for (start, end) in runs {
        match merged.last_mut() {
            Some(last) if start <= last.1 => last.1 = last.1.max(end),
            _ => merged.push((start, end)),
        }
    }
    merged
}

impl fmt::Display for BasicSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.antichain.is_empty() {
            return f.write_str("empty");
        }
        for (i, x) in self.antichain.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{x}")?;
        }
        Ok(())
    }
}

impl fmt::Debug for BasicSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BasicSet{{{self}}}")
    }
}

impl FromStr for BasicSet {
    type Err = DyadicError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if s == "empty" {
            return Ok(BasicSet::empty());
        }
        let strings = s
            .split(',')
            .map(|tok| tok.trim().parse::<BitString>())
            .collect::<Result<Vec<_>, _>>()?;
        Ok(BasicSet::from_strings(strings))
    }
}
