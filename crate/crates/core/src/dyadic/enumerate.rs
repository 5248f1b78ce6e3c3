use super::{BasicSet, BitString, Threshold};

/// Lazily enumerates canonical basic sets with measure at least `threshold`
/// and `min_level <= granularity_limit`.
///
/// Order: by `min_level`, then lexicographically on the sorted list of
/// vertices representing the set at its `min_level`. Each set appears once,
/// at its own `min_level`. Level `n` walks all subsets of `{0,1}^n`, so
/// anything past level 4 is only practical when consumed lazily.
#[derive(Clone, Debug)]
pub struct BasicSetEnumerator {
    threshold: Threshold,
    limit: u32,
    level: u32,
    // Current subset of level-`level` leaves, as increasing leaf indices.
    current: Vec<u64>,
    done: bool,
}

impl BasicSetEnumerator {
    pub fn new(threshold: Threshold, granularity_limit: u32) -> BasicSetEnumerator {
        assert!(granularity_limit < 64, "granularity limit must be below 64");
        BasicSetEnumerator {
            threshold,
            limit: granularity_limit,
            level: 0,
            current: Vec::new(),
            done: false,
        }
    }

    /// Advances `current` to the next subset in lexicographic preorder.
    /// Returns false once every level up to the limit is exhausted.
    fn advance(&mut self) -> bool {
        let leaves = 1u64 << self.level;
        match self.current.last().copied() {
            None => self.current.push(0),
            Some(last) if last + 1 < leaves => self.current.push(last + 1),
            Some(_) => {
                self.current.pop();
                match self.current.last_mut() {
                    Some(last) => *last += 1,
                    None => {
                        if self.level == self.limit {
                            return false;
                        }
                        self.level += 1;
                        self.current.push(0);
                    }
                }
            }
        }
        true
    }

    fn accept(&self) -> Option<BasicSet> {
        // measure = |subset| / 2^level
        let count = self.current.len() as u128;
        let lhs = count * u128::from(self.threshold.den());
        let rhs = u128::from(self.threshold.num()) << self.level;
        if lhs < rhs {
            return None;
        }
        let set = BasicSet::from_strings(
            self.current
                .iter()
                .map(|&v| BitString::from_value(v, self.level).expect("leaf index")),
        );
        (set.min_level() == self.level).then_some(set)
    }
}

impl Iterator for BasicSetEnumerator {
    type Item = BasicSet;

    fn next(&mut self) -> Option<BasicSet> {
        while !self.done {
            if !self.advance() {
                self.done = true;
                break;
            }
            if let Some(set) = self.accept() {
                return Some(set);
            }
        }
        None
    }
}

/// All basic sets of measure `>= threshold` and `min_level <= granularity_limit`,
/// in enumeration order.
pub fn enumerate_basic_sets(threshold: Threshold, granularity_limit: u32) -> Vec<BasicSet> {
    BasicSetEnumerator::new(threshold, granularity_limit).collect()
}
