//! Finite partial decompressors stored as description tables.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::dyadic::BitString;
use crate::universal::UniversalSet;

/// `C_D(x)`: the length of a shortest description, or infinity when there is none.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Complexity {
    Finite(u32),
    Infinite,
}

impl Complexity {
    pub fn finite(self) -> Option<u32> {
        match self {
            Complexity::Finite(n) => Some(n),
            Complexity::Infinite => None,
        }
    }
}

impl fmt::Display for Complexity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Complexity::Finite(n) => write!(f, "{n}"),
            Complexity::Infinite => f.write_str("inf"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TableError {
    #[error("description {description} needs level {level}, beyond the depth limit {limit}")]
    DepthExceeded {
        description: BitString,
        level: u32,
        limit: u32,
    },
    #[error("level {0} of the allowed set has too few strings")]
    LayerTooSmall(u32),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

/// A finite map from descriptions to objects.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DescriptionTable {
    entries: BTreeMap<BitString, BitString>,
}

impl DescriptionTable {
    pub fn new() -> DescriptionTable {
        DescriptionTable::default()
    }

    /// Adds `description → object`, returning the object it replaced.
    pub fn insert(&mut self, description: BitString, object: BitString) -> Option<BitString> {
        self.entries.insert(description, object)
    }

    pub fn get(&self, description: &BitString) -> Option<&BitString> {
        self.entries.get(description)
    }

    pub fn entries(&self) -> &BTreeMap<BitString, BitString> {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// The set of objects that have a description.
    pub fn image(&self) -> BTreeSet<BitString> {
        self.entries.values().copied().collect()
    }

    pub fn c_of(&self, x: &BitString) -> Complexity {
        self.entries
            .iter()
            .filter(|(_, obj)| *obj == x)
            .map(|(p, _)| p.len())
            .min()
            .map_or(Complexity::Infinite, Complexity::Finite)
    }

    /// `C_D` for every object in the image at once.
    pub fn complexities(&self) -> BTreeMap<BitString, u32> {
        let mut out: BTreeMap<BitString, u32> = BTreeMap::new();
        for (p, x) in &self.entries {
            out.entry(*x)
                .and_modify(|n| *n = (*n).min(p.len()))
                .or_insert(p.len());
        }
        out
    }

    /// No description is a proper prefix of another.
    pub fn validate_prefix_free(&self) -> bool {
        // In tree order a prefix sorts directly before some extension of it,
        // so comparing neighbours suffices.
        let mut keys: Vec<&BitString> = self.entries.keys().collect();
        keys.sort_by(|a, b| a.tree_cmp(b));
        keys.windows(2).all(|w| !w[0].is_prefix_of(w[1]))
    }

    /// Moves every description `p` to `a(p)`: the `r`-th string of
    /// `A ∩ {0,1}^(|p|+2)` in lexicographic order, where `r` is the rank of
    /// `p` among strings of its length. The result is injective and lies in
    /// `A`, but need not be prefix-free.
    pub fn rebase(&self, universal: &UniversalSet) -> Result<DescriptionTable, TableError> {
        let limit = universal.depth_limit();
        let mut out = DescriptionTable::new();
        for (p, x) in &self.entries {
            let level = p.len() + 2;
            if level > limit {
                return Err(TableError::DepthExceeded {
                    description: *p,
                    level,
                    limit,
                });
            }
            let moved = universal
                .nth_allowed(level, p.value())
                .ok_or(TableError::LayerTooSmall(level))?;
            out.insert(moved, *x);
        }
        Ok(out)
    }
}

impl FromIterator<(BitString, BitString)> for DescriptionTable {
    fn from_iter<T: IntoIterator<Item = (BitString, BitString)>>(iter: T) -> Self {
        DescriptionTable {
            entries: iter.into_iter().collect(),
        }
    }
}

/// One `p x` pair per line.
impl fmt::Display for DescriptionTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (p, x) in &self.entries {
            writeln!(f, "{p} {x}")?;
        }
        Ok(())
    }
}

impl FromStr for DescriptionTable {
    type Err = TableError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut table = DescriptionTable::new();
        for (i, raw) in s.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let parse_err = |msg: String| TableError::Parse { line: i + 1, msg };
            let mut fields = line.split_whitespace();
            let (Some(p), Some(x), None) = (fields.next(), fields.next(), fields.next()) else {
                return Err(parse_err("expected `p x`".into()));
            };
            let p: BitString = p.parse().map_err(|e| parse_err(format!("{e}")))?;
            let x: BitString = x.parse().map_err(|e| parse_err(format!("{e}")))?;
            if table.insert(p, x).is_some() {
                return Err(parse_err(format!("description {p} listed twice")));
            }
        }
        Ok(table)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dyadic::Threshold;

    fn bs(s: &str) -> BitString {
        s.parse().unwrap()
    }

    fn table(pairs: &[(&str, &str)]) -> DescriptionTable {
        pairs.iter().map(|(p, x)| (bs(p), bs(x))).collect()
    }

    #[test]
    fn complexity_of_objects() {
        let x = bs("111");
        assert_eq!(DescriptionTable::new().c_of(&x), Complexity::Infinite);
        assert_eq!(table(&[("01", "111")]).c_of(&x), Complexity::Finite(2));
        assert_eq!(table(&[("01", "111"), ("1", "111")]).c_of(&x), Complexity::Finite(1));
        assert!(Complexity::Finite(u32::MAX) < Complexity::Infinite);
    }

    #[test]
    fn prefix_freeness() {
        assert!(DescriptionTable::new().validate_prefix_free());
        assert!(table(&[("0", "0"), ("10", "0")]).validate_prefix_free());
        assert!(!table(&[("0", "0"), ("01", "0")]).validate_prefix_free());
        assert!(!table(&[("0", "0"), ("1", "1"), ("011", "0")]).validate_prefix_free());
        assert!(!table(&[("eps", "0"), ("1", "1")]).validate_prefix_free());
    }

    #[test]
    fn rebase_at_unrestricted_level() {
        let universal = UniversalSet::explicit(Threshold::ONE_THIRD, vec![]).unwrap();
        let moved = table(&[("1", "0")]).rebase(&universal).unwrap();
        assert_eq!(moved, table(&[("001", "0")]));
        assert_eq!(DescriptionTable::new().rebase(&universal).unwrap(), DescriptionTable::new());
    }

    #[test]
    fn rebase_into_a_block() {
        // Level 4 represents {1}: allowed strings are 1000..1111.
        let universal =
            UniversalSet::explicit(Threshold::ONE_THIRD, vec![(4, "1".parse().unwrap())]).unwrap();
        let moved = table(&[("00", "10"), ("11", "0")])
            .rebase(&universal)
            .unwrap();
        assert_eq!(moved.get(&bs("1000")), Some(&bs("10")));
        assert_eq!(moved.get(&bs("1011")), Some(&bs("0")));
    }

    #[test]
    fn rebase_respects_depth_limit() {
        let universal = UniversalSet::standard().with_depth_limit(10);
        let deep = table(&[("000000000", "0")]);
        assert!(matches!(
            deep.rebase(&universal),
            Err(TableError::DepthExceeded { level: 11, .. })
        ));
    }

    #[test]
    fn text_round_trip() {
        let t = table(&[("0", "11"), ("10", "eps")]);
        assert_eq!(t.to_string().parse::<DescriptionTable>().unwrap(), t);
        assert!(matches!(
            "0 1\n0 0\n".parse::<DescriptionTable>(),
            Err(TableError::Parse { line: 2, .. })
        ));
        assert!("0\n".parse::<DescriptionTable>().is_err());
    }
}
