use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::dyadic::{BasicSet, BitString, DyadicMeasure};
use crate::universal::UniversalSet;

/// Deepest level a game may use; keeps every per-level count inside a `u64`
/// and leaves room for targets one level further down.
pub const MAX_GAME_DEPTH: u32 = 62;

/// One step of Bob's enumeration: `D(description) = object`, revealed at `clock`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct EnumerationEvent {
    pub clock: u64,
    pub description: BitString,
    pub object: BitString,
}

impl fmt::Display for EnumerationEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {}", self.clock, self.description, self.object)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GameError {
    #[error("description {0} is not in the allowed set")]
    NotAllowed(BitString),
    #[error("description {description} is comparable with existing description {existing}")]
    PrefixConflict {
        description: BitString,
        existing: BitString,
    },
    #[error("description {0} is already defined")]
    Redefined(BitString),
    #[error("level {level} exceeds the game depth {depth_max}")]
    DepthExceeded { level: u32, depth_max: u32 },
    #[error("event clock {got} does not follow state clock {expected}")]
    OutOfOrder { expected: u64, got: u64 },
    #[error("invalid game configuration: {0}")]
    InvalidConfig(String),
}

/// The enumerated part `D̄` of Bob's decompressor plus the bookkeeping needed
/// to answer freeness queries without materializing layers.
///
/// For every vertex `v` that is a prefix of some description, `counts[v][m]`
/// holds the number of free allowed `m`-bit strings extending `v`. Vertices
/// off that trie are either dead (below a description) or untouched, in which
/// case the count is just the allowed count.
#[derive(Clone)]
pub struct GameState {
    universal: Arc<UniversalSet>,
    depth_max: u32,
    clock: u64,
    domain: BTreeMap<BitString, BitString>,
    shortest: HashMap<BitString, u32>,
    counts: HashMap<BitString, Vec<u64>>,
    totals: Vec<u64>,
}

impl fmt::Debug for GameState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GameState")
            .field("depth_max", &self.depth_max)
            .field("clock", &self.clock)
            .field("domain", &self.domain)
            .finish_non_exhaustive()
    }
}

impl GameState {
    pub fn new(universal: Arc<UniversalSet>, depth_max: u32) -> Result<GameState, GameError> {
        if depth_max > MAX_GAME_DEPTH {
            return Err(GameError::InvalidConfig(format!(
                "depth {depth_max} exceeds {MAX_GAME_DEPTH}"
            )));
        }
        let totals = (0..=depth_max)
            .map(|m| universal.allowed_under(&BitString::EMPTY, m))
            .collect();
        Ok(GameState {
            universal,
            depth_max,
            clock: 0,
            domain: BTreeMap::new(),
            shortest: HashMap::new(),
            counts: HashMap::new(),
            totals,
        })
    }

    pub fn universal(&self) -> &Arc<UniversalSet> {
        &self.universal
    }

    pub fn depth_max(&self) -> u32 {
        self.depth_max
    }

    pub fn clock(&self) -> u64 {
        self.clock
    }

    /// The enumerated graph: description → object.
    pub fn domain(&self) -> &BTreeMap<BitString, BitString> {
        &self.domain
    }

    /// Current `C_D(x)`: length of the shortest description of `x` so far.
    pub fn description_length(&self, x: &BitString) -> Option<u32> {
        self.shortest.get(x).copied()
    }

    pub fn is_described(&self, x: &BitString) -> bool {
        self.shortest.contains_key(x)
    }

    /// Checks an event against the game rules and records it.
    pub fn apply_event(&mut self, event: EnumerationEvent) -> Result<(), GameError> {
        let p = event.description;
        if event.clock != self.clock + 1 {
            return Err(GameError::OutOfOrder {
                expected: self.clock + 1,
                got: event.clock,
            });
        }
        if p.len() > self.depth_max {
            return Err(GameError::DepthExceeded {
                level: p.len(),
                depth_max: self.depth_max,
            });
        }
        if self.domain.contains_key(&p) {
            return Err(GameError::Redefined(p));
        }
        if !self.universal.contains(&p) {
            return Err(GameError::NotAllowed(p));
        }
        if let Some(existing) = self.conflict_with(&p) {
            return Err(GameError::PrefixConflict {
                description: p,
                existing,
            });
        }
        self.insert(p);
        self.domain.insert(p, event.object);
        let len = self.shortest.entry(event.object).or_insert(p.len());
        *len = (*len).min(p.len());
        self.clock = event.clock;
        Ok(())
    }

    fn conflict_with(&self, p: &BitString) -> Option<BitString> {
        if let Some(ancestor) = p.prefixes().find(|w| self.domain.contains_key(w)) {
            return Some(ancestor);
        }
        if self.counts.contains_key(p) {
            return self.domain.keys().find(|d| p.is_prefix_of(d)).copied();
        }
        None
    }

    fn insert(&mut self, p: BitString) {
        let universal = &self.universal;
        let depth = self.depth_max;
        // Free allowed strings lost at each level: every allowed extension of
        // p below it, and above it the truncation of p if that was still free.
        let deltas: Vec<u64> = (0..=depth)
            .map(|m| {
                if m >= p.len() {
                    universal.allowed_under(&p, m)
                } else {
                    let u = p.prefix(m);
                    u64::from(!self.counts.contains_key(&u) && universal.contains(&u))
                }
            })
            .collect();
        for v in p.prefixes() {
            let entry = self.counts.entry(v).or_insert_with(|| {
                (0..=depth).map(|m| universal.allowed_under(&v, m)).collect()
            });
            for m in v.len()..=depth {
                entry[m as usize] -= deltas[m as usize];
            }
        }
        for (total, delta) in self.totals.iter_mut().zip(&deltas) {
            *total -= delta;
        }
    }

    /// `D̄ ∪ {u}` is still prefix-free.
    pub fn is_free(&self, u: &BitString) -> bool {
        // Walk down the trie of description prefixes; leaving it means no
        // description is comparable with u.
        for w in u.prefixes() {
            if !self.counts.contains_key(&w) {
                return true;
            }
            if self.domain.contains_key(&w) {
                return false;
            }
        }
        false
    }

    fn check_level(&self, n: u32) -> Result<(), GameError> {
        if n > self.depth_max {
            return Err(GameError::DepthExceeded {
                level: n,
                depth_max: self.depth_max,
            });
        }
        Ok(())
    }

    /// Number of free allowed strings of length `n`.
    pub fn free_allowed_count(&self, n: u32) -> Result<u64, GameError> {
        self.check_level(n)?;
        Ok(self.totals[n as usize])
    }

    pub fn free_allowed_fraction(&self, n: u32) -> Result<DyadicMeasure, GameError> {
        let count = self.free_allowed_count(n)?;
        Ok(DyadicMeasure::new(u128::from(count), n))
    }

    /// The free allowed strings of length `n` as a basic set, by set algebra.
    pub fn free_allowed_set(&self, n: u32) -> Result<BasicSet, GameError> {
        self.check_level(n)?;
        Ok(free_allowed_set(&self.universal, self.domain.keys(), n))
    }

    // Free allowed m-bit strings below v, given no proper prefix of v is a description.
    fn count_below(&self, v: &BitString, m: u32) -> u64 {
        if self.domain.contains_key(v) {
            0
        } else if let Some(counts) = self.counts.get(v) {
            counts[m as usize]
        } else {
            self.universal.allowed_under(v, m)
        }
    }

    /// The `rank`-th free allowed string of length `m` in lexicographic order.
    pub fn nth_free_allowed(&self, m: u32, rank: u64) -> Option<BitString> {
        if m > self.depth_max || rank >= self.totals[m as usize] {
            return None;
        }
        let mut rank = rank;
        let mut v = BitString::EMPTY;
        while v.len() < m {
            let left = v.child(false);
            let on_left = self.count_below(&left, m);
            if rank < on_left {
                v = left;
            } else {
                rank -= on_left;
                v = v.child(true);
            }
        }
        Some(v)
    }
}

/// Free allowed `n`-bit strings for a given domain, as a basic set.
///
/// A string `u` of length `n` is free iff `I_u` misses every `I_p`; that is,
/// `u` avoids the coarsened shadow `{p : |p| <= n} ∪ {p[..n] : |p| > n}`.
pub fn free_allowed_set<'a, I>(universal: &UniversalSet, domain: I, n: u32) -> BasicSet
where
    I: IntoIterator<Item = &'a BitString>,
{
    let allowed = universal.layer_set(n).cloned().unwrap_or_else(BasicSet::full);
    let shadow = BasicSet::from_strings(
        domain
            .into_iter()
            .map(|p| if p.len() <= n { *p } else { p.prefix(n) }),
    );
    allowed.difference(&shadow)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dyadic::Threshold;

    fn b(s: &str) -> BitString {
        s.parse().unwrap()
    }

    fn ev(clock: u64, p: &str, x: &str) -> EnumerationEvent {
        EnumerationEvent {
            clock,
            description: b(p),
            object: b(x),
        }
    }

    fn open_state(depth: u32) -> GameState {
        let a = UniversalSet::explicit(Threshold::ONE_THIRD, vec![]).unwrap();
        GameState::new(Arc::new(a), depth).unwrap()
    }

    #[test]
    fn apply_event_rules() {
        let mut s = GameState::new(Arc::new(UniversalSet::standard()), 14).unwrap();
        s.apply_event(ev(1, "0", "1")).unwrap();
        assert!(matches!(
            s.apply_event(ev(2, "01", "1")),
            Err(GameError::PrefixConflict { .. })
        ));
        assert_eq!(s.apply_event(ev(2, "0", "1")), Err(GameError::Redefined(b("0"))));
        assert_eq!(
            s.apply_event(ev(2, "1000000", "1")),
            Err(GameError::NotAllowed(b("1000000")))
        );
        assert!(matches!(
            s.apply_event(ev(2, &"1".repeat(15), "1")),
            Err(GameError::DepthExceeded { level: 15, .. })
        ));
        assert!(matches!(
            s.apply_event(ev(5, "10", "1")),
            Err(GameError::OutOfOrder { expected: 2, got: 5 })
        ));
        assert_eq!(s.clock(), 1);
        s.apply_event(ev(2, "10", "1")).unwrap();
        assert_eq!(s.description_length(&b("1")), Some(1));
        assert_eq!(s.description_length(&b("0")), None);
    }

    #[test]
    fn prefix_conflict_from_above() {
        let mut s = open_state(6);
        s.apply_event(ev(1, "0110", "1")).unwrap();
        assert_eq!(
            s.apply_event(ev(2, "01", "1")),
            Err(GameError::PrefixConflict {
                description: b("01"),
                existing: b("0110")
            })
        );
    }

    #[test]
    fn freeness_examples() {
        let mut s = open_state(4);
        assert!(s.is_free(&b("0")) && s.is_free(&b("1111")) && s.is_free(&BitString::EMPTY));
        s.apply_event(ev(1, "0", "1")).unwrap();
        assert!(!s.is_free(&b("00")));
        assert!(s.is_free(&b("10")));

        let mut s = open_state(4);
        s.apply_event(ev(1, "10", "1")).unwrap();
        assert!(!s.is_free(&b("1")));
        assert!(!s.is_free(&BitString::EMPTY));
        assert!(s.is_free(&b("11")));
    }

    #[test]
    fn fraction_examples() {
        let mut s = open_state(4);
        assert_eq!(s.free_allowed_fraction(3).unwrap(), DyadicMeasure::ONE);
        s.apply_event(ev(1, "0", "1")).unwrap();
        assert_eq!(s.free_allowed_fraction(2).unwrap(), DyadicMeasure::pow2_neg(1));
        assert!(s.free_allowed_fraction(5).is_err());

        // block {0} covering level 2
        let a = UniversalSet::explicit(Threshold::ONE_THIRD, vec![(1, "0".parse().unwrap())])
            .unwrap();
        let mut s = GameState::new(Arc::new(a), 2).unwrap();
        s.apply_event(ev(1, "00", "1")).unwrap();
        assert_eq!(s.free_allowed_fraction(2).unwrap(), DyadicMeasure::pow2_neg(2));
        assert_eq!(s.free_allowed_set(2).unwrap().to_string(), "01");
    }

    #[test]
    fn counts_agree_with_set_algebra() {
        let mut s = GameState::new(Arc::new(UniversalSet::standard()), 10).unwrap();
        for (i, p) in ["0000000", "01", "0001", "11", "00101110", "001000", "100"]
            .iter()
            .enumerate()
        {
            s.apply_event(ev(i as u64 + 1, p, "1")).unwrap();
            for n in 0..=10 {
                let set = s.free_allowed_set(n).unwrap();
                assert_eq!(
                    s.free_allowed_fraction(n).unwrap(),
                    set.measure(),
                    "level {n} after {p}"
                );
                let listed: Vec<_> = (0..s.free_allowed_count(n).unwrap())
                    .map(|r| s.nth_free_allowed(n, r).unwrap())
                    .collect();
                assert_eq!(listed, set.represent_at(n).unwrap());
            }
        }
    }
}
