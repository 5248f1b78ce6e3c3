//! Strategies for the enumerating side of the game.

use std::collections::{BTreeMap, VecDeque};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::alice::AllocationLedger;
use super::state::{EnumerationEvent, GameState};
use crate::dyadic::BitString;

/// Length of the filler objects Bob describes when he is not chasing targets.
const FILLER_OBJECT_LEN: u32 = 40;

/// Bob: sees the whole game and proposes the next enumeration event, or
/// `None` when he has nothing more to enumerate.
pub trait Bob {
    fn next_event(
        &mut self,
        state: &GameState,
        ledgers: &[AllocationLedger],
    ) -> Option<EnumerationEvent>;
}

fn event(state: &GameState, description: BitString, object: BitString) -> EnumerationEvent {
    EnumerationEvent {
        clock: state.clock() + 1,
        description,
        object,
    }
}

fn filler(counter: &mut u64) -> BitString {
    *counter += 1;
    BitString::from_value(*counter, FILLER_OBJECT_LEN).expect("filler counter fits")
}

fn random_free_at(state: &GameState, level: u32, rng: &mut ChaCha8Rng) -> Option<BitString> {
    let count = state.free_allowed_count(level).ok()?;
    if count == 0 {
        return None;
    }
    state.nth_free_allowed(level, rng.gen_range(0..count))
}

fn levels_with_room(state: &GameState, levels: impl Iterator<Item = u32>) -> Vec<u32> {
    levels
        .filter(|&m| state.free_allowed_count(m).is_ok_and(|c| c > 0))
        .collect()
}

/// Replays a fixed event list verbatim, including events the engine will reject.
#[derive(Debug, Clone)]
pub struct ReplayBob {
    events: VecDeque<EnumerationEvent>,
}

impl ReplayBob {
    pub fn new(events: impl IntoIterator<Item = EnumerationEvent>) -> ReplayBob {
        ReplayBob {
            events: events.into_iter().collect(),
        }
    }
}

impl Bob for ReplayBob {
    fn next_event(&mut self, _: &GameState, _: &[AllocationLedger]) -> Option<EnumerationEvent> {
        self.events.pop_front()
    }
}

/// Serves a queue of length requests Kraft–Chaitin style, restricted to free
/// allowed strings: each request gets the leftmost free allowed string of
/// that length. Requests that cannot be served are skipped.
#[derive(Debug, Clone)]
pub struct GreedyKcBob {
    requests: VecDeque<u32>,
    objects: u64,
    skipped: Vec<u32>,
}

impl GreedyKcBob {
    pub fn new(requests: impl IntoIterator<Item = u32>) -> GreedyKcBob {
        GreedyKcBob {
            requests: requests.into_iter().collect(),
            objects: 0,
            skipped: Vec::new(),
        }
    }

    /// `count` request lengths drawn uniformly from `1..=depth`.
    pub fn seeded(seed: u64, count: usize, depth: u32) -> GreedyKcBob {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        GreedyKcBob::new((0..count).map(|_| rng.gen_range(1..=depth.max(1))))
    }

    /// Requests that found no free allowed string.
    pub fn skipped(&self) -> &[u32] {
        &self.skipped
    }
}

impl Bob for GreedyKcBob {
    fn next_event(&mut self, state: &GameState, _: &[AllocationLedger]) -> Option<EnumerationEvent> {
        while let Some(n) = self.requests.pop_front() {
            match state.nth_free_allowed(n, 0) {
                Some(p) => return Some(event(state, p, filler(&mut self.objects))),
                None => self.skipped.push(n),
            }
        }
        None
    }
}

/// Describes uniformly random free allowed strings at random non-empty levels.
#[derive(Debug, Clone)]
pub struct RandomBob {
    rng: ChaCha8Rng,
    objects: u64,
}

impl RandomBob {
    pub fn new(seed: u64) -> RandomBob {
        RandomBob {
            rng: ChaCha8Rng::seed_from_u64(seed),
            objects: 0,
        }
    }
}

impl Bob for RandomBob {
    fn next_event(&mut self, state: &GameState, _: &[AllocationLedger]) -> Option<EnumerationEvent> {
        let levels = levels_with_room(state, 1..=state.depth_max());
        if levels.is_empty() {
            return None;
        }
        let level = levels[self.rng.gen_range(0..levels.len())];
        let p = random_free_at(state, level, &mut self.rng)?;
        Some(event(state, p, filler(&mut self.objects)))
    }
}

/// Which free allowed strings the adversary spends on Alice's targets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ServePolicy {
    /// Shortest available description first (smallest `C_D`).
    Shortest,
    /// Deepest level first, which serves the most targets.
    Deepest,
}

/// Tries to beat Alice.
///
/// Before any trigger fires it crowds the deepest block reachable within
/// the game depth, describing random free allowed strings there. Once an
/// Alice fires it chases her targets, giving each a description of length
/// at most her window's `L` according to its [`ServePolicy`].
#[derive(Debug, Clone)]
pub struct AdversarialBob {
    rng: ChaCha8Rng,
    policy: ServePolicy,
    fill_levels: Option<(u32, u32)>,
    objects: u64,
    // c -> targets not yet served within the window
    chase: BTreeMap<u32, VecDeque<BitString>>,
}

impl AdversarialBob {
    /// Policy chosen by the seed.
    pub fn new(seed: u64) -> AdversarialBob {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let policy = if rng.gen_bool(0.5) {
            ServePolicy::Shortest
        } else {
            ServePolicy::Deepest
        };
        AdversarialBob {
            rng,
            policy,
            fill_levels: None,
            objects: 0,
            chase: BTreeMap::new(),
        }
    }

    pub fn with_policy(mut self, policy: ServePolicy) -> AdversarialBob {
        self.policy = policy;
        self
    }

    /// Crowd these levels instead of the deepest block.
    pub fn with_fill_levels(mut self, lo: u32, hi: u32) -> AdversarialBob {
        self.fill_levels = Some((lo, hi));
        self
    }

    pub fn policy(&self) -> ServePolicy {
        self.policy
    }

    fn fill_range(&mut self, state: &GameState) -> (u32, u32) {
        *self.fill_levels.get_or_insert_with(|| {
            let depth = state.depth_max();
            state
                .universal()
                .near_blocks()
                .iter()
                .filter_map(|b| b.lo_level().filter(|&lo| lo <= depth).map(|lo| (lo, b)))
                .next_back()
                .map(|(lo, b)| (lo, b.hi_level().min(u64::from(depth)) as u32))
                .unwrap_or((1, depth))
        })
    }

    fn serve(&mut self, state: &GameState, ledgers: &[AllocationLedger]) -> Option<EnumerationEvent> {
        for ledger in ledgers {
            let Some(fired) = ledger.fired() else { continue };
            let limit = fired.window.end_level.min(state.depth_max());
            let queue = self
                .chase
                .entry(ledger.c())
                .or_insert_with(|| ledger.targets().copied().collect());
            while queue
                .front()
                .is_some_and(|x| state.description_length(x).is_some_and(|len| len <= limit))
            {
                queue.pop_front();
            }
            let Some(&x) = queue.front() else { continue };
            let level = match self.policy {
                ServePolicy::Shortest => levels_with_room(state, 1..=limit).first().copied(),
                ServePolicy::Deepest => levels_with_room(state, (1..=limit).rev()).first().copied(),
            };
            let Some(level) = level else { continue };
            let p = random_free_at(state, level, &mut self.rng)?;
            return Some(event(state, p, x));
        }
        None
    }
}

impl Bob for AdversarialBob {
    fn next_event(
        &mut self,
        state: &GameState,
        ledgers: &[AllocationLedger],
    ) -> Option<EnumerationEvent> {
        if let Some(ev) = self.serve(state, ledgers) {
            return Some(ev);
        }
        if ledgers.iter().all(|l| l.fired().is_some()) && !ledgers.is_empty() {
            return None;
        }
        let (lo, hi) = self.fill_range(state);
        let levels = levels_with_room(state, lo..=hi);
        if levels.is_empty() {
            return None;
        }
        let level = levels[self.rng.gen_range(0..levels.len())];
        let p = random_free_at(state, level, &mut self.rng)?;
        Some(event(state, p, filler(&mut self.objects)))
    }
}
