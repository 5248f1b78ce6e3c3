use std::collections::BTreeMap;

use thiserror::Error;

use super::state::{GameState, MAX_GAME_DEPTH};
use crate::dyadic::{BitString, DyadicMeasure};

/// Parameters of the Alice that plays for the constant `c`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct AliceConfig {
    c: u32,
}

impl AliceConfig {
    pub fn new(c: u32) -> Result<AliceConfig, FireError> {
        if c == 0 || 3 * c >= MAX_GAME_DEPTH {
            return Err(FireError::InvalidConstant(c));
        }
        Ok(AliceConfig { c })
    }

    pub fn c(&self) -> u32 {
        self.c
    }

    /// `ε = 2^-3c`.
    pub fn epsilon(&self) -> DyadicMeasure {
        DyadicMeasure::pow2_neg(3 * self.c)
    }

    /// Minimum window thickness `L - l`.
    pub fn min_thickness(&self) -> u32 {
        3 * self.c
    }

    /// Total weight Alice may hand out: `2^-c`.
    pub fn budget(&self) -> DyadicMeasure {
        DyadicMeasure::pow2_neg(self.c)
    }
}

/// Levels `[start_level, end_level]` inside one block of `A`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TriggerWindow {
    pub start_level: u32,
    pub end_level: u32,
}

impl TriggerWindow {
    pub fn thickness(&self) -> u32 {
        self.end_level - self.start_level
    }

    /// `N = ε·2^L + 2^l`; both terms are powers of two once `L >= 3c`.
    pub fn target_count(&self, cfg: &AliceConfig) -> u64 {
        (1u64 << (self.end_level - cfg.min_thickness())) + (1u64 << self.start_level)
    }

    /// Weight per target: `2^c · 2^-L`.
    pub fn grant(&self, cfg: &AliceConfig) -> DyadicMeasure {
        DyadicMeasure::pow2(i64::from(cfg.c()) - i64::from(self.end_level))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FireRecord {
    /// Clock of the event after which Alice fired.
    pub clock: u64,
    pub window: TriggerWindow,
    /// `N`, the number of targets.
    pub count: u64,
    /// Free allowed fraction at `window.end_level` when firing.
    pub fraction: DyadicMeasure,
}

/// Alice's lower-semicomputed function `q_c` for one `c`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AllocationLedger {
    c: u32,
    grants: BTreeMap<BitString, DyadicMeasure>,
    fired: Option<FireRecord>,
}

impl AllocationLedger {
    pub fn new(c: u32) -> AllocationLedger {
        AllocationLedger {
            c,
            grants: BTreeMap::new(),
            fired: None,
        }
    }

    /// Rebuilds a ledger read back from a trace.
    pub fn from_parts(
        c: u32,
        grants: BTreeMap<BitString, DyadicMeasure>,
        fired: Option<FireRecord>,
    ) -> AllocationLedger {
        AllocationLedger { c, grants, fired }
    }

    pub fn c(&self) -> u32 {
        self.c
    }

    pub fn grants(&self) -> &BTreeMap<BitString, DyadicMeasure> {
        &self.grants
    }

    pub fn grant_of(&self, x: &BitString) -> DyadicMeasure {
        self.grants.get(x).copied().unwrap_or_default()
    }

    pub fn fired(&self) -> Option<&FireRecord> {
        self.fired.as_ref()
    }

    /// Objects that received weight, in lexicographic order.
    pub fn targets(&self) -> impl Iterator<Item = &BitString> {
        self.grants.keys()
    }

    pub fn total(&self) -> DyadicMeasure {
        self.grants.values().copied().sum()
    }

    fn add(&mut self, x: BitString, amount: DyadicMeasure) {
        let slot = self.grants.entry(x).or_default();
        *slot = *slot + amount;
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FireError {
    #[error("constant c = {0} is out of range")]
    InvalidConstant(u32),
    #[error("the ledger for c = {0} has already fired")]
    AlreadyFired(u32),
    #[error("ledger is for c = {ledger}, config for c = {config}")]
    LedgerMismatch { ledger: u32, config: u32 },
    #[error("window [{}, {}] is not a valid trigger: {reason}", .window.start_level, .window.end_level)]
    InvalidWindow {
        window: TriggerWindow,
        reason: &'static str,
    },
    #[error("allocation {total} exceeds budget {budget}")]
    BudgetExceeded {
        total: DyadicMeasure,
        budget: DyadicMeasure,
    },
    #[error("fewer than {0} undescribed strings of the target length")]
    TargetsExhausted(u64),
}

/// First window satisfying Alice's trigger, if any.
///
/// Blocks are scanned shallowest first. In a block `[lo, hi]` the candidate
/// is `(lo, min(hi, depth_max))`: the thickest window, ending at the block's
/// deepest reachable level.
pub fn scan_trigger(state: &GameState, cfg: &AliceConfig) -> Option<TriggerWindow> {
    let depth = state.depth_max();
    for block in state.universal().near_blocks() {
        let lo = match block.lo_level() {
            Some(lo) if lo <= depth => lo,
            _ => break,
        };
        let end = block.hi_level().min(u64::from(depth)) as u32;
        let window = TriggerWindow {
            start_level: lo,
            end_level: end,
        };
        if window.thickness() >= cfg.min_thickness() && below_epsilon(state, cfg, end) {
            return Some(window);
        }
    }
    None
}

fn below_epsilon(state: &GameState, cfg: &AliceConfig, level: u32) -> bool {
    state
        .free_allowed_fraction(level)
        .map(|f| f < cfg.epsilon())
        .unwrap_or(false)
}

fn check_window(
    state: &GameState,
    cfg: &AliceConfig,
    window: TriggerWindow,
) -> Result<(), FireError> {
    let invalid = |reason| Err(FireError::InvalidWindow { window, reason });
    if window.end_level < window.start_level || window.thickness() < cfg.min_thickness() {
        return invalid("thinner than 3c");
    }
    if window.end_level > state.depth_max() {
        return invalid("deeper than the game depth");
    }
    let universal = state.universal();
    let block = universal.layer_block_index(window.start_level);
    if block.is_none() || block != universal.layer_block_index(window.end_level) {
        return invalid("not inside a single block");
    }
    if !below_epsilon(state, cfg, window.end_level) {
        return invalid("free allowed fraction is not below epsilon");
    }
    Ok(())
}

/// Alice's move: give `2^(c-L)` to each of the `N` lexicographically first
/// `(L+1)`-bit strings that have no description yet.
pub fn fire_allocation(
    state: &GameState,
    cfg: &AliceConfig,
    window: TriggerWindow,
    ledger: &mut AllocationLedger,
) -> Result<(), FireError> {
    if ledger.c != cfg.c() {
        return Err(FireError::LedgerMismatch {
            ledger: ledger.c,
            config: cfg.c(),
        });
    }
    if ledger.fired.is_some() {
        return Err(FireError::AlreadyFired(ledger.c));
    }
    check_window(state, cfg, window)?;

    let count = window.target_count(cfg);
    let grant = window.grant(cfg);
    let total = ledger.total() + grant.scale(count);
    if total > cfg.budget() {
        return Err(FireError::BudgetExceeded {
            total,
            budget: cfg.budget(),
        });
    }
    let target_len = window.end_level + 1;
    let targets: Vec<BitString> = (0..=u64::MAX >> (64 - target_len))
        .map(|v| BitString::from_value(v, target_len).expect("fits target length"))
        .filter(|x| !state.is_described(x))
        .take(count as usize)
        .collect();
    if (targets.len() as u64) < count {
        return Err(FireError::TargetsExhausted(count));
    }
    let fraction = state
        .free_allowed_fraction(window.end_level)
        .expect("window checked against depth");
    for x in targets {
        ledger.add(x, grant);
    }
    ledger.fired = Some(FireRecord {
        clock: state.clock(),
        window,
        count,
        fraction,
    });
    Ok(())
}

/// `q(x) = Σ_c q_c(x)`.
pub fn q_total<'a, I>(ledgers: I) -> BTreeMap<BitString, DyadicMeasure>
where
    I: IntoIterator<Item = &'a AllocationLedger>,
{
    let mut out: BTreeMap<BitString, DyadicMeasure> = BTreeMap::new();
    for ledger in ledgers {
        for (x, w) in &ledger.grants {
            let slot = out.entry(*x).or_default();
            *slot = *slot + *w;
        }
    }
    out
}
