use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use sha2::{Digest, Sha256};

use super::alice::{fire_allocation, scan_trigger, AliceConfig, AllocationLedger, FireRecord};
use super::bob::Bob;
use super::state::{EnumerationEvent, GameError, GameState};
use crate::dyadic::{BitString, Threshold};
use crate::trace::GameTrace;
use crate::universal::{ScheduleSpec, UniversalSet};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GameConfig {
    pub depth_max: u32,
    /// One Alice per constant, in this order.
    pub alice_cs: Vec<u32>,
    pub step_limit: u64,
    /// Keep asking Bob for events after every Alice has fired.
    pub play_out: bool,
    pub threshold: Threshold,
    pub schedule: ScheduleSpec,
}

impl Default for GameConfig {
    fn default() -> Self {
        GameConfig {
            depth_max: 14,
            alice_cs: vec![1],
            step_limit: 100_000,
            play_out: false,
            threshold: Threshold::ONE_THIRD,
            schedule: ScheduleSpec::Diagonal {
                granularity: crate::universal::DEFAULT_GRANULARITY,
            },
        }
    }
}

impl GameConfig {
    pub fn universal(&self) -> Result<UniversalSet, GameError> {
        match &self.schedule {
            ScheduleSpec::Diagonal { granularity } => {
                Ok(UniversalSet::new(self.threshold, *granularity))
            }
            ScheduleSpec::Explicit(blocks) => UniversalSet::explicit(self.threshold, blocks.clone())
                .map_err(|e| GameError::InvalidConfig(e.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum HaltReason {
    StepLimit,
    BobExhausted,
    AllFired,
    Rejected,
}

impl HaltReason {
    pub fn as_str(&self) -> &'static str {
        match self {
            HaltReason::StepLimit => "step-limit",
            HaltReason::BobExhausted => "bob-exhausted",
            HaltReason::AllFired => "all-fired",
            HaltReason::Rejected => "rejected",
        }
    }
}

impl fmt::Display for HaltReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for HaltReason {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        [
            HaltReason::StepLimit,
            HaltReason::BobExhausted,
            HaltReason::AllFired,
            HaltReason::Rejected,
        ]
        .into_iter()
        .find(|r| r.as_str() == s)
        .ok_or_else(|| format!("unknown halt reason `{s}`"))
    }
}

/// The rule an event broke, as recorded in a trace.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RejectKind {
    NotAllowed,
    PrefixConflict,
    Redefined,
    DepthExceeded,
    OutOfOrder,
}

impl RejectKind {
    pub fn of(err: &GameError) -> RejectKind {
        match err {
            GameError::NotAllowed(_) => RejectKind::NotAllowed,
            GameError::PrefixConflict { .. } => RejectKind::PrefixConflict,
            GameError::Redefined(_) => RejectKind::Redefined,
            GameError::DepthExceeded { .. } => RejectKind::DepthExceeded,
            GameError::OutOfOrder { .. } | GameError::InvalidConfig(_) => RejectKind::OutOfOrder,
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            RejectKind::NotAllowed => "not-allowed",
            RejectKind::PrefixConflict => "prefix-conflict",
            RejectKind::Redefined => "redefined",
            RejectKind::DepthExceeded => "depth-exceeded",
            RejectKind::OutOfOrder => "out-of-order",
        }
    }
}

impl fmt::Display for RejectKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for RejectKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        [
            RejectKind::NotAllowed,
            RejectKind::PrefixConflict,
            RejectKind::Redefined,
            RejectKind::DepthExceeded,
            RejectKind::OutOfOrder,
        ]
        .into_iter()
        .find(|r| r.as_str() == s)
        .ok_or_else(|| format!("unknown rejection kind `{s}`"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Rejection {
    pub event: EnumerationEvent,
    pub kind: RejectKind,
}

/// A game in progress.
///
/// Each [`Game::step`] asks Bob for one event, applies it, then lets every
/// Alice that has not fired yet scan for her trigger.
pub struct Game {
    config: GameConfig,
    state: GameState,
    alices: Vec<AliceConfig>,
    ledgers: Vec<AllocationLedger>,
    events: Vec<EnumerationEvent>,
    rejection: Option<Rejection>,
    halted: Option<HaltReason>,
    digest: Sha256,
}

impl Game {
    pub fn new(config: GameConfig) -> Result<Game, GameError> {
        let universal = Arc::new(config.universal()?);
        Game::with_universal(config, universal)
    }

    /// Shares an already built allowed set; it must match `config`.
    pub fn with_universal(config: GameConfig, universal: Arc<UniversalSet>) -> Result<Game, GameError> {
        let state = GameState::new(universal, config.depth_max)?;
        let mut alices = Vec::new();
        for &c in &config.alice_cs {
            let alice = AliceConfig::new(c).map_err(|e| GameError::InvalidConfig(e.to_string()))?;
            if alices.contains(&alice) {
                return Err(GameError::InvalidConfig(format!("c = {c} listed twice")));
            }
            alices.push(alice);
        }
        let ledgers = alices.iter().map(|a| AllocationLedger::new(a.c())).collect();
        Ok(Game {
            config,
            state,
            alices,
            ledgers,
            events: Vec::new(),
            rejection: None,
            halted: None,
            digest: Sha256::new(),
        })
    }

    pub fn state(&self) -> &GameState {
        &self.state
    }

    pub fn ledgers(&self) -> &[AllocationLedger] {
        &self.ledgers
    }

    pub fn events(&self) -> &[EnumerationEvent] {
        &self.events
    }

    pub fn halted(&self) -> Option<HaltReason> {
        self.halted
    }

    /// Plays one round. Returns the halt reason once the game is over.
    pub fn step(&mut self, bob: &mut dyn Bob) -> Option<HaltReason> {
        if self.halted.is_some() {
            return self.halted;
        }
        if self.state.clock() >= self.config.step_limit {
            return self.halt(HaltReason::StepLimit);
        }
        let all_fired = self.ledgers.iter().all(|l| l.fired().is_some());
        if !self.config.play_out && !self.ledgers.is_empty() && all_fired {
            return self.halt(HaltReason::AllFired);
        }
        let Some(event) = bob.next_event(&self.state, &self.ledgers) else {
            return self.halt(HaltReason::BobExhausted);
        };
        if let Err(err) = self.state.apply_event(event) {
            let kind = RejectKind::of(&err);
            self.digest.update(b"REJECT");
            hash_event(&mut self.digest, &event);
            self.digest.update(kind.as_str().as_bytes());
            self.rejection = Some(Rejection { event, kind });
            return self.halt(HaltReason::Rejected);
        }
        self.events.push(event);
        hash_event(&mut self.digest, &event);
        for m in 0..=self.state.depth_max() {
            let count = self.state.free_allowed_count(m).expect("level within depth");
            self.digest.update(count.to_le_bytes());
        }
        for (alice, ledger) in self.alices.iter().zip(self.ledgers.iter_mut()) {
            if ledger.fired().is_some() {
                continue;
            }
            if let Some(window) = scan_trigger(&self.state, alice) {
                fire_allocation(&self.state, alice, window, ledger)
                    .expect("a scanned window always admits a budgeted allocation");
                hash_fire(&mut self.digest, alice.c(), ledger.fired().expect("just fired"));
            }
        }
        None
    }

    fn halt(&mut self, reason: HaltReason) -> Option<HaltReason> {
        self.halted = Some(reason);
        self.halted
    }

    pub fn into_trace(self) -> GameTrace {
        GameTrace {
            halt: self.halted.unwrap_or(HaltReason::StepLimit),
            halt_clock: self.state.clock(),
            config: self.config,
            events: self.events,
            rejection: self.rejection,
            ledgers: self.ledgers,
            digest: hex(&self.digest.finalize()),
        }
    }
}

fn hash_string(digest: &mut Sha256, x: &BitString) {
    digest.update([x.len() as u8]);
    digest.update(x.value().to_le_bytes());
}

fn hash_event(digest: &mut Sha256, event: &EnumerationEvent) {
    digest.update(event.clock.to_le_bytes());
    hash_string(digest, &event.description);
    hash_string(digest, &event.object);
}

fn hash_fire(digest: &mut Sha256, c: u32, fired: &FireRecord) {
    digest.update(b"FIRE");
    digest.update(c.to_le_bytes());
    digest.update(fired.window.start_level.to_le_bytes());
    digest.update(fired.window.end_level.to_le_bytes());
    digest.update(fired.count.to_le_bytes());
    digest.update(fired.fraction.numerator().to_le_bytes());
    digest.update(fired.fraction.exponent().to_le_bytes());
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Plays until the step limit, Bob's exhaustion, a rule violation, or (unless
/// `play_out` is set) the moment every Alice has fired.
pub fn run_game(bob: &mut dyn Bob, config: &GameConfig) -> Result<GameTrace, GameError> {
    let mut game = Game::new(config.clone())?;
    while game.step(bob).is_none() {}
    Ok(game.into_trace())
}

/// As [`run_game`], reusing a prebuilt allowed set.
pub fn run_game_with(
    bob: &mut dyn Bob,
    config: &GameConfig,
    universal: Arc<UniversalSet>,
) -> Result<GameTrace, GameError> {
    let mut game = Game::with_universal(config.clone(), universal)?;
    while game.step(bob).is_none() {}
    Ok(game.into_trace())
}
