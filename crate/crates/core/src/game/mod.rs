//! The restricted description game: Bob enumerates a prefix-free partial
//! decompressor whose domain lies inside the allowed set, and one Alice per
//! constant `c` watches the free allowed strings and hands out weight.

mod alice;
mod bob;
mod engine;
mod state;

pub use alice::{
    fire_allocation, q_total, scan_trigger, AliceConfig, AllocationLedger, FireError, FireRecord,
    TriggerWindow,
};
pub use bob::{AdversarialBob, Bob, GreedyKcBob, RandomBob, ReplayBob, ServePolicy};
pub use engine::{run_game, run_game_with, Game, GameConfig, HaltReason, RejectKind, Rejection};
pub use state::{free_allowed_set, EnumerationEvent, GameError, GameState, MAX_GAME_DEPTH};

use crate::decompressor::Complexity;
use crate::dyadic::{BitString, DyadicMeasure};
use crate::trace::GameTrace;

/// Alice's win condition for `c`: the first target `x` with
/// `q_c(x) >= 2^c · 2^-C_D(x)` in the final state. An undescribed target
/// always qualifies.
pub fn check_win(trace: &GameTrace, c: u32) -> Option<BitString> {
    let ledger = trace.ledgers.iter().find(|l| l.c() == c)?;
    ledger.fired()?;
    let table = trace.final_table();
    ledger.grants().iter().find_map(|(x, &weight)| {
        let wins = match table.c_of(x) {
            Complexity::Infinite => true,
            Complexity::Finite(len) => weight >= DyadicMeasure::pow2(i64::from(c) - i64::from(len)),
        };
        wins.then_some(*x)
    })
}
