//! Constructive machinery for prefix-free description games played over a
//! decidable "allowed" set of binary strings.
//!
//! The crate provides:
//!
//! * [`dyadic`]: binary strings, exact dyadic measures and basic sets;
//! * [`kraft_chaitin`]: the online prefix-free allocator;
//! * [`universal`]: the layered allowed set `A` and its block schedule;
//! * [`game`]: the description game between an enumerating decompressor
//!   ("Bob") and budgeted semimeasure builders ("Alice", one per constant `c`);
//! * [`decompressor`]: finite description tables and the two-bit rebase into `A`;
//! * [`trace`]: the line-oriented trace format and replay verification;
//! * [`analysis`]: offline audits over frozen traces.

pub mod analysis;
pub mod decompressor;
pub mod dyadic;
pub mod game;
pub mod kraft_chaitin;
pub mod trace;
pub mod universal;

pub use dyadic::{BasicSet, BitString, DyadicMeasure, Threshold};
