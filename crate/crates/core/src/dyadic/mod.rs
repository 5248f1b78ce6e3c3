//! Binary strings as tree vertices, exact dyadic measures, and basic subsets
//! of Cantor space (finite unions of intervals `I_x`).
//!
//! Every measure in this crate is an exact [`DyadicMeasure`]; the only
//! non-dyadic quantity is a [`Threshold`] such as 1/3, which is compared by
//! cross-multiplication.

mod basic_set;
mod bitstring;
mod enumerate;
mod measure;

pub use basic_set::BasicSet;
pub use bitstring::{BitString, MAX_LEN};
pub use enumerate::{enumerate_basic_sets, BasicSetEnumerator};
pub use measure::{DyadicMeasure, Threshold};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DyadicError {
    #[error("level {level} is below the set's minimum level {min_level}")]
    LevelTooLow { level: u32, min_level: u32 },
    #[error("level {0} exceeds the 64-bit string limit")]
    TooLong(u32),
    #[error("threshold {num}/{den} is outside (0, 1/2]")]
    InvalidThreshold { num: u64, den: u64 },
    #[error("parse error: {0}")]
    Parse(String),
}
