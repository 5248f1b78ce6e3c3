//! Offline audits over finished game traces.

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::decompressor::Complexity;
use crate::dyadic::{BasicSet, BitString, DyadicMeasure, Threshold};
use crate::game::{free_allowed_set, AliceConfig, GameError, TriggerWindow};
use crate::trace::GameTrace;
use crate::universal::UniversalSet;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AnalysisError {
    #[error("no Alice fired in this trace")]
    NotFired,
    #[error("set {set} has measure {measure}, below the threshold {threshold}")]
    BelowThreshold {
        set: BasicSet,
        measure: DyadicMeasure,
        threshold: Threshold,
    },
    #[error(transparent)]
    Game(#[from] GameError),
}

/// Result of re-checking one fired Alice against the counting bound.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CountingAudit {
    pub c: u32,
    pub window: TriggerWindow,
    pub fire_clock: u64,
    /// `N`, recomputed from the window.
    pub target_count: u64,
    /// Targets whose final description length is at most `L`.
    pub served: u64,
    /// Free allowed fraction at `L` just after the firing event, recomputed.
    pub fraction_at_fire: DyadicMeasure,
    pub epsilon: DyadicMeasure,
    /// The ledger does not hold exactly the targets the rules select.
    pub targets_mismatch: bool,
}

impl CountingAudit {
    /// Bob managed to serve every target within length `L`.
    pub fn is_violation(&self) -> bool {
        self.served == self.target_count || self.targets_mismatch
    }
}

impl fmt::Display for CountingAudit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} c={} l={} L={} N={} served={} fraction={} epsilon={}",
            if self.is_violation() { "VIOLATION" } else { "PASS" },
            self.c,
            self.window.start_level,
            self.window.end_level,
            self.target_count,
            self.served,
            self.fraction_at_fire,
            self.epsilon,
        )?;
        if self.targets_mismatch {
            f.write_str(" targets-mismatch")?;
        }
        Ok(())
    }
}

fn universal_of(trace: &GameTrace) -> Result<Arc<UniversalSet>, GameError> {
    Ok(Arc::new(trace.config.universal()?))
}

/// The `N` lexicographically first `(L+1)`-bit strings with no description
/// among `described`.
fn expected_targets(described: &std::collections::HashSet<BitString>, len: u32, count: u64) -> Vec<BitString> {
    (0..=u64::MAX >> (64 - len))
        .map(|v| BitString::from_value(v, len).expect("fits target length"))
        .filter(|x| !described.contains(x))
        .take(count as usize)
        .collect()
}

/// Re-derives every fired Alice's targets from the events up to her firing
/// and counts how many of them Bob described within length `L` by the end.
/// A legal game can never serve them all.
pub fn counting_lemma_audit(trace: &GameTrace) -> Result<Vec<CountingAudit>, AnalysisError> {
    let universal = universal_of(trace)?;
    let table = trace.final_table();
    let mut out = Vec::new();
    for ledger in &trace.ledgers {
        let Some(fired) = ledger.fired() else { continue };
        let cfg = AliceConfig::new(ledger.c())
            .map_err(|e| GameError::InvalidConfig(e.to_string()))?;
        let window = fired.window;
        let before = trace.events_until(fired.clock);
        let described = before.iter().map(|e| e.object).collect();
        let count = window.target_count(&cfg);
        let targets = expected_targets(&described, window.end_level + 1, count);
        let targets_mismatch = targets.len() as u64 != count
            || !targets.iter().eq(ledger.targets())
            || fired.count != count;
        let served = targets
            .iter()
            .filter(|x| matches!(table.c_of(x), Complexity::Finite(n) if n <= window.end_level))
            .count() as u64;
        let free = free_allowed_set(
            &universal,
            before.iter().map(|e| &e.description),
            window.end_level,
        );
        out.push(CountingAudit {
            c: ledger.c(),
            window,
            fire_clock: fired.clock,
            target_count: count,
            served,
            fraction_at_fire: free.measure(),
            epsilon: cfg.epsilon(),
            targets_mismatch,
        });
    }
    if out.is_empty() {
        return Err(AnalysisError::NotFired);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DensityRow {
    pub set: BasicSet,
    pub measure: DyadicMeasure,
    /// The covered set (union of `I_p` over the final domain) meets `set`.
    pub intersects: bool,
}

impl fmt::Display for DensityRow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let verdict = if self.intersects { "intersect" } else { "miss" };
        write!(f, "{verdict} {} measure={}", self.set, self.measure)
    }
}

/// The set covered by the final domain of the trace.
pub fn covered_set(trace: &GameTrace) -> BasicSet {
    BasicSet::from_strings(trace.events.iter().map(|e| e.description))
}

/// For each set of measure at least the trace's threshold, whether the
/// covered set meets it. At finite depth a miss is possible and is only
/// reported.
pub fn density_check(trace: &GameTrace, sets: &[BasicSet]) -> Result<Vec<DensityRow>, AnalysisError> {
    let covered = covered_set(trace);
    let threshold = trace.config.threshold;
    sets.iter()
        .map(|set| {
            let measure = set.measure();
            if !threshold.is_met_by(measure) {
                return Err(AnalysisError::BelowThreshold {
                    set: set.clone(),
                    measure,
                    threshold,
                });
            }
            Ok(DensityRow {
                set: set.clone(),
                measure,
                intersects: !covered.disjoint(set),
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BStop {
    /// The free allowed part at a block bottom fell below `ε`.
    BelowEpsilon,
    /// The accumulated union reached the density threshold.
    DensityReached,
    /// No further suitable block starts within the game depth.
    BlocksExhausted,
}

impl fmt::Display for BStop {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BStop::BelowEpsilon => "below-epsilon",
            BStop::DensityReached => "density-reached",
            BStop::BlocksExhausted => "blocks-exhausted",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BEntry {
    /// Position of the block in the schedule, starting at 1.
    pub block_index: u64,
    /// The block's bottom (deepest) level within the game depth, where the
    /// free allowed strings are read off.
    pub level: u32,
    pub set: BasicSet,
    pub measure: DyadicMeasure,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BSequenceReport {
    /// Every block whose bottom was inspected, including one that stopped the walk.
    pub examined: Vec<u64>,
    /// `B_0, B_1, …`, each of measure at least `ε`.
    pub sets: Vec<BEntry>,
    pub cumulative: DyadicMeasure,
    pub stop: BStop,
    /// Free allowed measure at the block that stopped the walk with `BelowEpsilon`.
    pub shortfall: Option<DyadicMeasure>,
}

impl BSequenceReport {
    pub fn pairwise_disjoint(&self) -> bool {
        self.sets.iter().enumerate().all(|(i, a)| {
            self.sets[i + 1..].iter().all(|b| a.set.disjoint(&b.set))
        })
    }
}

impl fmt::Display for BSequenceReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, b) in self.sets.iter().enumerate() {
            writeln!(
                f,
                "B{i} block={} level={} measure={} set={}",
                b.block_index, b.level, b.measure, b.set
            )?;
        }
        let examined: Vec<String> = self.examined.iter().map(u64::to_string).collect();
        write!(
            f,
            "examined={} cumulative={} disjoint={} stop={}",
            examined.join(","),
            self.cumulative,
            self.pairwise_disjoint(),
            self.stop
        )?;
        if let Some(m) = self.shortfall {
            write!(f, " shortfall={m}")?;
        }
        Ok(())
    }
}

/// Walks the block schedule of `universal` on the final state of `trace`.
///
/// A block `[lo, hi]` is cut off at the trace depth; its bottom is
/// `min(hi, depth)` and it is thick enough when `bottom - lo >= 3c`, exactly
/// as for Alice's trigger. The first thick block gives `B_0`, the free
/// allowed strings at its bottom. Each later step takes the next thick block
/// whose allowed set avoids everything accumulated so far and reads off the
/// free allowed strings at its bottom.
pub fn b_sequence(trace: &GameTrace, cfg: &AliceConfig, universal: &UniversalSet) -> BSequenceReport {
    let depth = trace.config.depth_max;
    let descriptions: Vec<BitString> = trace.events.iter().map(|e| e.description).collect();
    let threshold = universal.threshold();
    let mut report = BSequenceReport {
        examined: Vec::new(),
        sets: Vec::new(),
        cumulative: DyadicMeasure::ZERO,
        stop: BStop::BlocksExhausted,
        shortfall: None,
    };
    let mut union = BasicSet::empty();
    for block in universal.near_blocks() {
        let Some(lo) = block.lo_level().filter(|&lo| lo <= depth) else { break };
        let bottom = block.hi_level().min(u64::from(depth)) as u32;
        if bottom - lo < cfg.min_thickness() || !block.set.disjoint(&union) {
            continue;
        }
        report.examined.push(block.index);
        let free = free_allowed_set(universal, descriptions.iter(), bottom);
        let measure = free.measure();
        if measure < cfg.epsilon() {
            report.stop = BStop::BelowEpsilon;
            report.shortfall = Some(measure);
            return report;
        }
        union = union.union(&free);
        report.cumulative = union.measure();
        report.sets.push(BEntry {
            block_index: block.index,
            level: bottom,
            set: free,
            measure,
        });
        if threshold.is_met_by(report.cumulative) {
            report.stop = BStop::DensityReached;
            return report;
        }
    }
    report
}
