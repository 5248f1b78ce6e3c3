//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Every check compares the library against an independent brute-force
//! oracle written here (layer materialization, pairwise prefix tests, bitmap
//! freeness, exhaustive level expansion).

use std::collections::{BTreeMap, BTreeSet};
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use restricted_prefix::analysis::{b_sequence, counting_lemma_audit, BSequenceReport, BStop};
use restricted_prefix::decompressor::{Complexity, DescriptionTable};
use restricted_prefix::game::{
    check_win, q_total, AdversarialBob, AliceConfig, AllocationLedger, Bob, EnumerationEvent,
    FireRecord, Game, GameConfig, GameState, HaltReason, RandomBob, ReplayBob, TriggerWindow,
};
use restricted_prefix::kraft_chaitin::Allocator;
use restricted_prefix::trace::{GameTrace, Verdict};
use restricted_prefix::universal::{ScheduleSpec, UniversalSet};
use restricted_prefix::{BasicSet, BitString, DyadicMeasure};

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

fn bs(s: &str) -> BitString {
    s.parse().expect("valid bit string")
}

fn layer(len: u32) -> impl Iterator<Item = BitString> {
    (0..1u64 << len).map(move |v| BitString::from_value(v, len).unwrap())
}

/// All strings of length at most `depth`, indexed as a complete binary tree.
fn tree_index(x: &BitString) -> usize {
    (1usize << x.len()) - 1 + x.value() as usize
}

fn all_strings(depth: u32) -> Vec<BitString> {
    (0..=depth).flat_map(layer).collect()
}

fn pairwise_prefix_free(xs: &[BitString]) -> bool {
    xs.iter()
        .enumerate()
        .all(|(i, a)| xs[i + 1..].iter().all(|b| !a.is_prefix_of(b) && !b.is_prefix_of(a)))
}

/// `C_D(x)` by scanning every event.
fn brute_complexity(events: &[EnumerationEvent], x: &BitString) -> Option<u32> {
    events
        .iter()
        .filter(|e| e.object == *x)
        .map(|e| e.description.len())
        .min()
}

// --- 1 -----------------------------------------------------------------

fn kc_soundness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0x4b43_0001);
    let (mut requests_total, mut full) = (0usize, 0usize);
    for seq in 0..1000 {
        let max_len = rng.gen_range(3..=20);
        let wanted = rng.gen_range(1..=512);
        let mut room = DyadicMeasure::ONE;
        let mut lengths = Vec::new();
        while lengths.len() < wanted {
            let n = rng.gen_range(1..=max_len);
            match room.checked_sub(DyadicMeasure::pow2_neg(n)) {
                Some(rest) => {
                    room = rest;
                    lengths.push(n);
                }
                None if room.is_zero() => break,
                None => {}
            }
        }
        full += usize::from(room.is_zero());
        let mut alloc = Allocator::new();
        let mut issued = Vec::with_capacity(lengths.len());
        for &n in &lengths {
            let x = alloc
                .allocate(n)
                .map_err(|e| format!("sequence {seq}: request {n} refused: {e}"))?;
            ensure!(x.len() == n, "sequence {seq}: asked for {n} bits, got {x}");
            issued.push(x);
        }
        ensure!(pairwise_prefix_free(&issued), "sequence {seq}: output is not prefix-free");
        requests_total += lengths.len();
    }
    Ok(format!("1000 sequences, {requests_total} requests all served; {full} sequences reached sum 1"))
}

// --- 2 -----------------------------------------------------------------

fn kc_boundary() -> Outcome {
    let mut alloc = Allocator::new();
    ensure!(alloc.allocate(1).is_ok() && alloc.allocate(1).is_ok(), "1,1 must succeed");
    ensure!(alloc.allocate(1).is_err(), "third request of length 1 must be refused");

    let mut rng = ChaCha8Rng::seed_from_u64(0x4b43_0002);
    let mut alloc = Allocator::new();
    // Independent bookkeeping: spent weight as a fraction of 2^64.
    let mut spent: u128 = 0;
    let (mut granted, mut refused) = (0, 0);
    for probe in 0..10_000 {
        if rng.gen_ratio(1, 40) {
            alloc = Allocator::new();
            spent = 0;
        }
        let n = if rng.gen_ratio(1, 20) { rng.gen_range(0..=64) } else { rng.gen_range(0..=12) };
        let weight = 1u128 << (64 - n);
        let expected = weight <= (1u128 << 64) - spent;
        let before: Vec<BitString> = alloc.free_intervals().collect();
        match alloc.allocate(n) {
            Ok(x) => {
                ensure!(expected, "probe {probe}: length {n} granted beyond the remaining weight");
                ensure!(x.len() == n, "probe {probe}: wrong length");
                spent += weight;
                granted += 1;
            }
            Err(_) => {
                ensure!(!expected, "probe {probe}: length {n} refused with room left");
                let after: Vec<BitString> = alloc.free_intervals().collect();
                ensure!(before == after, "probe {probe}: refusal changed the allocator");
                refused += 1;
            }
        }
        let remaining = alloc.remaining();
        ensure!(
            remaining == DyadicMeasure::new((1u128 << 64) - spent, 64),
            "probe {probe}: remaining {remaining} disagrees with bookkeeping"
        );
    }
    Ok(format!("1,1,1 refused at the third; 10000 probes: {granted} granted, {refused} refused, all exact"))
}

// --- 3 -----------------------------------------------------------------

fn layer_bound() -> Outcome {
    let universal = UniversalSet::standard();
    for m in 0..=16u32 {
        let members: Vec<BitString> = layer(m).filter(|x| universal.contains(x)).collect();
        let count = members.len() as u128;
        ensure!(3 * count >= 1u128 << m, "level {m}: only {count} of 2^{m} allowed");
        ensure!(
            universal.allowed_count(m).unwrap() as u128 == count,
            "level {m}: allowed_count disagrees with materialization"
        );
        match universal.block_at_level(u64::from(m)) {
            Some(block) => {
                let expected = block.set.represent_at(m).map_err(|e| e.to_string())?;
                ensure!(members == expected, "level {m}: layer differs from represent_at");
            }
            None => ensure!(count == 1u128 << m, "level {m} outside blocks is not full"),
        }
    }
    for m in 17..=24u32 {
        let count = universal.allowed_count(m).unwrap() as u128;
        ensure!(3 * count >= 1u128 << m, "level {m}: only {count} of 2^{m} allowed");
    }
    let checked = universal
        .schedule_prefix(8)
        .iter()
        .filter(|b| b.hi_level() <= 16)
        .count();
    Ok(format!("levels 0..=16 materialized, 17..=24 counted; {checked} blocks with hi <= 16 match exactly"))
}

// --- 4 -----------------------------------------------------------------

fn schedule_recurrence() -> Outcome {
    let universal = UniversalSet::standard();
    let blocks = universal.schedule_prefix(200);
    ensure!(blocks.len() == 200, "only {} blocks", blocks.len());
    let mut counts: BTreeMap<u64, usize> = BTreeMap::new();
    let mut sets: BTreeMap<u64, BasicSet> = BTreeMap::new();
    let mut previous: BTreeMap<u64, usize> = BTreeMap::new();
    for (k, block) in blocks.iter().enumerate() {
        *counts.entry(block.set_index).or_default() += 1;
        let known = sets.entry(block.set_index).or_insert_with(|| block.set.clone());
        ensure!(*known == block.set, "set index {} changes its set", block.set_index);
        for i in 1..=5 {
            let now = counts.get(&i).copied().unwrap_or(0);
            let before = previous.get(&i).copied().unwrap_or(0);
            ensure!(now >= before, "count of {i} drops at prefix {}", k + 1);
            previous.insert(i, now);
        }
        if k > 0 {
            ensure!(blocks[k - 1].hi < block.lo, "blocks {} and {} overlap", k, k + 1);
        }
    }
    let low: Vec<String> = (1..=5)
        .map(|i| format!("{i}:{}", counts.get(&i).copied().unwrap_or(0)))
        .collect();
    for i in 1..=5 {
        ensure!(counts.get(&i).copied().unwrap_or(0) >= 3, "set index {i} appears fewer than 3 times");
    }
    Ok(format!("occurrences in 200 blocks {}", low.join(" ")))
}

// --- 5 -----------------------------------------------------------------

struct FreenessOracle {
    depth: u32,
    free: Vec<bool>,
}

impl FreenessOracle {
    fn new(depth: u32) -> Self {
        FreenessOracle {
            depth,
            free: vec![true; (1usize << (depth + 1)) - 1],
        }
    }

    fn describe(&mut self, p: &BitString) {
        for k in 0..=p.len() {
            self.free[tree_index(&p.prefix(k))] = false;
        }
        for extra in 1..=self.depth - p.len() {
            for v in 0..1u64 << extra {
                self.free[tree_index(&p.concat_value(v, extra))] = false;
            }
        }
    }
}

fn check_snapshot(
    state: &GameState,
    universal: &UniversalSet,
    strings: &[BitString],
    allowed: &[bool],
    oracle: &FreenessOracle,
    previous: &mut [bool],
) -> Result<(), String> {
    let depth = state.depth_max();
    let mut free_allowed = vec![0u64; depth as usize + 1];
    for u in strings {
        let i = tree_index(u);
        let free = state.is_free(u);
        ensure!(!free || previous[i], "t={}: {u} became free again", state.clock());
        ensure!(free == oracle.free[i], "t={}: is_free({u}) = {free}, oracle says otherwise", state.clock());
        previous[i] = free;
        if free && allowed[i] {
            free_allowed[u.len() as usize] += 1;
        }
    }
    for m in 0..=depth {
        let got = state.free_allowed_fraction(m).unwrap();
        let want = DyadicMeasure::new(u128::from(free_allowed[m as usize]), m);
        ensure!(got == want, "t={}: fraction at {m} is {got}, oracle {want}", state.clock());
    }
    for block in universal.near_blocks() {
        let Some(lo) = block.lo_level().filter(|&lo| lo <= depth) else { break };
        let hi = block.hi_level().min(u64::from(depth)) as u32;
        for m in lo..hi {
            let (a, b) = (
                state.free_allowed_fraction(m).unwrap(),
                state.free_allowed_fraction(m + 1).unwrap(),
            );
            ensure!(a <= b, "t={}: fraction drops from {a} at {m} to {b} at {}", state.clock(), m + 1);
        }
    }
    Ok(())
}

fn free_monotonicity(store: &mut Vec<GameTrace>) -> Outcome {
    let config = GameConfig {
        depth_max: 12,
        alice_cs: vec![1],
        step_limit: 1000,
        play_out: true,
        ..GameConfig::default()
    };
    let universal = Arc::new(config.universal().unwrap());
    let strings = all_strings(12);
    let allowed: Vec<bool> = strings.iter().map(|u| universal.contains(u)).collect();
    let mut snapshots = 0usize;
    for seed in 0..100 {
        let mut game = Game::with_universal(config.clone(), universal.clone()).unwrap();
        let mut bob = RandomBob::new(seed);
        let mut oracle = FreenessOracle::new(12);
        let mut previous = vec![true; strings.len()];
        check_snapshot(game.state(), &universal, &strings, &allowed, &oracle, &mut previous)?;
        while game.step(&mut bob).is_none() {
            let last = *game.events().last().unwrap();
            oracle.describe(&last.description);
            check_snapshot(game.state(), &universal, &strings, &allowed, &oracle, &mut previous)
                .map_err(|e| format!("seed {seed}: {e}"))?;
            snapshots += 1;
        }
        let trace = game.into_trace();
        ensure!(trace.halt != HaltReason::Rejected, "seed {seed}: random Bob broke a rule");
        store.push(trace);
    }
    Ok(format!("100 runs, {snapshots} snapshots, 8191 strings each"))
}

// --- 6 -----------------------------------------------------------------

fn ledger_conservation(store: &mut Vec<GameTrace>) -> Outcome {
    let three_quarters = DyadicMeasure::new(3, 2);
    let mut fired = [0usize; 2];
    let mut runs = 0;
    for seed in 0..40u64 {
        let adversarial = seed % 2 == 0;
        let config = GameConfig {
            depth_max: if adversarial { 14 } else { 12 },
            alice_cs: vec![1, 2],
            step_limit: 20_000,
            play_out: true,
            ..GameConfig::default()
        };
        let mut bob: Box<dyn Bob> = if adversarial {
            Box::new(AdversarialBob::new(seed))
        } else {
            Box::new(RandomBob::new(seed))
        };
        let mut game = Game::new(config).unwrap();
        let mut before: Vec<AllocationLedger> = game.ledgers().to_vec();
        while game.step(bob.as_mut()).is_none() {
            for (old, new) in before.iter().zip(game.ledgers()) {
                let budget = DyadicMeasure::pow2_neg(new.c());
                ensure!(new.total() <= budget, "seed {seed}: q_{} totals {}", new.c(), new.total());
                for (x, w) in old.grants() {
                    ensure!(new.grant_of(x) >= *w, "seed {seed}: q_{}({x}) decreased", new.c());
                }
            }
            before = game.ledgers().to_vec();
        }
        let trace = game.into_trace();
        for (i, ledger) in trace.ledgers.iter().enumerate() {
            fired[i] += usize::from(ledger.fired().is_some());
        }
        let total: DyadicMeasure = q_total(&trace.ledgers).values().copied().sum();
        ensure!(total <= three_quarters, "seed {seed}: sum of q is {total}");
        store.push(trace);
        runs += 1;
    }
    Ok(format!("{runs} runs with c in {{1,2}}; fired c=1: {}, c=2: {}", fired[0], fired[1]))
}

// --- 7 -----------------------------------------------------------------

fn served_within(trace: &GameTrace, ledger: &AllocationLedger, limit: u32) -> usize {
    ledger
        .targets()
        .filter(|x| brute_complexity(&trace.events, x).is_some_and(|n| n <= limit))
        .count()
}

fn forged_all_served(universal: &UniversalSet, config: &GameConfig) -> GameTrace {
    let targets: Vec<BitString> = layer(15).take(2176).collect();
    let events = targets
        .iter()
        .enumerate()
        .map(|(i, x)| EnumerationEvent {
            clock: i as u64 + 1,
            description: universal.nth_allowed(14, i as u64).unwrap(),
            object: *x,
        })
        .collect();
    let allowed = universal.allowed_count(14).unwrap();
    let ledger = AllocationLedger::from_parts(
        1,
        targets.iter().map(|x| (*x, DyadicMeasure::pow2_neg(13))).collect(),
        Some(FireRecord {
            clock: 0,
            window: TriggerWindow {
                start_level: 7,
                end_level: 14,
            },
            count: 2176,
            fraction: DyadicMeasure::new(u128::from(allowed), 14),
        }),
    );
    GameTrace {
        config: config.clone(),
        events,
        rejection: None,
        halt: HaltReason::BobExhausted,
        halt_clock: 2176,
        ledgers: vec![ledger],
        digest: "0".repeat(64),
    }
}

fn counting_dichotomy(store: &mut Vec<GameTrace>) -> Outcome {
    let config = GameConfig {
        depth_max: 14,
        alice_cs: vec![1],
        step_limit: 100_000,
        play_out: true,
        ..GameConfig::default()
    };
    let universal = Arc::new(config.universal().unwrap());
    let epsilon = DyadicMeasure::pow2_neg(3);
    let (mut fired, mut max_served) = (0, 0);
    let mut first_fired = None;
    for seed in 0..100u64 {
        let mut bob = AdversarialBob::new(seed);
        let mut game = Game::with_universal(config.clone(), universal.clone()).unwrap();
        while game.step(&mut bob).is_none() {}
        let trace = game.into_trace();
        ensure!(trace.halt != HaltReason::Rejected, "seed {seed}: adversary broke a rule");
        let ledger = &trace.ledgers[0];
        match ledger.fired() {
            Some(f) => {
                ensure!(
                    (f.window.start_level, f.window.end_level, f.count) == (7, 14, 2176),
                    "seed {seed}: fired at {:?} with N={}",
                    f.window,
                    f.count
                );
                ensure!(
                    ledger.grants().values().all(|w| *w == DyadicMeasure::pow2_neg(13)),
                    "seed {seed}: grant is not 2^-13"
                );
                ensure!(ledger.grants().len() == 2176, "seed {seed}: {} targets", ledger.grants().len());
                let served = served_within(&trace, ledger, 14);
                ensure!(served < 2176, "seed {seed}: Bob served all 2176 targets within length 14");
                max_served = max_served.max(served);
                for audit in counting_lemma_audit(&trace).map_err(|e| e.to_string())? {
                    ensure!(!audit.is_violation(), "seed {seed}: audit flagged {audit}");
                }
                fired += 1;
                first_fired.get_or_insert_with(|| trace.clone());
            }
            None => {
                // The other side of the dichotomy: the fraction never dropped.
                let state_fraction = DyadicMeasure::new(
                    u128::from(
                        restricted_prefix::game::free_allowed_set(
                            &universal,
                            trace.events.iter().map(|e| &e.description),
                            14,
                        )
                        .count_at_level(14) as u64,
                    ),
                    14,
                );
                ensure!(state_fraction >= epsilon, "seed {seed}: no fire although fraction {state_fraction}");
            }
        }
        store.push(trace);
    }

    // Forgery 1: a fire at clock 0 followed by descriptions of every target.
    let forged = forged_all_served(&universal, &config);
    let reparsed: GameTrace = forged.to_text().parse().map_err(|e| format!("forged trace: {e}"))?;
    let audit = counting_lemma_audit(&reparsed).map_err(|e| e.to_string())?;
    ensure!(audit[0].is_violation(), "forged all-served trace not flagged");
    ensure!(audit[0].fraction_at_fire >= epsilon, "forged trace reported fraction below epsilon");
    ensure!(reparsed.replay_verify() != Verdict::Pass, "forged trace replays cleanly");

    // Forgery 2: an engine trace with extra events serving the rest.
    let mut tampered = first_fired.ok_or("no run fired")?;
    let ledger = tampered.ledgers[0].clone();
    let mut clock = tampered.halt_clock;
    let used: BTreeSet<BitString> = tampered.events.iter().map(|e| e.description).collect();
    let mut spare = layer(14).filter(|p| !used.contains(p));
    for x in ledger.targets() {
        if brute_complexity(&tampered.events, x).is_some_and(|n| n <= 14) {
            continue;
        }
        clock += 1;
        tampered.events.push(EnumerationEvent {
            clock,
            description: spare.next().ok_or("no spare descriptions")?,
            object: *x,
        });
    }
    tampered.halt_clock = clock;
    let reparsed: GameTrace = tampered.to_text().parse().map_err(|e| format!("tampered trace: {e}"))?;
    let audit = counting_lemma_audit(&reparsed).map_err(|e| e.to_string())?;
    ensure!(audit[0].is_violation(), "tampered engine trace not flagged");
    ensure!(reparsed.replay_verify() != Verdict::Pass, "tampered trace replays cleanly");

    Ok(format!(
        "{fired}/100 runs fired at (7,14) with N=2176; most targets served within 14: {max_served}; \
         both forgeries flagged (forged fire-time fraction {})",
        audit_fraction(&forged_all_served(&universal, &config))
    ))
}

fn audit_fraction(trace: &GameTrace) -> String {
    counting_lemma_audit(trace)
        .map(|a| a[0].fraction_at_fire.to_string())
        .unwrap_or_default()
}

// --- 8 -----------------------------------------------------------------

fn win_witness(store: &[GameTrace]) -> Outcome {
    let mut checked = 0;
    for (i, trace) in store.iter().enumerate() {
        for ledger in &trace.ledgers {
            if ledger.fired().is_none() {
                ensure!(check_win(trace, ledger.c()).is_none(), "trace {i}: witness without a fire");
                continue;
            }
            let c = ledger.c();
            let x = check_win(trace, c).ok_or(format!("trace {i}: no witness for c = {c}"))?;
            let q = ledger.grant_of(&x);
            if let Some(len) = brute_complexity(&trace.events, &x) {
                // q >= 2^c * 2^-len  <=>  q * 2^len >= 2^c
                ensure!(
                    q.mul_pow2(i64::from(len)) >= DyadicMeasure::pow2(i64::from(c)),
                    "trace {i}: witness {x} has q = {q} but C_D = {len}"
                );
            } else {
                ensure!(!q.is_zero(), "trace {i}: undescribed witness {x} has no weight");
            }
            checked += 1;
        }
    }
    Ok(format!("{checked} fired ledgers across {} traces, each with a verified witness", store.len()))
}

// --- 9 -----------------------------------------------------------------

fn rebase() -> Outcome {
    let universal = UniversalSet::standard();
    let mut layers: BTreeMap<u32, Vec<BitString>> = BTreeMap::new();
    let mut rng = ChaCha8Rng::seed_from_u64(0x4b43_0009);
    let mut entries = 0;
    for t in 0..100 {
        let size = rng.gen_range(1..=40);
        let objects: Vec<BitString> = (0..rng.gen_range(1..=10))
            .map(|_| BitString::from_value(rng.gen_range(0..64), 6).unwrap())
            .collect();
        let table: DescriptionTable = (0..size)
            .map(|_| {
                let len = rng.gen_range(0..=10);
                let p = BitString::from_value(rng.gen_range(0..1u64 << len), len).unwrap();
                (p, objects[rng.gen_range(0..objects.len())])
            })
            .collect();
        let moved = table.rebase(&universal).map_err(|e| format!("table {t}: {e}"))?;
        ensure!(moved.len() == table.len(), "table {t}: rebase is not injective");
        for (p, x) in table.entries() {
            let level = p.len() + 2;
            let members = layers
                .entry(level)
                .or_insert_with(|| layer(level).filter(|u| universal.contains(u)).collect());
            let image = members[p.value() as usize];
            ensure!(moved.get(&image) == Some(x), "table {t}: a({p}) should be {image}");
            ensure!(universal.contains(&image), "table {t}: {image} is not allowed");
        }
        let distinct: BTreeSet<&BitString> = moved.entries().keys().collect();
        ensure!(distinct.len() == table.len(), "table {t}: images collide");
        for x in table.image() {
            let before = table.entries().iter().filter(|(_, o)| **o == x).map(|(p, _)| p.len()).min();
            let after = moved.entries().iter().filter(|(_, o)| **o == x).map(|(p, _)| p.len()).min();
            ensure!(after == before.map(|n| n + 2), "table {t}: C of {x} is not shifted by 2");
            ensure!(
                moved.c_of(&x) == Complexity::Finite(before.unwrap() + 2),
                "table {t}: c_of disagrees for {x}"
            );
        }
        entries += table.len();
    }
    Ok(format!("100 tables, {entries} descriptions moved into A with lengths +2"))
}

// --- 10 ----------------------------------------------------------------

fn scripted_trace(config: &GameConfig, descriptions: &[&str]) -> GameTrace {
    let events = descriptions.iter().enumerate().map(|(i, p)| EnumerationEvent {
        clock: i as u64 + 1,
        description: bs(p),
        object: BitString::from_value(i as u64, 20).unwrap(),
    });
    let mut game = Game::new(config.clone()).unwrap();
    let mut bob = ReplayBob::new(events);
    while game.step(&mut bob).is_none() {}
    let trace = game.into_trace();
    assert_eq!(trace.halt, HaltReason::BobExhausted, "script must be legal");
    trace
}

/// Level-12 expansion of the free allowed strings at `level`, by brute force.
fn brute_free_allowed(universal: &UniversalSet, domain: &[BitString], level: u32) -> BTreeSet<BitString> {
    layer(level)
        .filter(|u| universal.contains(u) && domain.iter().all(|p| !p.comparable(u)))
        .flat_map(|u| (0..1u64 << (12 - level)).map(move |v| u.concat_value(v, 12 - level)))
        .collect()
}

fn expand(set: &BasicSet) -> BTreeSet<BitString> {
    set.represent_at(12).unwrap().into_iter().collect()
}

/// Re-walks the block schedule with brute-force sets and compares.
fn check_b_sequence(trace: &GameTrace, universal: &UniversalSet, report: &BSequenceReport) -> Result<(), String> {
    let cfg = AliceConfig::new(1).unwrap();
    let domain: Vec<BitString> = trace.events.iter().map(|e| e.description).collect();
    let mut union: BTreeSet<BitString> = BTreeSet::new();
    let mut emitted = 0;
    let mut examined = Vec::new();
    let mut stop = BStop::BlocksExhausted;
    for block in universal.near_blocks() {
        let Some(lo) = block.lo_level().filter(|&lo| lo <= 12) else { break };
        let bottom = block.hi_level().min(12) as u32;
        if bottom - lo < 3 {
            continue;
        }
        let allowed: BTreeSet<BitString> = layer(12)
            .filter(|w| universal.contains(&w.prefix(lo)))
            .collect();
        if !allowed.is_disjoint(&union) {
            continue;
        }
        examined.push(block.index);
        let free = brute_free_allowed(universal, &domain, bottom);
        let measure = DyadicMeasure::new(free.len() as u128, 12);
        if measure < cfg.epsilon() {
            stop = BStop::BelowEpsilon;
            break;
        }
        let entry = report.sets.get(emitted).ok_or("report has too few sets")?;
        ensure!(entry.block_index == block.index, "B{emitted} taken from the wrong block");
        ensure!(entry.level == bottom, "B{emitted} read at level {} instead of {bottom}", entry.level);
        ensure!(expand(&entry.set) == free, "B{emitted} differs from the brute-force set");
        ensure!(entry.measure == measure, "B{emitted} measure differs");
        ensure!(free.is_disjoint(&union), "B{emitted} meets earlier sets");
        union.extend(free);
        emitted += 1;
        if 3 * union.len() >= 1 << 12 {
            stop = BStop::DensityReached;
            break;
        }
    }
    ensure!(report.sets.len() == emitted, "report has {} sets, oracle {emitted}", report.sets.len());
    ensure!(report.examined == examined, "examined blocks differ");
    ensure!(report.stop == stop, "stop {} vs oracle {stop}", report.stop);
    let cumulative = DyadicMeasure::new(union.len() as u128, 12);
    ensure!(report.cumulative == cumulative, "cumulative {} vs oracle {cumulative}", report.cumulative);
    ensure!(report.pairwise_disjoint(), "reported sets overlap");
    Ok(())
}

fn b_sequence_audit() -> Outcome {
    let cfg = AliceConfig::new(1).unwrap();
    let standard = GameConfig {
        depth_max: 12,
        alice_cs: vec![],
        play_out: true,
        ..GameConfig::default()
    };
    // Level 6 keeps only {11} free; one 7-bit description under each 6-bit
    // string starting with 0 leaves half of {0} free at level 12.
    let mut two_blocks: Vec<String> = vec!["100".into(), "101".into()];
    two_blocks.extend((0..32u64).map(|v| BitString::from_value(v << 1, 7).unwrap().to_string()));
    let two_blocks: Vec<&str> = two_blocks.iter().map(String::as_str).collect();
    let mut cases: Vec<(GameConfig, GameTrace, Option<DyadicMeasure>, BStop)> = vec![
        (
            standard.clone(),
            scripted_trace(&standard, &two_blocks),
            Some(DyadicMeasure::new(1, 1)),
            BStop::DensityReached,
        ),
        (
            standard.clone(),
            scripted_trace(&standard, &["000", "001", "010", "011", "100", "101", "110", "111"]),
            Some(DyadicMeasure::ZERO),
            BStop::BelowEpsilon,
        ),
        (standard.clone(), scripted_trace(&standard, &[]), Some(DyadicMeasure::ONE), BStop::DensityReached),
    ];
    let explicit = GameConfig {
        schedule: ScheduleSpec::Explicit(vec![(3, BasicSet::full()), (7, "0,11".parse().unwrap())]),
        ..standard.clone()
    };
    cases.push((
        explicit.clone(),
        scripted_trace(&explicit, &two_blocks),
        Some(DyadicMeasure::pow2_neg(2)),
        BStop::BlocksExhausted,
    ));
    for seed in 0..30u64 {
        let config = GameConfig {
            step_limit: 2 + seed * 3,
            ..standard.clone()
        };
        let mut game = Game::new(config.clone()).unwrap();
        let mut bob = RandomBob::new(seed);
        while game.step(&mut bob).is_none() {}
        let trace = game.into_trace();
        let stop = BStop::BlocksExhausted; // placeholder, checked by the oracle walk
        cases.push((config, trace, None, stop));
    }
    let mut multi = 0;
    for (i, (config, trace, cumulative, stop)) in cases.iter().enumerate() {
        let universal = config.universal().unwrap();
        let report = b_sequence(trace, &cfg, &universal);
        check_b_sequence(trace, &universal, &report).map_err(|e| format!("case {i}: {e}"))?;
        ensure!(report.sets.iter().all(|b| b.measure >= cfg.epsilon()), "case {i}: a set below epsilon");
        if let Some(expected) = cumulative {
            ensure!(report.cumulative == *expected, "case {i}: cumulative {} != {expected}", report.cumulative);
            ensure!(report.stop == *stop, "case {i}: stop {} != {stop}", report.stop);
        }
        multi += usize::from(report.sets.len() >= 2);
    }
    Ok(format!("{} traces; {multi} with two or more sets; all match exhaustive expansion", cases.len()))
}

// --- 11 ----------------------------------------------------------------

fn determinism(store: &[GameTrace]) -> Outcome {
    for (i, trace) in store.iter().enumerate() {
        let text = trace.to_text();
        let back: GameTrace = text.parse().map_err(|e| format!("trace {i}: {e}"))?;
        ensure!(back == *trace, "trace {i}: text round trip changed the trace");
        ensure!(back.to_text() == text, "trace {i}: text is not stable");
        match back.replay_verify() {
            Verdict::Pass => {}
            Verdict::Mismatch(why) => return Err(format!("trace {i}: {why}")),
        }
    }
    let config = GameConfig {
        depth_max: 14,
        play_out: true,
        ..GameConfig::default()
    };
    for seed in [3u64, 17] {
        let a = restricted_prefix::game::run_game(&mut AdversarialBob::new(seed), &config).unwrap();
        let b = restricted_prefix::game::run_game(&mut AdversarialBob::new(seed), &config).unwrap();
        ensure!(a == b, "seed {seed}: two runs differ");
    }
    Ok(format!("{} traces replayed bit-exactly; same seed gives the same trace", store.len()))
}

fn main() -> ExitCode {
    let mut store: Vec<GameTrace> = Vec::new();
    let mut failures = 0;
    let mut report = |id: u32, name: &str, run: &mut dyn FnMut() -> Outcome| {
        let start = Instant::now();
        let outcome = run();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS {id:>2} {name}: {detail} ({secs:.1}s)"),
            Err(why) => {
                failures += 1;
                println!("FAIL {id:>2} {name}: {why} ({secs:.1}s)");
            }
        }
    };
    report(1, "Kraft-Chaitin soundness", &mut kc_soundness);
    report(2, "Kraft-Chaitin completeness boundary", &mut kc_boundary);
    report(3, "allowed-set layer bound", &mut layer_bound);
    report(4, "schedule recurrence", &mut schedule_recurrence);
    report(5, "free-fraction monotonicity", &mut || free_monotonicity(&mut store));
    report(6, "ledger conservation", &mut || ledger_conservation(&mut store));
    report(7, "counting-lemma dichotomy", &mut || counting_dichotomy(&mut store));
    report(8, "win witness", &mut || win_witness(&store));
    report(9, "rebase", &mut rebase);
    report(10, "B-sequence audit", &mut b_sequence_audit);
    report(11, "determinism", &mut || determinism(&store));
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failures} criteria failed");
        ExitCode::FAILURE
    }
}
