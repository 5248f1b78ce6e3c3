//! Game traces: the complete record of a run, its text format, and replay
//! verification.
//!
//! ```text
//! # rpgame trace v1
//! CONFIG depth=14 cs=1 steps=100000 play_out=false threshold=1/3 schedule=diagonal:4
//! 1 0000000 0000000000000000000000000000000000000001
//! 1 FIRE 1 7 14 2176
//! 1 FRAC 1 1 4
//! 2 0000001 000000000000000
//! 3 REJECT 0 01 prefix-conflict
//! HALT 2 rejected
//! Q 1 000000000000000 1 13
//! DIGEST 3f…
//! END
//! ```
//!
//! Event lines are `t p x`. A `FIRE`/`FRAC` pair follows the event after
//! which an Alice fired. `Q` lines give the final ledgers, and `DIGEST` is
//! the SHA-256 chain the engine kept over events, per-level free counts and
//! fire records.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::path::Path;
use std::str::FromStr;

use thiserror::Error;

use crate::decompressor::DescriptionTable;
use crate::dyadic::{BasicSet, BitString, DyadicMeasure, Threshold};
use crate::game::{
    run_game, AllocationLedger, EnumerationEvent, FireRecord, GameConfig, HaltReason, RejectKind,
    Rejection, ReplayBob, TriggerWindow,
};
use crate::universal::ScheduleSpec;

const HEADER: &str = "# rpgame trace v1";

#[derive(Debug, Error)]
pub enum TraceError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Everything a finished game produced.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GameTrace {
    pub config: GameConfig,
    /// Accepted events, in clock order.
    pub events: Vec<EnumerationEvent>,
    /// The event that broke a rule and ended the game, if any.
    pub rejection: Option<Rejection>,
    pub halt: HaltReason,
    /// Clock of the last accepted event.
    pub halt_clock: u64,
    /// One ledger per Alice, in the order of `config.alice_cs`.
    pub ledgers: Vec<AllocationLedger>,
    pub digest: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Mismatch(String),
}

impl GameTrace {
    /// The final enumerated decompressor.
    pub fn final_table(&self) -> DescriptionTable {
        self.events
            .iter()
            .map(|e| (e.description, e.object))
            .collect()
    }

    /// Accepted events with clock at most `clock`.
    pub fn events_until(&self, clock: u64) -> &[EnumerationEvent] {
        let end = self.events.partition_point(|e| e.clock <= clock);
        &self.events[..end]
    }

    pub fn ledger(&self, c: u32) -> Option<&AllocationLedger> {
        self.ledgers.iter().find(|l| l.c() == c)
    }

    /// Serializes to the line format.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let cfg = &self.config;
        let cs: Vec<String> = cfg.alice_cs.iter().map(u32::to_string).collect();
        writeln!(out, "{HEADER}").unwrap();
        writeln!(
            out,
            "CONFIG depth={} cs={} steps={} play_out={} threshold={} schedule={}",
            cfg.depth_max,
            if cs.is_empty() { "-".to_string() } else { cs.join(",") },
            cfg.step_limit,
            cfg.play_out,
            cfg.threshold,
            schedule_text(&cfg.schedule)
        )
        .unwrap();

        let mut fires: BTreeMap<u64, Vec<(u32, &FireRecord)>> = BTreeMap::new();
        for ledger in &self.ledgers {
            if let Some(f) = ledger.fired() {
                fires.entry(f.clock).or_default().push((ledger.c(), f));
            }
        }
        let mut write_fires = |out: &mut String, upto: u64| {
            while let Some(entry) = fires.first_entry() {
                if *entry.key() > upto {
                    break;
                }
                for (c, f) in entry.remove() {
                    let w = f.window;
                    writeln!(
                        out,
                        "{} FIRE {c} {} {} {}",
                        f.clock, w.start_level, w.end_level, f.count
                    )
                    .unwrap();
                    writeln!(
                        out,
                        "{} FRAC {c} {} {}",
                        f.clock,
                        f.fraction.numerator(),
                        f.fraction.exponent()
                    )
                    .unwrap();
                }
            }
        };
        for event in &self.events {
            write_fires(&mut out, event.clock.saturating_sub(1));
            writeln!(out, "{event}").unwrap();
            write_fires(&mut out, event.clock);
        }
        write_fires(&mut out, u64::MAX);
        if let Some(r) = &self.rejection {
            let e = r.event;
            writeln!(out, "{} REJECT {} {} {}", e.clock, e.description, e.object, r.kind).unwrap();
        }
        writeln!(out, "HALT {} {}", self.halt_clock, self.halt).unwrap();
        for ledger in &self.ledgers {
            for (x, w) in ledger.grants() {
                writeln!(out, "Q {} {x} {} {}", ledger.c(), w.numerator(), w.exponent()).unwrap();
            }
        }
        writeln!(out, "DIGEST {}", self.digest).unwrap();
        writeln!(out, "END").unwrap();
        out
    }

    pub fn write_to(&self, path: impl AsRef<Path>) -> Result<(), TraceError> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn read_from(path: impl AsRef<Path>) -> Result<GameTrace, TraceError> {
        std::fs::read_to_string(path)?.parse()
    }

    /// Re-runs the game with a replaying Bob and compares every recorded
    /// value, including the digest.
    pub fn replay_verify(&self) -> Verdict {
        let mut script = self.events.clone();
        script.extend(self.rejection.map(|r| r.event));
        let mut bob = ReplayBob::new(script);
        let replayed = match run_game(&mut bob, &self.config) {
            Ok(t) => t,
            Err(e) => return Verdict::Mismatch(format!("configuration rejected: {e}")),
        };
        match first_difference(self, &replayed) {
            None => Verdict::Pass,
            Some(diff) => Verdict::Mismatch(diff),
        }
    }
}

fn first_difference(recorded: &GameTrace, replayed: &GameTrace) -> Option<String> {
    if recorded.events.len() != replayed.events.len() {
        return Some(format!(
            "{} events recorded, {} accepted on replay",
            recorded.events.len(),
            replayed.events.len()
        ));
    }
    if let Some((a, b)) = recorded
        .events
        .iter()
        .zip(&replayed.events)
        .find(|(a, b)| a != b)
    {
        return Some(format!("event `{a}` replays as `{b}`"));
    }
    if recorded.rejection != replayed.rejection {
        return Some(format!(
            "rejection {:?} replays as {:?}",
            recorded.rejection, replayed.rejection
        ));
    }
    if (recorded.halt, recorded.halt_clock) != (replayed.halt, replayed.halt_clock) {
        return Some(format!(
            "halt {} at {} replays as {} at {}",
            recorded.halt, recorded.halt_clock, replayed.halt, replayed.halt_clock
        ));
    }
    for (a, b) in recorded.ledgers.iter().zip(&replayed.ledgers) {
        if a.fired() != b.fired() {
            return Some(format!(
                "fire record for c = {}: {:?} replays as {:?}",
                a.c(),
                a.fired(),
                b.fired()
            ));
        }
        if a.grants() != b.grants() {
            return Some(format!("ledger for c = {} differs on replay", a.c()));
        }
    }
    if recorded.ledgers.len() != replayed.ledgers.len() {
        return Some("ledger count differs on replay".into());
    }
    if recorded.digest != replayed.digest {
        return Some(format!(
            "digest {} replays as {}",
            recorded.digest, replayed.digest
        ));
    }
    if recorded != replayed {
        return Some("configuration differs on replay".into());
    }
    None
}

fn schedule_text(spec: &ScheduleSpec) -> String {
    match spec {
        ScheduleSpec::Diagonal { granularity } => format!("diagonal:{granularity}"),
        ScheduleSpec::Explicit(blocks) => {
            let parts: Vec<String> = blocks.iter().map(|(lo, set)| format!("{lo}:{set}")).collect();
            format!("explicit:{}", parts.join(";"))
        }
    }
}

/// Parses `diagonal:G` or `explicit:lo:set;lo:set;…`.
pub fn parse_schedule(text: &str) -> Result<ScheduleSpec, String> {
    if let Some(g) = text.strip_prefix("diagonal:") {
        let granularity = g.parse().map_err(|_| format!("bad granularity `{g}`"))?;
        return Ok(ScheduleSpec::Diagonal { granularity });
    }
    let Some(list) = text.strip_prefix("explicit:") else {
        return Err(format!("unknown schedule `{text}`"));
    };
    let mut blocks = Vec::new();
    for part in list.split(';').filter(|p| !p.is_empty()) {
        let (lo, set) = part
            .split_once(':')
            .ok_or_else(|| format!("bad block `{part}`"))?;
        let lo: u32 = lo.parse().map_err(|_| format!("bad level `{lo}`"))?;
        let set: BasicSet = set.parse().map_err(|e| format!("{e}"))?;
        blocks.push((lo, set));
    }
    Ok(ScheduleSpec::Explicit(blocks))
}

fn parse_config(line: &str) -> Result<GameConfig, String> {
    let mut depth = None;
    let mut cs = None;
    let mut steps = None;
    let mut play_out = None;
    let mut threshold = None;
    let mut schedule = None;
    for field in line.split_whitespace() {
        let (key, value) = field
            .split_once('=')
            .ok_or_else(|| format!("bad field `{field}`"))?;
        let bad = || format!("bad value for {key}: `{value}`");
        match key {
            "depth" => depth = Some(value.parse::<u32>().map_err(|_| bad())?),
            "cs" if value == "-" => cs = Some(Vec::new()),
            "cs" => {
                cs = Some(
                    value
                        .split(',')
                        .map(str::parse::<u32>)
                        .collect::<Result<Vec<_>, _>>()
                        .map_err(|_| bad())?,
                )
            }
            "steps" => steps = Some(value.parse::<u64>().map_err(|_| bad())?),
            "play_out" => play_out = Some(value.parse::<bool>().map_err(|_| bad())?),
            "threshold" => threshold = Some(value.parse::<Threshold>().map_err(|_| bad())?),
            "schedule" => schedule = Some(parse_schedule(value)?),
            _ => return Err(format!("unknown field `{key}`")),
        }
    }
    let missing = |name: &str| format!("CONFIG is missing `{name}`");
    Ok(GameConfig {
        depth_max: depth.ok_or_else(|| missing("depth"))?,
        alice_cs: cs.ok_or_else(|| missing("cs"))?,
        step_limit: steps.ok_or_else(|| missing("steps"))?,
        play_out: play_out.ok_or_else(|| missing("play_out"))?,
        threshold: threshold.ok_or_else(|| missing("threshold"))?,
        schedule: schedule.ok_or_else(|| missing("schedule"))?,
    })
}

fn field<T: FromStr>(fields: &[&str], i: usize, what: &str) -> Result<T, String> {
    let raw = fields.get(i).ok_or_else(|| format!("missing {what}"))?;
    raw.parse().map_err(|_| format!("bad {what} `{raw}`"))
}

fn measure(fields: &[&str], i: usize) -> Result<DyadicMeasure, String> {
    let numerator: u128 = field(fields, i, "numerator")?;
    let exponent: u32 = field(fields, i + 1, "exponent")?;
    let m = DyadicMeasure::new(numerator, exponent);
    if (m.numerator(), m.exponent()) != (numerator, exponent) {
        return Err(format!("measure {numerator}/2^{exponent} is not in lowest terms"));
    }
    Ok(m)
}

fn expect_len(fields: &[&str], n: usize) -> Result<(), String> {
    if fields.len() == n {
        Ok(())
    } else {
        Err(format!("expected {n} fields, found {}", fields.len()))
    }
}

#[derive(Default)]
struct PendingLedger {
    grants: BTreeMap<BitString, DyadicMeasure>,
    window: Option<(u64, TriggerWindow, u64)>,
    fraction: Option<DyadicMeasure>,
}

impl FromStr for GameTrace {
    type Err = TraceError;

    fn from_str(text: &str) -> Result<Self, Self::Err> {
        let mut config = None;
        let mut events: Vec<EnumerationEvent> = Vec::new();
        let mut rejection = None;
        let mut halt = None;
        let mut digest = None;
        let mut pending: BTreeMap<u32, PendingLedger> = BTreeMap::new();
        let mut ended = false;
        let mut last_line = 0;

        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            last_line = line_no;
            let err = |msg: String| TraceError::Parse { line: line_no, msg };
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if ended {
                return Err(err("content after END".into()));
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            let in_body = |what: &str| -> Result<(), TraceError> {
                if config.is_none() {
                    return Err(err(format!("{what} before CONFIG")));
                }
                if halt.is_some() && !matches!(what, "Q" | "DIGEST") {
                    return Err(err(format!("{what} after HALT")));
                }
                Ok(())
            };
            match fields[0] {
                "CONFIG" => {
                    if config.is_some() {
                        return Err(err("second CONFIG line".into()));
                    }
                    let cfg = parse_config(line.trim_start_matches("CONFIG")).map_err(err)?;
                    for &c in &cfg.alice_cs {
                        pending.insert(c, PendingLedger::default());
                    }
                    config = Some(cfg);
                }
                "HALT" => {
                    in_body("HALT")?;
                    expect_len(&fields, 3).map_err(err)?;
                    let clock: u64 = field(&fields, 1, "clock").map_err(err)?;
                    let reason: HaltReason = field(&fields, 2, "halt reason").map_err(err)?;
                    halt = Some((reason, clock));
                }
                "Q" => {
                    in_body("Q")?;
                    expect_len(&fields, 5).map_err(err)?;
                    if halt.is_none() {
                        return Err(err("Q before HALT".into()));
                    }
                    let c: u32 = field(&fields, 1, "constant").map_err(err)?;
                    let x: BitString = field(&fields, 2, "object").map_err(err)?;
                    let w = measure(&fields, 3).map_err(err)?;
                    let ledger = pending
                        .get_mut(&c)
                        .ok_or_else(|| err(format!("no Alice for c = {c}")))?;
                    if ledger.grants.insert(x, w).is_some() {
                        return Err(err(format!("object {x} listed twice for c = {c}")));
                    }
                }
                "DIGEST" => {
                    in_body("DIGEST")?;
                    expect_len(&fields, 2).map_err(err)?;
                    let hex = fields[1];
                    if hex.len() != 64 || !hex.bytes().all(|b| b.is_ascii_hexdigit()) {
                        return Err(err(format!("bad digest `{hex}`")));
                    }
                    digest = Some(hex.to_ascii_lowercase());
                }
                "END" => {
                    if digest.is_none() {
                        return Err(err("END before DIGEST".into()));
                    }
                    ended = true;
                }
                _ => {
                    in_body("event")?;
                    let clock: u64 = field(&fields, 0, "clock").map_err(err)?;
                    match fields.get(1).copied() {
                        Some("FIRE") => {
                            expect_len(&fields, 6).map_err(err)?;
                            let c: u32 = field(&fields, 2, "constant").map_err(err)?;
                            let window = TriggerWindow {
                                start_level: field(&fields, 3, "start level").map_err(err)?,
                                end_level: field(&fields, 4, "end level").map_err(err)?,
                            };
                            let count: u64 = field(&fields, 5, "target count").map_err(err)?;
                            let ledger = pending
                                .get_mut(&c)
                                .ok_or_else(|| err(format!("no Alice for c = {c}")))?;
                            if ledger.window.is_some() {
                                return Err(err(format!("second FIRE for c = {c}")));
                            }
                            ledger.window = Some((clock, window, count));
                        }
                        Some("FRAC") => {
                            expect_len(&fields, 5).map_err(err)?;
                            let c: u32 = field(&fields, 2, "constant").map_err(err)?;
                            let fraction = measure(&fields, 3).map_err(err)?;
                            let ledger = pending
                                .get_mut(&c)
                                .ok_or_else(|| err(format!("no Alice for c = {c}")))?;
                            match ledger.window {
                                Some((t, _, _)) if t == clock && ledger.fraction.is_none() => {
                                    ledger.fraction = Some(fraction)
                                }
                                _ => return Err(err(format!("FRAC without FIRE for c = {c}"))),
                            }
                        }
                        Some("REJECT") => {
                            expect_len(&fields, 5).map_err(err)?;
                            if rejection.is_some() {
                                return Err(err("second REJECT".into()));
                            }
                            let event = EnumerationEvent {
                                clock,
                                description: field(&fields, 2, "description").map_err(err)?,
                                object: field(&fields, 3, "object").map_err(err)?,
                            };
                            let kind: RejectKind = field(&fields, 4, "rejection kind").map_err(err)?;
                            rejection = Some(Rejection { event, kind });
                        }
                        _ => {
                            expect_len(&fields, 3).map_err(err)?;
                            if rejection.is_some() {
                                return Err(err("event after REJECT".into()));
                            }
                            if events.last().is_some_and(|e| e.clock >= clock) {
                                return Err(err("event clocks must increase".into()));
                            }
                            events.push(EnumerationEvent {
                                clock,
                                description: field(&fields, 1, "description").map_err(err)?,
                                object: field(&fields, 2, "object").map_err(err)?,
                            });
                        }
                    }
                }
            }
        }
        let at_end = |msg: &str| TraceError::Parse {
            line: last_line,
            msg: msg.into(),
        };
        if !ended {
            return Err(at_end("missing END (truncated trace?)"));
        }
        let config = config.ok_or_else(|| at_end("missing CONFIG"))?;
        let (halt, halt_clock) = halt.ok_or_else(|| at_end("missing HALT"))?;
        let digest = digest.ok_or_else(|| at_end("missing DIGEST"))?;
        let mut ledgers = Vec::new();
        for &c in &config.alice_cs {
            let p = pending.remove(&c).unwrap_or_default();
            let fired = match (p.window, p.fraction) {
                (None, None) => None,
                (Some((clock, window, count)), Some(fraction)) => Some(FireRecord {
                    clock,
                    window,
                    count,
                    fraction,
                }),
                _ => return Err(at_end(&format!("FIRE without FRAC for c = {c}"))),
            };
            ledgers.push(AllocationLedger::from_parts(c, p.grants, fired));
        }
        Ok(GameTrace {
            config,
            events,
            rejection,
            halt,
            halt_clock,
            ledgers,
            digest,
        })
    }
}

impl fmt::Display for GameTrace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

/// Parses and replays trace text.
pub fn verify_trace_text(text: &str) -> Result<Verdict, TraceError> {
    Ok(text.parse::<GameTrace>()?.replay_verify())
}
