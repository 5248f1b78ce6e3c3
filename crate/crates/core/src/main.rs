use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use restricted_prefix::analysis::{b_sequence, counting_lemma_audit, density_check, AnalysisError};
use restricted_prefix::game::{
    check_win, run_game, AdversarialBob, AliceConfig, Bob, GameConfig, GreedyKcBob, RandomBob,
};
use restricted_prefix::kraft_chaitin::Allocator;
use restricted_prefix::trace::{parse_schedule, GameTrace, TraceError, Verdict};
use restricted_prefix::universal::{UniversalSet, DEFAULT_GRANULARITY};
use restricted_prefix::{BasicSet, BitString, Threshold};

/// Simulate and audit prefix-free description games over a layered allowed set.
#[derive(Parser)]
#[command(name = "rpgame", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum BobKind {
    #[value(name = "greedy_kc")]
    GreedyKc,
    Random,
    Adversarial,
}

#[derive(Subcommand)]
enum Command {
    /// Play one game and write its trace.
    Simulate {
        #[arg(long, value_enum, default_value = "greedy_kc")]
        bob: BobKind,
        /// Alice constants, comma separated.
        #[arg(long = "c", value_delimiter = ',', default_value = "1")]
        cs: Vec<u32>,
        #[arg(long, default_value_t = 14)]
        depth: u32,
        #[arg(long, default_value_t = 100_000)]
        steps: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Number of length requests for the greedy Bob.
        #[arg(long, default_value_t = 2_000)]
        requests: usize,
        /// Keep playing after every Alice has fired.
        #[arg(long)]
        play_out: bool,
        #[arg(long, default_value = "1/3")]
        threshold: Threshold,
        /// `diagonal:G` or `explicit:lo:set;lo:set`.
        #[arg(long)]
        schedule: Option<String>,
        /// Trace file; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// List the first blocks of the allowed set.
    Schedule {
        #[arg(long, default_value_t = 20)]
        blocks: usize,
        #[arg(long, default_value_t = DEFAULT_GRANULARITY)]
        granularity: u32,
        #[arg(long, default_value = "1/3")]
        threshold: Threshold,
    },
    /// Run the Kraft–Chaitin allocator on a list of lengths.
    KcDemo {
        #[arg(required = true)]
        lengths: Vec<u32>,
    },
    /// Report whether strings belong to the allowed set.
    Member {
        #[arg(required = true)]
        strings: Vec<BitString>,
        #[arg(long, default_value_t = DEFAULT_GRANULARITY)]
        granularity: u32,
        #[arg(long, default_value = "1/3")]
        threshold: Threshold,
    },
    /// Replay a trace and compare it bit for bit.
    VerifyTrace { trace: PathBuf },
    /// Check the counting bound on every Alice that fired.
    AuditCounting { trace: PathBuf },
    /// Check which sets the covered set of a trace meets.
    Density {
        trace: PathBuf,
        #[arg(long = "set", required = true)]
        sets: Vec<BasicSet>,
    },
    /// Build the sequence of disjoint free allowed sets at block bottoms.
    BSeq {
        trace: PathBuf,
        #[arg(long = "c", default_value_t = 1)]
        c: u32,
    },
}

enum Failure {
    Violation,
    Usage(String),
}

impl From<TraceError> for Failure {
    fn from(e: TraceError) -> Self {
        Failure::Usage(e.to_string())
    }
}

fn main() -> ExitCode {
    match run(Cli::parse().command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Violation) => ExitCode::from(1),
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn usage<E: std::fmt::Display>(e: E) -> Failure {
    Failure::Usage(e.to_string())
}

fn run(command: Command) -> Result<(), Failure> {
    match command {
        Command::Simulate {
            bob,
            cs,
            depth,
            steps,
            seed,
            requests,
            play_out,
            threshold,
            schedule,
            out,
        } => {
            let schedule = match schedule {
                Some(text) => parse_schedule(&text).map_err(usage)?,
                None => GameConfig::default().schedule,
            };
            let config = GameConfig {
                depth_max: depth,
                alice_cs: cs,
                step_limit: steps,
                play_out,
                threshold,
                schedule,
            };
            let mut bob: Box<dyn Bob> = match bob {
                BobKind::GreedyKc => Box::new(GreedyKcBob::seeded(seed, requests, depth)),
                BobKind::Random => Box::new(RandomBob::new(seed)),
                BobKind::Adversarial => Box::new(AdversarialBob::new(seed)),
            };
            let trace = run_game(bob.as_mut(), &config).map_err(usage)?;
            match out {
                Some(path) => trace.write_to(path)?,
                None => print!("{}", trace.to_text()),
            }
            eprintln!(
                "halt={} events={} clock={}",
                trace.halt,
                trace.events.len(),
                trace.halt_clock
            );
            for ledger in &trace.ledgers {
                match ledger.fired() {
                    Some(f) => eprintln!(
                        "c={} fired at t={} window=[{},{}] N={} fraction={} total={} witness={}",
                        ledger.c(),
                        f.clock,
                        f.window.start_level,
                        f.window.end_level,
                        f.count,
                        f.fraction,
                        ledger.total(),
                        check_win(&trace, ledger.c()).map_or("none".into(), |x| x.to_string())
                    ),
                    None => eprintln!("c={} did not fire", ledger.c()),
                }
            }
            Ok(())
        }
        Command::Schedule {
            blocks,
            granularity,
            threshold,
        } => {
            let universal = UniversalSet::new(threshold, granularity);
            for b in universal.schedule_prefix(blocks) {
                println!(
                    "block={} set_index={} lo={} hi={} set={}",
                    b.index, b.set_index, b.lo, b.hi, b.set
                );
            }
            Ok(())
        }
        Command::KcDemo { lengths } => {
            let mut alloc = Allocator::new();
            let mut refused = false;
            for n in lengths {
                match alloc.allocate(n) {
                    Ok(x) => println!("{n} -> {x}"),
                    Err(e) => {
                        println!("{n} -> refused ({e})");
                        refused = true;
                    }
                }
            }
            println!("remaining={}", alloc.remaining());
            if refused {
                return Err(Failure::Violation);
            }
            Ok(())
        }
        Command::Member {
            strings,
            granularity,
            threshold,
        } => {
            let universal = UniversalSet::new(threshold, granularity);
            for x in strings {
                let block = universal
                    .block_at_level(u64::from(x.len()))
                    .map_or("none".to_string(), |b| format!("{}:{}", b.index, b.set));
                let verdict = if universal.contains(&x) {
                    "allowed"
                } else {
                    "prohibited"
                };
                println!("{x} {verdict} block={block}");
            }
            Ok(())
        }
        Command::VerifyTrace { trace } => {
            let trace = GameTrace::read_from(trace)?;
            match trace.replay_verify() {
                Verdict::Pass => {
                    println!("PASS digest={}", trace.digest);
                    Ok(())
                }
                Verdict::Mismatch(why) => {
                    println!("MISMATCH {why}");
                    Err(Failure::Violation)
                }
            }
        }
        Command::AuditCounting { trace } => {
            let trace = GameTrace::read_from(trace)?;
            let audits = counting_lemma_audit(&trace).map_err(usage)?;
            for a in &audits {
                println!("{a}");
            }
            if audits.iter().any(|a| a.is_violation()) {
                return Err(Failure::Violation);
            }
            Ok(())
        }
        Command::Density { trace, sets } => {
            let trace = GameTrace::read_from(trace)?;
            for row in density_check(&trace, &sets).map_err(usage)? {
                println!("{row}");
            }
            Ok(())
        }
        Command::BSeq { trace, c } => {
            let trace = GameTrace::read_from(trace)?;
            let cfg = AliceConfig::new(c).map_err(usage)?;
            let universal = trace
                .config
                .universal()
                .map_err(|e| usage(AnalysisError::from(e)))?;
            let report = b_sequence(&trace, &cfg, &universal);
            println!("{report}");
            let sound = report.pairwise_disjoint()
                && report.sets.iter().all(|b| b.measure >= cfg.epsilon());
            if !sound {
                return Err(Failure::Violation);
            }
            Ok(())
        }
    }
}
