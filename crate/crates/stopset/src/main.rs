//! Thin command-line front end; all logic lives in the library.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use stopset::exhaust::PartitionEvent;
use stopset::run::{
    emit, run, CodeSource, Command, OutputFormat, RunConfig, RunScope,
};
use stopset::simulate::{PatternQuery, StopRule};
use stopset::tanner::SupportSet;

#[derive(Parser)]
#[command(name = "stopset", version, about = "Exhaustive stopping-set and trapping-set search with BEC decoding bounds")]
struct Cli {
    #[command(subcommand)]
    command: CliCommand,
}

#[derive(Args)]
struct CommonArgs {
    /// Code source: a path to an alist file, or builtin:<name>
    /// (c1, golay23, regular:dv,dc,n, irregular:l0,..;r0,..;n, tanner155[:right]).
    #[arg(long)]
    code: String,
    /// Seed for the random builtin ensembles.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Maximum pattern size of interest.
    #[arg(long, default_value_t = 8)]
    t: usize,
    /// Decoding-tree node budget.
    #[arg(long, default_value_t = 2_000_000)]
    node_budget: usize,
    /// Candidate antichain cap per node.
    #[arg(long, default_value_t = 100_000)]
    count_cap: usize,
    /// Wall-clock limit per driver call, milliseconds.
    #[arg(long)]
    time_budget_ms: Option<u64>,
    /// Worker threads (default: STOPSET_WORKERS or all cores).
    #[arg(long)]
    workers: Option<usize>,
    /// Output format.
    #[arg(long, default_value = "json")]
    format: String,
    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum CliCommand {
    /// Exhaust minimal stopping sets (bit-wise or frame-wise).
    Sse {
        #[command(flatten)]
        common: CommonArgs,
        /// Bit-wise scope: exhaust stopping sets containing this bit (0-based).
        #[arg(long, conflicts_with = "frame")]
        bit: Option<usize>,
        /// Frame-wise scope.
        #[arg(long)]
        frame: bool,
        /// JSON file with explicit partition events for the composite approach.
        #[arg(long)]
        partition: Option<PathBuf>,
        /// Use the documented default partition (bit scope only).
        #[arg(long)]
        default_partition: bool,
    },
    /// Exhaust minimal k-out trapping sets.
    Tse {
        #[command(flatten)]
        common: CommonArgs,
        /// Number of degree-one checks of the sought patterns.
        #[arg(long)]
        k: usize,
        /// Mirror the printed edge-selection rule exactly (may miss patterns
        /// whose degree-one checks share a variable).
        #[arg(long)]
        strict_selections: bool,
        /// Skip selections touching variables of degree <= k.
        #[arg(long)]
        trivial_filter: bool,
    },
    /// Evaluate bound curves on an eps grid.
    Bound {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long, conflicts_with = "frame")]
        bit: Option<usize>,
        #[arg(long)]
        frame: bool,
        /// Erasure probabilities: comma list (0.1,0.2) or range start:stop:step.
        #[arg(long)]
        eps: String,
    },
    /// Monte-Carlo FER/BER estimation.
    Mc {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        eps: String,
        /// Fixed trial count.
        #[arg(long, conflicts_with = "events")]
        trials: Option<u64>,
        /// Run until this many frame-error events.
        #[arg(long)]
        events: Option<u64>,
        /// Simulation seed.
        #[arg(long, default_value_t = 0)]
        mc_seed: u64,
    },
    /// Brute-force pattern oracle.
    Oracle {
        #[command(flatten)]
        common: CommonArgs,
        /// Pattern kind: stopping, codeword, or kout:<k>.
        #[arg(long, default_value = "stopping")]
        kind: String,
        /// Restrict to patterns containing this bit.
        #[arg(long)]
        bit: Option<usize>,
    },
    /// Classify one variable subset (0-based, comma separated).
    Verify {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long, value_delimiter = ',')]
        set: Vec<usize>,
    },
    /// Uniformly-good check: stopping distance under check removals.
    Good {
        #[command(flatten)]
        common: CommonArgs,
        /// Required stopping distance.
        #[arg(long)]
        d: usize,
        /// Maximum number of removed checks.
        #[arg(long, default_value_t = 1)]
        c_max: usize,
    },
}

fn parse_eps(spec: &str) -> Result<Vec<f64>, String> {
    if let Some((start, rest)) = spec.split_once(':') {
        let (stop, step) = rest
            .split_once(':')
            .ok_or_else(|| format!("bad eps range: {spec}"))?;
        let (start, stop, step): (f64, f64, f64) = (
            start.parse().map_err(|_| format!("bad eps: {start}"))?,
            stop.parse().map_err(|_| format!("bad eps: {stop}"))?,
            step.parse().map_err(|_| format!("bad eps: {step}"))?,
        );
        if step <= 0.0 {
            return Err("eps step must be positive".into());
        }
        let mut out = Vec::new();
        let mut e = start;
        while e <= stop + 1e-12 {
            out.push((e * 1e12).round() / 1e12);
            e += step;
        }
        Ok(out)
    } else {
        spec.split(',')
            .map(|p| p.trim().parse::<f64>().map_err(|_| format!("bad eps: {p}")))
            .collect()
    }
}

fn parse_kind(spec: &str) -> Result<PatternQuery, String> {
    match spec {
        "stopping" => Ok(PatternQuery::Stopping),
        "codeword" => Ok(PatternQuery::CodewordSupport),
        _ => spec
            .strip_prefix("kout:")
            .and_then(|k| k.parse().ok())
            .map(PatternQuery::KOut)
            .ok_or_else(|| format!("unknown kind: {spec}")),
    }
}

fn build_config(cli: CliCommand) -> Result<RunConfig, String> {
    let (common, command) = match cli {
        CliCommand::Sse {
            common,
            bit,
            frame,
            partition,
            default_partition,
        } => {
            let scope = scope_of(bit, frame)?;
            let partition = match partition {
                Some(path) => {
                    let text = std::fs::read_to_string(&path)
                        .map_err(|e| format!("{}: {e}", path.display()))?;
                    let events: Vec<PartitionEvent> =
                        serde_json::from_str(&text).map_err(|e| format!("partition: {e}"))?;
                    Some(events)
                }
                None => None,
            };
            (
                common,
                Command::Sse {
                    scope,
                    partition,
                    use_default_partition: default_partition,
                },
            )
        }
        CliCommand::Tse {
            common,
            k,
            strict_selections,
            trivial_filter,
        } => (
            common,
            Command::Tse {
                k,
                strict_selections,
                trivial_filter,
            },
        ),
        CliCommand::Bound { common, bit, frame, eps } => {
            let scope = scope_of(bit, frame)?;
            (
                common,
                Command::Bound {
                    scope,
                    eps: parse_eps(&eps)?,
                },
            )
        }
        CliCommand::Mc {
            common,
            eps,
            trials,
            events,
            mc_seed,
        } => {
            let stop_rule = match (trials, events) {
                (Some(t), None) => StopRule::FixedTrials(t),
                (None, Some(e)) => StopRule::ErrorEvents(e),
                (None, None) => StopRule::ErrorEvents(100),
                _ => return Err("give either --trials or --events".into()),
            };
            (
                common,
                Command::Mc {
                    eps: parse_eps(&eps)?,
                    stop_rule,
                    seed: mc_seed,
                },
            )
        }
        CliCommand::Oracle { common, kind, bit } => {
            let t = common.t;
            (
                common,
                Command::Oracle {
                    t,
                    kind: parse_kind(&kind)?,
                    bit,
                },
            )
        }
        CliCommand::Verify { common, set } => {
            let _ = SupportSet::new(set.clone());
            (common, Command::Verify { set })
        }
        CliCommand::Good { common, d, c_max } => (
            common,
            Command::Good {
                d_target: d,
                c_max,
            },
        ),
    };
    let code = if let Some(name) = common.code.strip_prefix("builtin:") {
        CodeSource::Builtin {
            name: name.to_string(),
            seed: common.seed,
        }
    } else {
        CodeSource::Alist {
            path: common.code.clone(),
        }
    };
    let format = match common.format.as_str() {
        "json" => OutputFormat::Json,
        "csv" => OutputFormat::Csv,
        other => return Err(format!("unknown format: {other}")),
    };
    let workers = common.workers.or_else(|| {
        std::env::var("STOPSET_WORKERS")
            .ok()
            .and_then(|v| v.parse().ok())
    });
    Ok(RunConfig {
        command,
        code,
        limits: stopset::SearchLimits {
            t: common.t,
            node_budget: common.node_budget,
            count_cap: common.count_cap,
            time_budget_ms: common.time_budget_ms,
        },
        workers,
        format,
        output: common.out,
    })
}

fn scope_of(bit: Option<usize>, frame: bool) -> Result<RunScope, String> {
    match (bit, frame) {
        (Some(i), false) => Ok(RunScope::Bit(i)),
        (None, true) => Ok(RunScope::Frame),
        (None, false) => Err("choose --bit <i> or --frame".into()),
        (Some(_), true) => Err("--bit conflicts with --frame".into()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let config = match build_config(cli.command) {
        Ok(c) => c,
        Err(msg) => {
            eprintln!("error[input]: {msg}");
            return ExitCode::from(stopset::run::EXIT_INPUT as u8);
        }
    };
    let outcome = run(&config);
    let code = emit(&config, &outcome);
    ExitCode::from(code as u8)
}
