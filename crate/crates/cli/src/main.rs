//! Batch experiment runner for deal-campaign bid optimization: replays
//! click logs through simulated first-price auctions, sweeps deal
//! parameters, and emits comma-separated report tables.

mod commands;
mod config;
mod output;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use commands::Invocation;

#[derive(Parser)]
#[command(
    name = "dealbid",
    version,
    about = "Replay, sweep, selection, admission, and timing experiments \
             for minimum-conversion deal campaigns"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Replay every ad under each strategy and required-clicks value.
    Replay(CommonArgs),
    /// Aggregate replay outcomes per (required clicks, strategy).
    Sweep(CommonArgs),
    /// Group ads and let a selector pick which deal bids on each visit.
    Select(CommonArgs),
    /// Replay with an admissibility filter; compare against no filter.
    Admit(CommonArgs),
    /// Time the full bid optimization across required-clicks values.
    Bench(CommonArgs),
    /// Write a synthetic click log.
    GenLog(CommonArgs),
    /// Evaluate the expected-profit objective on a bid grid.
    ObjectiveCurve(CommonArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// Experiment configuration file (JSON).
    #[arg(long, value_name = "PATH")]
    config: PathBuf,
    /// Overrides the config's seed.
    #[arg(long, value_name = "N")]
    seed: Option<u64>,
    /// Overrides the config's report path.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
    /// Worker threads for replay jobs.
    #[arg(long, value_name = "N", default_value_t = 1)]
    threads: usize,
    /// Print aggregates to standard output.
    #[arg(long)]
    summary: bool,
}

impl CommonArgs {
    fn into_invocation(self) -> Invocation {
        Invocation {
            config: self.config,
            seed: self.seed,
            out: self.out,
            threads: self.threads,
            summary: self.summary,
        }
    }
}

fn main() {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Replay(args) => commands::replay(&args.into_invocation()),
        Command::Sweep(args) => commands::sweep(&args.into_invocation()),
        Command::Select(args) => commands::select(&args.into_invocation()),
        Command::Admit(args) => commands::admit(&args.into_invocation()),
        Command::Bench(args) => commands::bench(&args.into_invocation()),
        Command::GenLog(args) => commands::gen_log(&args.into_invocation()),
        Command::ObjectiveCurve(args) => commands::objective_curve(&args.into_invocation()),
    };
    if let Err(err) = result {
        eprintln!("error: {err:#}");
        std::process::exit(1);
    }
}
