//! `taskalloc`: experiment runner for assignment batches, kitchen episodes,
//! capability sweeps and trace replay.
//!
//! Exit codes: 0 when every requested run finished, 2 for configuration
//! errors, 3 when a replay diverges from its trace, 1 for anything else.

mod bindings;
mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};
use taskalloc::coordination::ControllerMode;

use commands::replay::ReplayFailure;
use config::{ConfigError, Experiment, Overrides, Resolved};

#[derive(Debug, Parser)]
#[command(name = "taskalloc", version, about = "Task allocation experiments")]
struct Cli {
    /// Log progress (-v) or detail (-vv) to stderr.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Score an allocator on random assignment instances.
    AssignEval(RunArgs),
    /// Run kitchen episodes under one or more controller modes.
    KitchenRun(RunArgs),
    /// Run planner episodes with and without worker capability hints.
    CapabilitySweep(RunArgs),
    /// Re-execute a trace and verify its observation hashes.
    Replay {
        /// A trace.jsonl written by kitchen-run or capability-sweep.
        trace: PathBuf,
        /// Trace header; defaults to trace_meta.json beside the trace.
        #[arg(long)]
        meta: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
struct RunArgs {
    /// JSON experiment configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    agents: Option<usize>,
    /// Controller mode(s), comma separated.
    #[arg(long, value_delimiter = ',')]
    mode: Vec<ControllerMode>,
    /// Built-in level id.
    #[arg(long)]
    level: Option<String>,
    /// Episodes run in parallel.
    #[arg(long)]
    jobs: Option<usize>,
    /// Output directory.
    #[arg(long)]
    output: Option<PathBuf>,
}

impl RunArgs {
    fn resolve(&self, experiment: Experiment) -> Result<Resolved, ConfigError> {
        let (cfg, text, base) = config::load(self.config.as_deref())?;
        let overrides = Overrides {
            seed: self.seed,
            agents: self.agents,
            modes: self.mode.clone(),
            level: self.level.clone(),
            jobs: self.jobs,
            output: self.output.clone(),
        };
        config::resolve(cfg, &text, self.config.as_deref(), base, experiment, &overrides)
    }
}

fn pool(jobs: usize) -> Result<rayon::ThreadPool> {
    Ok(rayon::ThreadPoolBuilder::new().num_threads(jobs).build()?)
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::AssignEval(args) => {
            let r = args.resolve(Experiment::AssignEval)?;
            let prices = commands::kitchen::load_prices(&r)?;
            let outcome = commands::assign::run(&r, &prices, &pool(r.jobs)?)?;
            commands::assign::print_summary(&outcome.score, &outcome.ledger, &r.output_dir);
        }
        Command::KitchenRun(args) => {
            let r = args.resolve(Experiment::KitchenRun)?;
            let summaries = commands::kitchen::run(&r, &pool(r.jobs)?)?;
            commands::kitchen::print_summary(&summaries);
        }
        Command::CapabilitySweep(args) => {
            let r = args.resolve(Experiment::CapabilitySweep)?;
            let pairs = commands::sweep::run(&r, &pool(r.jobs)?)?;
            commands::sweep::print_summary(&pairs);
        }
        Command::Replay { trace, meta } => {
            let outcome = commands::replay::run(&trace, meta.as_deref())?;
            println!("replay ok: {} steps, final hash {}", outcome.steps, outcome.final_hash);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new().filter_level(level).format_timestamp(None).init();

    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<ConfigError>().is_some() {
                ExitCode::from(2)
            } else if e.downcast_ref::<ReplayFailure>().is_some() {
                ExitCode::from(3)
            } else {
                ExitCode::FAILURE
            }
        }
    }
}
