mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use mdp_nas::navigation::ScheduleKind;

#[derive(Parser)]
#[command(
    name = "mdp-nas",
    version,
    about = "Best-policy identification in tabular MDPs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate an instance file.
    Gen(GenArgs),
    /// Oracle allocation, oracle policy and hardness profile of an instance.
    Solve(SolveArgs),
    /// Ergodicity diagnostics of the uniform-policy chain.
    Chain(ChainArgs),
    /// One identification run with its trace.
    Run(RunArgs),
    /// Monte-Carlo campaign of identification runs.
    Bench(BenchArgs),
    /// Sample complexity of variance-reduced Q-learning on an instance.
    Vrql(VrqlArgs),
    /// Starvation of a line walker under a decaying exploration rate.
    Starve(StarveArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Ergodic,
    Riverswim,
    Counterexample,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long, value_enum)]
    kind: Kind,
    #[arg(long, default_value_t = 5)]
    states: usize,
    /// Ignored by the RiverSwim kinds, whose action sets are fixed.
    #[arg(long, default_value_t = 2)]
    actions: usize,
    #[arg(long, default_value_t = 0.95)]
    gamma: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Destination file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long)]
    instance: PathBuf,
    #[arg(long, default_value_t = 20_000)]
    max_iters: usize,
    /// Write the allocation as JSON.
    #[arg(long)]
    dump: Option<PathBuf>,
}

#[derive(Args)]
struct ChainArgs {
    #[arg(long)]
    instance: PathBuf,
    /// Write the report as JSON.
    #[arg(long)]
    dump: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    instance: PathBuf,
    #[arg(long, default_value_t = 0.1)]
    delta: f64,
    /// Navigation rule, by registry name or alias.
    #[arg(long, default_value = "d")]
    mode: String,
    #[arg(long, default_value = "theorem", value_parser = parse_schedule)]
    schedule: ScheduleKind,
    /// Overrides the connectivity constant used by the non-ergodic schedules.
    #[arg(long)]
    m: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1000)]
    recompute_period: u64,
    #[arg(long, default_value_t = 10_000)]
    trace_period: u64,
    #[arg(long, default_value_t = 100_000_000)]
    max_steps: u64,
    /// Run to `max_steps` without testing the stopping rule.
    #[arg(long)]
    no_stop: bool,
    /// Output directory for CSV and JSON artifacts.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    #[command(flatten)]
    run: RunArgs,
    #[arg(long, default_value_t = 30)]
    runs: u64,
    /// Worker threads; defaults to the available cores.
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Args)]
struct VrqlArgs {
    #[arg(long)]
    instance: PathBuf,
    #[arg(long, default_value_t = 0.1)]
    delta: f64,
    #[arg(long, default_value_t = 10.0)]
    c1: f64,
    #[arg(long, default_value_t = 10.0)]
    c2: f64,
    #[arg(long, default_value_t = 10.0)]
    c3: f64,
}

#[derive(Args)]
struct StarveArgs {
    #[arg(long, default_value_t = 6)]
    states: usize,
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    #[arg(long, default_value_t = 100_000)]
    horizon: u64,
    #[arg(long, default_value_t = 200)]
    runs: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn parse_schedule(s: &str) -> Result<ScheduleKind, String> {
    s.parse().map_err(|e: mdp_nas::Error| e.to_string())
}

/// 2 for invalid input, 3 when a numerical routine did not converge.
fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<mdp_nas::Error>() {
        Some(e) if e.is_validation() => 2,
        Some(e) if e.is_non_convergence() => 3,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Gen(args) => commands::gen(args),
        Command::Solve(args) => commands::solve(args),
        Command::Chain(args) => commands::chain(args),
        Command::Run(args) => commands::run(args),
        Command::Bench(args) => commands::bench(args),
        Command::Vrql(args) => commands::vrql(args),
        Command::Starve(args) => commands::starve(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
