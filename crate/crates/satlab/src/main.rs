use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use satlab::{run_command, CliError, CommandKind};

#[derive(Parser)]
#[command(
    name = "satlab",
    about = "Deterministic transfer-learning experiments on exact finite mixtures",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    /// JSON experiment config; `{}` selects all defaults.
    #[arg(long)]
    config: PathBuf,
    /// Output directory; files are staged and renamed in atomically.
    #[arg(long)]
    out: PathBuf,
    /// Worker threads for independent runs (env SATLAB_JOBS as fallback).
    #[arg(long)]
    jobs: Option<usize>,
    /// Override the config's primary seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Mixture pretraining vs direct training gap on every component.
    Counterexample(RunArgs),
    /// Component covariances, the mixture identity, and the cancellation sweep.
    Covariance(RunArgs),
    /// Linearization-error scaling and linearized-probe comparison.
    Ntk(RunArgs),
    /// Fixed-compute concatenation sweep over base seeds.
    Timecat(RunArgs),
}

fn resolve_jobs(flag: Option<usize>) -> Option<usize> {
    flag.or_else(|| {
        std::env::var("SATLAB_JOBS")
            .ok()
            .and_then(|v| v.parse().ok())
    })
}

fn execute(kind: CommandKind, args: &RunArgs) -> Result<(), CliError> {
    let config_text = std::fs::read_to_string(&args.config)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", args.config.display())))?;
    let run = || run_command(kind, &config_text, args.seed);
    let outputs = match resolve_jobs(args.jobs) {
        Some(jobs) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(jobs)
                .build()
                .map_err(|e| CliError::Config(format!("cannot build worker pool: {e}")))?;
            pool.install(run)?
        }
        None => run()?,
    };
    outputs.write_atomic(&args.out)?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (kind, args) = match &cli.command {
        Command::Counterexample(a) => (CommandKind::Counterexample, a),
        Command::Covariance(a) => (CommandKind::Covariance, a),
        Command::Ntk(a) => (CommandKind::Ntk, a),
        Command::Timecat(a) => (CommandKind::Timecat, a),
    };
    match execute(kind, args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("satlab: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
