//! `levywalk` command-line front end.
//!
//! Exit codes: 0 success, 1 validation, 2 numerical diagnostic, 3 I/O.

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use levywalk::config::ExperimentConfig;
use levywalk::Error;

use crate::commands::Outcome;
use crate::output::Artifacts;

#[derive(Parser)]
#[command(name = "levywalk", version, about = "Lévy walk simulation and limit-theorem checks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Experiment configuration (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Overrides the configured seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the configured output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads for replica fan-out.
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Walk paths on the t-grid plus their renewal skeletons.
    SimulateWalk(Common),
    /// Limit-process paths plus the jump series that built them.
    SimulateLimit(Common),
    /// Sample moments of the configured process on the t-grid.
    Moments(Common),
    /// Variance-exponent fit over the t-grid.
    ScalingFit(Common),
    /// Marginal KS convergence ladder.
    Ks(Common),
    /// Density of L(t) by transform inversion.
    Density(Common),
    /// Transform-level governing-equation check.
    Govcheck(Common),
}

type Runner = fn(&ExperimentConfig, &Artifacts) -> levywalk::Result<Outcome>;

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::InvalidParameter { .. } | Error::Config(_) | Error::BranchViolation { .. } => 1,
        Error::Io(_) => 3,
        Error::HorizonExceeded { .. }
        | Error::Nonconvergence(_)
        | Error::DegenerateFit(_)
        | Error::InversionDiagnostics(_)
        | Error::ResidualExceeded { .. } => 2,
    }
}

fn run(name: &'static str, args: &Common, runner: Runner) -> Result<Outcome, Error> {
    let mut cfg = ExperimentConfig::load(&args.config)?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &args.out {
        cfg.output.dir = out.to_string_lossy().into_owned();
    }
    cfg.validate()?;
    let art = Artifacts::new(&PathBuf::from(&cfg.output.dir), name, &cfg)?;
    match args.workers {
        Some(0) => Err(Error::Config("field `workers`: must be positive".into())),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::Config(format!("worker pool: {e}")))?
            .install(|| runner(&cfg, &art)),
        None => runner(&cfg, &art),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let (name, args, runner): (&'static str, &Common, Runner) = match &cli.command {
        Command::SimulateWalk(a) => ("simulate-walk", a, commands::simulate_walk),
        Command::SimulateLimit(a) => ("simulate-limit", a, commands::simulate_limit),
        Command::Moments(a) => ("moments", a, commands::moments),
        Command::ScalingFit(a) => ("scaling-fit", a, commands::scaling_fit),
        Command::Ks(a) => ("ks", a, commands::ks),
        Command::Density(a) => ("density", a, commands::density),
        Command::Govcheck(a) => ("govcheck", a, commands::govcheck),
    };
    match run(name, args, runner) {
        Ok(outcome) => {
            for path in &outcome.written {
                println!("{}", path.display());
            }
            match outcome.diagnostic {
                Some(msg) => {
                    eprintln!("levywalk {name}: {msg}");
                    ExitCode::from(2)
                }
                None => ExitCode::SUCCESS,
            }
        }
        Err(e) => {
            eprintln!("levywalk {name}: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
