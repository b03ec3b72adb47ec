//! `busytail`: batch front-end for busy-period tail experiments.
//!
//! Exit codes: 0 ok, 1 a verified property failed, 2 invalid config,
//! 3 model error (instability, overflow), 4 statistical insufficiency.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Model(String),
    #[error("{0}")]
    Insufficient(String),
    #[error("{0}")]
    Failed(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Failed(_) => 1,
            CliError::Config(_) => 2,
            CliError::Model(_) => 3,
            CliError::Insufficient(_) => 4,
        }
    }
}

impl From<busytail::Error> for CliError {
    fn from(e: busytail::Error) -> Self {
        use busytail::Error as E;
        let msg = e.to_string();
        match e {
            E::InvalidNetwork(_)
            | E::InvalidDistribution(_)
            | E::BoundedArrivals(_)
            | E::NoCommonReference(_)
            | E::Config(_)
            | E::Dimension { .. } => CliError::Config(msg),
            E::InsufficientExceedances { .. } => CliError::Insufficient(msg),
            E::Singular { .. }
            | E::UnstableRouting
            | E::Instability(_)
            | E::RoutingDegenerate(_)
            | E::CycleOverflow { .. }
            | E::OverflowRate { .. }
            | E::Divergence(_) => CliError::Model(msg),
        }
    }
}

#[derive(Parser)]
#[command(name = "busytail", version, about = "Busy-period tails of generalised Jackson networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Visit counts, stability margin, tail constants and u_k.
    Analyze(Common),
    /// Fluid timelines and u_k for every station.
    Fluid(Common),
    /// Monte Carlo estimate of P(B > x) against the prediction.
    Tail(Common),
    /// Single- and double-jump diagnostic at one x.
    Psbj(Common),
    /// Sample-path property suite.
    Verify(Common),
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    /// Overrides BUSYTAIL_SEED and the config seed.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    cycles: Option<u64>,
    /// Overrides BUSYTAIL_WORKERS; 0 uses every core.
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Accept bounded inter-arrival laws (negative controls).
    #[arg(long)]
    allow_bounded_arrivals: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (name, common, run): (&str, &Common, fn(&config::Resolved) -> Result<Vec<String>, CliError>) =
        match &cli.command {
            Command::Analyze(c) => ("analyze", c, commands::analyze),
            Command::Fluid(c) => ("fluid", c, commands::fluid),
            Command::Tail(c) => ("tail", c, commands::tail),
            Command::Psbj(c) => ("psbj", c, commands::psbj),
            Command::Verify(c) => ("verify", c, commands::verify),
        };
    let overrides = config::Overrides {
        seed: common.seed,
        cycles: common.cycles,
        workers: common.workers,
        out: common.out.clone(),
        allow_bounded_arrivals: common.allow_bounded_arrivals,
    };
    let result = config::load(&common.config, &overrides).and_then(|r| run(&r));
    match result {
        Ok(lines) => {
            for l in lines {
                println!("{l}");
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("busytail {name}: {e}");
            ExitCode::from(e.code())
        }
    }
}
