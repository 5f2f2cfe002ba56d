//! Command-line driver: simulate games, fit heuristic seats, train and
//! evaluate DQN seats, and run noise sweeps.

mod commands;
mod config;

use anyhow::Result;
use bullwhip_core::par::Execution;
use clap::{Parser, Subcommand};

use crate::config::{CommandName, Overrides, RunConfig};

#[derive(Parser)]
#[command(name = "bullwhip", version, about = "Four-echelon beer game laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    flags: Overrides,
}

#[derive(Subcommand)]
enum Command {
    /// Play one game with heuristic seats and write the trajectory.
    Simulate,
    /// Fit heuristic parameters for one or more seats.
    Optimize,
    /// Train a DQN agent for one seat.
    Train,
    /// Greedy evaluation of a trained agent against paired baselines.
    Evaluate,
    /// Noise sweep over model-based and model-free agents.
    Sweep,
    /// Summaries and plots from sweep output.
    Report,
}

impl Command {
    fn name(&self) -> CommandName {
        match self {
            Command::Simulate => CommandName::Simulate,
            Command::Optimize => CommandName::Optimize,
            Command::Train => CommandName::Train,
            Command::Evaluate => CommandName::Evaluate,
            Command::Sweep => CommandName::Sweep,
            Command::Report => CommandName::Report,
        }
    }
}

fn execution(jobs: Option<usize>) -> Result<Execution> {
    match jobs {
        Some(0) => anyhow::bail!("--jobs must be >= 1"),
        Some(1) => Ok(Execution::Sequential),
        #[cfg(feature = "parallel")]
        Some(n) => {
            rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
            Ok(Execution::Parallel)
        }
        #[cfg(not(feature = "parallel"))]
        Some(_) => Ok(Execution::Sequential),
        None => Ok(Execution::available()),
    }
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    let config = RunConfig::load(cli.command.name(), &cli.flags)?;
    let exec = execution(cli.flags.jobs)?;
    commands::run(&config, exec)
}
