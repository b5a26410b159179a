//! `mvtrack`: simulate sequences, train the prediction network, track, and
//! evaluate. Exit codes: 0 success, 1 usage error, 2 runtime failure.

mod cmd;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::UsageError;

#[derive(Parser)]
#[command(name = "mvtrack", version, about = "Multi-view tracking experiments")]
struct Cli {
    /// Worker threads for independent scenes and simulations.
    #[arg(long, global = true, default_value_t = 1)]
    threads: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
pub struct Common {
    /// JSON experiment manifest; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Render a synthetic multi-view sequence, or write trajectory-pair datasets.
    Simulate(cmd::simulate::SimulateArgs),
    /// Train the trajectory prediction network on a pair dataset.
    TrainTpn(cmd::train::TrainArgs),
    /// Track the target through a sequence directory.
    Track(cmd::track::TrackArgs),
    /// Compute tracking metrics, run the prediction benchmark, or summarize a per-clip table.
    Eval(cmd::eval::EvalArgs),
}

fn run(cli: Cli) -> anyhow::Result<()> {
    if cli.threads == 0 {
        return Err(config::usage("--threads must be at least 1"));
    }
    rayon::ThreadPoolBuilder::new().num_threads(cli.threads).build_global()?;
    match cli.command {
        Command::Simulate(a) => cmd::simulate::run(a),
        Command::TrainTpn(a) => cmd::train::run(a),
        Command::Track(a) => cmd::track::run(a),
        Command::Eval(a) => cmd::eval::run(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<UsageError>().is_some() {
                ExitCode::from(1)
            } else {
                ExitCode::from(2)
            }
        }
    }
}
