use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use qtraj_cli::{commands, exit, load, resolve, Outcome, RunContext};

#[derive(Parser)]
#[command(name = "qtraj", version, about = "Trajectory laws for real stationary states and the angular two-vector model")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Output directory; overrides the scenario's `output`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Seed; overrides the scenario's `seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Suppress progress on stdout.
    #[arg(long, global = true)]
    quiet: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate one trajectory.
    Run { scenario: PathBuf },
    /// Evolve a seeded ensemble and compare it with the target density.
    Ensemble { scenario: PathBuf },
    /// Evaluate the requested diagnostics into a report.
    Diagnose { scenario: PathBuf },
    /// Check a scenario and print it with defaults filled in.
    Validate { scenario: PathBuf },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let path = match &cli.command {
        Command::Run { scenario }
        | Command::Ensemble { scenario }
        | Command::Diagnose { scenario }
        | Command::Validate { scenario } => scenario,
    };
    let resolved = load(path).and_then(|mut s| {
        if let Some(seed) = cli.seed {
            s.seed = seed;
        }
        resolve(s)
    });
    let resolved = match resolved {
        Ok(r) => r,
        Err(e) => {
            eprintln!("invalid scenario {}: {e}", path.display());
            return ExitCode::from(exit::VALIDATION as u8);
        }
    };
    let ctx = RunContext {
        out: cli.out.clone().unwrap_or_else(|| PathBuf::from(&resolved.scenario.output)),
        quiet: cli.quiet,
    };
    let result = match cli.command {
        Command::Run { .. } => commands::run(&resolved, &ctx),
        Command::Ensemble { .. } => commands::ensemble(&resolved, &ctx),
        Command::Diagnose { .. } => commands::diagnose(&resolved, &ctx),
        Command::Validate { .. } => commands::validate(&resolved, cli.quiet),
    };
    match result {
        Ok(Outcome::Completed) => ExitCode::from(exit::SUCCESS as u8),
        Ok(Outcome::Terminated(reason)) => {
            eprintln!("terminated: {reason}");
            ExitCode::from(exit::TERMINATED as u8)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit::FAILURE as u8)
        }
    }
}
