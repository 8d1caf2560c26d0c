use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use steinweiss_cli::{run, with_workers, Command, RunRequest};

#[derive(Parser)]
#[command(name = "steinweiss", version, about = "Sharp constants and extremals for weighted HLS inequalities")]
struct Cli {
    #[command(subcommand)]
    command: Sub,

    /// JSON config for the run.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory for the manifest and artifacts.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,

    /// Threads for the inner parallel loops.
    #[arg(long, global = true)]
    workers: Option<usize>,

    /// Overrides the seed in the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Subcommand, Clone, Copy)]
enum Sub {
    /// Closed-form constant vs the functional at the extremal vs the maximum.
    VerifyDiagonal,
    /// Alternating maximization of the weighted functional.
    Maximize,
    /// Euler-Lagrange system seeded from a maximizer.
    SolveSystem,
    /// Concentration-compactness classification of a measure sequence.
    Classify,
    /// Two-condition boundedness check on R^m x R^n.
    CheckSw,
    /// Randomized geometry suite.
    Selftest,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let command = match cli.command {
        Sub::VerifyDiagonal => Command::VerifyDiagonal,
        Sub::Maximize => Command::Maximize,
        Sub::SolveSystem => Command::SolveSystem,
        Sub::Classify => Command::Classify,
        Sub::CheckSw => Command::CheckSw,
        Sub::Selftest => Command::Selftest,
    };
    let request = RunRequest { config: cli.config.as_deref(), out: &cli.out, seed: cli.seed };
    let manifest = match with_workers(cli.workers, || run(command, &request)) {
        Ok(m) => m,
        Err(e) => {
            eprintln!("{}", serde_json::to_string(&e.record()).unwrap_or_else(|_| e.to_string()));
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    match &manifest.error {
        Some(record) => eprintln!("{}", serde_json::to_string(record).unwrap_or_else(|_| record.message.clone())),
        None => println!(
            "{} {:?} -> {}",
            manifest.command,
            manifest.status,
            cli.out.join(steinweiss_cli::manifest::MANIFEST_FILE).display()
        ),
    }
    ExitCode::from(manifest.exit_code as u8)
}
