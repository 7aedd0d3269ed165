mod commands;
mod format;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use nlwe_core::ensemble::ExampleKind;
use thiserror::Error;

#[derive(Parser)]
#[command(name = "nlwe", version, about = "Unambiguous discrimination with and without post-measurement information")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Analyze one of the two example ensembles.
    Example {
        name: Family,
        #[command(flatten)]
        param: Param,
        /// Print the full report as JSON instead of a table.
        #[arg(long)]
        json: bool,
    },
    /// Tabulate an example family over a range of eta0 as CSV.
    Sweep {
        name: Family,
        /// First eta0, at least 1/3.
        #[arg(long, default_value_t = 1.0 / 3.0)]
        from: f64,
        /// Last eta0, below 1/2.
        #[arg(long, default_value_t = 0.49)]
        to: f64,
        /// Number of rows, at least 2.
        #[arg(long, default_value_t = 50)]
        steps: usize,
        /// Write to this file instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run every built-in check and print a pass/fail matrix.
    VerifyAll {
        /// Seed for the randomized checks.
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Solve a user-supplied ensemble file and print the result as JSON.
    Solve {
        file: PathBuf,
        #[arg(long, value_enum, default_value_t = SolveMode::Oud)]
        mode: SolveMode,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Family {
    Lock,
    Unlock,
}

impl From<Family> for ExampleKind {
    fn from(f: Family) -> Self {
        match f {
            Family::Lock => ExampleKind::Lock,
            Family::Unlock => ExampleKind::Unlock,
        }
    }
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct Param {
    /// Prior ratio, at least 2.
    #[arg(long)]
    gamma: Option<f64>,
    /// Prior of |00>, in [1/3, 1/2).
    #[arg(long)]
    eta0: Option<f64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum SolveMode {
    /// Global unambiguous discrimination.
    Oud,
    /// Global unambiguous discrimination with post-measurement information.
    OudPi,
    /// Minimum-error discrimination.
    Me,
}

#[derive(Debug, Error)]
enum CliError {
    /// Bad arguments or input file.
    #[error("{0}")]
    Input(String),
    #[error("solver failed: {0}")]
    Solver(String),
    #[error("output: {0}")]
    Output(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Output(_) => 1,
            CliError::Input(_) => 2,
            CliError::Solver(_) => 3,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Example { name, param, json } => {
            commands::example(name.into(), param.gamma, param.eta0, json)
        }
        Command::Sweep {
            name,
            from,
            to,
            steps,
            out,
        } => commands::sweep(name.into(), from, to, steps, out.as_deref()),
        Command::VerifyAll { seed } => commands::verify_all(seed),
        Command::Solve { file, mode } => commands::solve(&file, mode),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
