//! `entire-ma`: solve, verify and inspect group-invariant entire solutions of
//! `f(∇φ) det D²φ = g`.
//!
//! Exit codes: 0 success, 1 bad input, 2 hypothesis violation, 3 budget exhausted,
//! 4 failed verification or numerical failure.

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use entire_ma::config::{cmd_epsilon, cmd_oracle, cmd_solve, cmd_verify, Overrides, EXIT_INPUT};

#[derive(Parser)]
#[command(name = "entire-ma", version, about = "Entire K-invariant solutions of f(∇φ) det D²φ = g")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the exhaustion and write a run directory.
    Solve {
        #[arg(long)]
        config: PathBuf,
        /// Overrides `output_dir` from the config.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Overrides the Cauchy tolerance.
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Print the orbit-hull constant ε of a group and its irreducibility verdict.
    Epsilon {
        /// Preset such as `cyclic:8`, or `{"matrices": [[…], …]}`.
        group: String,
        #[arg(long)]
        samples: Option<usize>,
    },
    /// Weak residual and diagnostics of a stored solution.
    Verify {
        solution: PathBuf,
        #[arg(long)]
        config: PathBuf,
        /// Overrides the residual threshold.
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Write the radial reference solution.
    Oracle {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { 0 };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    let (mut out, mut err) = (stdout.lock(), stderr.lock());
    let code = match cli.command {
        Command::Solve { config, out: dir, tol, seed } => {
            cmd_solve(&config, &Overrides { out: dir, tol, seed }, &mut out, &mut err)
        }
        Command::Epsilon { group, samples } => cmd_epsilon(&group, samples, &mut out, &mut err),
        Command::Verify { solution, config, tol, seed } => {
            cmd_verify(&solution, &config, &Overrides { out: None, tol, seed }, &mut out, &mut err)
        }
        Command::Oracle { config, out: dir } => cmd_oracle(&config, &Overrides { out: dir, ..Default::default() }, &mut out, &mut err),
    };
    let _ = out.flush();
    ExitCode::from(code as u8)
}
