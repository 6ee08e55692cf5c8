//! `msp`: batch front-end for Markov substitute processes.

mod commands;
mod spec;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(
    name = "msp",
    version,
    about = "Markov substitute processes on finite domains"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    flags: Flags,
}

#[derive(Debug, Clone, clap::Args)]
pub struct Flags {
    /// Model specification file (TOML, `format = 1`).
    #[arg(long, global = true)]
    pub spec: Option<PathBuf>,
    /// Seed for randomized commands.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Number of draws (`sample`), chain steps (`mcmc`) or iterations (`fit`).
    #[arg(long, global = true)]
    pub steps: Option<usize>,
    /// Overrides the length bound of the spec's domain.
    #[arg(long, global = true)]
    pub max_len: Option<usize>,
    /// Anchor word for `exp-to-chain`.
    #[arg(long, global = true)]
    pub anchor: Option<String>,
    /// Numerical tolerance (`fit` stopping rule, parameter consistency).
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// Emit a single JSON document instead of tab-separated text.
    #[arg(long, global = true)]
    pub json: bool,
}

#[derive(Debug, Clone, Subcommand)]
enum Command {
    /// Components of the substitution graph.
    Components,
    /// Free pairs, dependency matrix and energy table.
    Expfam,
    /// Log-probabilities of the sentences on standard input.
    Prob,
    /// Check a measure file for the substitute property.
    Verify {
        #[arg(value_name = "MEASURE")]
        input: Option<PathBuf>,
    },
    /// Exact draws from the spec's measure.
    Sample,
    /// Swap-move Metropolis-Hastings trace.
    Mcmc,
    /// Exponents of a transition matrix.
    ChainToExp {
        #[arg(value_name = "MATRIX")]
        input: Option<PathBuf>,
    },
    /// Transition matrix reproducing an exponent table.
    ExpToChain {
        #[arg(value_name = "EXPONENTS")]
        input: Option<PathBuf>,
    },
    /// Maximum-likelihood fit of a corpus.
    Fit {
        #[arg(value_name = "CORPUS")]
        input: Option<PathBuf>,
    },
    /// Drop pairs that do not change the model.
    Prune,
}

/// Why a command did not succeed.
#[derive(Debug)]
pub enum Failure {
    /// Bad input: exit code 1.
    Invalid(String),
    /// Input was well-formed but a check failed: exit code 2.
    Check(String),
}

impl From<msp_core::Error> for Failure {
    fn from(e: msp_core::Error) -> Self {
        match e {
            msp_core::Error::Verification(_) | msp_core::Error::InconsistentExponents { .. } => {
                Failure::Check(e.to_string())
            }
            _ => Failure::Invalid(e.to_string()),
        }
    }
}

fn main() -> ExitCode {
    // usage errors are validation errors; 2 is reserved for failed checks
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let input = match cli.command {
        Command::Verify { ref input }
        | Command::ChainToExp { ref input }
        | Command::ExpToChain { ref input }
        | Command::Fit { ref input } => input.clone(),
        _ => None,
    };
    let name = match cli.command {
        Command::Components => "components",
        Command::Expfam => "expfam",
        Command::Prob => "prob",
        Command::Verify { .. } => "verify",
        Command::Sample => "sample",
        Command::Mcmc => "mcmc",
        Command::ChainToExp { .. } => "chain-to-exp",
        Command::ExpToChain { .. } => "exp-to-chain",
        Command::Fit { .. } => "fit",
        Command::Prune => "prune",
    };
    match commands::run(name, input.as_deref(), &cli.flags) {
        Ok(out) => {
            let text = if cli.flags.json {
                serde_json::to_string_pretty(&out.json).expect("json values serialize") + "\n"
            } else {
                out.text
            };
            // a closed pipe (e.g. `| head`) is not an error worth reporting
            let _ = std::io::stdout().lock().write_all(text.as_bytes());
            if out.failed {
                ExitCode::from(2)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(Failure::Invalid(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Check(msg)) => {
            eprintln!("check failed: {msg}");
            ExitCode::from(2)
        }
    }
}
