//! `qrm2`: spectra, G-function scans, coupling sweeps and oracle checks for
//! the two-qubit quantum Rabi model.

mod commands;
mod config;
mod emit;

use std::io::Write;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::{Outcome, EXIT_USAGE};
use config::{resolve, Needs, Opts, RunConfig, SweepOpts, UsageError};

type CommandFn = fn(&RunConfig) -> Result<Outcome, UsageError>;

#[derive(Parser, Debug)]
#[command(name = "qrm2", version, about = "Exact spectrum of the two-qubit quantum Rabi model")]
struct Cli {
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Parity-resolved levels inside the energy window.
    Spectrum {
        #[command(flatten)]
        opts: Opts,
    },
    /// G-functions of both parities on a uniform energy grid.
    Gscan {
        #[command(flatten)]
        opts: Opts,
        #[arg(long)]
        samples: Option<usize>,
    },
    /// Levels against the total coupling g = g1 + g2, one row per level.
    Sweep {
        #[command(flatten)]
        opts: Opts,
        #[command(flatten)]
        sweep: SweepOpts,
    },
    /// Compares the G-function levels with exact diagonalization.
    Verify {
        #[command(flatten)]
        opts: Opts,
    },
    /// Dark-state conditions at equal couplings, with the oracle level near E = 1.
    Darkstate {
        #[command(flatten)]
        opts: Opts,
    },
}

fn run(cli: Cli) -> Result<Outcome, UsageError> {
    let strict = Needs::default();
    let (cfg, cmd): (RunConfig, CommandFn) = match &cli.cmd {
        Command::Spectrum { opts } => (resolve(opts, None, None, strict)?, commands::spectrum),
        Command::Gscan { opts, samples } => (resolve(opts, None, *samples, strict)?, commands::gscan),
        Command::Sweep { opts, sweep } => {
            let needs = Needs { optional_couplings: true };
            (resolve(opts, Some(sweep), None, needs)?, commands::sweep)
        }
        Command::Verify { opts } => (resolve(opts, None, None, strict)?, commands::verify_cmd),
        Command::Darkstate { opts } => (resolve(opts, None, None, strict)?, commands::darkstate),
    };
    let mut out = cmd(&cfg)?;
    if !cfg.flipped.is_empty() {
        out.messages.insert(
            0,
            format!("notice: negative {} replaced by the absolute value (same spectrum)", cfg.flipped.join(", ")),
        );
    }
    Ok(out)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(out) => {
            let mut stdout = std::io::stdout().lock();
            if stdout.write_all(out.stdout.as_bytes()).and_then(|_| stdout.flush()).is_err() {
                return ExitCode::FAILURE;
            }
            for m in &out.messages {
                eprintln!("{m}");
            }
            ExitCode::from(out.code)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_USAGE)
        }
    }
}
