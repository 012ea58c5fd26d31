//! Command-line entry point: parses the run configuration, dispatches to
//! one of the run modes, and maps check failures to nonzero exit codes
//! that carry the failing check id.

mod commands;
mod config;
mod output;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};
use commands::{CheckFailed, InitSpec};
use config::RunConfig;
use std::path::PathBuf;
use std::process::ExitCode;

/// Scattering theory of one-dimensional matrix charge-transfer models:
/// scattering tables, discrete spectra, free-evolution approximants, full
/// evolution, completeness decompositions, and the estimate battery.
#[derive(Parser)]
#[command(name = "ctm", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Arguments shared by every subcommand.
#[derive(Args)]
struct Common {
    /// Run configuration (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; created if missing.
    #[arg(long, default_value = "ctm-out")]
    out: PathBuf,
    /// Seed of the random corpora where a command uses one.
    #[arg(long, default_value_t = 7)]
    seed: u64,
}

#[derive(Subcommand)]
enum Command {
    /// Build per-track scattering tables and the unitarity report.
    Scatter {
        #[command(flatten)]
        common: Common,
    },
    /// Compute discrete spectra and edge-resonance classifications.
    Spectrum {
        #[command(flatten)]
        common: Common,
    },
    /// Build the profile family and approximant snapshots of a seed.
    Freeflow {
        #[command(flatten)]
        common: Common,
        /// Seed profile file; synthesized when absent.
        #[arg(long)]
        phi: Option<PathBuf>,
    },
    /// Evolve an initial datum under the full flow.
    Evolve {
        #[command(flatten)]
        common: Common,
        /// Initial datum.
        #[arg(long, value_enum, default_value_t = InitSpec::S0)]
        init: InitSpec,
        /// Field file for --init field.
        #[arg(long)]
        field: Option<PathBuf>,
    },
    /// Decompose a field into a scattering seed plus discrete modes.
    Decompose {
        #[command(flatten)]
        common: Common,
        /// Field file to decompose.
        #[arg(long)]
        field: PathBuf,
    },
    /// Run the full estimate battery and write its report.
    Verify {
        #[command(flatten)]
        common: Common,
    },
}

// caps the worker pool when CTM_THREADS is set; a malformed value is a
// configuration error, not something to guess around
fn configure_threads() -> Result<()> {
    if let Ok(raw) = std::env::var("CTM_THREADS") {
        let n: usize = raw
            .parse()
            .map_err(|_| anyhow::anyhow!("CTM_THREADS = {raw:?} is not a thread count"))?;
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Scatter { common } => {
            commands::cmd_scatter(&RunConfig::load(&common.config)?, &common.out)
        }
        Command::Spectrum { common } => {
            commands::cmd_spectrum(&RunConfig::load(&common.config)?, &common.out)
        }
        Command::Freeflow { common, phi } => commands::cmd_freeflow(
            &RunConfig::load(&common.config)?,
            &common.out,
            phi.as_deref(),
        ),
        Command::Evolve { common, init, field } => commands::cmd_evolve(
            &RunConfig::load(&common.config)?,
            &common.out,
            init,
            field.as_deref(),
        ),
        Command::Decompose { common, field } => {
            commands::cmd_decompose(&RunConfig::load(&common.config)?, &common.out, &field)
        }
        Command::Verify { common } => {
            commands::cmd_verify(&RunConfig::load(&common.config)?, &common.out, common.seed)
        }
    }
}

// exit code of a failed check: the leading criterion number of its id
// when one exists, 1 otherwise
fn exit_code_for(id: &str) -> u8 {
    let digits: String = id.chars().take_while(|c| c.is_ascii_digit()).collect();
    match digits.parse::<u8>() {
        Ok(n) if n > 0 => n,
        _ => 1,
    }
}

fn main() -> ExitCode {
    if let Err(e) = configure_threads() {
        eprintln!("error: {e:#}");
        return ExitCode::from(1);
    }
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            match e.downcast_ref::<CheckFailed>() {
                Some(check) => ExitCode::from(exit_code_for(&check.id)),
                None => ExitCode::from(1),
            }
        }
    }
}
