//! Batch driver: `run <config>`, `sweep <config>`, `selftest`.
//!
//! Exit codes: 0 success, 2 configuration error, 3 numerical failure,
//! 4 i/o error.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use dhamsim::cli::{self, RunOptions};
use dhamsim::error::Error;

#[derive(Parser)]
#[command(name = "dhamsim", about = "Dissipative Hamiltonian simulation toolkit", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a single scenario from a JSON config.
    Run {
        config: PathBuf,
        /// Output directory (overrides config and DHAMSIM_OUT).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Time-step override.
        #[arg(long)]
        dt: Option<f64>,
        /// RNG seed; only randomized property tests consume it.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run a parameter sweep from a JSON config with kind = "sweep".
    Sweep {
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        dt: Option<f64>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run the bundled invariant suite and print a pass/fail table.
    Selftest {
        #[arg(long)]
        seed: Option<u64>,
    },
}

fn load_config(path: &PathBuf) -> Result<cli::ScenarioConfig, Error> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    cli::parse_config(&text)
}

fn real_main() -> Result<ExitCode, Error> {
    let args = Cli::parse();
    match args.command {
        Command::Run {
            config,
            out,
            dt,
            seed: _,
        } => {
            let cfg = load_config(&config)?;
            let opts = RunOptions {
                out_dir: out,
                dt_override: dt,
            };
            let outcome = cli::run_scenario(&cfg, &opts)?;
            println!("wrote {}", outcome.out_dir.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::Sweep {
            config,
            out,
            dt,
            seed: _,
        } => {
            let cfg = load_config(&config)?;
            let opts = RunOptions {
                out_dir: out,
                dt_override: dt,
            };
            let outcome = cli::run_sweep(&cfg, &opts)?;
            println!("wrote {}", outcome.out_dir.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::Selftest { seed } => {
            let report = cli::selftest(seed.unwrap_or(cli::DEFAULT_SEED));
            print!("{}", report.render());
            if report.all_passed() {
                Ok(ExitCode::SUCCESS)
            } else {
                // Failed invariants are a numerical failure.
                Ok(ExitCode::from(3))
            }
        }
    }
}

fn main() -> ExitCode {
    match real_main() {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
