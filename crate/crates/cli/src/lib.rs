//! Command-line driver: configuration, simulation, certification and sweeps.

pub mod commands;
pub mod config;
pub mod error;
pub mod json;
pub mod sweep;

use std::path::PathBuf;

use clap::{Parser, Subcommand};

pub use config::RunConfig;
pub use error::{CliError, CliResult};

const EVOLVE_HELP: &str = "\
Writes trajectory.csv and summary.json into the output directory and prints the summary.

trajectory.csv columns, in order (<j> runs over subsystems; Bloch columns only for qubits):
  t, trace, entropy, energy, energy_<j>, entropy_production, dissipator_norm_<j>,
  bloch_<j>_x, bloch_<j>_y, bloch_<j>_z, mutual_information, min_eigenvalue,
  max_eigenvalue, purity, commutator_norm, rhs_norm";

const SWEEP_HELP: &str = "\
Prints one CSV row per grid point in grid order (last axis fastest) and writes sweep.csv
when an output directory is set.

Parameters: a, b (example1/example2), w (werner), c_x, c_y, c_z (bell_diagonal),
tau, tau_<j>, interaction_scale, t_final.

sweep.csv columns, in order (<param> runs over swept parameters, sorted per axis):
  index, <param>, min_eigenvalue, entropy, energy, entropy_production,
  entropy_production_gram, max_dissipator_norm, ppt_min_eigenvalue, entanglement
with sweep.evolve also:
  final_entropy, final_max_dissipator_norm, max_energy_drift, settling_time, classification";

const EXIT_HELP: &str = "\
Exit codes: 0 success, 1 certification failed, 2 configuration error, 3 numerical failure.
Log verbosity is read from SEA_DYN_LOG (e.g. SEA_DYN_LOG=info).";

#[derive(Debug, Parser)]
#[command(name = "sea-dyn", version, about = "Steepest-entropy-ascent dynamics of composite quantum systems", after_help = EXIT_HELP)]
pub struct Cli {
    /// Worker threads for certification trials and sweeps.
    #[arg(long, global = true, value_parser = clap::value_parser!(u64).range(1..))]
    pub jobs: Option<u64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Integrate the initial state and report conservation and relaxation.
    #[command(after_help = EVOLVE_HELP)]
    Evolve {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Dissipators, multipliers and entropy production at the initial state.
    Dissipator {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Randomized no-signaling certification; exits 1 when a check fails.
    Nosignal {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        /// Certify a deliberately signaling variant of the dynamics.
        #[arg(long)]
        mutant: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluate a parameter grid in parallel.
    #[command(after_help = SWEEP_HELP)]
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// NAME[*K][,NAME[*K]...]=START:STOP:STEP or NAME=V[,V...]; repeat for more axes.
        #[arg(long)]
        axis: Vec<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the normalized configuration (or a template) as JSON.
    DumpConfig {
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

/// Runs one parsed command and returns its exit code.
pub fn run(cli: Cli) -> CliResult<i32> {
    if let Some(jobs) = cli.jobs {
        // Ignore a second initialization; the first pool stays in place.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(jobs as usize).build_global();
    }
    match cli.command {
        Command::Evolve { config, out } => commands::cmd_evolve(&RunConfig::load(&config)?, out.as_deref()),
        Command::Dissipator { config, out } => commands::cmd_dissipator(&RunConfig::load(&config)?, out.as_deref()),
        Command::Nosignal { config, trials, seed, mutant, out } => commands::cmd_nosignal(
            &RunConfig::load(&config)?,
            commands::NosignalOverrides { trials, seed, mutant },
            out.as_deref(),
        ),
        Command::Sweep { config, axis, out } => sweep::cmd_sweep(&RunConfig::load(&config)?, &axis, out.as_deref()),
        Command::DumpConfig { config } => {
            let cfg = match config {
                Some(path) => {
                    let cfg = RunConfig::load(&path)?;
                    cfg.validate()?;
                    cfg
                }
                None => RunConfig::template(),
            };
            print!("{}", json::to_string(&cfg));
            Ok(0)
        }
    }
}
