//! `kp`: solver runs, estimate checks, kernel sweeps and scaling fits from a TOML config.
//!
//! Exit codes: 0 all checks pass, 1 a check failed, 2 usage or configuration
//! error, 3 numerical divergence.

mod commands;
mod config;
mod plot;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::CliError;
use config::{parse_grid_override, RunConfig};

#[derive(Parser, Debug)]
#[command(name = "kp", version, about = "KP-equation solver and estimate checks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// TOML run configuration; defaults apply when absent.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory, overriding `output.directory`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Ensemble seed, overriding `ensemble.seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads; all available cores by default.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Sample counts as `NxM`, overriding `grid.Nx` and `grid.Ny`.
    #[arg(long, global = true, value_parser = parse_grid_override)]
    grid: Option<(usize, usize)>,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// Picard solve with reference cross-check, exports and plots.
    Solve,
    /// Ensemble checks of the estimate catalog on two grids.
    CheckEstimates,
    /// Dyadic oscillatory-kernel bounds over a (k, j) window.
    KernelSweep,
    /// Fitted scaling exponents of rescaled norms.
    Scaling,
    /// Merge the summaries present in the output directory.
    Report,
}

fn run(cli: &Cli) -> Result<bool, CliError> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(out) = &cli.out {
        cfg.output.directory = out.clone();
    }
    if let Some(seed) = cli.seed {
        cfg.ensemble.seed = Some(seed);
    }
    if let Some((nx, ny)) = cli.grid {
        cfg.grid.nx = Some(nx);
        cfg.grid.ny = Some(ny);
    }
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(config::ConfigError { path: "--threads".into(), reason: "must be at least 1".into() }.into());
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Other(e.into()))?;
    }
    let out = cfg.output.directory.clone();
    match cli.command {
        Command::Report => commands::report(&out),
        cmd => {
            cfg.validate()?;
            match cmd {
                Command::Solve => commands::solve(&cfg, &out),
                Command::CheckEstimates => commands::check_estimates(&cfg, &out),
                Command::KernelSweep => commands::kernel_sweep_cmd(&cfg, &out),
                Command::Scaling => commands::scaling(&cfg, &out),
                Command::Report => unreachable!(),
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("kp: one or more checks failed");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("kp: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
