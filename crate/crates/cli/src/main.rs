//! `sasa`: drives scattering, reconstruction, Painlevé tables, the reference
//! evolver and the long-time check from JSON configs.

mod commands;
mod config;
mod manifest;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use sasa_core::Error;

use crate::commands::Ctx;
use crate::manifest::Manifest;

#[derive(Debug, Parser)]
#[command(name = "sasa", version, about = "Inverse scattering toolkit for the Sasa-Satsuma equation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// JSON run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Worker threads for the data-parallel stages.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Replace a named tolerance, e.g. `round_trip=1e-5`.
    #[arg(long = "tol-override", global = true, value_name = "NAME=VALUE")]
    tol_override: Vec<String>,
}

#[derive(Debug, Clone, Copy, Subcommand)]
enum Command {
    /// Scattering matrix and reflection coefficient of a datum.
    Scatter,
    /// u(x, t) on a lattice from a scattering record.
    Reconstruct,
    /// Table of the Painlevé transcendent for a given s.
    Painleve,
    /// Spectral evolution of a datum, soliton or snapshot.
    Evolve,
    /// Compare the evolution with the Painlevé-sector leading term.
    CheckAsymptotics,
    /// Quick end-to-end checks.
    Selftest,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Scatter => "scatter",
            Command::Reconstruct => "reconstruct",
            Command::Painleve => "painleve",
            Command::Evolve => "evolve",
            Command::CheckAsymptotics => "check-asymptotics",
            Command::Selftest => "selftest",
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] Error),
    #[error("checks failed: {}", .0.join(", "))]
    Checks(Vec<String>),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(Error::Consistency { .. }) | CliError::Checks(_) => 2,
            CliError::Core(Error::SpectralSingularity { .. }) => 3,
            CliError::Core(Error::SolitonsPresent { .. }) => 4,
            CliError::Core(Error::OscillationBudget { .. }) => 5,
            _ => 1,
        }
    }
}

fn run(cli: &Cli, manifest: &mut Manifest) -> Result<(), CliError> {
    let mut tols = config::default_tolerances();
    config::apply_overrides(&mut tols, &cli.tol_override)?;
    manifest.tolerances = tols.clone();
    let config_path = || -> Result<&Path, CliError> {
        cli.config.as_deref().ok_or_else(|| CliError::Config(format!("`{}` needs --config", cli.command.name())))
    };
    if let Some(path) = &cli.config {
        if let Ok(bytes) = std::fs::read(path) {
            manifest.set_config(&bytes);
        }
    }
    std::fs::create_dir_all(&cli.out).map_err(Error::from)?;
    let mut ctx = Ctx { out: &cli.out, tols: &tols, manifest };
    match cli.command {
        Command::Scatter => commands::scatter_cmd(config_path()?, &mut ctx)?,
        Command::Reconstruct => commands::reconstruct_cmd(config_path()?, &mut ctx)?,
        Command::Painleve => commands::painleve_cmd(config_path()?, &mut ctx)?,
        Command::Evolve => commands::evolve_cmd(config_path()?, &mut ctx)?,
        Command::CheckAsymptotics => commands::asymptotics_cmd(config_path()?, &mut ctx)?,
        Command::Selftest => commands::selftest_cmd(&mut ctx)?,
    }
    let failed = ctx.manifest.failed_checks();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Checks(failed.into_iter().map(String::from).collect()))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: cannot size the thread pool: {e}");
            return ExitCode::from(1);
        }
    }
    let mut manifest = Manifest::new(cli.command.name(), rayon::current_num_threads());
    let code = match run(&cli, &mut manifest) {
        Ok(()) => {
            manifest.status = "ok".into();
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            if let CliError::Core(Error::OscillationBudget { .. }) = e {
                eprintln!("hint: use `sasa check-asymptotics` for large t");
            }
            manifest.status = "failed".into();
            manifest.error = Some(e.to_string());
            e.exit_code()
        }
    };
    manifest.exit_code = code as i32;
    let path = cli.out.join("manifest.json");
    let written = std::fs::create_dir_all(&cli.out)
        .map_err(Error::from)
        .and_then(|_| sasa_core::io::write_json(&path, &manifest));
    if let Err(e) = written {
        eprintln!("error: cannot write {}: {e}", path.display());
        return ExitCode::from(1);
    }
    for c in &manifest.checks {
        println!("{:<20} {:>12.3e} <= {:<10.3e} {}", c.name, c.value, c.tolerance, if c.pass { "ok" } else { "FAIL" });
    }
    ExitCode::from(code)
}
