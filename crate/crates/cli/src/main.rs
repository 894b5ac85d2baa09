//! `lz`: command-line front end for lzeta.
//!
//! Exit codes: 0 success, 2 invalid input, 3 numerical failure (including a
//! failed cross-check, reported after the output is written).

mod commands;
mod config;
mod report;

use clap::{Args, Parser, Subcommand};
use report::Format;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    Numerical(String),
}

impl From<lzeta::Error> for CliError {
    fn from(e: lzeta::Error) -> Self {
        if e.is_validation() {
            CliError::Validation(e.to_string())
        } else {
            CliError::Numerical(e.to_string())
        }
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

#[derive(Parser)]
#[command(name = "lz", version, about = "Lorentzian spectral zeta densities: curvature, Hadamard coefficients, residues")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Christoffel symbols, Ricci tensor and scalar curvature at a point.
    Curvature(RunArgs),
    /// Diagonal Hadamard coefficients u_k(x, x) and the u_1 = -R/6 check.
    Hadamard(RunArgs),
    /// Residue of the zeta density: parametrix, mode sum and curvature.
    ZetaResidue(RunArgs),
    /// Contour functional calculus check on a (w, alpha) grid.
    ContourCheck(RunArgs),
    /// Spectral-action expansion fit over a Lambda sweep.
    CcExpansion(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Run configuration (JSON, see schema/config.schema.json).
    #[arg(long)]
    config: PathBuf,
    /// Output file; overrides the config's `out`. Standard output otherwise.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Output format; overrides the config's `format`.
    #[arg(long, value_parser = ["json", "text", "csv"])]
    format: Option<String>,
    /// Worker thread cap.
    #[arg(long, value_parser = clap::value_parser!(u16).range(1..))]
    threads: Option<u16>,
}

#[derive(Clone, Copy, Debug)]
pub enum Command {
    Curvature,
    Hadamard,
    ZetaResidue,
    ContourCheck,
    CcExpansion,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Curvature => "curvature",
            Command::Hadamard => "hadamard",
            Command::ZetaResidue => "zeta-residue",
            Command::ContourCheck => "contour-check",
            Command::CcExpansion => "cc-expansion",
        }
    }
}

fn run(command: Command, args: &RunArgs) -> Result<Vec<String>, CliError> {
    if let Some(n) = args.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n as usize)
            .build_global()
            .map_err(|e| CliError::Numerical(format!("thread pool: {e}")))?;
    }
    let loaded = config::load(&args.config, command)?;
    let format = match (&args.format, &loaded.config.format) {
        (Some(f), _) | (None, Some(f)) => Format::parse(f)?,
        (None, None) => Format::Json,
    };
    log::info!("running {} with {}", command.name(), args.config.display());
    let report = match command {
        Command::Curvature => commands::curvature_cmd(&loaded)?,
        Command::Hadamard => commands::hadamard_cmd(&loaded)?,
        Command::ZetaResidue => commands::zeta_residue_cmd(&loaded)?,
        Command::ContourCheck => commands::contour_check_cmd(&loaded)?,
        Command::CcExpansion => commands::cc_expansion_cmd(&loaded)?,
    };
    let rendered = report.render(format)?;
    match args.out.clone().or_else(|| loaded.out_path()) {
        Some(path) => std::fs::write(&path, rendered).map_err(|e| CliError::Validation(format!("cannot write {}: {e}", path.display())))?,
        None => print!("{rendered}"),
    }
    Ok(report.failures)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("LZ_LOG", "warn")).init();
    let cli = Cli::parse();
    let (command, args) = match &cli.command {
        Cmd::Curvature(a) => (Command::Curvature, a),
        Cmd::Hadamard(a) => (Command::Hadamard, a),
        Cmd::ZetaResidue(a) => (Command::ZetaResidue, a),
        Cmd::ContourCheck(a) => (Command::ContourCheck, a),
        Cmd::CcExpansion(a) => (Command::CcExpansion, a),
    };
    match run(command, args) {
        Ok(failures) if failures.is_empty() => ExitCode::SUCCESS,
        Ok(failures) => {
            for f in &failures {
                eprintln!("lz: check failed: {f}");
            }
            ExitCode::from(3)
        }
        Err(e) => {
            eprintln!("lz: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
