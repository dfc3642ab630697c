mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

#[derive(Debug, Parser)]
#[command(name = "gridflex", version, about = "Capacity-expansion studies with flexible data-center load")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve one expansion problem and write the result bundle.
    Solve(Common),
    /// Run a flexibility or penetration sweep and write sweep.csv.
    Sweep(Common),
    /// Find the least flexibility that meets a budget and write search.json.
    Search(Common),
    /// Generate synthetic diurnal load profiles.
    GenProfiles(Common),
    /// Check a case (and optional profiles / flex spec) without solving.
    Validate(Common),
}

#[derive(Debug, Args, Clone)]
pub struct Common {
    /// Run configuration (.toml or .json).
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory; overrides `out` in the config.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads for sweeps.
    #[arg(long)]
    pub workers: Option<usize>,
    #[arg(long)]
    pub feas_tol: Option<f64>,
    #[arg(long)]
    pub opt_tol: Option<f64>,
    /// Write the assembled LP as MPS instead of solving.
    #[arg(long)]
    pub export_mps: bool,
    /// Also write a readable listing of the LP (model.lp).
    #[arg(long)]
    pub dump_lp: bool,
    /// Continue an interrupted sweep from its journal.
    #[arg(long)]
    pub resume: bool,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{field} file not found: {path}")]
    MissingFile { field: String, path: PathBuf },
    #[error("config: {0}")]
    Config(String),
    #[error("{0}")]
    Input(String),
    #[error("infeasible: {0}")]
    Infeasible(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Infeasible(_) => 2,
            _ => 1,
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match &cli.command {
        Command::Solve(c) => commands::solve(c),
        Command::Sweep(c) => commands::sweep(c),
        Command::Search(c) => commands::search(c),
        Command::GenProfiles(c) => commands::gen_profiles(c),
        Command::Validate(c) => commands::validate(c),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("gridflex: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
