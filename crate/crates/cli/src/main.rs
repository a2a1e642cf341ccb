//! `germforge`: batch driver for identity verification, transplantation,
//! curvature-model realization and geodesic probing.
//!
//! Exit codes: 0 success, 1 a check failed, 2 input or usage error.

mod commands;
mod inputs;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use germforge::GeomError;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Parser, Debug)]
#[command(name = "germforge", version, about = "Local geometry workbench: identities, transplants, realizations, geodesics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Evaluate a curvature identity at sampled points.
    Verify {
        /// berger, gray, pontrjagin, chern or kahler
        identity: String,
        #[command(flatten)]
        common: Common,
    },
    /// Transplant a germ into a host structure.
    Transplant {
        /// connection, metric, almost-complex, almost-hermitian, kahler or weyl
        kind: String,
        #[command(flatten)]
        common: Common,
    },
    /// Realize a curvature model by a germ, optionally inside a host.
    Realize {
        /// riemannian or para-kahler
        kind: String,
        #[command(flatten)]
        common: Common,
    },
    /// Probe geodesic completeness: misner, meneghini, circle-gamma, flat, lemma or a scenario file.
    Geodesic {
        scenario: String,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

/// Flags shared by all commands. Structure inputs are germ files or `builtin:NAME`.
#[derive(Args, Debug, Clone)]
pub struct Common {
    /// Structure to verify (repeat for metric and structure files).
    #[arg(long)]
    pub input: Vec<String>,
    /// Germ structure (repeatable).
    #[arg(long)]
    pub germ: Vec<String>,
    /// Host structure (repeatable).
    #[arg(long)]
    pub host: Vec<String>,
    /// Curvature model file or `builtin:random`, `builtin:random-para`, `builtin:xi1313`.
    #[arg(long)]
    pub model: Option<String>,
    /// Signature `p,q` of built-in structures.
    #[arg(long, default_value = "0,4")]
    pub signature: String,
    /// `complex` or `para` for built-in and Kähler structures.
    #[arg(long, default_value = "complex")]
    pub structure: String,
    /// Transplant radius r (default 0.1), or the sampling ball for verify (default 1).
    #[arg(long)]
    pub radius: Option<f64>,
    /// Lemma-check ball radius (default 0.05).
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long, default_value_t = 10)]
    pub points: usize,
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub tolerance: Option<f64>,
    #[arg(long)]
    pub t_max: Option<f64>,
    /// Bring germ files into normal form before transplanting.
    #[arg(long)]
    pub normalize: bool,
    /// Report destination (default: standard output).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also write the resulting germ (Taylor expansion at the origin).
    #[arg(long)]
    pub germ_out: Option<PathBuf>,
    /// Directory for per-trajectory CSV files.
    #[arg(long)]
    pub trajectories: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

/// Failures are either bad input (exit 2) or a failed computation (exit 1).
#[derive(Debug)]
pub enum Failure {
    Input(String),
    Check(String),
}

impl From<GeomError> for Failure {
    fn from(e: GeomError) -> Self {
        match e {
            GeomError::Degenerate(_) | GeomError::Inconsistent(_) | GeomError::Integration(_) | GeomError::Domain { .. } => {
                Failure::Check(e.to_string())
            }
            _ => Failure::Input(e.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Input(e.to_string())
    }
}

fn configure_threads() -> Result<(), Failure> {
    let Ok(v) = std::env::var("GERMFORGE_THREADS") else { return Ok(()) };
    let n: usize = v.trim().parse().ok().filter(|n| *n > 0).ok_or_else(|| {
        Failure::Input(format!("GERMFORGE_THREADS must be a positive integer, got {v:?}"))
    })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Failure::Input(format!("cannot configure the worker pool: {e}")))
}

fn run(cli: Cli) -> Result<bool, Failure> {
    configure_threads()?;
    match cli.command {
        Command::Verify { identity, common } => commands::verify(&identity, &common),
        Command::Transplant { kind, common } => commands::transplant(&kind, &common),
        Command::Realize { kind, common } => commands::realize(&kind, &common),
        Command::Geodesic { scenario, common } => commands::geodesic(&scenario, &common),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Failure::Check(msg)) => {
            eprintln!("germforge: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Input(msg)) => {
            eprintln!("germforge: {msg}");
            ExitCode::from(2)
        }
    }
}
