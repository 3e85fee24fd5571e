//! `cusp-lab`: relaxation near the spinodal cusp of the mean-field Ising model.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;
mod output;
mod verify;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use thiserror::Error;

use cusp_core::analysis::RelaxationKind;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("runtime error: {0}")]
    Runtime(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Runtime(_) | CliError::Io(_) => 3,
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "cusp-lab",
    version,
    about = "Glauber and contact Hamiltonian relaxation near the Ising spinodal cusp"
)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Coupling b
    #[arg(long, global = true)]
    b: Option<f64>,
    /// Inverse temperature
    #[arg(long, global = true)]
    beta: Option<f64>,
    /// Hamiltonian parameter a
    #[arg(long, global = true)]
    a: Option<f64>,
    /// Truncation order of the series
    #[arg(long, global = true)]
    order: Option<usize>,
    /// Output directory
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// TOML configuration file; flags override it
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Also write SVG plots
    #[arg(long, global = true)]
    svg: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Kind {
    Glauber,
    Contact,
}

impl From<Kind> for RelaxationKind {
    fn from(k: Kind) -> Self {
        match k {
            Kind::Glauber => RelaxationKind::Glauber,
            Kind::Contact => RelaxationKind::Contact,
        }
    }
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long, value_enum)]
    kind: Kind,
    /// Field offset Q = q - q*
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    q_offset: f64,
    /// Glauber only: absolute field q, instead of --q-offset
    #[arg(long, allow_hyphen_values = true)]
    field: Option<f64>,
    /// Initial magnetization (Glauber p, contact shifted P)
    #[arg(long, allow_hyphen_values = true)]
    p0: Option<f64>,
    /// Contact only: initial shifted Z
    #[arg(long, default_value_t = 0.01, allow_hyphen_values = true)]
    z0: f64,
    #[arg(long, default_value_t = 1e3)]
    t_max: f64,
    /// Geometric samples per decade of t; 0 keeps every step
    #[arg(long, default_value_t = 20)]
    per_decade: usize,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Equilibrium curve, front and branch classification
    Curve {
        #[arg(long, default_value_t = 2001)]
        points: usize,
    },
    /// Spinodal point and cusp data
    Spinodal,
    /// One trajectory
    Simulate(SimulateArgs),
    /// Relaxation time scan over Q
    RelaxScan {
        #[arg(long, value_enum)]
        kind: Kind,
    },
    /// Power-law decay at Q = 0
    CuspPowerlaw {
        #[arg(long, value_enum)]
        kind: Kind,
    },
    /// Full verification report
    Verify,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let overrides = config::Overrides {
        b: cli.common.b,
        beta: cli.common.beta,
        a: cli.common.a,
        order: cli.common.order,
    };
    let result =
        config::RunConfig::load(cli.common.config.as_deref(), &overrides).and_then(|cfg| {
            cfg.validate()?;
            match cli.command {
                Command::Curve { points } => commands::curve(&cfg, &cli.common, points),
                Command::Spinodal => commands::spinodal(&cfg),
                Command::Simulate(args) => commands::simulate(&cfg, &cli.common, &args),
                Command::RelaxScan { kind } => commands::relax_scan(&cfg, &cli.common, kind.into()),
                Command::CuspPowerlaw { kind } => {
                    commands::cusp_powerlaw(&cfg, &cli.common, kind.into())
                }
                Command::Verify => verify::run(&cfg, &cli.common),
            }
        });
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("cusp-lab: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
