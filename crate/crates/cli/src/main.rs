//! `qst`: regenerates the data behind the transfer tables and figures.

// Negated float comparisons reject NaN on purpose.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use qst_core::QstError;

use crate::commands::PulseChoice;
use crate::config::{ExperimentConfig, Overrides};

#[derive(Debug)]
pub enum CliError {
    /// Bad or unphysical configuration (exit 2).
    Config(String),
    /// Optimizer or solver did not converge (exit 1).
    Convergence(String),
    Numerical(String),
    Io(String),
    CheckFailed(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            _ => 1,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "invalid configuration: {m}"),
            CliError::Convergence(m) => write!(f, "no convergence: {m}"),
            CliError::Numerical(m) => write!(f, "numerical failure: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
            CliError::CheckFailed(m) => write!(f, "validation failed: {m}"),
        }
    }
}

impl From<QstError> for CliError {
    fn from(e: QstError) -> Self {
        match e {
            QstError::NoConvergence { .. } => CliError::Convergence(e.to_string()),
            QstError::InvalidParameter(_) | QstError::Unphysical(_) | QstError::Capacity { .. } | QstError::Unsupported(_) => {
                CliError::Config(e.to_string())
            }
            _ => CliError::Numerical(e.to_string()),
        }
    }
}

#[derive(Parser, Debug)]
#[command(name = "qst", version, about = "Qutrit state transfer experiments")]
struct Cli {
    #[command(flatten)]
    common: CommonArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct CommonArgs {
    /// JSON file with configuration keys; flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    eta_mhz: Option<f64>,
    #[arg(long, global = true)]
    t_ramp_ns: Option<f64>,
    #[arg(long, global = true)]
    coupling_cap_mhz: Option<f64>,
    #[arg(long, global = true)]
    dt_ns: Option<f64>,
    #[arg(long, global = true)]
    t1_us: Option<f64>,
    #[arg(long, global = true)]
    t2_us: Option<f64>,
    #[arg(long, global = true)]
    n_steps: Option<usize>,
    /// Output directory (default: $QST_OUT_DIR, else the current directory).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, Copy)]
struct PulseArgs {
    /// Use this plateau coupling instead of optimizing (needs --t-qst-ns).
    #[arg(long)]
    g_max_mhz: Option<f64>,
    #[arg(long)]
    t_qst_ns: Option<f64>,
    /// Use the closed-form pulse instead of optimizing.
    #[arg(long)]
    analytic: bool,
}

impl From<PulseArgs> for PulseChoice {
    fn from(a: PulseArgs) -> Self {
        PulseChoice { g_max: a.g_max_mhz, t_qst: a.t_qst_ns, analytic: a.analytic }
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Analytic and optimized pulse parameters with their fidelities (table1.json).
    Table1 {
        #[arg(long)]
        analytic_only: bool,
    },
    /// Transfer populations under the pulse (fig2b.csv).
    Populations {
        #[command(flatten)]
        pulse: PulseArgs,
        #[arg(long, default_value_t = 0.05)]
        dt_out_ns: f64,
    },
    /// Coupling schedule for a chain (fig3.csv).
    Schedule {
        #[arg(long, default_value_t = 4)]
        qutrits: usize,
        #[command(flatten)]
        pulse: PulseArgs,
        #[arg(long, default_value_t = 0.05)]
        dt_out_ns: f64,
    },
    /// Intrinsic and decoherence error curves with fits (fig4.csv, fits.json).
    Errors {
        #[command(flatten)]
        pulse: PulseArgs,
    },
    /// Numerical self-checks; non-zero exit on any failure.
    Validate,
}

fn run(cli: Cli) -> Result<(), CliError> {
    let c = cli.common;
    let overrides = Overrides {
        eta: c.eta_mhz,
        t_ramp: c.t_ramp_ns,
        coupling_cap: c.coupling_cap_mhz,
        dt: c.dt_ns,
        t1: c.t1_us,
        t2: c.t2_us,
        n_steps: c.n_steps,
        output_dir: c.out,
    };
    let cfg = ExperimentConfig::load(c.config.as_deref(), &overrides)?;
    log::debug!("resolved config: {cfg:?}");
    match cli.command {
        Command::Table1 { analytic_only } => commands::table1(&cfg, analytic_only),
        Command::Populations { pulse, dt_out_ns } => commands::populations(&cfg, pulse.into(), dt_out_ns),
        Command::Schedule { qutrits, pulse, dt_out_ns } => commands::schedule(&cfg, pulse.into(), qutrits, dt_out_ns),
        Command::Errors { pulse } => commands::errors(&cfg, pulse.into()),
        Command::Validate => commands::validate(&cfg),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
