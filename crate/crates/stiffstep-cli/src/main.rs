//! `stiffstep` — fixed-step integration, convergence studies, and damping
//! scans for the two-stage fourth-order implicit scheme and its baselines.
//!
//! Exit codes: 0 success, 1 configuration error (bad flag or value),
//! 2 runtime failure (stage solve diverged or state overflowed); tables
//! flush the rows computed before a runtime failure.

mod commands;
mod format;

use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;
use stiffstep::order_conditions::DEFAULT_C;

#[derive(Parser)]
#[command(
    name = "stiffstep",
    version,
    about = "Stiff ODE toolkit: two-stage fourth-order implicit integrator, \
             baselines, A-stability scans, and convergence studies"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate one problem at a fixed step and write the trajectory CSV
    Solve(SolveArgs),
    /// Run a halved-step convergence study and write its error table
    Converge(ConvergeArgs),
    /// Sweep the damping parameter C and report the A-stable interval
    ScanStability(ScanArgs),
}

/// Scheme and Newton settings shared by the integration commands.
#[derive(Args)]
struct SchemeArgs {
    /// Damping parameter C of the implicit scheme (second weight D = -C)
    #[arg(long = "c-param", default_value_t = DEFAULT_C)]
    c_param: f64,
    /// Accept a C outside the verified A-stable interval
    #[arg(long)]
    allow_unstable_c: bool,
    /// Newton absolute tolerance on the update norm
    #[arg(long, default_value_t = 1e-14)]
    newton_atol: f64,
    /// Newton relative tolerance on the update norm
    #[arg(long, default_value_t = 1e-14)]
    newton_rtol: f64,
    /// Newton iteration budget per stage solve
    #[arg(long, default_value_t = 200)]
    newton_maxit: usize,
}

#[derive(Args)]
struct SolveArgs {
    /// Benchmark problem: linear | robertson | ozone | vdp
    #[arg(long)]
    problem: String,
    /// Time stepper: tsfo-implicit | tsfo-explicit | rk4-explicit | irk4-gauss
    #[arg(long, default_value = "tsfo-implicit")]
    solver: String,
    /// End time (problem default when omitted)
    #[arg(long)]
    tend: Option<f64>,
    /// Requested step size, snapped to a whole number of steps
    #[arg(long = "dt0", visible_alias = "dt")]
    dt0: f64,
    #[command(flatten)]
    scheme: SchemeArgs,
    /// Output file (stdout when omitted)
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ConvergeArgs {
    /// Benchmark problem: linear | robertson | ozone | vdp
    #[arg(long)]
    problem: String,
    /// Time stepper: tsfo-implicit | tsfo-explicit | rk4-explicit | irk4-gauss
    #[arg(long, default_value = "tsfo-implicit")]
    solver: String,
    /// End time (problem default when omitted)
    #[arg(long)]
    tend: Option<f64>,
    /// Requested step of the coarsest row; row k requests dt0 / 2^k
    #[arg(long, default_value_t = 1.0)]
    dt0: f64,
    /// Number of rows in the table
    #[arg(long, default_value_t = 8)]
    levels: usize,
    #[command(flatten)]
    scheme: SchemeArgs,
    /// Reference source: auto | exact | rk4-refined | file:PATH
    #[arg(long, default_value = "auto")]
    ref_mode: String,
    /// Table format
    #[arg(long, value_enum, default_value_t = TableFormat::Md)]
    format: TableFormat,
    /// Reference cache directory (the STIFFSTEP_CACHE_DIR environment
    /// variable overrides this flag)
    #[arg(long)]
    cache_dir: Option<PathBuf>,
    /// Output file (stdout when omitted)
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
enum TableFormat {
    Csv,
    Md,
}

#[derive(Args)]
struct ScanArgs {
    /// Smallest damping parameter on the grid
    #[arg(long, default_value_t = 0.0)]
    cmin: f64,
    /// Largest damping parameter on the grid
    #[arg(long, default_value_t = 0.1)]
    cmax: f64,
    /// Number of C grid points
    #[arg(long, default_value_t = 5000)]
    nc: usize,
    /// Smallest imaginary-axis frequency tested
    #[arg(long, default_value_t = 1e-8)]
    ymin: f64,
    /// Largest imaginary-axis frequency tested
    #[arg(long, default_value_t = 1e4)]
    ymax: f64,
    /// Number of frequency grid points (log-spaced)
    #[arg(long, default_value_t = 25000)]
    ny: usize,
    /// Output file for the per-C CSV (stdout when omitted)
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    let code = match &cli.command {
        Command::Solve(args) => commands::cmd_solve(args),
        Command::Converge(args) => commands::cmd_converge(args),
        Command::ScanStability(args) => commands::cmd_scan_stability(args),
    };
    std::process::exit(code);
}
