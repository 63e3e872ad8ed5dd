mod commands;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

/// Long-horizon market path simulation and validation statistics.
#[derive(Debug, Parser)]
#[command(name = "longrun", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate an ensemble for each process in the spec file.
    Simulate(SimulateArgs),
    /// Compute a statistic report from an ensemble, a price history or a CMA file.
    Stats(StatsArgs),
    /// Estimate capital market assumptions from a price history.
    Calibrate(CalibrateArgs),
}

#[derive(Debug, clap::Args)]
struct SimulateArgs {
    /// Capital market assumptions (JSON).
    #[arg(long)]
    cma: PathBuf,
    /// Process specification or process set (JSON).
    #[arg(long)]
    spec: PathBuf,
    /// Optional price history seeding the NRC and LMARCH windows.
    #[arg(long)]
    prices: Option<PathBuf>,
    /// Read --prices as wide CSV (`date,<asset>,...`).
    #[arg(long, requires = "prices")]
    wide: bool,
    #[arg(long, default_value_t = 20)]
    years: usize,
    #[arg(long, default_value_t = 50_000)]
    paths: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Worker cap; results do not depend on it.
    #[arg(long, env = "LONGRUN_THREADS")]
    threads: Option<usize>,
    /// Fill faulted paths with NaN and report them instead of failing.
    #[arg(long)]
    skip_faults: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Which {
    Wealth,
    Dist,
    Lagcorr,
    Crossover,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Kind {
    Log,
    Relative,
}

#[derive(Debug, clap::Args)]
struct StatsArgs {
    /// Ensemble directory written by `simulate`.
    #[arg(long, conflicts_with_all = ["prices", "cma"])]
    ensemble: Option<PathBuf>,
    /// Historical prices (long CSV unless --wide).
    #[arg(long, conflicts_with = "cma")]
    prices: Option<PathBuf>,
    #[arg(long, requires = "prices")]
    wide: bool,
    /// CMA file, for `crossover` only.
    #[arg(long)]
    cma: Option<PathBuf>,
    #[arg(long, value_enum)]
    which: Which,
    /// Horizons: years for `wealth`, months for `dist` and `lagcorr`.
    #[arg(long, value_delimiter = ',')]
    horizons: Vec<f64>,
    /// Restrict to one asset id.
    #[arg(long)]
    asset: Option<String>,
    /// Return formula for `dist`.
    #[arg(long, value_enum, default_value_t = Kind::Log)]
    kind: Kind,
    /// Sampling stride in steps for `dist`; defaults to the horizon.
    #[arg(long)]
    stride: Option<usize>,
    /// Cap on emitted points per `dist` curve.
    #[arg(long, default_value_t = 2000)]
    max_points: usize,
    /// Asset classes for a history without a CMA, as `id=class`.
    #[arg(long = "class", value_name = "ID=CLASS")]
    classes: Vec<String>,
    #[arg(long, env = "LONGRUN_THREADS")]
    threads: Option<usize>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, clap::Args)]
struct CalibrateArgs {
    #[arg(long)]
    prices: PathBuf,
    #[arg(long)]
    wide: bool,
    /// Asset class per id, as `id=class`; unlisted assets use --default-class.
    #[arg(long = "class", value_name = "ID=CLASS")]
    classes: Vec<String>,
    #[arg(long, default_value = "equity")]
    default_class: String,
    /// Output CMA document.
    #[arg(long)]
    out: PathBuf,
}

/// Failure with its process exit code: 2 validation, 3 numerical fault, 4 I/O.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn usage(message: impl Into<String>) -> Self {
        Failure {
            code: 2,
            message: message.into(),
        }
    }
}

impl From<longrun::Error> for Failure {
    fn from(e: longrun::Error) -> Self {
        let code = if e.is_io() {
            4
        } else if e.is_numerical() {
            3
        } else {
            2
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let argv: Vec<String> = std::env::args().skip(1).collect();
    let result = match cli.command {
        Command::Simulate(a) => commands::simulate(a, argv),
        Command::Stats(a) => commands::stats(a, argv),
        Command::Calibrate(a) => commands::calibrate(a, argv),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
