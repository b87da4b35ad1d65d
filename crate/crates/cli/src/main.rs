use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use potlab_core::{DeviationMode, WindowAlignment, YearMonth};
use serde::Serialize;

mod commands;
mod failure;
mod output;

use failure::{Failure, EXIT_CONFIG};

/// Market potentials estimated from CAPE valuation data.
#[derive(Debug, Parser)]
#[command(name = "potlab", version, propagate_version = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Compute monthly CAPE from nominal price, earnings and CPI.
    Cape(CapeArgs),
    /// Bin CAPE deviations into an empirical potential.
    Potential(PotentialArgs),
    /// Fit the potential families and classify the market.
    Fit(FitArgs),
    /// Sample deviations from a known potential with Langevin dynamics.
    Simulate(SimulateArgs),
    /// Per-period or per-country potentials with classifications.
    Report(ReportArgs),
}

#[derive(Debug, Clone, Copy, Serialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
enum Alignment {
    Preceding,
    Inclusive,
}

impl From<Alignment> for WindowAlignment {
    fn from(a: Alignment) -> Self {
        match a {
            Alignment::Preceding => WindowAlignment::Preceding,
            Alignment::Inclusive => WindowAlignment::Inclusive,
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, serde::Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
enum Mode {
    Raw,
    Log,
}

impl From<Mode> for DeviationMode {
    fn from(m: Mode) -> Self {
        match m {
            Mode::Raw => DeviationMode::Raw,
            Mode::Log => DeviationMode::Log,
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
enum FamilyArg {
    Quadratic,
    Log,
    Linear,
}

#[derive(Debug, Args, Serialize)]
struct PriceColumnArgs {
    #[arg(long, default_value = "Date")]
    date_col: String,
    #[arg(long, default_value = "P")]
    price_col: String,
    #[arg(long, default_value = "E")]
    earnings_col: String,
    #[arg(long, default_value = "CPI")]
    cpi_col: String,
}

#[derive(Debug, Args, Serialize)]
struct CapeArgs {
    /// CSV with monthly nominal price, earnings and CPI.
    #[arg(long)]
    input: PathBuf,
    #[command(flatten)]
    columns: PriceColumnArgs,
    /// Earnings averaging window in months.
    #[arg(long, default_value_t = 120)]
    window: usize,
    #[arg(long, value_enum, default_value_t = Alignment::Preceding)]
    alignment: Alignment,
    /// Month whose price level real values are expressed in (default: last month).
    #[arg(long)]
    basis: Option<YearMonth>,
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
}

#[derive(Debug, Args, Serialize)]
struct BinningArgs {
    /// Number of bins (default: max(5, ceil(sqrt(M))), at most 40).
    #[arg(long)]
    bins: Option<usize>,
    /// Explicit binning range in deviation units.
    #[arg(long, num_args = 2, value_names = ["LO", "HI"], allow_negative_numbers = true)]
    range: Option<Vec<f64>>,
    #[arg(long, value_enum, default_value_t = Mode::Raw)]
    mode: Mode,
}

#[derive(Debug, Args, Serialize)]
struct PotentialArgs {
    /// CSV with a date column and a CAPE column.
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value = "Date")]
    date_col: String,
    #[arg(long, default_value = "CAPE")]
    cape_col: String,
    #[command(flatten)]
    binning: BinningArgs,
    /// First month to include.
    #[arg(long)]
    start: Option<YearMonth>,
    /// Last month to include.
    #[arg(long)]
    end: Option<YearMonth>,
    /// Series label (default: input file stem).
    #[arg(long)]
    label: Option<String>,
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
}

#[derive(Debug, Args, Serialize)]
struct ClassifyArgs {
    /// AICc lead required for a verdict.
    #[arg(long, default_value_t = 2.0, allow_negative_numbers = true)]
    threshold: f64,
    /// Log-family regularization (default: half the bin width).
    #[arg(long, allow_negative_numbers = true)]
    epsilon: Option<f64>,
}

#[derive(Debug, Args, Serialize)]
struct FitArgs {
    /// Potential JSON written by `potential`.
    #[arg(long)]
    input: PathBuf,
    #[command(flatten)]
    classify: ClassifyArgs,
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
}

#[derive(Debug, Args, Serialize)]
struct SimulateArgs {
    #[arg(long, value_enum)]
    family: FamilyArg,
    /// Potential strength C.
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    c: f64,
    /// Regularization of the log family.
    #[arg(long, default_value_t = 0.01, allow_negative_numbers = true)]
    epsilon: f64,
    /// Inverse temperature.
    #[arg(long, allow_negative_numbers = true)]
    beta: f64,
    /// Number of recorded samples.
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Euler–Maruyama time step.
    #[arg(long, default_value_t = 1e-3, allow_negative_numbers = true)]
    step: f64,
    #[arg(long, default_value_t = 10_000)]
    burn_in: u64,
    /// Steps between recorded samples.
    #[arg(long, default_value_t = 1)]
    thin: u64,
    /// Domain is [-W, W].
    #[arg(
        long,
        default_value_t = 10.0,
        conflicts_with = "domain",
        allow_negative_numbers = true
    )]
    half_width: f64,
    /// Domain bounds.
    #[arg(long, num_args = 2, value_names = ["LO", "HI"], allow_negative_numbers = true)]
    domain: Option<Vec<f64>>,
    /// Output file stem.
    #[arg(long, default_value = "samples")]
    name: String,
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
}

#[derive(Debug, Args, Serialize)]
#[group(required = true, multiple = false, id = "source")]
struct ReportSource {
    /// Price/earnings/CPI file analyzed by period (default: bundled US data).
    #[arg(long)]
    us: Option<Option<PathBuf>>,
    /// Directory of per-country CAPE files (default: bundled countries).
    #[arg(long)]
    countries: Option<Option<PathBuf>>,
}

#[derive(Debug, Args, Serialize)]
struct ReportArgs {
    #[command(flatten)]
    source: ReportSource,
    /// Replace the default US periods; repeat as LABEL=YYYY-MM..YYYY-MM.
    #[arg(long = "period")]
    periods: Vec<String>,
    #[arg(long, default_value_t = 120)]
    window: usize,
    #[command(flatten)]
    binning: BinningArgs,
    #[command(flatten)]
    classify: ClassifyArgs,
    /// Fewest months a period or country may have.
    #[arg(long, default_value_t = 24)]
    min_months: usize,
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_CONFIG)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = match &cli.command {
        Command::Cape(a) => commands::cape(a),
        Command::Potential(a) => commands::potential(a),
        Command::Fit(a) => commands::fit(a),
        Command::Simulate(a) => commands::simulate(a),
        Command::Report(a) => commands::report(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure { code, error }) => {
            eprintln!("error: {error:#}");
            ExitCode::from(code)
        }
    }
}
