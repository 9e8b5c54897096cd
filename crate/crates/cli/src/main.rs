mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

/// Kicked-rotor ratchet simulations: classical ensembles, quantum Monte Carlo
/// over quasi-momenta, and the analysis of their momentum distributions.
#[derive(Debug, Parser)]
#[command(name = "ratchet", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Evolve a classical ensemble; writes distributions, a folded phase portrait and time series.
    Classical(RunArgs),
    /// Average quantum lattice evolutions over sampled initial momenta.
    Quantum(RunArgs),
    /// Fit or measure previously written CSV files.
    Analyze(AnalyzeArgs),
    /// Tabulate the localized-density shape for a given localization length.
    Gogolin(GogolinArgs),
    /// Print a built-in configuration (fig1, fig2, fig3).
    Preset { name: String },
}

#[derive(Debug, Args)]
struct RunArgs {
    /// Configuration file, or the name of a built-in preset.
    #[arg(long)]
    config: String,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    /// Worker threads (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long)]
    seed_override: Option<u64>,
    /// Comma-separated kick counts at which to record distributions.
    #[arg(long, value_delimiter = ',')]
    record: Option<Vec<u64>>,
    /// Total kicks to run (overrides the configuration).
    #[arg(long)]
    kicks: Option<u64>,
    /// Number of points or quasi-momentum samples (overrides the configuration).
    #[arg(long)]
    samples: Option<u64>,
    /// Sum samples in fixed blocks so results do not depend on the thread count.
    #[arg(long)]
    reproducible_reduction: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
enum AnalysisKind {
    /// Power-law exponent of an `n,value` series.
    PowerLaw,
    /// Localization length of a `p,density` file.
    Gogolin,
    /// Ballistic peak location and population.
    Peak,
    /// Mirror asymmetry of a distribution.
    Asymmetry,
    /// Exponent of the right-side front across several distributions.
    Front,
    /// Mean, energy, right-side energy and current check.
    Moments,
}

#[derive(Debug, Args)]
struct AnalyzeArgs {
    #[arg(value_enum)]
    kind: AnalysisKind,
    /// Input CSV files.
    #[arg(required = true)]
    inputs: Vec<PathBuf>,
    /// Directory for the JSON report.
    #[arg(long)]
    out: PathBuf,
    /// Power-law fit window `n_min,n_max`.
    #[arg(long, value_delimiter = ',', default_values_t = [5, 50])]
    window: Vec<u64>,
    /// Largest |p| used in the localization fit.
    #[arg(long, default_value_t = 250.0)]
    p_window: f64,
    /// Smallest |p| used in the localization fit.
    #[arg(long, default_value_t = 5.0)]
    exclude_below: f64,
    /// Half-width of the peak-population window (default π/3).
    #[arg(long)]
    half_width: Option<f64>,
    /// Kick count for peak tracking (default: read from the file header).
    #[arg(long)]
    kicks: Option<u64>,
    /// Effective sample count for the current check (default: from the file header).
    #[arg(long)]
    effective_samples: Option<u64>,
}

#[derive(Debug, Args)]
struct GogolinArgs {
    /// Localization length.
    #[arg(long)]
    xi: f64,
    /// Half-width of the symmetric momentum grid.
    #[arg(long, default_value_t = 300.0)]
    half_width: f64,
    #[arg(long, default_value_t = 1.0)]
    spacing: f64,
    #[arg(long)]
    out: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Classical(args) => commands::classical(&args),
        Command::Quantum(args) => commands::quantum(&args),
        Command::Analyze(args) => commands::analyze(&args),
        Command::Gogolin(args) => commands::gogolin(&args),
        Command::Preset { name } => commands::preset(&name),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(commands::exit_code(&e))
        }
    }
}
