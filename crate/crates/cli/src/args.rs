use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

/// QFI of permutation-symmetric qubit ensembles coupled to a lossy resonator.
///
/// Rates are dimensionless (kappa/g, gamma/g) and times are gt. Settings come
/// from built-in defaults, then `--config`, then flags.
#[derive(Debug, Parser)]
#[command(name = "dicke-qfi", version)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// QFI(t) series for one probe at several qubit numbers.
    TimeScan(TimeScanArgs),
    /// Time-optimized QFI against Dicke excitation number.
    DickeScan(DickeScanArgs),
    /// Scaling exponent b of max_t QFI ~ a N^b + c over a (kappa/g, gamma/g) grid.
    ExponentMap(ExponentMapArgs),
    /// Compare the symmetric-basis code against the full-space reference for N <= 4.
    OracleCheck(OracleCheckArgs),
}

#[derive(Debug, Clone, Default, Args)]
pub struct Common {
    /// TOML config file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Cache directory for grid passes.
    #[arg(long)]
    pub cache: Option<PathBuf>,
    /// Ignore any configured cache.
    #[arg(long)]
    pub no_cache: bool,
    /// Worker threads (default: available cores).
    #[arg(long)]
    pub workers: Option<usize>,
    /// End of the time grid, in gt.
    #[arg(long)]
    pub t_max: Option<f64>,
    /// Number of grid points over [0, t_max].
    #[arg(long)]
    pub points: Option<usize>,
    #[arg(long)]
    pub rtol: Option<f64>,
    #[arg(long)]
    pub atol: Option<f64>,
    /// Finite-difference step in g.
    #[arg(long)]
    pub delta: Option<f64>,
    /// Skip golden-section refinement of the optima.
    #[arg(long)]
    pub no_refine: bool,
    /// Coupling used to convert outputs to dimensionful F and t.
    #[arg(long)]
    pub g: Option<f64>,
    /// Optimize QFI/t instead of QFI.
    #[arg(long)]
    pub per_time: bool,
    /// Record the smallest eigenvalue of each trajectory in the diagnostics.
    #[arg(long)]
    pub track_eigenvalues: bool,
    /// No progress on stderr.
    #[arg(long, short)]
    pub quiet: bool,
}

#[derive(Debug, Clone, Args)]
pub struct TimeScanArgs {
    #[command(flatten)]
    pub common: Common,
    /// dicke-<n>, dicke-half, x-polarized or ghz.
    #[arg(long)]
    pub probe: Option<String>,
    #[arg(long)]
    pub kappa: Option<f64>,
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Qubit numbers, e.g. 4,8,12 or 4:20:5.
    #[arg(long)]
    pub n: Option<String>,
}

#[derive(Debug, Clone, Args)]
pub struct DickeScanArgs {
    #[command(flatten)]
    pub common: Common,
    /// Qubit number.
    #[arg(long)]
    pub n: Option<u32>,
    #[arg(long)]
    pub gamma: Option<f64>,
    /// One or more kappa/g values.
    #[arg(long)]
    pub kappa: Option<String>,
    /// Excitation numbers (default 1:N).
    #[arg(long)]
    pub n_values: Option<String>,
}

#[derive(Debug, Clone, Args)]
pub struct ExponentMapArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub probe: Option<String>,
    /// kappa/g values, e.g. 0.1:1.0:5.
    #[arg(long)]
    pub kappa_grid: Option<String>,
    /// gamma/g values.
    #[arg(long)]
    pub gamma_grid: Option<String>,
    /// Qubit numbers used in each fit (default 4,8,12,16,20).
    #[arg(long)]
    pub n_list: Option<String>,
}

#[derive(Debug, Clone, Args)]
pub struct OracleCheckArgs {
    #[command(flatten)]
    pub common: Common,
    /// Seed for the random-state suites.
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    /// Grid points over gt in [0, 10] for the QFI suite.
    #[arg(long, default_value_t = 50)]
    pub qfi_points: usize,
}
