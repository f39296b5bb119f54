use clap::{Args, Parser, Subcommand, ValueEnum};

use classical_bell::AngleSet;

pub const DEFAULT_ANGLES: &str = "0,22.5,45,67.5";

/// Classical Bell-test simulator driven by correlated random telegraph noise.
#[derive(Debug, Parser)]
#[command(name = "classical-bell", version, about)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalOpts,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalOpts {
    /// Base seed for every random stream.
    #[arg(long, global = true, default_value_t = 1)]
    pub seed: u64,

    /// Worker threads for Monte Carlo and lattice search (default: all cores).
    /// Results do not depend on this value.
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    /// Output format. Defaults to csv for sweep-r and json otherwise.
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,

    /// Omit the timestamp field from JSON output.
    #[arg(long, global = true)]
    pub no_timestamp: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Human,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SourceKind {
    Rtw,
    Gaussian,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AngleMode {
    /// Use --angles for every row.
    Fixed,
    /// Optimize one angle set for r ≥ 0 and one for r < 0.
    SignMatched,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Closed-form estimators, S and the violation threshold.
    Analytic {
        #[arg(long, default_value = DEFAULT_ANGLES)]
        angles: AngleSet,
        /// Noise correlation r in [-1, 1].
        #[arg(
            short = 'r',
            long = "corr",
            default_value_t = 0.8,
            allow_negative_numbers = true
        )]
        corr: f64,
    },
    /// Monte Carlo CHSH run.
    Simulate {
        #[arg(long, default_value = DEFAULT_ANGLES)]
        angles: AngleSet,
        #[arg(
            short = 'r',
            long = "corr",
            default_value_t = 0.8,
            allow_negative_numbers = true
        )]
        corr: f64,
        /// Trials per detector pairing.
        #[arg(long, default_value_t = 1_000_000)]
        trials: u64,
        #[arg(long, value_enum, default_value_t = SourceKind::Rtw)]
        source: SourceKind,
        /// Latent Gaussian correlation; calibrated from --corr when omitted.
        #[arg(long, allow_negative_numbers = true)]
        rho: Option<f64>,
        /// Tolerance for the Gaussian auto-calibration.
        #[arg(long, default_value_t = 1e-9)]
        calibration_tolerance: f64,
    },
    /// Analytic and Monte Carlo S over a range of r.
    SweepR {
        #[arg(long, default_value = DEFAULT_ANGLES)]
        angles: AngleSet,
        #[arg(long, value_enum, default_value_t = AngleMode::Fixed)]
        angle_mode: AngleMode,
        #[arg(long = "from", default_value_t = -1.0, allow_negative_numbers = true)]
        r_from: f64,
        #[arg(long = "to", default_value_t = 1.0, allow_negative_numbers = true)]
        r_to: f64,
        #[arg(long = "step", default_value_t = 0.1)]
        r_step: f64,
        #[arg(long, default_value_t = 1_000_000)]
        trials: u64,
        /// Skip the Monte Carlo columns.
        #[arg(long)]
        analytic_only: bool,
    },
    /// Search detector angles for the largest S at fixed r.
    Optimize {
        #[arg(
            short = 'r',
            long = "corr",
            default_value_t = 0.8,
            allow_negative_numbers = true
        )]
        corr: f64,
        /// Lattice spacing in degrees, in (0, 45].
        #[arg(long, default_value_t = 7.5, allow_negative_numbers = true)]
        grid_step: f64,
        #[arg(long, default_value_t = 1e-12)]
        tolerance: f64,
        /// Include the refinement trace.
        #[arg(long)]
        trace: bool,
    },
    /// Find the latent Gaussian correlation giving a target sign correlation.
    Calibrate {
        #[arg(long, allow_negative_numbers = true)]
        target: f64,
        #[arg(long, default_value_t = 1e-3)]
        tolerance: f64,
        /// Draws used to check the achieved correlation by simulation.
        #[arg(long, default_value_t = 1_000_000)]
        trials: u64,
    },
    /// Violation thresholds for an angle set.
    Threshold {
        #[arg(long, default_value = DEFAULT_ANGLES)]
        angles: AngleSet,
    },
}
