use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::analysis::DEFAULT_PROMINENCE;

#[derive(Debug, Parser)]
#[command(name = "axy", version, about = "Adaptive XY decoupling design and NV spectrum simulation")]
pub struct Cli {
    /// Master seed; overrides the seed in a config file.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads for sweeps (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Output file; stdout when omitted.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve composite timings for a target Fourier coefficient.
    Design(DesignArgs),
    #[command(subcommand)]
    Bath(BathCommand),
    /// Simulate a spectrum from a config file.
    Sweep(SweepArgs),
    /// Mean absolute probability difference between two spectra.
    Deviation(DeviationArgs),
    /// Detect resonance peaks and assign them to bath spins.
    Peaks(PeaksArgs),
    /// Fit the error order of composite propagators.
    OrderScaling(OrderScalingArgs),
    #[command(subcommand)]
    Schedule(ScheduleCommand),
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false, id = "target")]
pub struct DesignTarget {
    /// First-harmonic coefficient, third harmonic zeroed.
    #[arg(long, allow_hyphen_values = true)]
    pub f1: Option<f64>,
    /// Third-harmonic coefficient, first harmonic zeroed.
    #[arg(long, allow_hyphen_values = true)]
    pub f3: Option<f64>,
    /// Tuned odd harmonic for the general solver (with --value).
    #[arg(long, requires = "value")]
    pub harmonic: Option<usize>,
}

#[derive(Debug, Args)]
pub struct DesignArgs {
    #[command(flatten)]
    pub target: DesignTarget,
    #[arg(long, allow_hyphen_values = true, requires = "harmonic")]
    pub value: Option<f64>,
    /// Harmonics forced to zero (general solver).
    #[arg(long, value_delimiter = ',', requires = "harmonic")]
    pub zero: Vec<usize>,
    /// Highest harmonic in the printed table.
    #[arg(long, default_value_t = 10)]
    pub kmax: usize,
}

#[derive(Debug, Subcommand)]
pub enum BathCommand {
    /// Draw a ¹³C bath on the diamond lattice.
    Gen(BathGenArgs),
    /// Print per-spin frequencies, couplings and clusters.
    Inspect(BathInspectArgs),
}

#[derive(Debug, Args)]
pub struct BathGenArgs {
    #[arg(long)]
    pub radius_nm: f64,
    #[arg(long, default_value_t = 0.011)]
    pub abundance: f64,
    #[arg(long)]
    pub bz_gauss: f64,
    #[arg(long, allow_hyphen_values = true, default_value_t = -1)]
    pub ms: i8,
}

#[derive(Debug, Args)]
pub struct BathInspectArgs {
    pub file: PathBuf,
    #[arg(long)]
    pub max_cluster: Option<usize>,
    #[arg(long, default_value_t = 1)]
    pub k_dd: usize,
    /// Addressability check against this spin (needs --f-kdd).
    #[arg(long, requires = "f_kdd")]
    pub target: Option<usize>,
    #[arg(long, allow_hyphen_values = true)]
    pub f_kdd: Option<f64>,
    #[arg(long, default_value_t = axy_core::bath::DEFAULT_ADDRESSABILITY_MARGIN)]
    pub margin: f64,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    pub config: PathBuf,
}

#[derive(Debug, Args)]
pub struct DeviationArgs {
    pub a: PathBuf,
    pub b: PathBuf,
    /// Frequency window `LO HI`, MHz.
    #[arg(long, num_args = 2, value_names = ["LO", "HI"])]
    pub window: Option<Vec<f64>>,
}

#[derive(Debug, Args)]
pub struct PeaksArgs {
    pub spectrum: PathBuf,
    #[arg(long)]
    pub bath: PathBuf,
    #[arg(long, default_value_t = 1)]
    pub k_dd: usize,
    #[arg(long, default_value_t = DEFAULT_PROMINENCE)]
    pub prominence: f64,
    /// Drop spins too weak to show at this coefficient (needs --total-time-us).
    #[arg(long, requires = "total_time_us", allow_hyphen_values = true)]
    pub f_kdd: Option<f64>,
    #[arg(long, requires = "f_kdd")]
    pub total_time_us: Option<f64>,
}

#[derive(Debug, Args)]
pub struct OrderScalingArgs {
    /// Symmetric composite times `x1,x2` (x₃..x₅ mirrored).
    #[arg(long, value_delimiter = ',', num_args = 2, default_values_t = [0.03, 0.18])]
    pub x: Vec<f64>,
    /// Comma-separated η grid (default: 8 log points in [1e-3, 1e-2]).
    #[arg(long, value_delimiter = ',')]
    pub eta: Vec<f64>,
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    pub delta_tilde: f64,
    #[arg(long, default_value_t = 0.7, allow_hyphen_values = true)]
    pub eps_tilde: f64,
    /// Free precession rate between pulses, in units of Ω.
    #[arg(long, default_value_t = 2.0 * std::f64::consts::PI, allow_hyphen_values = true)]
    pub detuning: f64,
    /// Composite period in units of 1/Ω.
    #[arg(long, default_value_t = 1.0)]
    pub tau: f64,
}

#[derive(Debug, Subcommand)]
pub enum ScheduleCommand {
    /// Write the pulse list of a config's sequence at one frequency.
    Dump(ScheduleDumpArgs),
}

#[derive(Debug, Args)]
pub struct ScheduleDumpArgs {
    pub config: PathBuf,
    #[arg(long)]
    pub freq_mhz: f64,
}
