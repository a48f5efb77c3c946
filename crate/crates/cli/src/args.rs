//! Command-line flags. Everything here is resolved into an [`Experiment`]
//! before anything runs.
//!
//! [`Experiment`]: crate::experiment::Experiment

use std::path::PathBuf;

use bcsa::Mode;
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "bcsa", version, about = "Broadcast coded slotted ALOHA and CSMA/CA analysis toolkit")]
pub struct Cli {
    /// Output file; written atomically. Defaults to standard output.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    /// Run the experiments in a JSON config file, or re-run the ones recorded
    /// in the metadata of an earlier output file.
    #[arg(long, global = true, conflicts_with = "recipe")]
    pub config: Option<PathBuf>,

    /// Named figure preset.
    #[arg(long, global = true, value_enum)]
    pub recipe: Option<Recipe>,

    /// Scaled-down variant of the recipe.
    #[arg(long, global = true, requires = "recipe")]
    pub quick: bool,

    /// Worker threads for parallel frames and runs; all outputs are
    /// identical for any value.
    #[arg(long, global = true, env = "BCSA_THREADS")]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Option<Command>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Recipe {
    /// Per-degree loss for the broadcast example, simulation and error floor.
    Fig3a,
    /// Loss by original degree and receiver degree for the same setup.
    Fig3b,
    /// Unicast error floor against frame length.
    Fig4,
    /// Density evolution against the error floor at a very long frame.
    Fig5,
    /// Threshold versus error-floor tradeoff of optimized distributions.
    Fig6,
    /// CSMA/CA loss for both packet sizes, repetitions and erasure rates.
    Fig7,
    /// Broadcast coded slotted ALOHA against CSMA/CA.
    Fig8,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Monte Carlo packet loss rates.
    Sim(SimArgs),
    /// Error-floor approximation from minimal stopping sets.
    Ef(EfArgs),
    /// Asymptotic density evolution and load thresholds.
    De(DeArgs),
    /// Enumerate minimal stopping sets.
    StoppingSets(StoppingSetArgs),
    /// Optimize the degree distribution for threshold and error floor.
    Optimize(OptimizeArgs),
    /// CSMA/CA baseline with repetitions.
    Csma(CsmaArgs),
    /// Broadcast coded slotted ALOHA against CSMA/CA on matching frames.
    Compare(CompareArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Sim(_) => "sim",
            Command::Ef(_) => "ef",
            Command::De(_) => "de",
            Command::StoppingSets(_) => "stopping-sets",
            Command::Optimize(_) => "optimize",
            Command::Csma(_) => "csma",
            Command::Compare(_) => "compare",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Unicast,
    Broadcast,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Unicast => Mode::Unicast,
            ModeArg::Broadcast => Mode::Broadcast,
        }
    }
}

/// Which users contend: a load grid or explicit neighbor counts.
#[derive(Debug, Clone, Args)]
pub struct LoadArgs {
    /// Neighbor counts (comma separated).
    #[arg(long, value_delimiter = ',', conflicts_with_all = ["g", "g_range"])]
    pub m: Option<Vec<usize>>,
    /// Channel loads (comma separated).
    #[arg(long, value_delimiter = ',', conflicts_with = "g_range")]
    pub g: Option<Vec<f64>>,
    /// Load grid `start:stop:step`, inclusive of `stop`.
    #[arg(long)]
    pub g_range: Option<String>,
}

#[derive(Debug, Clone, Args)]
pub struct FrameArgs {
    /// Fixed number of frames per point. Without it, frames are added until
    /// the broadcast loss rate's 95% interval is within `--rel-ci`.
    #[arg(long)]
    pub frames: Option<u64>,
    #[arg(long, default_value_t = 0.1)]
    pub rel_ci: f64,
    #[arg(long, default_value_t = 10_000_000)]
    pub max_frames: u64,
}

#[derive(Debug, Clone, Args)]
pub struct SimArgs {
    /// Degree distribution, `0.5x^2+0.5x^4` or `{"coeffs": [...]}`.
    #[arg(long, default_value = "0.5x^2+0.5x^4")]
    pub dist: String,
    /// Frame lengths in slots (comma separated).
    #[arg(long, value_delimiter = ',', default_value = "100")]
    pub n: Vec<usize>,
    #[command(flatten)]
    pub load: LoadArgs,
    /// Erasure probabilities (comma separated).
    #[arg(long, value_delimiter = ',', default_value = "0")]
    pub eps: Vec<f64>,
    #[arg(long, value_enum, default_value = "broadcast")]
    pub mode: ModeArg,
    #[command(flatten)]
    pub frames: FrameArgs,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Also emit the error-floor approximation for every point.
    #[arg(long)]
    pub ef: bool,
}

#[derive(Debug, Clone, Args)]
pub struct CatalogArgs {
    /// Largest number of CNs in the stopping-set catalog.
    #[arg(long, default_value_t = 4)]
    pub max_mu: usize,
    /// Largest VN degree in the stopping-set catalog.
    #[arg(long, default_value_t = 4)]
    pub max_degree: usize,
}

#[derive(Debug, Clone, Args)]
pub struct EfArgs {
    #[arg(long, default_value = "0.5x^2+0.5x^4")]
    pub dist: String,
    #[arg(long, value_delimiter = ',', default_value = "100")]
    pub n: Vec<usize>,
    #[command(flatten)]
    pub load: LoadArgs,
    #[arg(long, value_delimiter = ',', default_value = "0")]
    pub eps: Vec<f64>,
    #[arg(long, value_enum, default_value = "broadcast")]
    pub mode: ModeArg,
    #[command(flatten)]
    pub catalog: CatalogArgs,
}

#[derive(Debug, Clone, Args)]
pub struct DeArgs {
    #[arg(long, default_value = "0.5x^2+0.5x^4")]
    pub dist: String,
    #[arg(long, value_delimiter = ',', conflicts_with = "g_range")]
    pub g: Option<Vec<f64>>,
    #[arg(long)]
    pub g_range: Option<String>,
    /// Erasure probabilities applied before the recursion (comma separated).
    #[arg(long, value_delimiter = ',', default_value = "0")]
    pub eps: Vec<f64>,
    /// Only compute the load threshold.
    #[arg(long)]
    pub threshold: bool,
}

#[derive(Debug, Clone, Args)]
pub struct StoppingSetArgs {
    #[command(flatten)]
    pub catalog: CatalogArgs,
}

#[derive(Debug, Clone, Args)]
pub struct OptimizeArgs {
    /// Error-floor weights (comma separated).
    #[arg(long, value_delimiter = ',', conflicts_with = "eta_range")]
    pub eta: Option<Vec<f64>>,
    /// Log-spaced weights `start:stop:points` (decades, e.g. `0:7:15`).
    #[arg(long)]
    pub eta_range: Option<String>,
    /// Degrees allowed to carry mass.
    #[arg(long, value_delimiter = ',', default_value = "2,3,4,8")]
    pub support: Vec<usize>,
    #[arg(long, default_value_t = 500)]
    pub n: usize,
    #[arg(long, default_value_t = 0.5)]
    pub g: f64,
    #[arg(long, default_value_t = 0.0)]
    pub eps: f64,
    #[arg(long, default_value_t = 20)]
    pub restarts: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
}

#[derive(Debug, Clone, Args)]
pub struct CsmaArgs {
    /// Packet sizes in bytes, 200 and/or 400 (comma separated).
    #[arg(long, value_delimiter = ',', default_value = "400")]
    pub packet_size: Vec<usize>,
    /// Attempts per packet (comma separated).
    #[arg(long, value_delimiter = ',', default_value = "2")]
    pub kappa: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_value = "0")]
    pub eps: Vec<f64>,
    #[arg(long, value_delimiter = ',', conflicts_with = "g_range")]
    pub g: Option<Vec<f64>>,
    #[arg(long)]
    pub g_range: Option<String>,
    /// Independent draws of the users' offsets per point.
    #[arg(long, default_value_t = 1000)]
    pub runs: u64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
}

#[derive(Debug, Clone, Args)]
pub struct CompareArgs {
    #[arg(long, default_value = "0.86x^3+0.14x^8")]
    pub dist: String,
    /// Packet sizes in bytes; 200 gives 315 slots per frame, 400 gives 172.
    #[arg(long, value_delimiter = ',', default_value = "400,200")]
    pub packet_size: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_value = "0")]
    pub eps: Vec<f64>,
    #[arg(long, value_delimiter = ',', conflicts_with = "g_range")]
    pub g: Option<Vec<f64>>,
    #[arg(long)]
    pub g_range: Option<String>,
    /// CSMA/CA attempts per packet.
    #[arg(long, default_value_t = 2)]
    pub kappa: usize,
    #[command(flatten)]
    pub frames: FrameArgs,
    #[arg(long, default_value_t = 1000)]
    pub runs: u64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Also emit the error-floor approximation.
    #[arg(long)]
    pub ef: bool,
}
