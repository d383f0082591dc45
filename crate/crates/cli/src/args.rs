use std::path::PathBuf;

use clap::{ArgAction, Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "holofit",
    version,
    about = "Fit holistic skeleton motion to 2D keypoints and score generated motion"
)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// JSON run configuration; command-line flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Seed for every random choice a command makes.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Print the report as JSON instead of key=value lines.
    #[arg(long, global = true)]
    pub json: bool,
    /// Repeat for more log output.
    #[arg(short, long, global = true, action = ArgAction::Count)]
    pub verbose: u8,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit a motion sequence to one or more keypoint files.
    Fit(FitArgs),
    /// Merge keypoint files by per-slot confidence and fill gaps.
    Fuse(FuseArgs),
    /// Check a motion against biomechanical limits.
    Validate(ValidateArgs),
    /// Evaluation metrics over feature or joint-sequence files.
    #[command(subcommand)]
    Metrics(MetricsCommand),
    /// Generate a synthetic clip with its keypoints and ground truth.
    Synth(SynthArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OptimizerArg {
    Adam,
    Lbfgs,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    /// Keypoint files (one JSON object per line); several are fused.
    #[arg(long = "keypoints", num_args = 1..)]
    pub keypoints: Vec<PathBuf>,
    /// Camera intrinsics file.
    #[arg(long)]
    pub camera: Option<PathBuf>,
    /// Skeleton model file (default: built-in skeleton).
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Biomechanical limits file (default: built-in limits).
    #[arg(long)]
    pub limits: Option<PathBuf>,
    /// Slot-to-joint layout file (default: holistic layout).
    #[arg(long)]
    pub layout: Option<PathBuf>,
    /// Initialization motion file.
    #[arg(long)]
    pub init: Option<PathBuf>,
    /// Output motion file.
    #[arg(short, long)]
    pub out: Option<PathBuf>,
    /// Per-stage loss traces as JSON.
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Total optimizer steps, split across stages in proportion.
    #[arg(long)]
    pub steps: Option<usize>,
    #[arg(long, value_enum)]
    pub optimizer: Option<OptimizerArg>,
    /// Fusion confidence threshold.
    #[arg(long)]
    pub threshold: Option<f64>,
    /// Frame rate of the output (default: the init's, else 30).
    #[arg(long)]
    pub fps: Option<f64>,
}

#[derive(Debug, Args)]
pub struct FuseArgs {
    #[arg(long = "input", num_args = 1.., required = true)]
    pub inputs: Vec<PathBuf>,
    #[arg(short, long, required = true)]
    pub out: PathBuf,
    #[arg(long)]
    pub layout: Option<PathBuf>,
    #[arg(long)]
    pub threshold: Option<f64>,
    /// Keep gaps instead of interpolating them.
    #[arg(long)]
    pub no_fill: bool,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    #[arg(long, required = true)]
    pub motion: PathBuf,
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long)]
    pub limits: Option<PathBuf>,
    /// Largest violation rate that still exits 0.
    #[arg(long)]
    pub max_violations: Option<f64>,
    /// Print every check, not only failures.
    #[arg(long)]
    pub all: bool,
    /// Full check table as JSON.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum MetricsCommand {
    /// Frechet distance between Gaussian fits of two feature sets
    /// (squared mean difference, plus-sign trace term).
    Fid {
        #[arg(long)]
        real: PathBuf,
        #[arg(long)]
        gen: PathBuf,
    },
    /// Mean distance between random pairs of motion features.
    Diversity {
        #[arg(long)]
        features: PathBuf,
        #[arg(long, default_value_t = holofit::metrics::DEFAULT_DIVERSITY_PAIRS)]
        nd: usize,
    },
    /// Items are grouped by their `group` field.
    Multimodality {
        #[arg(long)]
        features: PathBuf,
        #[arg(long, default_value_t = holofit::metrics::DEFAULT_MULTIMODALITY_PAIRS)]
        nm: usize,
    },
    /// Mean distance between each motion feature and its prompt feature.
    MmDist {
        #[arg(long)]
        features: PathBuf,
    },
    /// Top-k retrieval of each item's own prompt among distractors.
    RPrecision {
        #[arg(long)]
        features: PathBuf,
        #[arg(long, default_value_t = holofit::metrics::DEFAULT_R_POOL)]
        pool: usize,
        #[arg(long, value_delimiter = ',', default_values_t = holofit::metrics::DEFAULT_TOP_K)]
        k: Vec<usize>,
    },
    /// Top-k retrieval of each generated item's positive dataset motion.
    MrPrecision {
        #[arg(long)]
        gen: PathBuf,
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long, default_value_t = holofit::metrics::MR_POOL)]
        pool: usize,
        #[arg(long, value_delimiter = ',', default_values_t = holofit::metrics::DEFAULT_TOP_K)]
        k: Vec<usize>,
    },
    /// Mean joint error after dynamic time warping of two joint sequences.
    DtwMje {
        #[arg(long)]
        reference: PathBuf,
        #[arg(long)]
        hypothesis: PathBuf,
        /// Drop hips, knees, ankles and feet by joint name.
        #[arg(long)]
        upper_body: bool,
        /// Explicit joint indices to keep.
        #[arg(long, value_delimiter = ',', conflicts_with = "upper_body")]
        subset: Option<Vec<usize>>,
    },
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(short, long, required = true)]
    pub out_dir: PathBuf,
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long, default_value_t = 30)]
    pub frames: usize,
    #[arg(long, default_value_t = 30.0)]
    pub fps: f64,
    /// Pixel noise of the noisy keypoints.
    #[arg(long, default_value_t = 2.0)]
    pub noise: f64,
    /// Per-axis rotation error of the coarse initialization, radians.
    #[arg(long, default_value_t = 0.1)]
    pub init_noise: f64,
    #[arg(long, default_value_t = 3.0)]
    pub depth: f64,
}
