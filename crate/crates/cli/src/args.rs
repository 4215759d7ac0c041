use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "nucseg", about = "Nucleus segmentation pipeline toolkit", arg_required_else_help = true)]
pub struct Cli {
    /// Configuration file (TOML, or JSON with a .json extension).
    #[arg(long, global = true, env = "NUCSEG_CONFIG")]
    pub config: Option<PathBuf>,

    /// Worker threads (0 = all cores). Overrides the config file.
    #[arg(long, short = 'j', global = true)]
    pub threads: Option<usize>,

    /// More log output; repeat for more.
    #[arg(long, short, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Cut an image into fixed-size tiles.
    Tile(TileArgs),
    /// Rasterize polygon annotation files into masks.
    Rasterize(RasterizeArgs),
    /// Generate a synthetic dataset.
    Synth(SynthArgs),
    /// Split a dataset into train/val/test.
    Split(SplitArgs),
    /// Write the progressive-resizing one-cycle schedule file.
    Schedule(ScheduleArgs),
    /// Learning-rate range test.
    Lrfind(LrfindArgs),
    /// Train the built-in baseline segmenter.
    TrainBaseline(TrainArgs),
    /// Write probability maps with trained baseline weights.
    Predict(PredictArgs),
    /// Turn probability maps into clean binary masks.
    Postprocess(PostprocessArgs),
    /// Score predictions against the test split.
    Evaluate(EvaluateArgs),
    /// Render edge or intersection/union overlays.
    Overlay(OverlayArgs),
    /// synth, split, schedule, train, predict, postprocess and evaluate in one go.
    Pipeline(PipelineArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum EdgeArg {
    Discard,
    Pad,
}

#[derive(Debug, Args)]
pub struct TileArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub width: Option<usize>,
    #[arg(long)]
    pub height: Option<usize>,
    #[arg(long, value_enum)]
    pub edge: Option<EdgeArg>,
}

#[derive(Debug, Args)]
pub struct RasterizeArgs {
    /// Annotation documents.
    #[arg(required = true)]
    pub inputs: Vec<PathBuf>,
    /// Output directory; masks are named after the input stems.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub count: usize,
    /// Dataset directory (defaults to the configured one).
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub width: Option<usize>,
    #[arg(long)]
    pub height: Option<usize>,
}

#[derive(Debug, Args)]
pub struct SplitArgs {
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// train,val,test fractions.
    #[arg(long, value_parser = parse_ratios)]
    pub ratios: Option<[f64; 3]>,
}

fn parse_ratios(s: &str) -> Result<[f64; 3], String> {
    let v = s
        .split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|e| format!("{t:?}: {e}")))
        .collect::<Result<Vec<_>, _>>()?;
    v.try_into().map_err(|v: Vec<f64>| format!("expected 3 comma-separated fractions, got {}", v.len()))
}

#[derive(Debug, Args, Default)]
pub struct PlanArgs {
    #[arg(long)]
    pub stages: Option<usize>,
    #[arg(long)]
    pub frozen_epochs: Option<usize>,
    #[arg(long)]
    pub unfrozen_epochs: Option<usize>,
    /// Per-stage batch sizes, first stage first.
    #[arg(long, value_delimiter = ',')]
    pub batches: Option<Vec<usize>>,
    /// Per-stage peak learning rates, first stage first.
    #[arg(long, value_delimiter = ',')]
    pub lr_max: Option<Vec<f64>>,
    #[arg(long)]
    pub weight_decay: Option<f64>,
}

#[derive(Debug, Args)]
pub struct ScheduleArgs {
    /// Full-resolution image width.
    #[arg(long)]
    pub width: usize,
    #[arg(long)]
    pub height: usize,
    /// Training images per epoch. Read from the dataset split if omitted.
    #[arg(long)]
    pub train_size: Option<usize>,
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    #[command(flatten)]
    pub plan: PlanArgs,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct LrfindArgs {
    /// Analyze a recorded sweep: CSV with `lr,loss` rows.
    #[arg(long, conflicts_with = "dataset")]
    pub losses: Option<PathBuf>,
    /// Run the baseline range test on this dataset's training split.
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    /// Image downscale factor for the dataset range test.
    #[arg(long, default_value_t = 1)]
    pub downscale: usize,
    #[arg(long, default_value_t = 16)]
    pub batch: usize,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Also write the curve and suggestion as JSON.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    /// Follow this schedule file step by step instead of planning one.
    #[arg(long, visible_alias = "plan")]
    pub schedule: Option<PathBuf>,
    /// Where to write the weights.
    #[arg(long)]
    pub out: PathBuf,
    /// Where to write the executed schedule.
    #[arg(long)]
    pub schedule_out: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Skip the per-stage range test and use the planned learning rates.
    #[arg(long)]
    pub no_lr_find: bool,
    /// Apply random training-time augmentation.
    #[arg(long)]
    pub augment: bool,
    #[command(flatten)]
    pub plan: PlanArgs,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum SplitPart {
    Train,
    Val,
    Test,
    All,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    #[arg(long)]
    pub weights: PathBuf,
    /// Predict a single image; `--out` is then the probability map file.
    #[arg(long, conflicts_with = "dataset")]
    pub image: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "test")]
    pub split: SplitPart,
}

#[derive(Debug, Args, Default)]
pub struct PostArgs {
    #[arg(long)]
    pub threshold: Option<u8>,
    #[arg(long)]
    pub blur_kernel: Option<usize>,
    #[arg(long)]
    pub blur_sigma: Option<f64>,
    /// Erosion element size (odd).
    #[arg(long)]
    pub erode_size: Option<usize>,
    /// Opening element size (odd).
    #[arg(long)]
    pub open_size: Option<usize>,
}

#[derive(Debug, Args)]
pub struct PostprocessArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub post: PostArgs,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    #[arg(long)]
    pub pred: Option<PathBuf>,
    /// CSV report path; a JSON twin is written next to it.
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Predictions are binary masks already; skip post-processing.
    #[arg(long)]
    pub masks: bool,
    #[command(flatten)]
    pub post: PostArgs,
}

#[derive(Debug, Args)]
pub struct OverlayArgs {
    #[arg(long)]
    pub image: PathBuf,
    /// Predicted (or only) mask.
    #[arg(long)]
    pub mask: PathBuf,
    /// Ground truth; switches to the intersection/union rendering.
    #[arg(long)]
    pub target: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct PipelineArgs {
    /// Generate this many synthetic samples first.
    #[arg(long)]
    pub synthetic: Option<usize>,
    /// Seed for synthesis, split and training.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    #[arg(long)]
    pub pred: Option<PathBuf>,
    #[arg(long)]
    pub reports: Option<PathBuf>,
    #[arg(long)]
    pub no_lr_find: bool,
    #[command(flatten)]
    pub plan: PlanArgs,
    #[command(flatten)]
    pub post: PostArgs,
}
