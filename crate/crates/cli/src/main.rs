//! `forensic-eval`: evaluation, perturbation, cleansing and synthesis of
//! image-manipulation corpora.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 data error
//! (missing or malformed inputs), 3 internal error.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::config::Dims;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Data(String),
    Internal(String),
}

impl CliError {
    pub fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::Internal(_) => 3,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Data(m) | CliError::Internal(m) => f.write_str(m),
        }
    }
}

impl From<forensic_eval::Error> for CliError {
    fn from(e: forensic_eval::Error) -> Self {
        if e.is_data_error() {
            CliError::Data(e.to_string())
        } else {
            CliError::Internal(e.to_string())
        }
    }
}

#[derive(Parser, Debug)]
#[command(
    name = "forensic-eval",
    version,
    about = "Evaluation and dataset hygiene for image manipulation localization"
)]
pub struct Cli {
    /// Worker threads for data-parallel steps [default: available cores]
    #[arg(long, global = true, env = "FORENSIC_EVAL_WORKERS")]
    pub workers: Option<usize>,

    /// JSON file with option defaults, keyed by flag name
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Build or validate a dataset manifest
    #[command(subcommand)]
    Manifest(ManifestCommand),
    /// Score predictions against a manifest
    #[command(subcommand)]
    Eval(EvalCommand),
    /// Write blurred, noisy or recompressed copies of a corpus
    Perturb(PerturbArgs),
    /// Group near-duplicate manipulated images and keep one per group
    Cleanse(CleanseArgs),
    /// Generate a tampered corpus with exact masks and reference predictions
    Synth(SynthArgs),
    /// Merge per-level pixel reports into a robustness curve
    Report(ReportArgs),
}

#[derive(Subcommand, Debug)]
pub enum ManifestCommand {
    /// Scan `<dir>/images` and `<dir>/masks` into a manifest
    Build(ManifestBuildArgs),
    /// Check a manifest and the files it references
    Validate(ManifestValidateArgs),
}

#[derive(Args, Debug)]
pub struct ManifestBuildArgs {
    /// Dataset directory holding `images/` and optionally `masks/`
    #[arg(long)]
    pub dir: Option<PathBuf>,
    /// Dataset name [default: directory name]
    #[arg(long)]
    pub dataset: Option<String>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct ManifestValidateArgs {
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
pub enum EvalCommand {
    /// Localization metrics from predicted masks or score maps
    Pixel(EvalPixelArgs),
    /// Detection metrics from an `id,score` CSV
    Image(EvalImageArgs),
}

#[derive(Args, Debug)]
pub struct EvalPixelArgs {
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    /// Directory of `<id>.png` / `<id>.f32` / `<id>.jpg` predictions
    #[arg(long)]
    pub preds: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    /// Prediction threshold: `score >= t` counts as manipulated [default: 0.5]
    #[arg(long)]
    pub threshold: Option<f64>,
    /// Ground-truth mask binarization threshold [default: 0.5]
    #[arg(long)]
    pub mask_threshold: Option<f64>,
    /// `mean` (per-image average) or `global` (pooled counts) [default: mean]
    #[arg(long)]
    pub aggregate: Option<String>,
    /// `strict`, `pad-gt` or `resize-pred` [default: strict]
    #[arg(long)]
    pub size_policy: Option<String>,
    #[arg(long)]
    pub invert_gt: bool,
    #[arg(long)]
    pub invert_pred: bool,
    /// Extra F1 variants to print, e.g. `permute,invert,macro`
    #[arg(long, value_delimiter = ',')]
    pub variants: Option<Vec<String>>,
}

#[derive(Args, Debug)]
pub struct EvalImageArgs {
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    /// CSV with `id` and `score` columns
    #[arg(long)]
    pub scores: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    /// Detection threshold [default: 0.5]
    #[arg(long)]
    pub threshold: Option<f64>,
}

#[derive(Args, Debug)]
pub struct PerturbArgs {
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    /// `blur`, `noise` or `jpeg`
    #[arg(long)]
    pub kind: Option<String>,
    /// Comma-separated levels [default: the kind's standard ladder]
    #[arg(long, value_delimiter = ',')]
    pub levels: Option<Vec<f64>>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct CleanseArgs {
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    /// SSIM at or above which two images are linked [default: 0.9]
    #[arg(long)]
    pub threshold: Option<f64>,
    /// Common size before comparison [default: 256x256]
    #[arg(long)]
    pub resize: Option<Dims>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct SynthArgs {
    /// Number of samples (unique samples with `--duplicates`) [default: 20]
    #[arg(long)]
    pub count: Option<usize>,
    /// Image size [default: 256x256]
    #[arg(long)]
    pub size: Option<Dims>,
    /// `copy-move` or `inpaint` [default: copy-move]
    #[arg(long)]
    pub kind: Option<String>,
    /// Tampered area as a fraction of the short side squared, `lo,hi` [default: 0.01,0.15]
    #[arg(long, value_delimiter = ',')]
    pub area_range: Option<Vec<f64>>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Also emit this many near-identical copies of one image, for cleansing tests
    #[arg(long)]
    pub duplicates: Option<usize>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct ReportArgs {
    /// Pixel report JSON files, one per level, in level order
    #[arg(long, num_args = 1.., value_delimiter = ',')]
    pub reports: Option<Vec<PathBuf>>,
    /// Perturbation kind the reports belong to
    #[arg(long)]
    pub kind: Option<String>,
    /// Level of each report, same order
    #[arg(long, value_delimiter = ',')]
    pub levels: Option<Vec<f64>>,
    /// Metrics to include [default: f1]
    #[arg(long, value_delimiter = ',')]
    pub metrics: Option<Vec<String>>,
    #[arg(long)]
    pub out: PathBuf,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
