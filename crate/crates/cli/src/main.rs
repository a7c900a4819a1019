//! `rdsc`: resampling, reconstruction Dice studies and segmentation tooling
//! for MetaImage volumes.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rdsc_core::{Error, ErrorClass};

use crate::config::RunConfig;

#[derive(Parser, Debug)]
#[command(name = "rdsc", version, about = "Volume resampling and resolution-study toolkit")]
struct Cli {
    /// TOML run configuration supplying defaults for any flag
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Seed for every random choice; a random seed is drawn and printed when absent
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker threads [default: all cores]
    #[arg(long, global = true)]
    workers: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Resample a volume onto a new voxel spacing
    Resample(ResampleArgs),
    /// Reconstruction Dice of every case under each resolution strategy
    RdscStudy(StudyArgs),
    /// Overlap metrics between two masks, printed as JSON
    Metrics(MetricsArgs),
    /// 3D contrast-limited adaptive histogram equalization
    Mclahe(MclaheArgs),
    /// Write one augmented training patch pair
    Augment(AugmentArgs),
    /// Sliding-window prediction with a built-in predictor
    Predict(PredictArgs),
    /// Generate a synthetic anisotropic blob dataset
    Phantom(PhantomArgs),
}

#[derive(Args, Debug)]
pub struct ResampleArgs {
    /// Input volume (.mhd)
    #[arg(long = "in", value_name = "X.mhd")]
    pub input: Option<PathBuf>,
    /// Output volume (.mhd)
    #[arg(long = "out", value_name = "Y.mhd")]
    pub output: Option<PathBuf>,
    /// Target spacing `x,y,z`, or half, twice, median, common, proposed [default: 0.3125,0.3125,1.5]
    #[arg(long)]
    pub spacing: Option<String>,
    /// nearest, trilinear or threshold[:t] [default: trilinear]
    #[arg(long)]
    pub mode: Option<String>,
}

#[derive(Args, Debug)]
pub struct StudyArgs {
    /// Directory of segmentation volumes
    #[arg(long, value_name = "DIR")]
    pub data: Option<PathBuf>,
    /// JSON report path
    #[arg(long = "out", value_name = "report.json")]
    pub json: Option<PathBuf>,
    /// CSV table path
    #[arg(long, value_name = "report.csv")]
    pub csv: Option<PathBuf>,
    /// SVG box plot path
    #[arg(long, value_name = "fig.svg")]
    pub svg: Option<PathBuf>,
    /// Strategy to evaluate; repeat for several [default: half, twice, median, common, proposed]
    #[arg(long = "strategy", value_name = "STRATEGY")]
    pub strategies: Vec<String>,
    /// Mask resampling mode: nearest or threshold[:t] [default: threshold:0.5]
    #[arg(long)]
    pub mode: Option<String>,
}

#[derive(Args, Debug)]
pub struct MetricsArgs {
    /// Reference mask (.mhd)
    #[arg(long, value_name = "gt.mhd")]
    pub a: Option<PathBuf>,
    /// Compared mask (.mhd)
    #[arg(long, value_name = "pred.mhd")]
    pub b: Option<PathBuf>,
    /// Tversky weights `alpha,beta` for false negatives and false positives [default: 0.5,0.5]
    #[arg(long, value_name = "A,B")]
    pub tversky: Option<String>,
}

#[derive(Args, Debug)]
pub struct MclaheArgs {
    /// Input volume (.mhd)
    #[arg(long = "in", value_name = "X.mhd")]
    pub input: Option<PathBuf>,
    /// Output volume (.mhd), float in [0, 1]
    #[arg(long = "out", value_name = "Y.mhd")]
    pub output: Option<PathBuf>,
    /// Tile grid `tx,ty,tz` [default: 8,8,2]
    #[arg(long)]
    pub tiles: Option<String>,
    /// Histogram bins [default: 256]
    #[arg(long)]
    pub bins: Option<usize>,
    /// Clip limit as a multiple of the uniform bin height [default: 4]
    #[arg(long)]
    pub clip: Option<f64>,
}

#[derive(Args, Debug)]
pub struct AugmentArgs {
    /// Image volume (.mhd)
    #[arg(long, value_name = "X.mhd")]
    pub image: Option<PathBuf>,
    /// Mask volume (.mhd)
    #[arg(long, value_name = "M.mhd")]
    pub mask: Option<PathBuf>,
    /// Output directory for image_patch.mhd and mask_patch.mhd
    #[arg(long, value_name = "DIR")]
    pub out_dir: Option<PathBuf>,
    /// Patch dims `x,y,z` [default: 192,192,32]
    #[arg(long)]
    pub patch: Option<String>,
    /// Chance of applying each transform [default: 0.5]
    #[arg(long)]
    pub probability: Option<f64>,
}

#[derive(Args, Debug)]
pub struct PredictArgs {
    /// Input volume (.mhd)
    #[arg(long = "in", value_name = "X.mhd")]
    pub input: Option<PathBuf>,
    /// Output probability map or mask (.mhd); window metadata goes to the same path with .json
    #[arg(long = "out", value_name = "P.mhd")]
    pub output: Option<PathBuf>,
    /// const:<p>, echo or threshold:<t> [default: echo]
    #[arg(long)]
    pub predictor: Option<String>,
    /// Window dims `x,y,z` [default: 192,192,32]
    #[arg(long)]
    pub window: Option<String>,
    /// Window stride `x,y,z` [default: 48,48,8]
    #[arg(long)]
    pub stride: Option<String>,
    /// Write a mask of voxels with mean probability >= this value instead of the map
    #[arg(long, value_name = "T")]
    pub binarize: Option<f64>,
}

#[derive(Args, Debug)]
pub struct PhantomArgs {
    /// Output directory
    #[arg(long, value_name = "DIR")]
    pub out_dir: Option<PathBuf>,
    /// Number of cases [default: 20]
    #[arg(long)]
    pub cases: Option<usize>,
    /// Volume dims `x,y,z` [default: 256,256,24]
    #[arg(long)]
    pub dims: Option<String>,
    /// Give every case spacing 0.625,0.625,3.6 instead of the varied per-case spacings
    #[arg(long)]
    pub uniform_spacing: bool,
    /// Also write an intensity image per case
    #[arg(long)]
    pub images: bool,
}

/// Global settings after merging flags with the config file.
pub struct Context {
    pub config: RunConfig,
    pub seed: Option<u64>,
    pub workers: Option<usize>,
}

impl Context {
    /// The run seed; draws and announces a fresh one when none was given.
    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or_else(|| {
            let s = rand::random();
            println!("seed {s}");
            s
        })
    }
}

fn exit_code(e: &Error) -> u8 {
    match e.class() {
        ErrorClass::Usage => 2,
        ErrorClass::Io => 3,
        ErrorClass::Data => 4,
        ErrorClass::Contract => 5,
    }
}

fn run(cli: Cli) -> Result<(), Error> {
    let config = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    let ctx = Context {
        seed: cli.seed.or(config.seed),
        workers: cli.workers.or(config.workers),
        config,
    };
    let workers = ctx.workers;
    rdsc_core::with_workers(workers, || match &cli.command {
        Command::Resample(a) => commands::resample(&ctx, a),
        Command::RdscStudy(a) => commands::study(&ctx, a),
        Command::Metrics(a) => commands::metrics(&ctx, a),
        Command::Mclahe(a) => commands::mclahe(&ctx, a),
        Command::Augment(a) => commands::augment(&ctx, a),
        Command::Predict(a) => commands::predict(&ctx, a),
        Command::Phantom(a) => commands::phantom(&ctx, a),
    })?
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
