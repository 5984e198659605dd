mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use weakseg_core::dataset::DatasetName;
use weakseg_core::threshold::OtsuMode;
use weakseg_core::{Error, Result};

/// Weakly-supervised crack segmentation.
#[derive(Debug, Parser)]
#[command(name = "weakseg", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct ConfigArgs {
    /// JSON pipeline config; missing fields keep their defaults.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Skip both bilateral filters.
    #[arg(long)]
    pub no_bilateral: bool,
    /// Skip the final closing.
    #[arg(long)]
    pub no_closing: bool,
    #[arg(long, value_parser = parse_otsu_mode)]
    pub otsu_mode: Option<OtsuMode>,
    #[arg(long)]
    pub thr_stride: Option<usize>,
    /// Override any config field, e.g. `--set retention_cut=0.4`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
}

fn parse_otsu_mode(s: &str) -> std::result::Result<OtsuMode, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

#[derive(Debug, Clone, Args)]
pub struct BackendArgs {
    /// Precomputed patch score grid (.psg).
    #[arg(long)]
    pub scores: Option<PathBuf>,
    /// ONNX patch classifier, used with --manifest.
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// JSON model manifest.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    #[arg(long, default_value_t = 32)]
    pub batch_size: usize,
}

#[derive(Debug, Clone, Args)]
pub struct DatasetArgs {
    #[arg(long)]
    pub image_dir: PathBuf,
    #[arg(long)]
    pub gt_dir: PathBuf,
    /// Appended to an image name to find its mask.
    #[arg(long, default_value = "")]
    pub mask_suffix: String,
    /// Restrict to the names listed in this file.
    #[arg(long)]
    pub names: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ThresholdMethod {
    Patch,
    Global,
    Niblack,
    Sauvola,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Segment one image from classifier scores and an activation map.
    Segment {
        #[arg(long)]
        image: PathBuf,
        #[command(flatten)]
        backend: BackendArgs,
        /// Class-activation map (.smap).
        #[arg(long)]
        cam: Option<PathBuf>,
        #[arg(long)]
        out_dir: PathBuf,
        /// Output file stem; defaults to the image stem.
        #[arg(long)]
        name: Option<String>,
        /// Also write the localisation and threshold maps.
        #[arg(long)]
        debug: bool,
        /// Also write a red overlay on the image.
        #[arg(long)]
        overlay: bool,
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Segment a dataset using localisation derived from its ground truth.
    Goldstd {
        #[command(flatten)]
        data: DatasetArgs,
        #[arg(long)]
        out_dir: PathBuf,
        #[arg(long)]
        debug: bool,
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Macro-F1 of predicted maps (.smap or .png) against masks.
    Eval {
        #[arg(long)]
        pred_dir: PathBuf,
        #[arg(long)]
        gt_dir: PathBuf,
        #[arg(long, default_value = "")]
        mask_suffix: String,
        #[arg(long)]
        names: Option<PathBuf>,
        /// Report path; printed to stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Patch classification F1 from a CSV with `score` and `label` columns.
    EvalCls {
        #[arg(long)]
        predictions: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Export labelled classifier training patches.
    Tile {
        #[command(flatten)]
        data: DatasetArgs,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 128)]
        patch: usize,
        #[arg(long, default_value_t = 64)]
        stride: usize,
    },
    /// Write the thresholded map of one image.
    Threshold {
        #[arg(long)]
        image: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
        #[arg(long, value_enum, default_value = "patch")]
        method: ThresholdMethod,
        /// Window for Niblack and Sauvola (odd).
        #[arg(long, default_value_t = 25)]
        window: usize,
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Write the localisation map of one image.
    Localize {
        #[arg(long)]
        image: PathBuf,
        #[command(flatten)]
        backend: BackendArgs,
        #[arg(long)]
        cam: Option<PathBuf>,
        /// Derive the localisation from this mask instead of a classifier.
        #[arg(long)]
        gt: Option<PathBuf>,
        #[arg(long)]
        out_dir: PathBuf,
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Write train/val/test name lists for a dataset.
    Splits {
        #[arg(long)]
        dataset: DatasetName,
        #[command(flatten)]
        data: DatasetArgs,
        #[arg(long)]
        train_list: Option<PathBuf>,
        #[arg(long)]
        test_list: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

fn init_threads() -> Result<()> {
    let Ok(v) = std::env::var("WEAKSEG_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n >= 1)
        .ok_or_else(|| Error::Usage(format!("WEAKSEG_THREADS must be a positive integer, got {v:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Error::Backend(format!("thread pool: {e}")))
}

fn run(cli: Cli) -> Result<()> {
    init_threads()?;
    match cli.command {
        Command::Segment {
            image,
            backend,
            cam,
            out_dir,
            name,
            debug,
            overlay,
            config,
        } => commands::segment(&image, &backend, cam.as_deref(), &out_dir, name, debug, overlay, &config),
        Command::Goldstd {
            data,
            out_dir,
            debug,
            config,
        } => commands::goldstd(&data, &out_dir, debug, &config),
        Command::Eval {
            pred_dir,
            gt_dir,
            mask_suffix,
            names,
            out,
        } => commands::eval(&pred_dir, &gt_dir, &mask_suffix, names.as_deref(), out.as_deref()),
        Command::EvalCls { predictions, out } => commands::eval_cls(&predictions, out.as_deref()),
        Command::Tile {
            data,
            out,
            patch,
            stride,
        } => commands::tile(&data, &out, patch, stride),
        Command::Threshold {
            image,
            out_dir,
            method,
            window,
            config,
        } => commands::threshold(&image, &out_dir, method, window, &config),
        Command::Localize {
            image,
            backend,
            cam,
            gt,
            out_dir,
            config,
        } => commands::localize(&image, &backend, cam.as_deref(), gt.as_deref(), &out_dir, &config),
        Command::Splits {
            dataset,
            data,
            train_list,
            test_list,
            seed,
            out,
        } => commands::splits(dataset, &data, train_list, test_list, seed, &out),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match std::panic::catch_unwind(|| run(cli)) {
        Ok(Ok(())) => ExitCode::SUCCESS,
        Ok(Err(e)) => {
            eprintln!("weakseg: error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
        Err(_) => ExitCode::from(4),
    }
}
