//! `camdist`: batch pipeline from depth/detection artifacts to distances,
//! evaluation tables, and density estimates.

mod cmd;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use camdist_core::ctds::DetectionFunctionSpec;
use camdist_core::distance::Strategy;
use clap::{Args, Parser, Subcommand};

use config::{DepthModeKind, RunConfig};
use output::Provenance;

#[derive(Parser)]
#[command(name = "camdist", version, about = "Camera-trap distance sampling pipeline")]
struct Cli {
    /// TOML run configuration; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads (default: all cores). Outputs do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct OutDir {
    /// Output directory (created if missing).
    #[arg(long, short)]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Fit per-camera calibration curves from the manifest's reference table.
    Calibrate {
        #[arg(long)]
        manifest: PathBuf,
        #[command(flatten)]
        out: OutDir,
    },
    /// Estimate one distance per retained detection.
    Distances {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        strategy: Option<Strategy>,
        #[arg(long, value_parser = parse_depth_mode)]
        depth_mode: Option<DepthModeKind>,
        #[arg(long)]
        min_conf: Option<f64>,
        #[arg(long)]
        trim_frac: Option<f64>,
        #[command(flatten)]
        out: OutDir,
    },
    /// Compare model distances against manual annotations.
    Eval {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        manual: PathBuf,
        #[arg(long, default_value = "model")]
        label: String,
        #[arg(long)]
        bin_step: Option<f64>,
        #[arg(long)]
        raw_pairs: bool,
        #[command(flatten)]
        out: OutDir,
    },
    /// Fit detection functions and estimate density and abundance.
    Ctds {
        #[arg(long)]
        observations: PathBuf,
        #[arg(long)]
        cameras: PathBuf,
        /// Candidate detection functions, e.g. `hn`, `hr+cos(2)`.
        #[arg(long = "candidate")]
        candidates: Vec<DetectionFunctionSpec>,
        #[arg(long)]
        bootstrap: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        area_km2: Option<f64>,
        #[arg(long)]
        w_m: Option<f64>,
        #[command(flatten)]
        out: OutDir,
    },
    /// Draw a synthetic survey from a truth file.
    Simulate {
        #[arg(long)]
        truth: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[command(flatten)]
        out: OutDir,
    },
    /// Print the effective configuration.
    ShowConfig,
}

fn parse_depth_mode(s: &str) -> Result<DepthModeKind, String> {
    match s {
        "direct" => Ok(DepthModeKind::Direct),
        "calibrated" => Ok(DepthModeKind::Calibrated),
        other => Err(format!("unknown depth mode {other:?} (direct, calibrated)")),
    }
}

fn run(cli: Cli) -> Result<()> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring worker threads")?;
    }
    let mut cfg = RunConfig::load(cli.config.as_deref())?;
    match &cli.command {
        Command::Distances { strategy, depth_mode, min_conf, trim_frac, .. } => {
            if let Some(s) = strategy {
                cfg.distances.strategy = *s;
            }
            if let Some(m) = depth_mode {
                cfg.distances.depth_mode = *m;
            }
            if let Some(c) = min_conf {
                cfg.distances.min_conf = *c;
            }
            if let Some(t) = trim_frac {
                cfg.distances.trim_frac = *t;
            }
        }
        Command::Eval { bin_step, raw_pairs, .. } => {
            if let Some(s) = bin_step {
                cfg.eval.bin_step_m = *s;
            }
            cfg.eval.raw_pairs |= *raw_pairs;
        }
        Command::Ctds { candidates, bootstrap, seed, area_km2, w_m, .. } => {
            if !candidates.is_empty() {
                cfg.ctds.candidates = candidates.clone();
            }
            if let Some(b) = bootstrap {
                cfg.ctds.bootstrap = *b;
            }
            if let Some(s) = seed {
                cfg.seed = *s;
            }
            if let Some(a) = area_km2 {
                cfg.survey.area_km2 = *a;
            }
            if let Some(w) = w_m {
                cfg.survey.w_m = *w;
                cfg.survey.cutpoints_m = None;
            }
        }
        _ => {}
    }
    cfg.validate()?;
    let prov = Provenance { config_hash: cfg.hash(), seed: cfg.seed };

    match cli.command {
        Command::Calibrate { manifest, out } => cmd::calibrate::run(&manifest, &out.out, &cfg, &prov),
        Command::Distances { manifest, out, .. } => cmd::distances::run(&manifest, &out.out, &cfg, &prov),
        Command::Eval { model, manual, label, out, .. } => cmd::eval::run(&model, &manual, &label, &out.out, &cfg, &prov),
        Command::Ctds { observations, cameras, out, .. } => {
            cmd::ctds::run(&observations, &cameras, &out.out, &cfg, &prov)
        }
        Command::Simulate { truth, seed, out } => cmd::simulate::run(&truth, seed, &out.out),
        Command::ShowConfig => {
            print!("{}", cfg.to_toml());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
