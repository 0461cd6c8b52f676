use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use dynfilter::error::Result;
use dynfilter::harness::{
    run_experiment, selftest, write_synthetic_clip, ExperimentConfig, ExperimentKind,
};

/// Causal dynamic filtering benchmarks for time-varying sparse signals.
#[derive(Parser)]
#[command(name = "dynfilter", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run all algorithms on the synthetic permutation-dynamics benchmark.
    Synthetic(Common),
    /// Steady-state rMSE as a function of measurements per step.
    SweepM(Common),
    /// Steady-state rMSE as a function of misroutes per step.
    SweepP(Common),
    /// Compressive video recovery from a planar YUV 4:2:0 file.
    Video(VideoArgs),
    /// Quick correctness checks of transforms, solver and filters.
    Selftest {
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Write a synthetic planar YUV 4:2:0 clip usable by `video`.
    MakeClip {
        path: PathBuf,
        #[arg(long, default_value_t = 352)]
        width: usize,
        #[arg(long, default_value_t = 288)]
        height: usize,
        #[arg(long, default_value_t = 30)]
        frames: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Args)]
struct Common {
    /// key=value configuration file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Comma list from bpdn, rwl1, bpdn-df, rwl1-df, kalman.
    #[arg(long)]
    algos: Option<String>,
    /// Worker threads (0 = all cores).
    #[arg(long)]
    threads: Option<usize>,
    /// Extra key=value settings, applied after the config file.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Args)]
struct VideoArgs {
    #[command(flatten)]
    common: Common,
    /// Planar YUV 4:2:0 input (overrides video.path).
    #[arg(long)]
    yuv: Option<PathBuf>,
    /// Full-scale run: 128×128 crop, 200 frames.
    #[arg(long)]
    full: bool,
}

fn build_config(kind: ExperimentKind, c: &Common) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig {
        kind,
        ..ExperimentConfig::default()
    };
    if kind == ExperimentKind::Video {
        cfg.trials = 1;
    }
    if let Some(path) = &c.config {
        cfg.apply_file(path)?;
    }
    for kv in &c.set {
        cfg.apply_text(kv)?;
    }
    cfg.kind = kind;
    if let Some(v) = c.seed {
        cfg.seed = v;
    }
    if let Some(v) = c.trials {
        cfg.trials = v;
    }
    if let Some(v) = &c.out {
        cfg.out_dir = v.clone();
    }
    if let Some(v) = &c.algos {
        cfg.set("algos", v)?;
    }
    if let Some(v) = c.threads {
        cfg.threads = v;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: Cli) -> Result<bool> {
    let (kind, common, yuv, full) = match cli.command {
        Command::Synthetic(c) => (ExperimentKind::Synthetic, c, None, false),
        Command::SweepM(c) => (ExperimentKind::SweepM, c, None, false),
        Command::SweepP(c) => (ExperimentKind::SweepP, c, None, false),
        Command::Video(v) => (ExperimentKind::Video, v.common, v.yuv, v.full),
        Command::Selftest { seed } => {
            let checks = selftest(seed);
            for c in &checks {
                let tag = if c.passed { "PASS" } else { "FAIL" };
                println!("{tag}  {:<52} {}", c.name, c.detail);
            }
            return Ok(checks.iter().all(|c| c.passed));
        }
        Command::MakeClip {
            path,
            width,
            height,
            frames,
            seed,
        } => {
            write_synthetic_clip(&path, width, height, frames, seed)?;
            println!(
                "wrote {frames} frames of {width}x{height} to {}",
                path.display()
            );
            return Ok(true);
        }
    };
    let mut cfg = build_config(kind, &common)?;
    if let Some(path) = yuv {
        cfg.video.yuv_path = path;
    }
    if full {
        cfg.video.crop = 128;
        cfg.video.frames = 200;
        cfg.validate()?;
    }
    let start = Instant::now();
    let out = run_experiment(&cfg)?;
    print!("{}", out.summary_text);
    eprintln!(
        "wrote {} and {} in {:.1}s",
        out.csv.display(),
        out.summary.display(),
        start.elapsed().as_secs_f64()
    );
    Ok(true)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
