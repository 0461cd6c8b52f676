//! Experiment plumbing: configuration, trial orchestration, rMSE statistics
//! and CSV/text reports.

mod config;
mod metrics;
mod report;
mod runner;
mod selftest;
mod sweep;
mod video;

use std::fs;
use std::path::PathBuf;

pub use config::{Algorithm, AlgorithmParams, ExperimentConfig, ExperimentKind, VideoConfig};
pub use metrics::{histogram, mean, median, rmse, std_error, steady_state, steady_window};
pub use report::{
    distribution_table, find, steady_state_table, summarize, write_sweep_csv, write_timeseries_csv,
    AlgorithmSummary, SweepRow, SWEEP_HEADER, TIMESERIES_HEADER,
};
pub use runner::{run_synthetic, run_synthetic_trial, TrialRecord};
pub use selftest::{selftest, SelfCheck};
pub use sweep::{point_config, sweep, sweep_rows, SweepAxis, SweepPoint};
pub use video::{read_yuv_luma, run_video_experiment, run_video_on_frames, write_synthetic_clip};

use crate::error::Result;

/// Files written by [`run_experiment`].
#[derive(Clone, Debug)]
pub struct ExperimentOutput {
    pub csv: PathBuf,
    pub summary: PathBuf,
    pub summary_text: String,
}

/// Runs `cfg.kind` and writes its CSV and `summary.txt` into `cfg.out_dir`.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    cfg.validate()?;
    let summary = cfg.out_dir.join("summary.txt");
    let (csv, text) = match cfg.kind {
        ExperimentKind::Synthetic => {
            let records = run_synthetic(cfg)?;
            fs::create_dir_all(&cfg.out_dir)?;
            let csv = cfg.out_dir.join("synthetic.csv");
            write_timeseries_csv(&records, fs::File::create(&csv)?)?;
            let s = cfg.synthetic;
            let title = format!(
                "synthetic: n={} s={} m={} p={} noise_var={} steps={} trials={} seed={}",
                s.n, s.s, s.m, s.p, s.noise_var, s.t_steps, cfg.trials, cfg.seed
            );
            let summaries = summarize(&records);
            let mut text = steady_state_table(&title, &summaries);
            text.push_str("\nper-step mean rMSE\n");
            for a in &summaries {
                let cells: Vec<String> =
                    a.per_step_mean.iter().map(|v| format!("{v:.3e}")).collect();
                text.push_str(&format!("{:<10} {}\n", a.algorithm.tag(), cells.join(" ")));
            }
            (csv, text)
        }
        ExperimentKind::SweepM | ExperimentKind::SweepP => {
            let axis = if cfg.kind == ExperimentKind::SweepM {
                SweepAxis::M
            } else {
                SweepAxis::P
            };
            let values = cfg
                .sweep_values
                .clone()
                .unwrap_or_else(|| axis.default_values());
            let points = sweep(cfg, axis, &values, &[])?;
            let rows = sweep_rows(&points);
            fs::create_dir_all(&cfg.out_dir)?;
            let csv = cfg.out_dir.join(format!("sweep_{}.csv", axis.name()));
            write_sweep_csv(&rows, fs::File::create(&csv)?)?;
            let mut text = String::new();
            for p in &points {
                let c = point_config(cfg, axis, p.value).synthetic;
                let title = format!(
                    "{}={} (n={} s={} m={} p={} trials={} seed={})",
                    axis.name(),
                    p.value,
                    c.n,
                    c.s,
                    c.m,
                    c.p,
                    cfg.trials,
                    cfg.seed
                );
                text.push_str(&steady_state_table(&title, &summarize(&p.records)));
                text.push('\n');
            }
            (csv, text)
        }
        ExperimentKind::Video => {
            let records = run_video_experiment(cfg)?;
            fs::create_dir_all(&cfg.out_dir)?;
            let csv = cfg.out_dir.join("video.csv");
            write_timeseries_csv(&records, fs::File::create(&csv)?)?;
            let v = &cfg.video;
            let title = format!(
                "video: {} crop={} frames={} m/n={} (m={}) taps={} levels={} trials={} seed={}",
                v.yuv_path.display(),
                v.crop,
                v.frames,
                v.m_over_n,
                v.measurements(),
                v.wavelet_taps,
                v.wavelet_levels,
                cfg.trials,
                cfg.seed
            );
            (csv, distribution_table(&title, &summarize(&records), 20))
        }
    };
    fs::write(&summary, &text)?;
    Ok(ExperimentOutput {
        csv,
        summary,
        summary_text: text,
    })
}
