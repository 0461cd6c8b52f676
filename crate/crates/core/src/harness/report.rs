use std::fmt::Write as _;
use std::io::Write;

use super::config::Algorithm;
use super::metrics::{histogram, mean, median, std_error};
use super::runner::TrialRecord;
use crate::error::{Error, Result};

pub const TIMESERIES_HEADER: [&str; 4] = ["trial", "t", "algorithm", "rmse"];
pub const SWEEP_HEADER: [&str; 4] = ["axis", "algorithm", "mean_rmse", "stderr"];

/// Aggregate of one algorithm's records.
#[derive(Clone, Debug)]
pub struct AlgorithmSummary {
    pub algorithm: Algorithm,
    pub completed: usize,
    pub failed: usize,
    /// Steady-state rMSE of every completed trial, in trial order.
    pub steady_states: Vec<f64>,
    pub mean_steady: f64,
    pub stderr_steady: f64,
    pub median_steady: f64,
    /// Mean rMSE at each step across completed trials.
    pub per_step_mean: Vec<f64>,
    /// Every per-step rMSE of every completed trial.
    pub all_steps: Vec<f64>,
    pub uncertified_steps: usize,
    pub first_error: Option<String>,
}

impl AlgorithmSummary {
    pub fn mean_all(&self) -> f64 {
        mean(&self.all_steps)
    }

    pub fn median_all(&self) -> f64 {
        median(&self.all_steps)
    }
}

/// Summaries in canonical algorithm order.
pub fn summarize(records: &[TrialRecord]) -> Vec<AlgorithmSummary> {
    let mut algs: Vec<Algorithm> = records.iter().map(|r| r.algorithm).collect();
    algs.sort();
    algs.dedup();
    algs.into_iter()
        .map(|alg| {
            let mine: Vec<&TrialRecord> = records.iter().filter(|r| r.algorithm == alg).collect();
            let ok: Vec<&TrialRecord> = mine.iter().copied().filter(|r| r.succeeded()).collect();
            let steady_states: Vec<f64> = ok.iter().map(|r| r.steady_state).collect();
            let steps = ok.iter().map(|r| r.rmse.len()).min().unwrap_or(0);
            let per_step_mean = (0..steps)
                .map(|k| mean(&ok.iter().map(|r| r.rmse[k]).collect::<Vec<_>>()))
                .collect();
            AlgorithmSummary {
                algorithm: alg,
                completed: ok.len(),
                failed: mine.len() - ok.len(),
                mean_steady: mean(&steady_states),
                stderr_steady: std_error(&steady_states),
                median_steady: median(&steady_states),
                steady_states,
                per_step_mean,
                all_steps: ok.iter().flat_map(|r| r.rmse.iter().copied()).collect(),
                uncertified_steps: mine.iter().map(|r| r.uncertified_steps).sum(),
                first_error: mine.iter().find_map(|r| r.error.clone()),
            }
        })
        .collect()
}

pub fn find(summaries: &[AlgorithmSummary], alg: Algorithm) -> Option<&AlgorithmSummary> {
    summaries.iter().find(|s| s.algorithm == alg)
}

fn csv_err(e: csv::Error) -> Error {
    Error::Parse(e.to_string())
}

/// `trial,t,algorithm,rmse`, one row per completed step.
pub fn write_timeseries_csv<W: Write>(records: &[TrialRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(TIMESERIES_HEADER).map_err(csv_err)?;
    for r in records {
        for (t, v) in r.rmse.iter().enumerate() {
            w.write_record([
                r.trial.to_string(),
                t.to_string(),
                r.algorithm.tag().to_string(),
                v.to_string(),
            ])
            .map_err(csv_err)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// One row of a sweep table.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub axis: usize,
    pub algorithm: Algorithm,
    pub mean_rmse: f64,
    pub stderr: f64,
    pub failed: usize,
}

pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SWEEP_HEADER).map_err(csv_err)?;
    for r in rows {
        w.write_record([
            r.axis.to_string(),
            r.algorithm.tag().to_string(),
            r.mean_rmse.to_string(),
            r.stderr.to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// Plain-text table of steady-state statistics.
pub fn steady_state_table(title: &str, summaries: &[AlgorithmSummary]) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{title}");
    let _ = writeln!(
        s,
        "{:<10} {:>6} {:>6} {:>13} {:>11} {:>13} {:>11}",
        "algorithm", "ok", "failed", "mean_steady", "stderr", "median_steady", "uncertified"
    );
    for a in summaries {
        let _ = writeln!(
            s,
            "{:<10} {:>6} {:>6} {:>13.6e} {:>11.3e} {:>13.6e} {:>11}",
            a.algorithm.tag(),
            a.completed,
            a.failed,
            a.mean_steady,
            a.stderr_steady,
            a.median_steady,
            a.uncertified_steps
        );
        if let Some(e) = &a.first_error {
            let _ = writeln!(s, "  first error: {e}");
        }
    }
    s
}

/// Mean/median over all per-frame rMSE values plus a text histogram.
pub fn distribution_table(title: &str, summaries: &[AlgorithmSummary], bins: usize) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{title}");
    let _ = writeln!(
        s,
        "{:<10} {:>8} {:>13} {:>13}",
        "algorithm", "frames", "mean_rmse", "median_rmse"
    );
    for a in summaries {
        let _ = writeln!(
            s,
            "{:<10} {:>8} {:>13.6e} {:>13.6e}",
            a.algorithm.tag(),
            a.all_steps.len(),
            a.mean_all(),
            a.median_all()
        );
    }
    let hi = summaries
        .iter()
        .flat_map(|a| a.all_steps.iter().copied())
        .filter(|v| v.is_finite())
        .fold(0.0f64, f64::max);
    if hi > 0.0 {
        let _ = writeln!(
            s,
            "\nhistogram of per-frame rMSE, {bins} bins over [0, {hi:.4e}]"
        );
        for a in summaries {
            let counts = histogram(&a.all_steps, 0.0, hi, bins);
            let cells: Vec<String> = counts.iter().map(|c| format!("{c:>3}")).collect();
            let _ = writeln!(s, "{:<10} {}", a.algorithm.tag(), cells.join(" "));
        }
    }
    s
}
