use super::config::ExperimentConfig;
use super::report::{summarize, SweepRow};
use super::runner::{run_synthetic, TrialRecord};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SweepAxis {
    /// Measurements per step.
    M,
    /// Misrouted coefficients per step.
    P,
}

impl SweepAxis {
    pub fn default_values(self) -> Vec<usize> {
        match self {
            Self::M => vec![50, 60, 70, 90, 110],
            Self::P => (0..=5).collect(),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::M => "m",
            Self::P => "p",
        }
    }
}

/// Records of every trial at one axis value.
#[derive(Clone, Debug)]
pub struct SweepPoint {
    pub value: usize,
    pub records: Vec<TrialRecord>,
}

/// The configuration used at one axis value.
pub fn point_config(cfg: &ExperimentConfig, axis: SweepAxis, value: usize) -> ExperimentConfig {
    let mut c = cfg.clone();
    match axis {
        SweepAxis::M => c.synthetic.m = value,
        SweepAxis::P => c.synthetic.p = value,
    }
    c
}

/// Runs the synthetic experiment at every axis value. `reuse` may hold
/// already computed points for the same configuration; those values are not
/// rerun.
pub fn sweep(
    cfg: &ExperimentConfig,
    axis: SweepAxis,
    values: &[usize],
    reuse: &[SweepPoint],
) -> Result<Vec<SweepPoint>> {
    if values.is_empty() {
        return Err(Error::Config("sweep axis is empty".into()));
    }
    values
        .iter()
        .map(|&v| {
            if let Some(p) = reuse.iter().find(|p| p.value == v) {
                return Ok(p.clone());
            }
            Ok(SweepPoint {
                value: v,
                records: run_synthetic(&point_config(cfg, axis, v))?,
            })
        })
        .collect()
}

/// One CSV row per (axis value, algorithm): mean and standard error of the
/// steady-state rMSE over completed trials.
pub fn sweep_rows(points: &[SweepPoint]) -> Vec<SweepRow> {
    points
        .iter()
        .flat_map(|p| {
            summarize(&p.records).into_iter().map(move |s| SweepRow {
                axis: p.value,
                algorithm: s.algorithm,
                mean_rmse: s.mean_steady,
                stderr: s.stderr_steady,
                failed: s.failed,
            })
        })
        .collect()
}
