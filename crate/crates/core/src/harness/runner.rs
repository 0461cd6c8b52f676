use std::time::{Duration, Instant};

use rayon::prelude::*;

use super::config::{Algorithm, AlgorithmParams, ExperimentConfig};
use super::metrics::{rmse, steady_state};
use crate::error::{Error, Result};
use crate::filters::{
    bpdn_df_step, bpdn_step, kalman_step, rwl1_df_step, rwl1_static, Dynamics, FilterState,
    IdentityDynamics, KalmanState, MeasurementFrame,
};
use crate::linalg::DenseMatrix;
use crate::operators::{Identity, LinearOperator};
use crate::solvers::{SolveStatus, SolverSettings};
use crate::synthetic::{generate_trial, SyntheticConfig};

/// One algorithm's run over one trial.
#[derive(Clone, Debug)]
pub struct TrialRecord {
    pub trial: u64,
    pub algorithm: Algorithm,
    /// Per-step rMSE for the steps that completed.
    pub rmse: Vec<f64>,
    /// Mean rMSE over the final 20% of steps; NaN if the run failed.
    pub steady_state: f64,
    pub wall_time: Duration,
    /// Steps where some solve ended without a first-order certificate.
    pub uncertified_steps: usize,
    pub error: Option<String>,
}

impl TrialRecord {
    pub fn succeeded(&self) -> bool {
        self.error.is_none()
    }
}

/// A causal estimation problem: frames, truth, and the known dynamics
/// `dynamics[k - 1]` taking step `k − 1` to step `k` (`k ≥ 1`).
pub(crate) struct Sequence<'a> {
    pub frames: &'a [MeasurementFrame<f64>],
    pub truth: &'a [Vec<f64>],
    pub synthesis: &'a dyn LinearOperator<f64>,
    pub dynamics: &'a [&'a dyn Dynamics<f64>],
}

struct Progress {
    rmse: Vec<f64>,
    uncertified: usize,
}

impl Progress {
    fn push(&mut self, truth: &[f64], estimate: &[f64], status: SolveStatus) -> Result<()> {
        self.rmse.push(rmse(truth, estimate)?);
        if status != SolveStatus::Certified {
            self.uncertified += 1;
        }
        Ok(())
    }
}

fn run_sparse(
    alg: Algorithm,
    seq: &Sequence<'_>,
    params: &AlgorithmParams,
    solver: &SolverSettings<f64>,
    prog: &mut Progress,
) -> Result<()> {
    let w = seq.synthesis;
    let n = w.in_dim();
    let mut state = FilterState::initial(n);
    for (k, frame) in seq.frames.iter().enumerate() {
        let dynamics: &dyn Dynamics<f64> = if k == 0 {
            &IdentityDynamics
        } else {
            seq.dynamics[k - 1]
        };
        let (z, status) = match alg {
            Algorithm::Bpdn => {
                let sol = bpdn_step(frame, w, params.bpdn_lambda, solver)?;
                (sol.z, sol.status)
            }
            Algorithm::Rwl1 => {
                let out = rwl1_static(frame, w, &params.rwl1, solver)?;
                (out.z, out.info.status)
            }
            Algorithm::BpdnDf => {
                // No estimate exists before the first frame, so it gets no
                // prediction term.
                let sol = if k == 0 {
                    bpdn_step(frame, w, params.bpdn_df.gamma, solver)?
                } else {
                    let x_prev = w.apply(&state.z_prev);
                    let prediction = dynamics.predict(&x_prev)?;
                    bpdn_df_step(frame, w, &prediction, &params.bpdn_df, solver)?
                };
                (sol.z, sol.status)
            }
            Algorithm::Rwl1Df => {
                let (next, info) =
                    rwl1_df_step(frame, w, &state, dynamics, &params.rwl1_df, solver)?;
                state = next;
                (state.z_prev.clone(), info.status)
            }
            Algorithm::Kalman => unreachable!("handled by run_kalman"),
        };
        let x = w.apply(&z);
        prog.push(&seq.truth[k], &x, status)?;
        state.z_prev = z;
        state.t_index = k + 1;
    }
    Ok(())
}

fn run_kalman(seq: &Sequence<'_>, params: &AlgorithmParams, prog: &mut Progress) -> Result<()> {
    if !seq.synthesis.is_identity() {
        return Err(Error::InvalidParameter(
            "the Kalman baseline tracks the signal directly and needs identity synthesis".into(),
        ));
    }
    let n = seq.synthesis.in_dim();
    let q = DenseMatrix::from_diagonal(&vec![params.kalman_process_var; n]);
    let mut st = KalmanState {
        mean: vec![0.0; n],
        cov: DenseMatrix::from_diagonal(&vec![params.kalman_prior_var; n]),
        process_cov: DenseMatrix::zeros(n, n),
        meas_cov: DenseMatrix::zeros(0, 0),
        dynamics_matrix: DenseMatrix::identity(n),
    };
    for (k, frame) in seq.frames.iter().enumerate() {
        if k > 0 {
            st.dynamics_matrix = seq.dynamics[k - 1].matrix(n).ok_or_else(|| {
                Error::InvalidParameter("Kalman baseline needs linear dynamics".into())
            })?;
            st.process_cov = q.clone();
        }
        let var = frame.noise_var;
        st.meas_cov = DenseMatrix::from_diagonal(&vec![var; frame.y.len()]);
        st = kalman_step(frame, &st)?;
        prog.push(&seq.truth[k], &st.mean, SolveStatus::Certified)?;
    }
    Ok(())
}

/// Runs one algorithm over a sequence; errors end up in the record.
pub(crate) fn run_algorithm(
    trial: u64,
    alg: Algorithm,
    seq: &Sequence<'_>,
    params: &AlgorithmParams,
    solver: &SolverSettings<f64>,
) -> TrialRecord {
    let start = Instant::now();
    let mut prog = Progress {
        rmse: Vec::with_capacity(seq.frames.len()),
        uncertified: 0,
    };
    let outcome = match alg {
        Algorithm::Kalman => run_kalman(seq, params, &mut prog),
        _ => run_sparse(alg, seq, params, solver, &mut prog),
    };
    let error = outcome.err().map(|e| e.to_string());
    TrialRecord {
        trial,
        algorithm: alg,
        steady_state: if error.is_none() {
            steady_state(&prog.rmse)
        } else {
            f64::NAN
        },
        rmse: prog.rmse,
        wall_time: start.elapsed(),
        uncertified_steps: prog.uncertified,
        error,
    }
}

/// Generates trial `trial` of the synthetic experiment and runs every
/// selected algorithm on the same measurements.
pub fn run_synthetic_trial(cfg: &ExperimentConfig, trial: u64) -> Result<Vec<TrialRecord>> {
    let syn = SyntheticConfig {
        seed: cfg.seed,
        ..cfg.synthetic
    };
    let params = cfg.synthetic_params()?;
    let data = generate_trial::<f64>(&syn, trial)?;
    let identity = Identity::new(syn.n);
    let truth = &data.truth;
    let dynamics: Vec<&dyn Dynamics<f64>> = truth
        .dynamics
        .iter()
        .map(|d| d as &dyn Dynamics<f64>)
        .collect();
    let seq = Sequence {
        frames: &data.frames,
        truth: &truth.states,
        synthesis: &identity,
        dynamics: &dynamics,
    };
    Ok(cfg
        .algorithms
        .par_iter()
        .map(|&alg| run_algorithm(trial, alg, &seq, &params, &cfg.solver))
        .collect())
}

/// Runs `job` for every trial on a pool of `cfg.threads` workers and returns
/// the records sorted by trial then algorithm.
pub(crate) fn run_trials<F>(cfg: &ExperimentConfig, job: F) -> Result<Vec<TrialRecord>>
where
    F: Fn(u64) -> Result<Vec<TrialRecord>> + Sync,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.threads)
        .build()
        .map_err(|e| Error::Config(format!("cannot build thread pool: {e}")))?;
    let per_trial: Vec<Result<Vec<TrialRecord>>> =
        pool.install(|| (0..cfg.trials as u64).into_par_iter().map(&job).collect());
    let mut records = Vec::new();
    for r in per_trial {
        records.extend(r?);
    }
    records.sort_by_key(|r| (r.trial, r.algorithm));
    Ok(records)
}

/// All trials of the synthetic experiment.
pub fn run_synthetic(cfg: &ExperimentConfig) -> Result<Vec<TrialRecord>> {
    cfg.validate()?;
    run_trials(cfg, |t| run_synthetic_trial(cfg, t))
}
