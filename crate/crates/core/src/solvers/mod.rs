//! Weighted ℓ1-regularized least squares: the M-step workhorse of every
//! sparse filter in the crate.

mod active_set;
mod lipschitz;
mod penalty;
mod prox_grad;

pub use lipschitz::estimate_lipschitz;
pub use penalty::{soft_threshold, SeparablePenalty};

use crate::error::{Error, Result};
use crate::operators::LinearOperator;
use crate::scalar::Real;

#[derive(Clone, Debug)]
pub struct SolverSettings<T> {
    /// Iteration cap for the accelerated proximal loop (≥ 1).
    pub max_iters: usize,
    /// Relative objective change below which the loop counts as stalled.
    pub rel_tol: T,
    /// Power iterations used for the step size when no bound is known.
    pub power_iters: usize,
    pub power_seed: u64,
    /// First-order optimality tolerance relative to the largest penalty
    /// weight.
    pub kkt_rel_tol: T,
    /// Keep the accepted objective values in [`Solution::trace`].
    pub record_trace: bool,
}

impl<T: Real> Default for SolverSettings<T> {
    fn default() -> Self {
        Self {
            max_iters: 2000,
            rel_tol: T::lit(1e-12),
            power_iters: 100,
            power_seed: 0x5eed,
            kkt_rel_tol: T::lit(1e-6),
            record_trace: false,
        }
    }
}

impl<T: Real> SolverSettings<T> {
    pub fn validate(&self) -> Result<()> {
        if self.max_iters == 0 {
            return Err(Error::InvalidParameter(
                "max_iters must be at least 1".into(),
            ));
        }
        if !(self.rel_tol > T::zero()) {
            return Err(Error::InvalidParameter("rel_tol must be positive".into()));
        }
        Ok(())
    }
}

/// Ordered from best to worst, so `max` picks the more serious outcome.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum SolveStatus {
    /// First-order optimality verified within tolerance.
    Certified,
    /// Objective stopped changing (relative change below `rel_tol`) before
    /// optimality could be certified.
    Stalled,
    /// Iteration cap reached; the result is the best iterate found.
    MaxIterations,
}

#[derive(Clone, Debug)]
pub struct Solution<T> {
    pub z: Vec<T>,
    pub status: SolveStatus,
    pub iterations: usize,
    pub objective: T,
    /// Largest first-order optimality violation at `z`.
    pub kkt_violation: T,
    pub kkt_tol: T,
    /// Curvature constant actually used (after any backtracking).
    pub lipschitz: T,
    pub trace: Vec<T>,
}

impl<T> Solution<T> {
    pub fn is_certified(&self) -> bool {
        self.status == SolveStatus::Certified
    }

    /// `false` means the caller should surface a convergence warning.
    pub fn converged(&self) -> bool {
        self.status != SolveStatus::MaxIterations
    }
}

/// `min_z ‖y − Az‖₂² + λ0 Σ_i w_i |z_i|`
#[derive(Clone, Copy)]
pub struct WeightedL1Problem<'a, T: Real> {
    pub op: &'a dyn LinearOperator<T>,
    pub y: &'a [T],
    pub base_scale: T,
    pub weights: &'a [T],
    /// Starting point; zero when absent.
    pub init: Option<&'a [T]>,
    /// Precomputed `σ_max(A)²`, skipping power iteration.
    pub lipschitz: Option<T>,
}

impl<'a, T: Real> WeightedL1Problem<'a, T> {
    pub fn new(op: &'a dyn LinearOperator<T>, y: &'a [T], base_scale: T, weights: &'a [T]) -> Self {
        Self {
            op,
            y,
            base_scale,
            weights,
            init: None,
            lipschitz: None,
        }
    }

    pub fn warm_start(mut self, z: &'a [T]) -> Self {
        self.init = Some(z);
        self
    }

    pub fn with_lipschitz(mut self, l: Option<T>) -> Self {
        self.lipschitz = l;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.y.len() != self.op.out_dim() {
            return Err(Error::InvalidDimension(format!(
                "measurement length {} does not match operator output {}",
                self.y.len(),
                self.op.out_dim()
            )));
        }
        if self.weights.len() != self.op.in_dim() {
            return Err(Error::InvalidDimension(format!(
                "{} weights for {} coefficients",
                self.weights.len(),
                self.op.in_dim()
            )));
        }
        if let Some(z) = self.init {
            if z.len() != self.op.in_dim() {
                return Err(Error::InvalidDimension("warm start length mismatch".into()));
            }
        }
        Ok(())
    }

    pub fn penalty(&self) -> Result<SeparablePenalty<T>> {
        SeparablePenalty::weighted_l1(self.base_scale, self.weights)
    }
}

pub fn solve_weighted_l1<T: Real>(
    problem: &WeightedL1Problem<'_, T>,
    settings: &SolverSettings<T>,
) -> Result<Solution<T>> {
    problem.validate()?;
    settings.validate()?;
    let penalty = problem.penalty()?;
    solve_composite(
        problem.op,
        problem.y,
        &penalty,
        problem.init,
        problem.lipschitz,
        settings,
    )
}

/// General entry point: `min_z ‖y − Az‖₂² + h(z)`.
pub fn solve_composite<T: Real>(
    op: &dyn LinearOperator<T>,
    y: &[T],
    penalty: &SeparablePenalty<T>,
    init: Option<&[T]>,
    lipschitz: Option<T>,
    settings: &SolverSettings<T>,
) -> Result<Solution<T>> {
    if y.len() != op.out_dim() || penalty.len() != op.in_dim() {
        return Err(Error::InvalidDimension(
            "operator, measurements and penalty disagree in size".into(),
        ));
    }
    settings.validate()?;
    let prob = prox_grad::Composite { op, y, penalty };
    Ok(prox_grad::minimize(&prob, init, lipschitz, settings))
}

/// Result of checking `ẑ` against the first-order optimality conditions.
#[derive(Clone, Copy, Debug)]
pub struct KktReport<T> {
    pub max_violation: T,
    pub tol: T,
}

impl<T: Real> KktReport<T> {
    pub fn passed(&self) -> bool {
        self.max_violation <= self.tol
    }
}

/// Checks, with `g = −2Aᵀ(y − Az)`: `|g_i| ≤ λ0 w_i + tol` where `z_i = 0`
/// and `g_i = −sign(z_i) λ0 w_i ± tol` elsewhere, `tol = rel · λ0 · max w`.
pub fn check_kkt<T: Real>(
    problem: &WeightedL1Problem<'_, T>,
    z: &[T],
    rel: T,
) -> Result<KktReport<T>> {
    problem.validate()?;
    let penalty = problem.penalty()?;
    check_kkt_composite(problem.op, problem.y, &penalty, z, rel)
}

pub fn check_kkt_composite<T: Real>(
    op: &dyn LinearOperator<T>,
    y: &[T],
    penalty: &SeparablePenalty<T>,
    z: &[T],
    rel: T,
) -> Result<KktReport<T>> {
    if z.len() != op.in_dim() || y.len() != op.out_dim() || penalty.len() != z.len() {
        return Err(Error::InvalidDimension("KKT check size mismatch".into()));
    }
    let az = op.apply(z);
    let resid: Vec<T> = az.iter().zip(y).map(|(&a, &b)| a - b).collect();
    let mut g = op.adjoint(&resid);
    g.iter_mut().for_each(|v| *v *= T::lit(2.0));
    Ok(KktReport {
        max_violation: penalty.kkt_violation(z, &g),
        tol: rel * penalty.max_weight(),
    })
}
