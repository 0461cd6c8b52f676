//! Per-time-step estimators: independent BPDN and re-weighted ℓ1, the two
//! dynamic filters (BPDN-DF, RWL1-DF) and a linear Kalman baseline.
//!
//! Every sparse estimator works in synthesis coefficients `z` with the signal
//! recovered as `x = W z`. The synthesis operator `W` is assumed orthonormal,
//! so `W⁻¹` is applied as `Wᵀ`.

mod bpdn;
mod dynamics;
mod kalman;
mod params;
mod rwl1;

use crate::error::{Error, Result};
use crate::operators::{Composed, LinearOperator, SharedOperator};
use crate::scalar::Real;
use crate::solvers::{estimate_lipschitz, SolveStatus, SolverSettings};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub use bpdn::{bpdn_df_step, bpdn_step};
pub use dynamics::{Dynamics, IdentityDynamics, SignedPermutation};
pub use kalman::{kalman_step, KalmanState};
pub use params::{BpdnDfParams, LsmParams, PredictionNorm};
pub use rwl1::{rwl1_df_step, rwl1_df_weight_update, rwl1_static, rwl1_static_weight_update};

/// One time step's observation `y = Φ x + ε`.
#[derive(Clone)]
pub struct MeasurementFrame<T: Real> {
    pub op: SharedOperator<T>,
    pub y: Vec<T>,
    pub noise_var: T,
    /// `σ_max(Φ)²` when already known; saves a power iteration per solve.
    pub lipschitz: Option<T>,
}

impl<T: Real> MeasurementFrame<T> {
    pub fn new(op: SharedOperator<T>, y: Vec<T>, noise_var: T) -> Result<Self> {
        if y.len() != op.out_dim() {
            return Err(Error::InvalidDimension(format!(
                "{} measurements for an operator with {} rows",
                y.len(),
                op.out_dim()
            )));
        }
        if !(noise_var >= T::zero()) {
            return Err(Error::InvalidParameter(format!(
                "noise variance must be nonnegative, got {noise_var}"
            )));
        }
        Ok(Self {
            op,
            y,
            noise_var,
            lipschitz: None,
        })
    }

    pub fn with_lipschitz(mut self, l: T) -> Self {
        self.lipschitz = Some(l);
        self
    }

    pub fn signal_dim(&self) -> usize {
        self.op.in_dim()
    }
}

impl<T: Real> std::fmt::Debug for MeasurementFrame<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("MeasurementFrame")
            .field("rows", &self.op.out_dim())
            .field("cols", &self.op.in_dim())
            .field("noise_var", &self.noise_var)
            .finish()
    }
}

/// What a dynamic filter carries from one step to the next.
#[derive(Clone, Debug, PartialEq)]
pub struct FilterState<T> {
    pub z_prev: Vec<T>,
    pub weights: Option<Vec<T>>,
    pub t_index: usize,
}

impl<T: Real> FilterState<T> {
    /// All-zero coefficients before the first frame.
    pub fn initial(n: usize) -> Self {
        Self {
            z_prev: vec![T::zero(); n],
            weights: None,
            t_index: 0,
        }
    }
}

/// Bookkeeping from an EM loop.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct StepInfo {
    /// EM rounds actually run (M-step plus E-step each).
    pub rounds: usize,
    /// Worst solver outcome over all M-steps.
    pub status: SolveStatus,
}

/// Coefficients and final weights of a re-weighted ℓ1 estimate.
#[derive(Clone, Debug)]
pub struct Reweighted<T> {
    pub z: Vec<T>,
    pub weights: Vec<T>,
    pub info: StepInfo,
}

/// `Φ W` as one operator plus its curvature constant when cheaply known.
pub(crate) struct Effective<'a, T: Real> {
    op: Box<dyn LinearOperator<T> + 'a>,
    pub lipschitz: Option<T>,
}

impl<'a, T: Real> Effective<'a, T> {
    pub fn new(
        frame: &'a MeasurementFrame<T>,
        synthesis: &'a dyn LinearOperator<T>,
    ) -> Result<Self> {
        if frame.op.in_dim() != synthesis.out_dim() {
            return Err(Error::InvalidDimension(format!(
                "sensing operator takes {} samples but synthesis produces {}",
                frame.op.in_dim(),
                synthesis.out_dim()
            )));
        }
        if synthesis.is_identity() {
            return Ok(Self {
                op: Box::new(&*frame.op),
                lipschitz: frame.lipschitz,
            });
        }
        let w = synthesis.norm_bound();
        let lipschitz = frame.lipschitz.zip(w).map(|(l, b)| l * b * b);
        Ok(Self {
            op: Box::new(Composed::new(&*frame.op, synthesis)),
            lipschitz,
        })
    }

    pub fn op(&self) -> &dyn LinearOperator<T> {
        &*self.op
    }

    /// Fills in the curvature constant by power iteration if it is not
    /// known, so repeated solves on the same operator share one estimate.
    pub fn resolve_lipschitz(&mut self, settings: &SolverSettings<T>) -> T {
        *self.lipschitz.get_or_insert_with(|| {
            let mut rng = ChaCha8Rng::seed_from_u64(settings.power_seed);
            estimate_lipschitz(&*self.op, settings.power_iters, &mut rng)
        })
    }
}

/// `W⁻¹ f(W ẑ)` for orthonormal `W`.
pub fn predict_coefficients<T: Real>(
    z_prev: &[T],
    synthesis: &dyn LinearOperator<T>,
    dynamics: &dyn Dynamics<T>,
) -> Result<Vec<T>> {
    if z_prev.len() != synthesis.in_dim() {
        return Err(Error::InvalidDimension(format!(
            "previous estimate has {} coefficients, synthesis expects {}",
            z_prev.len(),
            synthesis.in_dim()
        )));
    }
    if synthesis.is_identity() {
        return dynamics.predict(z_prev);
    }
    let x = synthesis.apply(z_prev);
    let fx = dynamics.predict(&x)?;
    Ok(synthesis.adjoint(&fx))
}
