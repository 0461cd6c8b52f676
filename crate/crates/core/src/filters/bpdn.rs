use super::{BpdnDfParams, Effective, MeasurementFrame, PredictionNorm};
use crate::error::{Error, Result};
use crate::operators::{LinearOperator, Scaled, Stacked};
use crate::scalar::Real;
use crate::solvers::{
    solve_composite, solve_weighted_l1, SeparablePenalty, Solution, SolverSettings,
    WeightedL1Problem,
};

/// Independent BPDN: `min_z ‖y − ΦWz‖₂² + λ‖z‖₁`.
///
/// `lambda` multiplies the ℓ1 norm directly; the fidelity term carries no
/// `1/(2σ²)` factor.
pub fn bpdn_step<T: Real>(
    frame: &MeasurementFrame<T>,
    synthesis: &dyn LinearOperator<T>,
    lambda: T,
    settings: &SolverSettings<T>,
) -> Result<Solution<T>> {
    let eff = Effective::new(frame, synthesis)?;
    let weights = vec![T::one(); synthesis.in_dim()];
    let problem =
        WeightedL1Problem::new(eff.op(), &frame.y, lambda, &weights).with_lipschitz(eff.lipschitz);
    solve_weighted_l1(&problem, settings)
}

/// BPDN with a penalty on the deviation from the dynamics prediction:
/// `min_z ‖y − ΦWz‖₂² + γ‖z‖₁ + κ‖Wz − prediction‖_q^q`.
///
/// For `q = 2` the prediction term joins the smooth part through the stacked
/// operator `[ΦW; √κ W]`. For `q = 1` it becomes a second breakpoint of the
/// separable penalty, which requires `W` to be the identity; any other
/// synthesis is rejected.
pub fn bpdn_df_step<T: Real>(
    frame: &MeasurementFrame<T>,
    synthesis: &dyn LinearOperator<T>,
    prediction: &[T],
    params: &BpdnDfParams<T>,
    settings: &SolverSettings<T>,
) -> Result<Solution<T>> {
    params.validate()?;
    if prediction.len() != synthesis.out_dim() {
        return Err(Error::InvalidDimension(format!(
            "prediction has length {}, signal has {}",
            prediction.len(),
            synthesis.out_dim()
        )));
    }
    if params.kappa == T::zero() {
        return bpdn_step(frame, synthesis, params.gamma, settings);
    }
    let eff = Effective::new(frame, synthesis)?;
    let n = synthesis.in_dim();
    match params.q {
        PredictionNorm::L2 => {
            let root = params.kappa.sqrt();
            let stacked = Stacked::new(eff.op(), Scaled::new(synthesis, root));
            let mut target = frame.y.clone();
            target.extend(prediction.iter().map(|&p| root * p));
            let lipschitz = eff
                .lipschitz
                .zip(synthesis.norm_bound())
                .map(|(l, b)| l + params.kappa * b * b);
            let penalty = SeparablePenalty::weighted_l1(params.gamma, &vec![T::one(); n])?;
            solve_composite(&stacked, &target, &penalty, None, lipschitz, settings)
        }
        PredictionNorm::L1 => {
            if !synthesis.is_identity() {
                return Err(Error::InvalidParameter(
                    "an l1 prediction penalty is only supported with identity synthesis".into(),
                ));
            }
            let penalty = SeparablePenalty::anchored(
                vec![params.gamma; n],
                vec![params.kappa; n],
                prediction.to_vec(),
            )?;
            solve_composite(eff.op(), &frame.y, &penalty, None, eff.lipschitz, settings)
        }
    }
}
