use super::{
    predict_coefficients, Dynamics, Effective, FilterState, LsmParams, MeasurementFrame,
    Reweighted, StepInfo,
};
use crate::error::{Error, Result};
use crate::operators::LinearOperator;
use crate::scalar::{norm, Real};
use crate::solvers::{solve_weighted_l1, SolveStatus, SolverSettings, WeightedL1Problem};

const WEIGHT_REL_TOL: f64 = 1e-4;

/// `λ[k] = β / (|z[k]| + η)`
pub fn rwl1_static_weight_update<T: Real>(z: &[T], p: &LsmParams<T>) -> Vec<T> {
    z.iter().map(|&v| p.beta / (v.abs() + p.eta)).collect()
}

/// `λ[i] = 2τ / (β|z[i]| + |prediction[i]| + η)`
pub fn rwl1_df_weight_update<T: Real>(
    z_current: &[T],
    prediction: &[T],
    p: &LsmParams<T>,
) -> Result<Vec<T>> {
    if z_current.len() != prediction.len() {
        return Err(Error::InvalidDimension(format!(
            "{} coefficients but {} predicted coefficients",
            z_current.len(),
            prediction.len()
        )));
    }
    let num = T::lit(2.0) * p.tau;
    Ok(z_current
        .iter()
        .zip(prediction)
        .map(|(&z, &f)| num / (p.beta * z.abs() + f.abs() + p.eta))
        .collect())
}

fn relative_change<T: Real>(old: &[T], new: &[T]) -> T {
    let diff: T = old
        .iter()
        .zip(new)
        .map(|(&a, &b)| (a - b) * (a - b))
        .sum::<T>()
        .sqrt();
    let scale = norm(old);
    if scale > T::zero() {
        diff / scale
    } else {
        diff
    }
}

/// Shared EM loop: alternate a weighted ℓ1 M-step and `e_step` until the
/// weights settle or `p.em_iters` rounds have run.
fn em_loop<T: Real>(
    eff: &mut Effective<'_, T>,
    y: &[T],
    p: &LsmParams<T>,
    mut weights: Vec<T>,
    mut z: Vec<T>,
    settings: &SolverSettings<T>,
    e_step: impl Fn(&[T]) -> Result<Vec<T>>,
) -> Result<Reweighted<T>> {
    let lipschitz = eff.resolve_lipschitz(settings);
    let mut status = SolveStatus::Certified;
    let mut rounds = 0;
    while rounds < p.em_iters {
        rounds += 1;
        let problem = WeightedL1Problem::new(eff.op(), y, p.lambda0, &weights)
            .warm_start(&z)
            .with_lipschitz(Some(lipschitz));
        let sol = solve_weighted_l1(&problem, settings)?;
        status = status.max(sol.status);
        z = sol.z;
        let next = e_step(&z)?;
        let change = relative_change(&weights, &next);
        weights = next;
        if change < T::lit(WEIGHT_REL_TOL) {
            break;
        }
    }
    Ok(Reweighted {
        z,
        weights,
        info: StepInfo { rounds, status },
    })
}

/// Independent re-weighted ℓ1: EM on `‖y − ΦWz‖² + λ0 Σ λ[k]|z[k]|` starting
/// from unit weights, with the static weight rule as E-step.
pub fn rwl1_static<T: Real>(
    frame: &MeasurementFrame<T>,
    synthesis: &dyn LinearOperator<T>,
    p: &LsmParams<T>,
    settings: &SolverSettings<T>,
) -> Result<Reweighted<T>> {
    p.validate()?;
    let mut eff = Effective::new(frame, synthesis)?;
    let n = synthesis.in_dim();
    em_loop(
        &mut eff,
        &frame.y,
        p,
        vec![T::one(); n],
        vec![T::zero(); n],
        settings,
        |z| Ok(rwl1_static_weight_update(z, p)),
    )
}

/// One RWL1-DF step. The prediction `W⁻¹f(Wẑ_{k−1})` enters every weight
/// denominator; the first M-step starts from the prediction and each later
/// one from the previous EM iterate.
pub fn rwl1_df_step<T: Real>(
    frame: &MeasurementFrame<T>,
    synthesis: &dyn LinearOperator<T>,
    prev: &FilterState<T>,
    dynamics: &dyn Dynamics<T>,
    p: &LsmParams<T>,
    settings: &SolverSettings<T>,
) -> Result<(FilterState<T>, StepInfo)> {
    p.validate()?;
    let mut eff = Effective::new(frame, synthesis)?;
    let prediction = predict_coefficients(&prev.z_prev, synthesis, dynamics)?;
    let zeros = vec![T::zero(); prediction.len()];
    let weights = rwl1_df_weight_update(&zeros, &prediction, p)?;
    let out = em_loop(
        &mut eff,
        &frame.y,
        p,
        weights,
        prediction.clone(),
        settings,
        |z| rwl1_df_weight_update(z, &prediction, p),
    )?;
    let state = FilterState {
        z_prev: out.z,
        weights: Some(out.weights),
        t_index: prev.t_index + 1,
    };
    Ok((state, out.info))
}
