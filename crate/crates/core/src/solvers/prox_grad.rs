//! Accelerated proximal gradient for `‖y − Az‖₂² + h(z)` with `h` a
//! [`SeparablePenalty`].
//!
//! FISTA momentum with two restarts: gradient-based (O'Donoghue–Candès) and a
//! function-value safeguard that falls back to a plain proximal step, so the
//! accepted objective sequence never increases. Once the active pattern
//! (which coordinates sit on a breakpoint, and on which side of the
//! breakpoints the others lie) settles, an active-set step solves the
//! pattern-restricted quadratic by conjugate gradients and moves toward it as
//! far as the pattern allows. A full step lands on the exact minimizer of the
//! pattern, which is then certified against the first-order conditions.
//!
//! Problems with few rows first go through the exact active-set method in
//! [`super::active_set`]; the loop here picks up whatever it leaves.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::active_set;
use super::lipschitz::estimate_lipschitz;
use super::penalty::{CoordState, SeparablePenalty};
use super::{Solution, SolveStatus, SolverSettings};
use crate::operators::LinearOperator;
use crate::scalar::{dot, norm, Real};

const STABLE_PATTERN_ITERS: usize = 3;
const FORCED_ATTEMPT_EVERY: usize = 50;
const STALL_ITERS: usize = 10;
/// Operator applications the active-set steps may use beyond those of the
/// proximal loop itself.
const CG_ALLOWANCE: usize = 2000;

pub(crate) struct Composite<'a, T: Real> {
    pub op: &'a dyn LinearOperator<T>,
    pub y: &'a [T],
    pub penalty: &'a SeparablePenalty<T>,
}

impl<T: Real> Composite<'_, T> {
    pub(crate) fn fidelity(&self, az: &[T]) -> T {
        az.iter()
            .zip(self.y)
            .fold(T::zero(), |s, (&a, &b)| s + (b - a) * (b - a))
    }

    pub(crate) fn objective(&self, z: &[T], az: &[T]) -> T {
        self.fidelity(az) + self.penalty.value(z)
    }

    /// `out = 2 Aᵀ(Az − y)`
    pub(crate) fn gradient(&self, az: &[T], resid: &mut [T], out: &mut [T]) {
        for ((r, &a), &b) in resid.iter_mut().zip(az).zip(self.y) {
            *r = a - b;
        }
        self.op.adjoint_into(resid, out);
        let two = T::lit(2.0);
        out.iter_mut().for_each(|g| *g *= two);
    }

    fn kkt_violation(&self, z: &[T], az: &[T]) -> T {
        let mut resid = vec![T::zero(); self.op.out_dim()];
        let mut grad = vec![T::zero(); self.op.in_dim()];
        self.gradient(az, &mut resid, &mut grad);
        self.penalty.kkt_violation(z, &grad)
    }

    fn kkt_tol(&self, rel: T) -> T {
        let w = self.penalty.max_weight();
        if w > T::zero() {
            rel * w
        } else {
            // No penalty: plain least squares, scale by the data gradient.
            let aty = self.op.adjoint(self.y);
            rel * (T::lit(2.0) * norm(&aty)).max(T::one())
        }
    }
}

struct Refined<T> {
    z: Vec<T>,
    az: Vec<T>,
    objective: T,
    full: bool,
}

pub(crate) fn slack<T: Real>(f: T) -> T {
    T::epsilon() * T::lit(64.0) * f.abs().max(T::min_positive_value())
}

pub(crate) fn minimize<T: Real>(
    prob: &Composite<'_, T>,
    init: Option<&[T]>,
    lipschitz: Option<T>,
    settings: &SolverSettings<T>,
) -> Solution<T> {
    let op = prob.op;
    let pen = prob.penalty;
    let n = op.in_dim();
    let m = op.out_dim();
    let kkt_tol = prob.kkt_tol(settings.kkt_rel_tol);

    let lip = lipschitz
        .or_else(|| op.norm_bound().map(|b| b * b))
        .unwrap_or_else(|| {
            let mut rng = ChaCha8Rng::seed_from_u64(settings.power_seed);
            estimate_lipschitz(op, settings.power_iters, &mut rng)
        });

    if m == 0 || !(lip > T::zero()) {
        let z: Vec<T> = (0..n).map(|i| pen.argmin_coord(i)).collect();
        let az = op.apply(&z);
        let objective = prob.objective(&z, &az);
        let viol = prob.kkt_violation(&z, &az);
        return Solution {
            status: if viol <= kkt_tol {
                SolveStatus::Certified
            } else {
                SolveStatus::MaxIterations
            },
            z,
            iterations: 0,
            objective,
            kkt_violation: viol,
            kkt_tol,
            lipschitz: lip,
            trace: Vec::new(),
        };
    }

    let mut lip = lip * T::lit(1.01);
    let mut step = T::lit(0.5) / lip;

    let mut z = match init {
        Some(z0) if z0.len() == n => z0.to_vec(),
        _ => vec![T::zero(); n],
    };
    let mut az = op.apply(&z);
    let mut f = prob.objective(&z, &az);
    let mut trace = Vec::new();
    if settings.record_trace {
        trace.push(f);
    }

    if active_set::applicable(m, n) {
        if let Some(out) = active_set::solve(prob, &z, kkt_tol, settings.max_iters) {
            if out.objective <= f {
                z = out.z;
                az = out.az;
                f = out.objective;
                if settings.record_trace {
                    trace.push(f);
                }
            }
            if out.certified {
                let kkt_violation = prob.kkt_violation(&z, &az);
                return Solution {
                    z,
                    status: SolveStatus::Certified,
                    iterations: out.steps,
                    objective: f,
                    kkt_violation,
                    kkt_tol,
                    lipschitz: lip,
                    trace,
                };
            }
        }
    }

    let mut ym = z.clone();
    let mut aym = az.clone();
    let mut momentum_reset = true;
    let mut t = T::one();

    let mut resid = vec![T::zero(); m];
    let mut grad = vec![T::zero(); n];
    let mut u = vec![T::zero(); n];
    let mut z_new = vec![T::zero(); n];
    let mut az_new = vec![T::zero(); m];
    let mut z_old = vec![T::zero(); n];
    let mut az_old = vec![T::zero(); m];

    let mut pattern: Vec<u8> = (0..n).map(|i| pen.pattern_code(i, z[i])).collect();
    let mut last_attempt: Option<Vec<u8>> = None;
    let mut stable = 0usize;
    let mut since_attempt = 0usize;
    let mut small_changes = 0usize;
    let mut ever_stalled = false;
    let mut status = SolveStatus::MaxIterations;
    let mut iterations = 0;
    let mut cg_ops = 0usize;

    // A warm start may already be optimal.
    if let Some(done) = try_certify(
        prob,
        &mut z,
        &mut az,
        &mut f,
        kkt_tol,
        m,
        &mut cg_ops,
        &mut trace,
        settings,
    ) {
        if done {
            let viol = prob.kkt_violation(&z, &az);
            return Solution {
                z,
                status: SolveStatus::Certified,
                iterations: 0,
                objective: f,
                kkt_violation: viol,
                kkt_tol,
                lipschitz: lip,
                trace,
            };
        }
        ym.copy_from_slice(&z);
        aym.copy_from_slice(&az);
    }

    while iterations < settings.max_iters {
        iterations += 1;
        prob.gradient(&aym, &mut resid, &mut grad);
        for ((ui, &yi), &gi) in u.iter_mut().zip(&ym).zip(&grad) {
            *ui = yi - step * gi;
        }
        pen.prox(&u, step, &mut z_new);
        op.apply_into(&z_new, &mut az_new);
        let f_new = prob.objective(&z_new, &az_new);

        if !(f_new <= f + slack(f)) {
            if momentum_reset {
                // A plain proximal step went uphill: the curvature estimate
                // is too small.
                lip *= T::lit(2.0);
                step = T::lit(0.5) / lip;
            } else {
                ym.copy_from_slice(&z);
                aym.copy_from_slice(&az);
                t = T::one();
                momentum_reset = true;
            }
            continue;
        }

        // Gradient-based restart: momentum points against the prox step.
        let mut restart_dot = T::zero();
        for ((&y_i, &zn), &zc) in ym.iter().zip(&z_new).zip(&z) {
            restart_dot += (y_i - zn) * (zn - zc);
        }
        let rel = (f - f_new) / f.abs().max(T::min_positive_value());

        std::mem::swap(&mut z_old, &mut z);
        std::mem::swap(&mut z, &mut z_new);
        std::mem::swap(&mut az_old, &mut az);
        std::mem::swap(&mut az, &mut az_new);
        f = f_new;
        if settings.record_trace {
            trace.push(f);
        }

        let beta = if restart_dot > T::zero() {
            t = T::one();
            T::zero()
        } else {
            let t_next = (T::one() + (T::one() + T::lit(4.0) * t * t).sqrt()) / T::lit(2.0);
            let b = (t - T::one()) / t_next;
            t = t_next;
            b
        };
        for i in 0..n {
            ym[i] = z[i] + beta * (z[i] - z_old[i]);
        }
        for i in 0..m {
            aym[i] = az[i] + beta * (az[i] - az_old[i]);
        }
        momentum_reset = beta == T::zero();

        let mut changed = false;
        for (i, code) in pattern.iter_mut().enumerate() {
            let c = pen.pattern_code(i, z[i]);
            if *code != c {
                *code = c;
                changed = true;
            }
        }
        stable = if changed { 0 } else { stable + 1 };
        since_attempt += 1;
        small_changes = if rel < settings.rel_tol {
            small_changes + 1
        } else {
            0
        };

        let fresh = last_attempt.as_ref() != Some(&pattern);
        let settled = stable >= STABLE_PATTERN_ITERS && fresh;
        let stalled = small_changes >= STALL_ITERS;
        let wanted = settled || since_attempt >= FORCED_ATTEMPT_EVERY || stalled;
        let affordable = cg_ops <= 2 * iterations + CG_ALLOWANCE;
        if wanted && (affordable || (stalled && fresh)) {
            last_attempt = Some(pattern.clone());
            since_attempt = 0;
            match try_certify(
                prob,
                &mut z,
                &mut az,
                &mut f,
                kkt_tol,
                m,
                &mut cg_ops,
                &mut trace,
                settings,
            ) {
                Some(true) => {
                    status = SolveStatus::Certified;
                    break;
                }
                Some(false) => {
                    ym.copy_from_slice(&z);
                    aym.copy_from_slice(&az);
                    t = T::one();
                    momentum_reset = true;
                    for (i, code) in pattern.iter_mut().enumerate() {
                        *code = pen.pattern_code(i, z[i]);
                    }
                }
                None => {}
            }
        }
        if stalled {
            ever_stalled = true;
            small_changes = 0;
        }
    }
    if status != SolveStatus::Certified && ever_stalled {
        status = SolveStatus::Stalled;
    }

    let kkt_violation = prob.kkt_violation(&z, &az);
    if status != SolveStatus::Certified && kkt_violation <= kkt_tol {
        status = SolveStatus::Certified;
    }
    Solution {
        z,
        status,
        iterations,
        objective: f,
        kkt_violation,
        kkt_tol,
        lipschitz: lip,
        trace,
    }
}

/// Runs one active-set step from `z`. Returns `Some(true)` when the result is
/// certified optimal, `Some(false)` when the iterate moved but is not yet
/// optimal, `None` when nothing changed.
#[allow(clippy::too_many_arguments)]
fn try_certify<T: Real>(
    prob: &Composite<'_, T>,
    z: &mut Vec<T>,
    az: &mut Vec<T>,
    f: &mut T,
    kkt_tol: T,
    max_free: usize,
    cg_ops: &mut usize,
    trace: &mut Vec<T>,
    settings: &SolverSettings<T>,
) -> Option<bool> {
    let refined = active_set_step(prob, z, az, max_free, kkt_tol, cg_ops)?;
    if !(refined.objective <= *f + slack(*f)) {
        return None;
    }
    *z = refined.z;
    *az = refined.az;
    *f = refined.objective;
    if settings.record_trace {
        trace.push(*f);
    }
    if refined.full && prob.kkt_violation(z, az) <= kkt_tol {
        return Some(true);
    }
    Some(false)
}

fn active_set_step<T: Real>(
    prob: &Composite<'_, T>,
    z: &[T],
    az: &[T],
    max_free: usize,
    kkt_tol: T,
    cg_ops: &mut usize,
) -> Option<Refined<T>> {
    let op = prob.op;
    let n = z.len();
    let mut free = Vec::new();
    let mut slopes = Vec::new();
    let mut bounds = Vec::new();
    for (i, &v) in z.iter().enumerate() {
        if let CoordState::Free {
            slope,
            lower,
            upper,
        } = prob.penalty.state(i, v)
        {
            free.push(i);
            slopes.push(slope);
            bounds.push((lower, upper));
        }
    }
    if free.is_empty() {
        return Some(Refined {
            z: z.to_vec(),
            az: az.to_vec(),
            objective: prob.objective(z, az),
            full: true,
        });
    }
    if free.len() > max_free {
        return None;
    }

    let r: Vec<T> = prob.y.iter().zip(az).map(|(&y, &a)| y - a).collect();
    let atr = op.adjoint(&r);
    let half = T::lit(0.5);
    let rhs: Vec<T> = free
        .iter()
        .zip(&slopes)
        .map(|(&i, &s)| atr[i] - half * s)
        .collect();

    // CG on (A_Fᵀ A_F) d = rhs.
    let k = free.len();
    let mut embed = vec![T::zero(); n];
    let mut a_emb = vec![T::zero(); op.out_dim()];
    let mut full_back = vec![T::zero(); n];
    let mut hess = |p: &[T], out: &mut [T]| {
        for (&i, &v) in free.iter().zip(p) {
            embed[i] = v;
        }
        op.apply_into(&embed, &mut a_emb);
        op.adjoint_into(&a_emb, &mut full_back);
        for (o, &i) in out.iter_mut().zip(&free) {
            *o = full_back[i];
            embed[i] = T::zero();
        }
    };
    let mut d = vec![T::zero(); k];
    let mut res = rhs.clone();
    let mut p = res.clone();
    let mut hp = vec![T::zero(); k];
    let mut rs = dot(&res, &res);
    // The free-set gradient at the step is 2·res, so a residual well inside
    // the optimality tolerance is as good as an exact solve.
    let tol = (T::epsilon() * T::lit(10.0) * rs.sqrt()).max(T::lit(0.05) * kkt_tol);
    let max_cg = (4 * k + 20).min(400);
    for _ in 0..max_cg {
        if res.iter().fold(T::zero(), |a, &v| a.max(v.abs())) <= tol {
            break;
        }
        hess(&p, &mut hp);
        *cg_ops += 2;
        let php = dot(&p, &hp);
        if !(php > T::zero()) {
            break;
        }
        let alpha = rs / php;
        for j in 0..k {
            d[j] += alpha * p[j];
            res[j] -= alpha * hp[j];
        }
        let rs_new = dot(&res, &res);
        let b = rs_new / rs;
        rs = rs_new;
        for j in 0..k {
            p[j] = res[j] + b * p[j];
        }
    }

    let mut d_full = vec![T::zero(); n];
    for (&i, &v) in free.iter().zip(&d) {
        d_full[i] = v;
    }
    let ad = op.apply(&d_full);
    let ad_sq = dot(&ad, &ad);
    let r_ad = dot(&r, &ad);
    let s_d = dot(&slopes, &d);
    let two = T::lit(2.0);
    // q(α) = ‖r − α Ad‖² + α s·d: minimized at α*.
    let alpha_star = if ad_sq > T::zero() {
        (two * r_ad - s_d) / (two * ad_sq)
    } else if s_d - two * r_ad < T::zero() {
        T::infinity()
    } else {
        T::zero()
    };
    let mut alpha_max = T::infinity();
    for (j, &dj) in d.iter().enumerate() {
        let (lo, hi) = bounds[j];
        let zi = z[free[j]];
        let lim = if dj > T::zero() {
            (hi - zi) / dj
        } else if dj < T::zero() {
            (lo - zi) / dj
        } else {
            T::infinity()
        };
        alpha_max = alpha_max.min(lim);
    }
    let alpha = alpha_star.min(alpha_max);
    if !(alpha > T::zero()) || !alpha.is_finite() {
        return None;
    }
    let full = alpha_star <= alpha_max;

    let mut z_new = z.to_vec();
    for (j, &i) in free.iter().enumerate() {
        let dj = d[j];
        let (lo, hi) = bounds[j];
        let target = z[i] + alpha * dj;
        z_new[i] = if !full && dj > T::zero() && (hi - z[i]) / dj <= alpha {
            hi
        } else if !full && dj < T::zero() && (lo - z[i]) / dj <= alpha {
            lo
        } else {
            target
        };
    }
    let az_new = op.apply(&z_new);
    let objective = prob.objective(&z_new, &az_new);
    Some(Refined {
        z: z_new,
        az: az_new,
        objective,
        full,
    })
}
