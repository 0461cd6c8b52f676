//! Exact active-set solver for problems with few measurements.
//!
//! A generalization of feature-sign search to piecewise-linear separable
//! penalties. Every coordinate is either pinned on a breakpoint or free inside
//! one linear segment of its penalty. For a fixed pattern the objective is a
//! quadratic in the free coordinates; its minimizer comes from a dense
//! Cholesky solve, and a discrete line search over the breakpoint crossings
//! toward it keeps the objective decreasing. Once the free coordinates are
//! optimal, the pinned coordinate with the largest first-order violation is
//! moved off its breakpoint by an exact one-dimensional step. When that leaves
//! more free coordinates than rows, the pattern has a direction that leaves
//! the fit unchanged and lowers the penalty linearly; following it to a
//! breakpoint restores a nonsingular pattern.

use super::penalty::CoordState;
use super::prox_grad::Composite;
use crate::linalg::{Cholesky, DenseMatrix};
use crate::scalar::{dot, norm, Real};

/// Row count above which dense Gram solves stop paying off.
const MAX_ROWS: usize = 400;
const MAX_CONDITION: f64 = 1e13;
const POLISH_STEPS: usize = 3;

pub(crate) fn applicable(rows: usize, cols: usize) -> bool {
    rows > 0 && rows <= MAX_ROWS && cols > 0
}

pub(crate) struct Outcome<T> {
    pub z: Vec<T>,
    pub az: Vec<T>,
    pub objective: T,
    pub certified: bool,
    pub steps: usize,
}

/// Columns of `A` and their inner products, materialized on first use.
struct Columns<T> {
    slot: Vec<Option<usize>>,
    data: Vec<Vec<T>>,
    /// `inner[a][b] = ⟨col a, col b⟩` for `b ≤ a`.
    inner: Vec<Vec<T>>,
}

impl<T: Real> Columns<T> {
    fn new(n: usize) -> Self {
        Self {
            slot: vec![None; n],
            data: Vec::new(),
            inner: Vec::new(),
        }
    }

    fn slot(&mut self, prob: &Composite<'_, T>, i: usize) -> usize {
        if let Some(k) = self.slot[i] {
            return k;
        }
        let mut e = vec![T::zero(); self.slot.len()];
        e[i] = T::one();
        let col = prob.op.apply(&e);
        let row: Vec<T> = self
            .data
            .iter()
            .map(|c| dot(c, &col))
            .chain(std::iter::once(dot(&col, &col)))
            .collect();
        self.data.push(col);
        self.inner.push(row);
        let k = self.data.len() - 1;
        self.slot[i] = Some(k);
        k
    }

    fn inner(&self, a: usize, b: usize) -> T {
        if b <= a {
            self.inner[a][b]
        } else {
            self.inner[b][a]
        }
    }

    fn gram(&self, slots: &[usize]) -> DenseMatrix<T> {
        let k = slots.len();
        DenseMatrix::from_fn(k, k, |a, b| self.inner(slots[a], slots[b]))
    }
}

fn factor<T: Real>(g: &DenseMatrix<T>) -> Option<Cholesky<T>> {
    Cholesky::factor(g)
        .ok()
        .filter(|c| c.pivot_condition().to_f64_lossy() < MAX_CONDITION)
}

/// Free coordinates and their segment slopes at `z`.
fn free_set<T: Real>(prob: &Composite<'_, T>, z: &[T]) -> Vec<(usize, T)> {
    (0..z.len())
        .filter_map(|i| match prob.penalty.state(i, z[i]) {
            CoordState::Free { slope, .. } => Some((i, slope)),
            CoordState::Pinned { .. } => None,
        })
        .collect()
}

struct State<T> {
    z: Vec<T>,
    az: Vec<T>,
    f: T,
}

/// Line search from `st.z` along `d` (on the free coordinates) over the
/// breakpoint crossings, plus `α = 1` unless `linear`. Moves to the best
/// candidate if it lowers the objective. Returns `Some(full)` on a move, where
/// `full` means the unit step was taken without crossing a breakpoint.
fn line_search<T: Real>(
    prob: &Composite<'_, T>,
    st: &mut State<T>,
    free: &[(usize, T)],
    d: &[T],
    ad: &[T],
    linear: bool,
) -> Option<bool> {
    let pen = prob.penalty;
    let mut alphas = Vec::new();
    if !linear {
        alphas.push(T::one());
    }
    for (&(i, _), &dk) in free.iter().zip(d) {
        if dk == T::zero() {
            continue;
        }
        for &(p, _) in pen.kinks(i).points() {
            let a = (p - st.z[i]) / dk;
            if a > T::zero() && (linear || a < T::one()) {
                alphas.push(a);
            }
        }
    }
    alphas.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    alphas.dedup();
    let crossings = alphas.len() - usize::from(!linear);

    let pen_free: T = free
        .iter()
        .fold(T::zero(), |s, &(i, _)| s + pen.kinks(i).value(st.z[i]));
    let pen_rest = pen.value(&st.z) - pen_free;
    let eval = |alpha: T| {
        let fid = st
            .az
            .iter()
            .zip(ad)
            .zip(prob.y)
            .fold(T::zero(), |s, ((&a, &b), &y)| {
                let r = y - (a + alpha * b);
                s + r * r
            });
        let pf = free.iter().zip(d).fold(T::zero(), |s, (&(i, _), &dk)| {
            s + pen.kinks(i).value(st.z[i] + alpha * dk)
        });
        fid + pen_rest + pf
    };
    let (mut best_alpha, mut best_f) = (T::zero(), st.f);
    for &a in &alphas {
        let v = eval(a);
        if v < best_f {
            best_alpha = a;
            best_f = v;
        }
    }
    if best_alpha == T::zero() {
        return None;
    }
    let mut z = st.z.clone();
    for (&(i, _), &dk) in free.iter().zip(d) {
        let v = st.z[i];
        z[i] = v + best_alpha * dk;
        for &(p, _) in pen.kinks(i).points() {
            if dk != T::zero() && (p - v) / dk == best_alpha {
                z[i] = p;
            }
        }
    }
    let az: Vec<T> = st
        .az
        .iter()
        .zip(ad)
        .map(|(&a, &b)| a + best_alpha * b)
        .collect();
    let f = prob.objective(&z, &az);
    if !(f <= st.f) {
        return None;
    }
    *st = State { z, az, f };
    Some(!linear && best_alpha == T::one() && crossings == 0)
}

/// Runs the active-set method from `z0`. Returns `None` when no valid start
/// with at most `rows` free coordinates exists; otherwise the best point
/// reached, which is never worse than the start.
pub(crate) fn solve<T: Real>(
    prob: &Composite<'_, T>,
    z0: &[T],
    kkt_tol: T,
    max_steps: usize,
) -> Option<Outcome<T>> {
    let op = prob.op;
    let pen = prob.penalty;
    let n = op.in_dim();
    let m = op.out_dim();

    let mut z = z0.to_vec();
    if free_set(prob, &z).len() > m {
        z = (0..n).map(|i| pen.argmin_coord(i)).collect();
        if free_set(prob, &z).len() > m {
            return None;
        }
    }
    let az = op.apply(&z);
    let f = prob.objective(&z, &az);
    let mut st = State { z, az, f };
    let mut cols = Columns::new(n);
    let mut resid = vec![T::zero(); m];
    let mut grad = vec![T::zero(); n];
    let mut steps = 0usize;
    let mut polish = 0usize;
    let mut released: Option<usize> = None;

    // The fit is updated incrementally; refresh it exactly on exit.
    let finish = |st: State<T>, certified: bool, steps: usize| {
        let az = op.apply(&st.z);
        let objective = prob.objective(&st.z, &az);
        Some(Outcome {
            z: st.z,
            az,
            objective,
            certified,
            steps,
        })
    };

    while steps < max_steps {
        prob.gradient(&st.az, &mut resid, &mut grad);
        let mut worst_free = T::zero();
        let mut release: Option<(usize, T, T)> = None;
        for (i, &g) in grad.iter().enumerate() {
            match pen.state(i, st.z[i]) {
                CoordState::Free { slope, .. } => worst_free = worst_free.max((g + slope).abs()),
                CoordState::Pinned { lo, hi } => {
                    let (viol, dir) = if -g > hi {
                        (-g - hi, T::one())
                    } else if -g < lo {
                        (lo + g, -T::one())
                    } else {
                        continue;
                    };
                    if viol > kkt_tol && release.is_none_or(|(_, v, _)| viol > v) {
                        release = Some((i, viol, dir));
                    }
                }
            }
        }

        if worst_free > kkt_tol {
            polish += 1;
            if polish > POLISH_STEPS {
                return finish(st, false, steps);
            }
        } else if let Some((i, viol, dir)) = release {
            polish = 0;
            // Exact one-dimensional move off the breakpoint, stopping at the
            // next breakpoint in that direction.
            let slot = cols.slot(prob, i);
            let col_sq = cols.inner(slot, slot);
            if !(col_sq > T::zero()) {
                return finish(st, false, steps);
            }
            let v = st.z[i];
            let mut t = viol / (T::lit(2.0) * col_sq);
            let mut target = v + dir * t;
            for &(p, _) in pen.kinks(i).points() {
                let dist = (p - v) * dir;
                if dist > T::zero() && dist <= t {
                    t = dist;
                    target = p;
                }
            }
            let mut z = st.z.clone();
            z[i] = target;
            let step = target - v;
            let az: Vec<T> = st
                .az
                .iter()
                .zip(&cols.data[slot])
                .map(|(&a, &c)| a + step * c)
                .collect();
            let f = prob.objective(&z, &az);
            if !(f < st.f) {
                return finish(st, false, steps);
            }
            st = State { z, az, f };
            released = Some(i);
            prob.gradient(&st.az, &mut resid, &mut grad);
        } else {
            return finish(st, true, steps);
        }

        // Minimize over the current pattern.
        loop {
            steps += 1;
            let free = free_set(prob, &st.z);
            if free.is_empty() {
                break;
            }
            let slots: Vec<usize> = free.iter().map(|&(i, _)| cols.slot(prob, i)).collect();
            let chol = if free.len() <= m {
                factor(&cols.gram(&slots))
            } else {
                None
            };
            let (d, linear) = match chol {
                Some(chol) => {
                    let half = T::lit(0.5);
                    let rhs: Vec<T> = free.iter().map(|&(i, s)| -half * (grad[i] + s)).collect();
                    (chol.solve_vec(&rhs), false)
                }
                None => {
                    let Some(pos) = released.and_then(|j| free.iter().position(|&(i, _)| i == j))
                    else {
                        return finish(st, false, steps);
                    };
                    let rest: Vec<usize> = (0..free.len()).filter(|&q| q != pos).collect();
                    let rest_slots: Vec<usize> = rest.iter().map(|&q| slots[q]).collect();
                    let Some(chol_b) = factor(&cols.gram(&rest_slots)) else {
                        return finish(st, false, steps);
                    };
                    let rhs: Vec<T> = rest_slots
                        .iter()
                        .map(|&s| cols.inner(s, slots[pos]))
                        .collect();
                    let x = chol_b.solve_vec(&rhs);
                    let mut d = vec![T::zero(); free.len()];
                    for (&q, &xq) in rest.iter().zip(&x) {
                        d[q] = -xq;
                    }
                    d[pos] = T::one();
                    let slope = free
                        .iter()
                        .zip(&d)
                        .fold(T::zero(), |s, (&(_, sl), &dk)| s + sl * dk);
                    if slope > T::zero() {
                        d.iter_mut().for_each(|v| *v = -*v);
                    }
                    (d, true)
                }
            };
            let mut ad = vec![T::zero(); m];
            for (&slot, &dk) in slots.iter().zip(&d) {
                if dk != T::zero() {
                    for (o, &c) in ad.iter_mut().zip(&cols.data[slot]) {
                        *o += dk * c;
                    }
                }
            }
            if linear && norm(&ad) > T::lit(1e-8) * norm(&d) {
                // Not a null direction: the pattern is ill-conditioned.
                return finish(st, false, steps);
            }
            match line_search(prob, &mut st, &free, &d, &ad, linear) {
                None | Some(true) => break,
                Some(false) => {}
            }
            if steps >= max_steps {
                break;
            }
            prob.gradient(&st.az, &mut resid, &mut grad);
        }
    }
    finish(st, false, steps)
}
