use rand::Rng;

use crate::operators::LinearOperator;
use crate::scalar::{norm, standard_normal, Real};

/// Power iteration on `AᵀA`; returns an estimate of `σ_max(A)²`.
///
/// Stops early once successive estimates agree to 1e-12 relative. Returns zero
/// for the zero operator.
pub fn estimate_lipschitz<T, O, R>(op: &O, iters: usize, rng: &mut R) -> T
where
    T: Real,
    O: LinearOperator<T> + ?Sized,
    R: Rng + ?Sized,
{
    let n = op.in_dim();
    if n == 0 || op.out_dim() == 0 {
        return T::zero();
    }
    let mut v: Vec<T> = (0..n).map(|_| standard_normal(rng)).collect();
    let nv = norm(&v);
    v.iter_mut().for_each(|x| *x /= nv);
    let mut av = vec![T::zero(); op.out_dim()];
    let mut w = vec![T::zero(); n];
    let mut est = T::zero();
    for _ in 0..iters.max(1) {
        op.apply_into(&v, &mut av);
        op.adjoint_into(&av, &mut w);
        let nw = norm(&w);
        if nw == T::zero() {
            return T::zero();
        }
        let prev = est;
        est = nw;
        w.iter().zip(v.iter_mut()).for_each(|(&a, b)| *b = a / nw);
        if (est - prev).abs() <= T::lit(1e-12) * est {
            break;
        }
    }
    est
}
