//! Linear operators: the sensing matrices, synthesis dictionaries and their
//! compositions that the solvers see only through `apply` / `adjoint`.

mod daubechies;
mod dense;
mod noiselet;
mod wavelet;

use std::sync::Arc;

pub use dense::{gaussian_sensing, GaussianMatrix};
pub use noiselet::{noiselet_forward_complex, noiselet_inverse_complex, NoiseletOperator};
pub use wavelet::{dwt_forward, dwt_inverse, Dwt, WaveletConfig, WaveletLayout};

use crate::linalg::DenseMatrix;
use crate::scalar::{dot, norm, Real};

/// A real linear map `R^in_dim -> R^out_dim` together with its adjoint.
///
/// Implementations are immutable after construction and may be shared across
/// threads.
pub trait LinearOperator<T: Real>: Send + Sync {
    fn in_dim(&self) -> usize;

    fn out_dim(&self) -> usize;

    /// `out = A x`; `x.len() == in_dim`, `out.len() == out_dim`.
    fn apply_into(&self, x: &[T], out: &mut [T]);

    /// `out = Aᵀ u`; `u.len() == out_dim`, `out.len() == in_dim`.
    fn adjoint_into(&self, u: &[T], out: &mut [T]);

    fn apply(&self, x: &[T]) -> Vec<T> {
        let mut out = vec![T::zero(); self.out_dim()];
        self.apply_into(x, &mut out);
        out
    }

    fn adjoint(&self, u: &[T]) -> Vec<T> {
        let mut out = vec![T::zero(); self.in_dim()];
        self.adjoint_into(u, &mut out);
        out
    }

    /// A known upper bound on the spectral norm, when one is available without
    /// computation (orthonormal transforms, identities).
    fn norm_bound(&self) -> Option<T> {
        None
    }

    fn is_identity(&self) -> bool {
        false
    }
}

impl<T: Real, O: LinearOperator<T> + ?Sized> LinearOperator<T> for &O {
    fn in_dim(&self) -> usize {
        (**self).in_dim()
    }
    fn out_dim(&self) -> usize {
        (**self).out_dim()
    }
    fn apply_into(&self, x: &[T], out: &mut [T]) {
        (**self).apply_into(x, out)
    }
    fn adjoint_into(&self, u: &[T], out: &mut [T]) {
        (**self).adjoint_into(u, out)
    }
    fn norm_bound(&self) -> Option<T> {
        (**self).norm_bound()
    }
    fn is_identity(&self) -> bool {
        (**self).is_identity()
    }
}

impl<T: Real, O: LinearOperator<T> + ?Sized> LinearOperator<T> for Arc<O> {
    fn in_dim(&self) -> usize {
        (**self).in_dim()
    }
    fn out_dim(&self) -> usize {
        (**self).out_dim()
    }
    fn apply_into(&self, x: &[T], out: &mut [T]) {
        (**self).apply_into(x, out)
    }
    fn adjoint_into(&self, u: &[T], out: &mut [T]) {
        (**self).adjoint_into(u, out)
    }
    fn norm_bound(&self) -> Option<T> {
        (**self).norm_bound()
    }
    fn is_identity(&self) -> bool {
        (**self).is_identity()
    }
}

pub type SharedOperator<T> = Arc<dyn LinearOperator<T>>;

#[derive(Clone, Copy, Debug)]
pub struct Identity {
    n: usize,
}

impl Identity {
    pub fn new(n: usize) -> Self {
        Self { n }
    }
}

impl<T: Real> LinearOperator<T> for Identity {
    fn in_dim(&self) -> usize {
        self.n
    }
    fn out_dim(&self) -> usize {
        self.n
    }
    fn apply_into(&self, x: &[T], out: &mut [T]) {
        out.copy_from_slice(x);
    }
    fn adjoint_into(&self, u: &[T], out: &mut [T]) {
        out.copy_from_slice(u);
    }
    fn norm_bound(&self) -> Option<T> {
        Some(T::one())
    }
    fn is_identity(&self) -> bool {
        true
    }
}

#[derive(Clone, Debug)]
pub struct Diagonal<T> {
    diag: Vec<T>,
}

impl<T: Real> Diagonal<T> {
    pub fn new(diag: Vec<T>) -> Self {
        Self { diag }
    }
}

impl<T: Real> LinearOperator<T> for Diagonal<T> {
    fn in_dim(&self) -> usize {
        self.diag.len()
    }
    fn out_dim(&self) -> usize {
        self.diag.len()
    }
    fn apply_into(&self, x: &[T], out: &mut [T]) {
        for ((o, &xi), &d) in out.iter_mut().zip(x).zip(&self.diag) {
            *o = d * xi;
        }
    }
    fn adjoint_into(&self, u: &[T], out: &mut [T]) {
        self.apply_into(u, out)
    }
    fn norm_bound(&self) -> Option<T> {
        Some(crate::scalar::max_abs(&self.diag))
    }
}

/// `outer ∘ inner`, i.e. `x ↦ outer(inner(x))`.
#[derive(Clone, Debug)]
pub struct Composed<A, B> {
    outer: A,
    inner: B,
}

impl<A, B> Composed<A, B> {
    /// Panics if the inner output and outer input dimensions differ.
    pub fn new<T: Real>(outer: A, inner: B) -> Self
    where
        A: LinearOperator<T>,
        B: LinearOperator<T>,
    {
        assert_eq!(
            outer.in_dim(),
            inner.out_dim(),
            "composition dimension mismatch"
        );
        Self { outer, inner }
    }
}

impl<T: Real, A: LinearOperator<T>, B: LinearOperator<T>> LinearOperator<T> for Composed<A, B> {
    fn in_dim(&self) -> usize {
        self.inner.in_dim()
    }
    fn out_dim(&self) -> usize {
        self.outer.out_dim()
    }
    fn apply_into(&self, x: &[T], out: &mut [T]) {
        let mid = self.inner.apply(x);
        self.outer.apply_into(&mid, out);
    }
    fn adjoint_into(&self, u: &[T], out: &mut [T]) {
        let mid = self.outer.adjoint(u);
        self.inner.adjoint_into(&mid, out);
    }
    fn norm_bound(&self) -> Option<T> {
        Some(self.outer.norm_bound()? * self.inner.norm_bound()?)
    }
}

/// `c · A`
#[derive(Clone, Debug)]
pub struct Scaled<A, T> {
    op: A,
    factor: T,
}

impl<A, T> Scaled<A, T> {
    pub fn new(op: A, factor: T) -> Self {
        Self { op, factor }
    }
}

impl<T: Real, A: LinearOperator<T>> LinearOperator<T> for Scaled<A, T> {
    fn in_dim(&self) -> usize {
        self.op.in_dim()
    }
    fn out_dim(&self) -> usize {
        self.op.out_dim()
    }
    fn apply_into(&self, x: &[T], out: &mut [T]) {
        self.op.apply_into(x, out);
        out.iter_mut().for_each(|v| *v *= self.factor);
    }
    fn adjoint_into(&self, u: &[T], out: &mut [T]) {
        self.op.adjoint_into(u, out);
        out.iter_mut().for_each(|v| *v *= self.factor);
    }
    fn norm_bound(&self) -> Option<T> {
        Some(self.op.norm_bound()? * self.factor.abs())
    }
}

/// Vertical stack `[top; bottom]` of two operators sharing an input space.
#[derive(Clone, Debug)]
pub struct Stacked<A, B> {
    top: A,
    bottom: B,
}

impl<A, B> Stacked<A, B> {
    pub fn new<T: Real>(top: A, bottom: B) -> Self
    where
        A: LinearOperator<T>,
        B: LinearOperator<T>,
    {
        assert_eq!(top.in_dim(), bottom.in_dim(), "stack input mismatch");
        Self { top, bottom }
    }
}

impl<T: Real, A: LinearOperator<T>, B: LinearOperator<T>> LinearOperator<T> for Stacked<A, B> {
    fn in_dim(&self) -> usize {
        self.top.in_dim()
    }
    fn out_dim(&self) -> usize {
        self.top.out_dim() + self.bottom.out_dim()
    }
    fn apply_into(&self, x: &[T], out: &mut [T]) {
        let (a, b) = out.split_at_mut(self.top.out_dim());
        self.top.apply_into(x, a);
        self.bottom.apply_into(x, b);
    }
    fn adjoint_into(&self, u: &[T], out: &mut [T]) {
        let (a, b) = u.split_at(self.top.out_dim());
        self.top.adjoint_into(a, out);
        let lower = self.bottom.adjoint(b);
        for (o, v) in out.iter_mut().zip(lower) {
            *o += v;
        }
    }
    fn norm_bound(&self) -> Option<T> {
        let a = self.top.norm_bound()?;
        let b = self.bottom.norm_bound()?;
        Some((a * a + b * b).sqrt())
    }
}

/// Builds the explicit `out_dim × in_dim` matrix by applying `op` to the
/// standard basis.
pub fn materialize<T: Real, O: LinearOperator<T> + ?Sized>(op: &O) -> DenseMatrix<T> {
    let (m, n) = (op.out_dim(), op.in_dim());
    let mut mat = DenseMatrix::zeros(m, n);
    let mut e = vec![T::zero(); n];
    let mut col = vec![T::zero(); m];
    for j in 0..n {
        e[j] = T::one();
        op.apply_into(&e, &mut col);
        for (i, &v) in col.iter().enumerate() {
            mat[(i, j)] = v;
        }
        e[j] = T::zero();
    }
    mat
}

/// Relative mismatch `|⟨Ax,u⟩ − ⟨x,Aᵀu⟩| / (‖Ax‖‖u‖ + ‖x‖‖Aᵀu‖)` for one
/// vector pair. Zero when both sides vanish.
pub fn adjoint_mismatch<T: Real, O: LinearOperator<T> + ?Sized>(op: &O, x: &[T], u: &[T]) -> T {
    let ax = op.apply(x);
    let atu = op.adjoint(u);
    let lhs = dot(&ax, u);
    let rhs = dot(x, &atu);
    let scale = norm(&ax) * norm(u) + norm(x) * norm(&atu);
    if scale == T::zero() {
        (lhs - rhs).abs()
    } else {
        (lhs - rhs).abs() / scale
    }
}
