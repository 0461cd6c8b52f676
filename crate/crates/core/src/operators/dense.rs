use rand::Rng;

use super::LinearOperator;
use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;
use crate::scalar::{norm, standard_normal, Real};

impl<T: Real> LinearOperator<T> for DenseMatrix<T> {
    fn in_dim(&self) -> usize {
        self.cols()
    }
    fn out_dim(&self) -> usize {
        self.rows()
    }
    fn apply_into(&self, x: &[T], out: &mut [T]) {
        self.mul_vec_into(x, out)
    }
    fn adjoint_into(&self, u: &[T], out: &mut [T]) {
        self.tr_mul_vec_into(u, out)
    }
}

/// Gaussian sensing matrix whose columns all have unit Euclidean norm.
#[derive(Clone, Debug)]
pub struct GaussianMatrix<T> {
    entries: DenseMatrix<T>,
}

impl<T: Real> GaussianMatrix<T> {
    pub fn matrix(&self) -> &DenseMatrix<T> {
        &self.entries
    }

    pub fn into_matrix(self) -> DenseMatrix<T> {
        self.entries
    }

    pub fn column_norms(&self) -> Vec<T> {
        (0..self.entries.cols())
            .map(|j| norm(&self.entries.column(j)))
            .collect()
    }
}

/// Draws an `m × n` matrix with i.i.d. standard normal entries and rescales
/// every column to unit norm.
pub fn gaussian_sensing<T: Real, R: Rng + ?Sized>(
    m: usize,
    n: usize,
    rng: &mut R,
) -> Result<GaussianMatrix<T>> {
    if m == 0 || n == 0 {
        return Err(Error::InvalidDimension(format!(
            "Gaussian sensing matrix must be non-empty, got {m}x{n}"
        )));
    }
    let mut entries = DenseMatrix::from_fn(m, n, |_, _| standard_normal::<T, R>(rng));
    for j in 0..n {
        let mut sq = T::zero();
        for i in 0..m {
            sq += entries[(i, j)] * entries[(i, j)];
        }
        // An all-zero column has probability zero; guard anyway so the
        // invariant cannot silently break.
        if sq == T::zero() {
            entries[(0, j)] = T::one();
            continue;
        }
        let inv = sq.sqrt().recip();
        for i in 0..m {
            entries[(i, j)] *= inv;
        }
    }
    Ok(GaussianMatrix { entries })
}

impl<T: Real> LinearOperator<T> for GaussianMatrix<T> {
    fn in_dim(&self) -> usize {
        self.entries.cols()
    }
    fn out_dim(&self) -> usize {
        self.entries.rows()
    }
    fn apply_into(&self, x: &[T], out: &mut [T]) {
        self.entries.mul_vec_into(x, out)
    }
    fn adjoint_into(&self, u: &[T], out: &mut [T]) {
        self.entries.tr_mul_vec_into(u, out)
    }
}
