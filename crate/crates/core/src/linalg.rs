//! Small dense linear algebra: row-major matrices and a Cholesky factorization.
//!
//! Only what the Kalman baseline and operator materialization need. Nothing
//! here is tuned for large matrices.

use std::ops::{Index, IndexMut};

use crate::error::{Error, Result};
use crate::scalar::{dot, Real};

#[derive(Clone, Debug, PartialEq)]
pub struct DenseMatrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Real> DenseMatrix<T> {
    pub fn new(rows: usize, cols: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::InvalidDimension(format!(
                "{rows}x{cols} matrix needs {} entries, got {}",
                rows * cols,
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        m
    }

    pub fn from_diagonal(diag: &[T]) -> Self {
        let mut m = Self::zeros(diag.len(), diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = d;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    #[inline]
    pub fn as_mut_slice(&mut self) -> &mut [T] {
        &mut self.data
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [T] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<T> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    /// `out = self * x`
    pub fn mul_vec_into(&self, x: &[T], out: &mut [T]) {
        debug_assert_eq!(x.len(), self.cols);
        debug_assert_eq!(out.len(), self.rows);
        for (i, o) in out.iter_mut().enumerate() {
            *o = dot(self.row(i), x);
        }
    }

    /// `out = selfᵀ * u`
    pub fn tr_mul_vec_into(&self, u: &[T], out: &mut [T]) {
        debug_assert_eq!(u.len(), self.rows);
        debug_assert_eq!(out.len(), self.cols);
        out.iter_mut().for_each(|o| *o = T::zero());
        for (i, &ui) in u.iter().enumerate() {
            if ui == T::zero() {
                continue;
            }
            for (o, &a) in out.iter_mut().zip(self.row(i)) {
                *o += ui * a;
            }
        }
    }

    pub fn mul_vec(&self, x: &[T]) -> Vec<T> {
        let mut out = vec![T::zero(); self.rows];
        self.mul_vec_into(x, &mut out);
        out
    }

    pub fn matmul(&self, rhs: &Self) -> Result<Self> {
        if self.cols != rhs.rows {
            return Err(Error::InvalidDimension(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        let mut out = Self::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            let orow = &mut out.data[i * rhs.cols..(i + 1) * rhs.cols];
            for (k, &a) in self.row(i).iter().enumerate() {
                if a == T::zero() {
                    continue;
                }
                for (o, &b) in orow.iter_mut().zip(rhs.row(k)) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    pub fn add(&self, rhs: &Self) -> Result<Self> {
        if self.rows != rhs.rows || self.cols != rhs.cols {
            return Err(Error::InvalidDimension(format!(
                "cannot add {}x{} and {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        let data = self
            .data
            .iter()
            .zip(&rhs.data)
            .map(|(&a, &b)| a + b)
            .collect();
        Ok(Self {
            rows: self.rows,
            cols: self.cols,
            data,
        })
    }

    pub fn sub(&self, rhs: &Self) -> Result<Self> {
        let neg = Self {
            rows: rhs.rows,
            cols: rhs.cols,
            data: rhs.data.iter().map(|&v| -v).collect(),
        };
        self.add(&neg)
    }

    /// Largest `|a_ij - a_ji|`.
    pub fn asymmetry(&self) -> T {
        if self.rows != self.cols {
            return T::infinity();
        }
        let mut worst = T::zero();
        for i in 0..self.rows {
            for j in (i + 1)..self.cols {
                worst = worst.max((self[(i, j)] - self[(j, i)]).abs());
            }
        }
        worst
    }

    /// Replaces the matrix by `(A + Aᵀ)/2`.
    pub fn symmetrize(&mut self) {
        let half = T::lit(0.5);
        for i in 0..self.rows {
            for j in (i + 1)..self.cols {
                let v = half * (self[(i, j)] + self[(j, i)]);
                self[(i, j)] = v;
                self[(j, i)] = v;
            }
        }
    }

    pub fn max_abs(&self) -> T {
        crate::scalar::max_abs(&self.data)
    }

    /// `AAᵀ` (`rows × rows`).
    pub fn gram_rows(&self) -> Self {
        let mut g = Self::zeros(self.rows, self.rows);
        for i in 0..self.rows {
            for j in i..self.rows {
                let v = dot(self.row(i), self.row(j));
                g[(i, j)] = v;
                g[(j, i)] = v;
            }
        }
        g
    }

    /// Largest squared singular value, by power iteration on the smaller of
    /// `AAᵀ` and `AᵀA`. Deterministic: starts from a fixed vector.
    pub fn spectral_norm_sq(&self) -> T {
        let g = if self.rows <= self.cols {
            self.gram_rows()
        } else {
            self.transpose().gram_rows()
        };
        let k = g.rows();
        if k == 0 {
            return T::zero();
        }
        let mut v: Vec<T> = (0..k)
            .map(|i| T::one() + T::lit(0.5) * T::lit((i as f64 * 0.618_033_988_75).fract()))
            .collect();
        let mut gv = vec![T::zero(); k];
        let mut est = T::zero();
        for _ in 0..1000 {
            let nv = crate::scalar::norm(&v);
            if nv == T::zero() {
                return T::zero();
            }
            v.iter_mut().for_each(|x| *x /= nv);
            g.mul_vec_into(&v, &mut gv);
            let next = dot(&v, &gv);
            std::mem::swap(&mut v, &mut gv);
            if (next - est).abs() <= T::lit(1e-13) * next {
                est = next;
                break;
            }
            est = next;
        }
        est
    }
}

impl<T> Index<(usize, usize)> for DenseMatrix<T> {
    type Output = T;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i * self.cols + j]
    }
}

impl<T> IndexMut<(usize, usize)> for DenseMatrix<T> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[i * self.cols + j]
    }
}

/// Lower-triangular Cholesky factor of a symmetric positive definite matrix.
#[derive(Clone, Debug)]
pub struct Cholesky<T> {
    lower: DenseMatrix<T>,
}

impl<T: Real> Cholesky<T> {
    /// Factors `a`. On failure the error reports the offending pivot and a
    /// diagonal-ratio condition estimate.
    pub fn factor(a: &DenseMatrix<T>) -> Result<Self> {
        let n = a.rows();
        if a.cols() != n {
            return Err(Error::InvalidDimension(format!(
                "Cholesky needs a square matrix, got {}x{}",
                n,
                a.cols()
            )));
        }
        let mut l = DenseMatrix::zeros(n, n);
        let mut min_pivot = T::infinity();
        let mut max_pivot = T::zero();
        for j in 0..n {
            let row_j = &l.data[j * n..j * n + j];
            let d = a[(j, j)] - dot(row_j, row_j);
            if !(d > T::zero()) || !d.is_finite() {
                let diag_max = (0..n).fold(T::zero(), |m, i| m.max(a[(i, i)].abs()));
                let diag_min = (0..n).fold(T::infinity(), |m, i| m.min(a[(i, i)].abs()));
                return Err(Error::Numerical(format!(
                    "matrix not positive definite: pivot {j} of {n} is {d:e}; \
                     diagonal range [{diag_min:e}, {diag_max:e}], \
                     pivot ratio so far {:e}",
                    if max_pivot > T::zero() {
                        max_pivot / min_pivot
                    } else {
                        T::infinity()
                    }
                )));
            }
            min_pivot = min_pivot.min(d);
            max_pivot = max_pivot.max(d);
            let ljj = d.sqrt();
            l[(j, j)] = ljj;
            for i in (j + 1)..n {
                let (head, tail) = l.data.split_at_mut(i * n);
                let s = a[(i, j)] - dot(&tail[..j], &head[j * n..j * n + j]);
                tail[j] = s / ljj;
            }
        }
        Ok(Self { lower: l })
    }

    /// Ratio of largest to smallest squared pivot; a cheap lower bound on the
    /// 2-norm condition number.
    pub fn pivot_condition(&self) -> T {
        let n = self.lower.rows();
        let (mut lo, mut hi) = (T::infinity(), T::zero());
        for i in 0..n {
            let d = self.lower[(i, i)] * self.lower[(i, i)];
            lo = lo.min(d);
            hi = hi.max(d);
        }
        hi / lo
    }

    pub fn solve_vec(&self, b: &[T]) -> Vec<T> {
        let n = self.lower.rows();
        let l = &self.lower;
        let mut y = b.to_vec();
        for i in 0..n {
            let mut s = y[i];
            for k in 0..i {
                s -= l[(i, k)] * y[k];
            }
            y[i] = s / l[(i, i)];
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in (i + 1)..n {
                s -= l[(k, i)] * y[k];
            }
            y[i] = s / l[(i, i)];
        }
        y
    }

    /// Solves `A X = B` column by column.
    pub fn solve_mat(&self, b: &DenseMatrix<T>) -> DenseMatrix<T> {
        let mut out = DenseMatrix::zeros(b.rows(), b.cols());
        for j in 0..b.cols() {
            let x = self.solve_vec(&b.column(j));
            for (i, v) in x.into_iter().enumerate() {
                out[(i, j)] = v;
            }
        }
        out
    }
}
