//! Fast noiselet transform and the real, row-subsampled sensing operator
//! built from it.
//!
//! The complex transform of length `n = 2^J` follows the noiselet recursion:
//! a length-`2b` block is produced from the transforms `u0`, `u1` of its two
//! halves by
//!
//! ```text
//! out[2r]   = ((1 - i) u0[r] + (1 + i) u1[r]) / 2
//! out[2r+1] = ((1 + i) u0[r] + (1 - i) u1[r]) / 2
//! ```
//!
//! with the length-1 transform equal to the identity. The resulting matrix is
//! unitary, and row `k` is the complex conjugate of row `n - 1 - k`. For real
//! inputs, the real parts and imaginary parts of rows `0..n/2`, each scaled by
//! `√2`, therefore form a real orthonormal basis. That real transform is what
//! the sensing operator subsamples.

use num_complex::Complex;
use rand::Rng;

use super::LinearOperator;
use crate::error::{Error, Result};
use crate::scalar::Real;

fn butterfly<T: Real>() -> [[Complex<T>; 2]; 2] {
    let h = T::lit(0.5);
    let minus = Complex::new(h, -h);
    let plus = Complex::new(h, h);
    [[minus, plus], [plus, minus]]
}

/// In-place unitary noiselet transform. `data.len()` must be a power of two.
pub fn noiselet_forward_complex<T: Real>(data: &mut [Complex<T>]) {
    let n = data.len();
    assert!(
        n.is_power_of_two(),
        "noiselet length must be a power of two"
    );
    let c = butterfly::<T>();
    let mut scratch = vec![Complex::new(T::zero(), T::zero()); n];
    let mut half = 1;
    while half < n {
        let block = 2 * half;
        for start in (0..n).step_by(block) {
            let (u0, u1) = data[start..start + block].split_at(half);
            let out = &mut scratch[..block];
            for r in 0..half {
                out[2 * r] = c[0][0] * u0[r] + c[0][1] * u1[r];
                out[2 * r + 1] = c[1][0] * u0[r] + c[1][1] * u1[r];
            }
            data[start..start + block].copy_from_slice(out);
        }
        half = block;
    }
}

/// Inverse (= conjugate transpose) of [`noiselet_forward_complex`].
pub fn noiselet_inverse_complex<T: Real>(data: &mut [Complex<T>]) {
    let n = data.len();
    assert!(
        n.is_power_of_two(),
        "noiselet length must be a power of two"
    );
    let c = butterfly::<T>();
    let cc = [
        [c[0][0].conj(), c[0][1].conj()],
        [c[1][0].conj(), c[1][1].conj()],
    ];
    let mut scratch = vec![Complex::new(T::zero(), T::zero()); n];
    let mut half = n / 2;
    while half >= 1 {
        let block = 2 * half;
        for start in (0..n).step_by(block) {
            let src = &data[start..start + block];
            let out = &mut scratch[..block];
            for r in 0..half {
                let (a, b) = (src[2 * r], src[2 * r + 1]);
                out[r] = cc[0][0] * a + cc[1][0] * b;
                out[half + r] = cc[0][1] * a + cc[1][1] * b;
            }
            data[start..start + block].copy_from_slice(out);
        }
        half /= 2;
    }
}

/// Real orthonormal noiselet transform restricted to a set of rows.
///
/// Row `j < n/2` of the full real transform is `√2·Re(u_j)`, row `j ≥ n/2` is
/// `√2·Im(u_{j-n/2})`, where `u_k` are the complex noiselet rows. For `n = 1`
/// the transform is the identity.
#[derive(Clone, Debug)]
pub struct NoiseletOperator {
    n: usize,
    rows: Vec<usize>,
}

impl NoiseletOperator {
    pub fn new(n: usize, row_subset: Vec<usize>) -> Result<Self> {
        if n == 0 || !n.is_power_of_two() {
            return Err(Error::InvalidDimension(format!(
                "noiselet length must be a power of two, got {n}"
            )));
        }
        let mut seen = vec![false; n];
        for &r in &row_subset {
            if r >= n {
                return Err(Error::InvalidSubset(format!(
                    "row index {r} out of range for length {n}"
                )));
            }
            if std::mem::replace(&mut seen[r], true) {
                return Err(Error::InvalidSubset(format!("duplicate row index {r}")));
            }
        }
        Ok(Self {
            n,
            rows: row_subset,
        })
    }

    pub fn full(n: usize) -> Result<Self> {
        Self::new(n, (0..n).collect())
    }

    /// Keeps `m` rows drawn uniformly without replacement, in ascending order.
    pub fn random<R: Rng + ?Sized>(n: usize, m: usize, rng: &mut R) -> Result<Self> {
        if m > n {
            return Err(Error::InvalidSubset(format!(
                "cannot keep {m} rows of a length-{n} transform"
            )));
        }
        let mut rows = rand::seq::index::sample(rng, n, m).into_vec();
        rows.sort_unstable();
        Self::new(n, rows)
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn rows(&self) -> &[usize] {
        &self.rows
    }

    /// Full real transform of `x` (all `n` rows).
    pub fn transform_full<T: Real>(&self, x: &[T]) -> Vec<T> {
        let n = self.n;
        if n == 1 {
            return x.to_vec();
        }
        let mut buf: Vec<Complex<T>> = x.iter().map(|&v| Complex::new(v, T::zero())).collect();
        noiselet_forward_complex(&mut buf);
        let s = T::SQRT_2();
        let half = n / 2;
        let mut out = vec![T::zero(); n];
        for k in 0..half {
            out[k] = s * buf[k].re;
            out[half + k] = s * buf[k].im;
        }
        out
    }

    /// Transpose (and inverse) of [`Self::transform_full`].
    pub fn inverse_full<T: Real>(&self, v: &[T]) -> Vec<T> {
        let n = self.n;
        if n == 1 {
            return v.to_vec();
        }
        let half = n / 2;
        let mut buf = vec![Complex::new(T::zero(), T::zero()); n];
        for k in 0..half {
            buf[k] = Complex::new(v[k], v[half + k]);
        }
        noiselet_inverse_complex(&mut buf);
        let s = T::SQRT_2();
        buf.iter().map(|c| s * c.re).collect()
    }
}

impl<T: Real> LinearOperator<T> for NoiseletOperator {
    fn in_dim(&self) -> usize {
        self.n
    }
    fn out_dim(&self) -> usize {
        self.rows.len()
    }
    fn apply_into(&self, x: &[T], out: &mut [T]) {
        let full = self.transform_full(x);
        for (o, &r) in out.iter_mut().zip(&self.rows) {
            *o = full[r];
        }
    }
    fn adjoint_into(&self, u: &[T], out: &mut [T]) {
        let mut padded = vec![T::zero(); self.n];
        for (&v, &r) in u.iter().zip(&self.rows) {
            padded[r] = v;
        }
        out.copy_from_slice(&self.inverse_full(&padded));
    }
    fn norm_bound(&self) -> Option<T> {
        Some(T::one())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::materialize;

    #[test]
    fn length_one_is_identity() {
        let op = NoiseletOperator::new(1, vec![0]).unwrap();
        assert_eq!(LinearOperator::<f64>::apply(&op, &[2.5]), vec![2.5]);
        assert_eq!(LinearOperator::<f64>::adjoint(&op, &[-1.0]), vec![-1.0]);
    }

    #[test]
    fn complex_rows_pair_by_conjugation() {
        let n = 8;
        let mut rows = Vec::new();
        for j in 0..n {
            let mut e = vec![Complex::new(0.0f64, 0.0); n];
            e[j] = Complex::new(1.0, 0.0);
            noiselet_forward_complex(&mut e);
            rows.push(e);
        }
        // rows[.][j] holds column j; row k of U is (rows[j][k])_j
        for k in 0..n {
            for col in &rows {
                assert!((col[k] - col[n - 1 - k].conj()).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn complex_round_trip() {
        let mut v: Vec<Complex<f64>> = (0..16)
            .map(|i| Complex::new(i as f64 * 0.3 - 1.0, (i * i) as f64 * 0.01))
            .collect();
        let orig = v.clone();
        noiselet_forward_complex(&mut v);
        noiselet_inverse_complex(&mut v);
        for (a, b) in v.iter().zip(&orig) {
            assert!((a - b).norm() < 1e-13);
        }
    }

    #[test]
    fn subset_picks_rows_of_full_transform() {
        let full = NoiseletOperator::full(8).unwrap();
        let sub = NoiseletOperator::new(8, vec![0, 3, 5]).unwrap();
        let x = [0.2, -1.0, 3.0, 0.5, 0.0, 1.5, -0.7, 2.2];
        let fx: Vec<f64> = full.apply(&x);
        let sx: Vec<f64> = sub.apply(&x);
        assert_eq!(sx.len(), 3);
        for (i, &r) in [0usize, 3, 5].iter().enumerate() {
            assert!((sx[i] - fx[r]).abs() < 1e-14);
        }
        let t = materialize::<f64, _>(&full);
        assert!((t.mul_vec(&x)[3] - fx[3]).abs() < 1e-14);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(matches!(
            NoiseletOperator::new(6, vec![0]),
            Err(Error::InvalidDimension(_))
        ));
        assert!(matches!(
            NoiseletOperator::new(8, vec![1, 1]),
            Err(Error::InvalidSubset(_))
        ));
        assert!(matches!(
            NoiseletOperator::new(8, vec![8]),
            Err(Error::InvalidSubset(_))
        ));
    }
}
