use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;
use crate::scalar::Real;

/// A known state-transition model `x_k ≈ f_k(x_{k−1})` in the signal domain.
pub trait Dynamics<T: Real>: Send + Sync {
    fn predict(&self, x: &[T]) -> Result<Vec<T>>;

    fn describe(&self) -> String;

    /// The transition as an explicit matrix, when it is linear.
    fn matrix(&self, n: usize) -> Option<DenseMatrix<T>> {
        let _ = n;
        None
    }
}

/// `f(x) = x`: coefficients are expected to stay put.
#[derive(Clone, Copy, Debug, Default)]
pub struct IdentityDynamics;

impl<T: Real> Dynamics<T> for IdentityDynamics {
    fn predict(&self, x: &[T]) -> Result<Vec<T>> {
        Ok(x.to_vec())
    }

    fn describe(&self) -> String {
        "identity".into()
    }

    fn matrix(&self, n: usize) -> Option<DenseMatrix<T>> {
        Some(DenseMatrix::identity(n))
    }
}

/// `x_next[dest[i]] = sign[i] · x[i]`, a permutation followed by a diagonal
/// ±1 scaling.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SignedPermutation {
    dest: Vec<usize>,
    negate: Vec<bool>,
}

impl SignedPermutation {
    pub fn new(dest: Vec<usize>, negate: Vec<bool>) -> Result<Self> {
        let n = dest.len();
        if negate.len() != n {
            return Err(Error::InvalidDimension(format!(
                "{} destinations but {} signs",
                n,
                negate.len()
            )));
        }
        let mut seen = vec![false; n];
        for &d in &dest {
            if d >= n || std::mem::replace(&mut seen[d], true) {
                return Err(Error::InvalidParameter(format!(
                    "destination list is not a permutation of 0..{n}"
                )));
            }
        }
        Ok(Self { dest, negate })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            dest: (0..n).collect(),
            negate: vec![false; n],
        }
    }

    pub fn len(&self) -> usize {
        self.dest.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dest.is_empty()
    }

    pub fn destinations(&self) -> &[usize] {
        &self.dest
    }

    pub fn negated(&self) -> &[bool] {
        &self.negate
    }

    pub fn apply<T: Real>(&self, x: &[T]) -> Vec<T> {
        let mut out = vec![T::zero(); x.len()];
        for ((&d, &neg), &v) in self.dest.iter().zip(&self.negate).zip(x) {
            out[d] = if neg { -v } else { v };
        }
        out
    }

    /// `self` after `first`: `x ↦ self(first(x))`.
    pub fn after(&self, first: &Self) -> Self {
        let dest = first.dest.iter().map(|&d| self.dest[d]).collect();
        let negate = first
            .dest
            .iter()
            .zip(&first.negate)
            .map(|(&d, &neg)| neg ^ self.negate[d])
            .collect();
        Self { dest, negate }
    }
}

impl<T: Real> Dynamics<T> for SignedPermutation {
    fn predict(&self, x: &[T]) -> Result<Vec<T>> {
        if x.len() != self.dest.len() {
            return Err(Error::InvalidDimension(format!(
                "state of length {} for a permutation of {}",
                x.len(),
                self.dest.len()
            )));
        }
        Ok(self.apply(x))
    }

    fn describe(&self) -> String {
        let flips = self.negate.iter().filter(|&&b| b).count();
        format!(
            "signed permutation of {} ({} sign flips)",
            self.len(),
            flips
        )
    }

    fn matrix(&self, n: usize) -> Option<DenseMatrix<T>> {
        if n != self.len() {
            return None;
        }
        let mut f = DenseMatrix::zeros(n, n);
        for (i, (&d, &neg)) in self.dest.iter().zip(&self.negate).enumerate() {
            f[(d, i)] = if neg { -T::one() } else { T::one() };
        }
        Some(f)
    }
}
