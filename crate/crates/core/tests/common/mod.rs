//! Independent reference implementations used by several test targets.
//! They share nothing with the library beyond the instance data.

#![allow(dead_code)]

use dynfilter::linalg::DenseMatrix;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn randn(n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..n).map(|_| rng.sample(StandardNormal)).collect()
}

pub fn random_matrix(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.sample::<f64, _>(StandardNormal))
}

pub fn to_dense(a: &DMatrix<f64>) -> DenseMatrix<f64> {
    DenseMatrix::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)])
}

pub fn from_dense(a: &DenseMatrix<f64>) -> DMatrix<f64> {
    DMatrix::from_fn(a.rows(), a.cols(), |i, j| a[(i, j)])
}

/// Random symmetric positive definite matrix with eigenvalues in `[lo, lo + 1 + n]`.
pub fn random_spd(n: usize, lo: f64, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let b = random_matrix(n, n, rng);
    let mut s = &b * b.transpose() / n as f64;
    for i in 0..n {
        s[(i, i)] += lo;
    }
    s
}

pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Separable penalty `Σ_j c_j |v − b_j|` on one coordinate.
#[derive(Clone, Debug)]
pub struct AbsTerms(pub Vec<(f64, f64)>);

impl AbsTerms {
    fn value(&self, v: f64) -> f64 {
        self.0.iter().map(|&(c, b)| c * (v - b).abs()).sum()
    }

    fn breakpoints(&self) -> Vec<f64> {
        let mut b: Vec<f64> = self.0.iter().map(|&(_, b)| b).collect();
        b.sort_by(|x, y| x.partial_cmp(y).unwrap());
        b.dedup();
        b
    }

    /// Derivative inside the open segment containing `v` (not a breakpoint).
    fn slope_at(&self, v: f64) -> f64 {
        self.0.iter().map(|&(c, b)| c * (v - b).signum()).sum()
    }
}

#[derive(Clone, Copy, Debug)]
enum Piece {
    Pinned(f64),
    Free { lo: f64, hi: f64, slope: f64 },
}

fn pieces(t: &AbsTerms) -> Vec<Piece> {
    let b = t.breakpoints();
    let mut out: Vec<Piece> = b.iter().map(|&p| Piece::Pinned(p)).collect();
    let mut edges = vec![f64::NEG_INFINITY];
    edges.extend(&b);
    edges.push(f64::INFINITY);
    for w in edges.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        let mid = if lo.is_infinite() {
            hi - 1.0
        } else if hi.is_infinite() {
            lo + 1.0
        } else {
            0.5 * (lo + hi)
        };
        out.push(Piece::Free {
            lo,
            hi,
            slope: t.slope_at(mid),
        });
    }
    out
}

pub fn objective(a: &DMatrix<f64>, y: &[f64], terms: &[AbsTerms], z: &[f64]) -> f64 {
    let r = DVector::from_column_slice(y) - a * DVector::from_column_slice(z);
    r.norm_squared() + terms.iter().zip(z).map(|(t, &v)| t.value(v)).sum::<f64>()
}

/// Exhaustive minimizer of `‖y − Az‖² + Σ_i h_i(z_i)` for piecewise-linear
/// `h_i`: every coordinate is either pinned at a breakpoint or free inside
/// one linear segment. For each pattern the free block solves its normal
/// equations; patterns whose solution leaves its segments are discarded and
/// the feasible candidate with the lowest objective wins.
pub fn piecewise_oracle(a: &DMatrix<f64>, y: &[f64], terms: &[AbsTerms]) -> Vec<f64> {
    let n = a.ncols();
    assert_eq!(terms.len(), n);
    let choices: Vec<Vec<Piece>> = terms.iter().map(pieces).collect();
    let yv = DVector::from_column_slice(y);
    let mut idx = vec![0usize; n];
    let mut best: Option<(f64, Vec<f64>)> = None;
    loop {
        let pattern: Vec<Piece> = idx.iter().zip(&choices).map(|(&k, c)| c[k]).collect();
        if let Some(z) = solve_pattern(a, &yv, &pattern) {
            let f = objective(a, y, terms, &z);
            if best.as_ref().is_none_or(|(bf, _)| f < *bf) {
                best = Some((f, z));
            }
        }
        let mut pos = 0;
        loop {
            if pos == n {
                return best.expect("some pattern is always feasible").1;
            }
            idx[pos] += 1;
            if idx[pos] < choices[pos].len() {
                break;
            }
            idx[pos] = 0;
            pos += 1;
        }
    }
}

fn solve_pattern(a: &DMatrix<f64>, y: &DVector<f64>, pattern: &[Piece]) -> Option<Vec<f64>> {
    let n = pattern.len();
    let mut z = vec![0.0; n];
    let mut free = Vec::new();
    for (i, p) in pattern.iter().enumerate() {
        match *p {
            Piece::Pinned(v) => z[i] = v,
            Piece::Free { .. } => free.push(i),
        }
    }
    if free.is_empty() {
        return Some(z);
    }
    let af = a.select_columns(&free);
    let r = y - a * DVector::from_column_slice(&z);
    // 2 A_Fᵀ A_F z_F = 2 A_Fᵀ r − slopes
    let g = 2.0 * af.transpose() * &af;
    let mut rhs = 2.0 * af.transpose() * r;
    for (k, &i) in free.iter().enumerate() {
        if let Piece::Free { slope, .. } = pattern[i] {
            rhs[k] -= slope;
        }
    }
    let eig = g.clone().symmetric_eigenvalues();
    if eig.min() <= 1e-10 * eig.max() {
        return None;
    }
    let zf = g.cholesky()?.solve(&rhs);
    for (k, &i) in free.iter().enumerate() {
        let Piece::Free { lo, hi, .. } = pattern[i] else {
            unreachable!()
        };
        let v = zf[k];
        if v < lo - 1e-12 || v > hi + 1e-12 {
            return None;
        }
        z[i] = v;
    }
    Some(z)
}

pub fn weighted_l1_terms(lambda0: f64, w: &[f64]) -> Vec<AbsTerms> {
    w.iter()
        .map(|&wi| AbsTerms(vec![(lambda0 * wi, 0.0)]))
        .collect()
}

pub fn anchored_terms(gamma: f64, kappa: f64, anchor: &[f64]) -> Vec<AbsTerms> {
    anchor
        .iter()
        .map(|&p| AbsTerms(vec![(gamma, 0.0), (kappa, p)]))
        .collect()
}

/// Posterior of the linear-Gaussian model written as a regularized least
/// squares: `argmin_x ‖y − Φx‖²_{R⁻¹} + ‖x − Fμ‖²_{Σ⁻¹}` with
/// `Σ = F P Fᵀ + Q`, solved in information form. Returns the minimizer and
/// the inverse Hessian (the posterior covariance).
pub fn map_oracle(
    f: &DMatrix<f64>,
    p: &DMatrix<f64>,
    q: &DMatrix<f64>,
    r: &DMatrix<f64>,
    phi: &DMatrix<f64>,
    mean: &[f64],
    y: &[f64],
) -> (Vec<f64>, DMatrix<f64>) {
    let sigma = f * p * f.transpose() + q;
    let sigma_inv = sigma.try_inverse().expect("prior covariance invertible");
    let r_inv = r
        .clone()
        .try_inverse()
        .expect("noise covariance invertible");
    let prior = f * DVector::from_column_slice(mean);
    let h = phi.transpose() * &r_inv * phi + &sigma_inv;
    let rhs = phi.transpose() * &r_inv * DVector::from_column_slice(y) + &sigma_inv * prior;
    let h_inv = h.try_inverse().expect("information matrix invertible");
    let x = &h_inv * rhs;
    (x.iter().copied().collect(), h_inv)
}

/// Largest eigenvalue of `AᵀA`.
pub fn spectral_norm_sq(a: &DMatrix<f64>) -> f64 {
    (a.transpose() * a).symmetric_eigenvalues().max()
}
