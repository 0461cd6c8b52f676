use super::MeasurementFrame;
use crate::error::{Error, Result};
use crate::linalg::{Cholesky, DenseMatrix};
use crate::operators::materialize;
use crate::scalar::Real;

const SYMMETRY_TOL: f64 = 1e-10;

/// Gaussian state of the linear Kalman baseline.
#[derive(Clone, Debug)]
pub struct KalmanState<T> {
    pub mean: Vec<T>,
    /// Posterior covariance `P`.
    pub cov: DenseMatrix<T>,
    /// Process noise `Q`.
    pub process_cov: DenseMatrix<T>,
    /// Measurement noise `R`.
    pub meas_cov: DenseMatrix<T>,
    /// State transition `F`.
    pub dynamics_matrix: DenseMatrix<T>,
}

impl<T: Real> KalmanState<T> {
    pub fn validate(&self) -> Result<()> {
        let n = self.mean.len();
        let square = |m: &DenseMatrix<T>, k: usize| m.rows() == k && m.cols() == k;
        if !square(&self.cov, n)
            || !square(&self.process_cov, n)
            || !square(&self.dynamics_matrix, n)
        {
            return Err(Error::InvalidDimension(format!(
                "state of length {n} needs {n}x{n} covariance, process and transition matrices"
            )));
        }
        let tol = T::lit(SYMMETRY_TOL);
        for (name, m) in [
            ("cov", &self.cov),
            ("process_cov", &self.process_cov),
            ("meas_cov", &self.meas_cov),
        ] {
            let scale = m.max_abs().max(T::one());
            if m.asymmetry() > tol * scale {
                return Err(Error::InvalidParameter(format!("{name} is not symmetric")));
            }
        }
        Ok(())
    }
}

/// Predict with `F`, `Q`, then update with the frame's measurements.
///
/// The frame operator is materialized as a dense `M × N` matrix. Fails with a
/// numerical error carrying pivot diagnostics when the innovation covariance
/// `ΦΣΦᵀ + R` is not positive definite.
pub fn kalman_step<T: Real>(
    frame: &MeasurementFrame<T>,
    st: &KalmanState<T>,
) -> Result<KalmanState<T>> {
    st.validate()?;
    let n = st.mean.len();
    let m = frame.y.len();
    if frame.op.in_dim() != n {
        return Err(Error::InvalidDimension(format!(
            "frame operator takes {} samples, state has {n}",
            frame.op.in_dim()
        )));
    }
    if st.meas_cov.rows() != m || st.meas_cov.cols() != m {
        return Err(Error::InvalidDimension(format!(
            "measurement covariance must be {m}x{m}"
        )));
    }
    let f = &st.dynamics_matrix;
    let prior_mean = f.mul_vec(&st.mean);
    let mut prior_cov = f
        .matmul(&st.cov)?
        .matmul(&f.transpose())?
        .add(&st.process_cov)?;
    prior_cov.symmetrize();
    if m == 0 {
        return Ok(KalmanState {
            mean: prior_mean,
            cov: prior_cov,
            ..st.clone()
        });
    }

    let phi = materialize(&*frame.op);
    // B = Σ Φᵀ  (N × M)
    let b = prior_cov.matmul(&phi.transpose())?;
    let mut s = phi.matmul(&b)?.add(&st.meas_cov)?;
    s.symmetrize();
    let chol = Cholesky::factor(&s).map_err(|e| match e {
        Error::Numerical(msg) => Error::Numerical(format!("innovation covariance singular: {msg}")),
        other => other,
    })?;

    let pred_y = phi.mul_vec(&prior_mean);
    let innov: Vec<T> = frame.y.iter().zip(&pred_y).map(|(&a, &p)| a - p).collect();
    let alpha = chol.solve_vec(&innov);
    let mean: Vec<T> = prior_mean
        .iter()
        .zip(b.mul_vec(&alpha))
        .map(|(&p, c)| p + c)
        .collect();

    // P = Σ − B S⁻¹ Bᵀ
    let x = chol.solve_mat(&b.transpose());
    let mut cov = prior_cov.sub(&b.matmul(&x)?)?;
    cov.symmetrize();
    Ok(KalmanState {
        mean,
        cov,
        process_cov: st.process_cov.clone(),
        meas_cov: st.meas_cov.clone(),
        dynamics_matrix: st.dynamics_matrix.clone(),
    })
}
