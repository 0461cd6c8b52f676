use crate::error::{Error, Result};
use crate::scalar::Real;

/// Hyperparameters of the Laplacian-scale-mixture filters (static RWL1 and
/// RWL1-DF).
///
/// `lambda0` multiplies the weighted ℓ1 penalty. The weight rules are
/// `β / (|z| + η)` for static RWL1 and `2τ / (β|z| + |prediction| + η)` for
/// RWL1-DF.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LsmParams<T> {
    pub lambda0: T,
    pub tau: T,
    pub beta: T,
    pub eta: T,
    pub em_iters: usize,
}

impl<T: Real> LsmParams<T> {
    pub fn new(lambda0: T, tau: T, beta: T, eta: T) -> Self {
        Self {
            lambda0,
            tau,
            beta,
            eta,
            em_iters: 10,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("lambda0", self.lambda0),
            ("tau", self.tau),
            ("beta", self.beta),
            ("eta", self.eta),
        ] {
            if !(v > T::zero()) || !v.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be positive and finite, got {v}"
                )));
            }
        }
        if self.em_iters == 0 {
            return Err(Error::InvalidParameter(
                "em_iters must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// Norm applied to the prediction error in BPDN-DF.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PredictionNorm {
    L1,
    L2,
}

impl PredictionNorm {
    pub fn from_q(q: u32) -> Result<Self> {
        match q {
            1 => Ok(Self::L1),
            2 => Ok(Self::L2),
            other => Err(Error::InvalidParameter(format!(
                "prediction norm q must be 1 or 2, got {other}"
            ))),
        }
    }

    pub fn q(self) -> u32 {
        match self {
            Self::L1 => 1,
            Self::L2 => 2,
        }
    }
}

/// `‖y − ΦWz‖² + γ‖z‖₁ + κ‖Wz − prediction‖_q^q`
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BpdnDfParams<T> {
    pub gamma: T,
    pub kappa: T,
    pub q: PredictionNorm,
}

impl<T: Real> BpdnDfParams<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > T::zero()) || !self.gamma.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "gamma must be positive and finite, got {}",
                self.gamma
            )));
        }
        // κ = 0 is accepted: it switches the prediction term off.
        if !(self.kappa >= T::zero()) || !self.kappa.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "kappa must be nonnegative and finite, got {}",
                self.kappa
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn q_selector() {
        assert_eq!(PredictionNorm::from_q(1).unwrap(), PredictionNorm::L1);
        assert_eq!(PredictionNorm::from_q(2).unwrap().q(), 2);
        assert!(matches!(
            PredictionNorm::from_q(3),
            Err(Error::InvalidParameter(_))
        ));
    }

    #[test]
    fn lsm_validation() {
        assert!(LsmParams::new(0.0011, 1.0, 1.0, 0.01).validate().is_ok());
        assert!(LsmParams::new(0.0011, 1.0, 1.0, 0.0).validate().is_err());
        let mut p = LsmParams::new(1.0, 1.0, 1.0, 1.0);
        p.em_iters = 0;
        assert!(p.validate().is_err());
    }
}
