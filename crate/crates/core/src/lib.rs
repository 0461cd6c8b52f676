//! Causal recovery of time-varying sparse signals from compressive
//! measurements.
//!
//! The core filter, RWL1-DF, folds a dynamics prediction into the weights of a
//! re-weighted ℓ1 program. Alongside it live the baselines (independent BPDN,
//! independent RWL1, BPDN-DF and a Kalman filter), the sensing and sparsity
//! operators they run on (dense Gaussian, subsampled noiselets, orthonormal
//! Daubechies wavelets), a synthetic permutation-dynamics generator and an
//! experiment harness.
//!
//! Everything is generic over [`scalar::Real`]; the aliases below fix the
//! scalar to `f64`, which is what the harness uses.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod filters;
pub mod harness;
pub mod linalg;
pub mod operators;
pub mod scalar;
pub mod solvers;
pub mod synthetic;

pub use error::{Error, Result};
pub use scalar::Real;

pub type Matrix = linalg::DenseMatrix<f64>;
pub type Frame = filters::MeasurementFrame<f64>;
pub type State = filters::FilterState<f64>;
pub type Estimate = filters::Reweighted<f64>;
pub type Kalman = filters::KalmanState<f64>;
pub type Lsm = filters::LsmParams<f64>;
pub type BpdnDf = filters::BpdnDfParams<f64>;
pub type Settings = solvers::SolverSettings<f64>;
pub type Solved = solvers::Solution<f64>;
pub type Problem<'a> = solvers::WeightedL1Problem<'a, f64>;
pub type Penalty = solvers::SeparablePenalty<f64>;
pub type Gaussian = operators::GaussianMatrix<f64>;
pub type Wavelet = operators::Dwt<f64>;
pub type Operator = dyn operators::LinearOperator<f64>;
pub type Trial = synthetic::SyntheticTrial<f64>;
pub type Truth = synthetic::GroundTruthSequence<f64>;
