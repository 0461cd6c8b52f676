use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::config::{Algorithm, ExperimentConfig};
use super::runner::run_synthetic_trial;
use crate::operators::{
    adjoint_mismatch, gaussian_sensing, materialize, Dwt, LinearOperator, NoiseletOperator,
    WaveletConfig,
};
use crate::scalar::{max_abs, standard_normal};
use crate::solvers::{check_kkt, solve_weighted_l1, SolverSettings, WeightedL1Problem};
use crate::synthetic::SyntheticConfig;

/// Outcome of one quick installation check.
#[derive(Clone, Debug)]
pub struct SelfCheck {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &'static str, value: f64, tol: f64) -> SelfCheck {
    SelfCheck {
        name,
        passed: value.is_finite() && value <= tol,
        detail: format!("{value:.3e} (limit {tol:.0e})"),
    }
}

fn randn(n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..n).map(|_| standard_normal(rng)).collect()
}

/// Fast checks of the transforms, the solver and an end-to-end run. Takes a
/// few seconds.
pub fn selftest(seed: u64) -> Vec<SelfCheck> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();

    let dwt = Dwt::<f64>::new(WaveletConfig::square(4, 4, 64)).expect("valid wavelet");
    let x = randn(64 * 64, &mut rng);
    let back = dwt
        .inverse(&dwt.forward(&x).expect("forward"))
        .expect("inverse");
    let err = x
        .iter()
        .zip(&back)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    out.push(check("dwt perfect reconstruction", err, 1e-10));

    let full = NoiseletOperator::full(16).expect("power of two");
    let g = materialize::<f64, _>(&full);
    let mut worst = 0.0f64;
    for i in 0..16 {
        for j in 0..16 {
            let d: f64 = g.row(i).iter().zip(g.row(j)).map(|(a, b)| a * b).sum();
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((d - target).abs());
        }
    }
    out.push(check("noiselet orthonormality (n=16)", worst, 1e-12));

    let sub = NoiseletOperator::random(64, 20, &mut rng).expect("valid subset");
    let gauss = gaussian_sensing::<f64, _>(12, 30, &mut rng).expect("valid size");
    let ops: [&dyn LinearOperator<f64>; 3] = [&sub, &gauss, &dwt];
    let worst = ops
        .iter()
        .map(|op| {
            let x = randn(op.in_dim(), &mut rng);
            let u = randn(op.out_dim(), &mut rng);
            adjoint_mismatch(*op, &x, &u)
        })
        .fold(0.0, f64::max);
    out.push(check("adjoint consistency", worst, 1e-10));

    let a = gaussian_sensing::<f64, _>(10, 25, &mut rng).expect("valid size");
    let y = randn(10, &mut rng);
    let w: Vec<f64> = (0..25).map(|_| rng.random_range(0.5..2.0)).collect();
    let problem = WeightedL1Problem::new(&a, &y, 0.05, &w);
    let settings = SolverSettings::default();
    let kkt = solve_weighted_l1(&problem, &settings)
        .and_then(|s| check_kkt(&problem, &s.z, 1e-6))
        .map(|r| r.max_violation / r.tol)
        .unwrap_or(f64::INFINITY);
    out.push(check(
        "weighted l1 first-order optimality (violation/tol)",
        kkt,
        1.0,
    ));

    let cfg = ExperimentConfig {
        synthetic: SyntheticConfig {
            n: 32,
            s: 4,
            m: 32,
            p: 1,
            noise_var: 1e-8,
            t_steps: 6,
            seed,
        },
        algorithms: vec![
            Algorithm::Bpdn,
            Algorithm::Rwl1,
            Algorithm::BpdnDf,
            Algorithm::Rwl1Df,
            Algorithm::Kalman,
        ],
        trials: 1,
        seed,
        threads: 1,
        ..ExperimentConfig::default()
    };
    let worst = match run_synthetic_trial(&cfg, 0) {
        Ok(records) => records
            .iter()
            .map(|r| {
                if r.succeeded() {
                    max_abs(&r.rmse)
                } else {
                    f64::INFINITY
                }
            })
            .fold(0.0, f64::max),
        Err(_) => f64::INFINITY,
    };
    out.push(check(
        "full sampling, near noise-free: worst rMSE",
        worst,
        1e-3,
    ));
    out
}
