mod common;

use std::sync::Arc;

use common::*;
use dynfilter::filters::{bpdn_df_step, BpdnDfParams, MeasurementFrame, PredictionNorm};
use dynfilter::operators::Identity;
use dynfilter::solvers::{
    check_kkt, check_kkt_composite, estimate_lipschitz, solve_composite, solve_weighted_l1,
    SeparablePenalty, SolverSettings, WeightedL1Problem,
};
use proptest::prelude::*;
use rand::Rng;

fn weighted_instance(
    seed: u64,
    m: usize,
    n: usize,
) -> (nalgebra::DMatrix<f64>, Vec<f64>, Vec<f64>) {
    let mut r = rng(seed);
    let a = random_matrix(m, n, &mut r);
    let y = randn(m, &mut r);
    let w: Vec<f64> = (0..n).map(|_| r.random_range(0.3..2.0)).collect();
    (a, y, w)
}

#[test]
fn weighted_l1_matches_enumeration_m4_n6() {
    for seed in 0..25 {
        let (a, y, w) = weighted_instance(seed, 4, 6);
        let dense = to_dense(&a);
        let problem = WeightedL1Problem::new(&dense, &y, 0.1, &w);
        let sol = solve_weighted_l1(&problem, &SolverSettings::default()).unwrap();
        let oracle = piecewise_oracle(&a, &y, &weighted_l1_terms(0.1, &w));
        let d = dist(&sol.z, &oracle);
        assert!(
            d < 1e-4,
            "seed {seed}: |dz| = {d:e}, solver {:?} oracle {:?}",
            sol.z,
            oracle
        );
    }
}

#[test]
fn anchored_l1_matches_enumeration_m3_n5() {
    for seed in 0..25 {
        let mut r = rng(1000 + seed);
        let a = random_matrix(3, 5, &mut r);
        let y = randn(3, &mut r);
        let pred = randn(5, &mut r);
        let params = BpdnDfParams {
            gamma: 0.2,
            kappa: 0.4,
            q: PredictionNorm::L1,
        };
        let frame = MeasurementFrame::new(Arc::new(to_dense(&a)), y.clone(), 0.0).unwrap();
        let sol = bpdn_df_step(
            &frame,
            &Identity::new(5),
            &pred,
            &params,
            &SolverSettings::default(),
        )
        .unwrap();
        let oracle = piecewise_oracle(&a, &y, &anchored_terms(0.2, 0.4, &pred));
        let d = dist(&sol.z, &oracle);
        assert!(d < 1e-4, "seed {seed}: |dz| = {d:e}");
    }
}

#[test]
fn closed_form_scalar() {
    let a = to_dense(&nalgebra::DMatrix::identity(1, 1));
    let sol = solve_weighted_l1(
        &WeightedL1Problem::new(&a, &[1.0], 0.5, &[1.0]),
        &SolverSettings::default(),
    )
    .unwrap();
    assert!((sol.z[0] - 0.75).abs() < 1e-12);
}

#[test]
fn zero_measurements_give_zero_estimate() {
    let (a, _, w) = weighted_instance(7, 5, 9);
    let dense = to_dense(&a);
    let y = vec![0.0; 5];
    let sol = solve_weighted_l1(
        &WeightedL1Problem::new(&dense, &y, 0.3, &w),
        &SolverSettings::default(),
    )
    .unwrap();
    assert!(sol.z.iter().all(|&v| v == 0.0));
    assert!(sol.is_certified());
}

#[test]
fn power_iteration_matches_eigenvalue() {
    for seed in 0..10 {
        let mut r = rng(seed);
        let a = random_matrix(7, 13, &mut r);
        let exact = spectral_norm_sq(&a);
        let est: f64 = estimate_lipschitz(&to_dense(&a), 500, &mut r);
        assert!(
            est <= exact * (1.0 + 1e-9),
            "seed {seed}: {est} above {exact}"
        );
        assert!(
            est >= exact * (1.0 - 1e-6),
            "seed {seed}: {est} far below {exact}"
        );
        let dense = to_dense(&a).spectral_norm_sq();
        assert!((dense - exact).abs() <= 1e-9 * exact, "seed {seed}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn oracle_equivalence_small(seed in any::<u64>(), m in 1usize..5, n in 1usize..6, lambda0 in 0.01f64..1.0) {
        let (a, y, w) = weighted_instance(seed, m, n);
        let dense = to_dense(&a);
        let sol = solve_weighted_l1(&WeightedL1Problem::new(&dense, &y, lambda0, &w), &SolverSettings::default()).unwrap();
        let oracle = piecewise_oracle(&a, &y, &weighted_l1_terms(lambda0, &w));
        prop_assert!(dist(&sol.z, &oracle) < 1e-4);
    }

    #[test]
    fn solutions_pass_first_order_check(seed in any::<u64>(), m in 1usize..25, n in 1usize..40, lambda0 in 0.001f64..1.0) {
        let (a, y, w) = weighted_instance(seed, m, n);
        let dense = to_dense(&a);
        let problem = WeightedL1Problem::new(&dense, &y, lambda0, &w);
        let sol = solve_weighted_l1(&problem, &SolverSettings::default()).unwrap();
        prop_assert!(sol.is_certified());
        let report = check_kkt(&problem, &sol.z, 1e-6).unwrap();
        prop_assert!(report.passed(), "violation {:e} > {:e}", report.max_violation, report.tol);
    }

    #[test]
    fn anchored_solutions_pass_first_order_check(seed in any::<u64>(), m in 1usize..20, n in 1usize..30) {
        let mut r = rng(seed);
        let a = to_dense(&random_matrix(m, n, &mut r));
        let y = randn(m, &mut r);
        let anchor = randn(n, &mut r);
        let pen = SeparablePenalty::anchored(vec![0.05; n], vec![0.3; n], anchor).unwrap();
        let sol = solve_composite(&a, &y, &pen, None, None, &SolverSettings::default()).unwrap();
        prop_assert!(sol.is_certified());
        let report = check_kkt_composite(&a, &y, &pen, &sol.z, 1e-6).unwrap();
        prop_assert!(report.passed());
    }

    #[test]
    fn recorded_objective_never_increases(seed in any::<u64>(), m in 1usize..30, n in 1usize..60) {
        let (a, y, w) = weighted_instance(seed, m, n);
        let dense = to_dense(&a);
        let settings = SolverSettings { record_trace: true, ..SolverSettings::default() };
        let sol = solve_weighted_l1(&WeightedL1Problem::new(&dense, &y, 0.05, &w), &settings).unwrap();
        prop_assert!(!sol.trace.is_empty());
        for pair in sol.trace.windows(2) {
            prop_assert!(pair[1] <= pair[0], "{} then {}", pair[0], pair[1]);
        }
        prop_assert!((sol.trace.last().unwrap() - sol.objective).abs() <= 1e-12 * sol.objective.abs().max(1.0));
    }

    #[test]
    fn warm_start_reaches_same_point(seed in any::<u64>()) {
        let (a, y, w) = weighted_instance(seed, 6, 15);
        let dense = to_dense(&a);
        let settings = SolverSettings::default();
        let cold = solve_weighted_l1(&WeightedL1Problem::new(&dense, &y, 0.1, &w), &settings).unwrap();
        let mut r = rng(seed ^ 0xabc);
        let start = randn(15, &mut r);
        let warm = solve_weighted_l1(&WeightedL1Problem::new(&dense, &y, 0.1, &w).warm_start(&start), &settings).unwrap();
        prop_assert!(dist(&cold.z, &warm.z) < 1e-6);
    }
}
