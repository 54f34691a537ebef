mod common;

use common::*;
use nalgebra::{DMatrix, DVector};
use postlasso::lasso::score_sup_norm;
use postlasso::penalty::{
    calibrate_known_sigma, condition_v_report, estimate_sigma, penalty_event, simulate_lambda_quantile,
    simulate_score_draws, upper_quantile,
};
use postlasso::sim::{run_sweep, Design, Estimator, Model, SimulationConfig};
use postlasso::{ErrorKind, GroundTruth, PenaltyCalibration, PenaltyParams, RegressionProblem};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

#[test]
fn single_constant_column_quantile_is_folded_normal() {
    let n = 64;
    let x = DMatrix::from_element(n, 1, 1.0);
    let draws = 4000;
    let q = simulate_lambda_quantile(&x, 0.05, draws, 9).unwrap();
    // n||S||_inf = 2 sqrt(n) |N(0,1)|; the 0.95 quantile of |N(0,1)| is 1.959964
    let expected = 2.0 * (n as f64).sqrt() * 1.959964;
    let rel = (q - expected).abs() / expected;
    assert!(rel < 3.0 / (draws as f64).sqrt(), "q={q} expected={expected}");
}

#[test]
fn quantile_below_union_bound() {
    let mut r = rng(21);
    for &(n, p) in &[(50, 10), (100, 200), (40, 500)] {
        let problem = RegressionProblem::new(gaussian_matrix(&mut r, n, p), gaussian_vector(&mut r, n)).unwrap();
        for alpha in [0.05, 0.1] {
            let q = simulate_lambda_quantile(problem.x(), alpha, 1000, 3).unwrap();
            assert!(q <= PenaltyCalibration::quantile_bound(n, p, alpha), "n={n} p={p}");
        }
    }
}

#[test]
fn quantile_is_deterministic_and_monotone_in_alpha() {
    let mut r = rng(22);
    let x = RegressionProblem::new(gaussian_matrix(&mut r, 30, 15), gaussian_vector(&mut r, 30))
        .unwrap()
        .x()
        .clone();
    let a = simulate_lambda_quantile(&x, 0.05, 500, 77).unwrap();
    let b = simulate_lambda_quantile(&x, 0.05, 500, 77).unwrap();
    assert_eq!(a.to_bits(), b.to_bits());
    let mut draws = simulate_score_draws(&x, 500, 77);
    let mut prev = f64::INFINITY;
    for alpha in [0.01, 0.05, 0.1, 0.3, 0.5] {
        let q = upper_quantile(&mut draws, 1.0 - alpha);
        assert!(q <= prev);
        prev = q;
    }
}

#[test]
fn statistic_is_free_of_sigma() {
    // redraw the same streams with noise scaled by sigma and divide it back out
    let mut r = rng(23);
    let problem = RegressionProblem::new(gaussian_matrix(&mut r, 25, 7), gaussian_vector(&mut r, 25)).unwrap();
    let x = problem.x();
    let seed = 5;
    let draws = simulate_score_draws(x, 200, seed);
    for sigma in [0.1, 3.0] {
        for (d, &v) in draws.iter().enumerate() {
            let mut g = ChaCha8Rng::seed_from_u64(seed);
            g.set_stream(d as u64);
            let e = DVector::from_fn(25, |_, _| sigma * g.sample::<f64, _>(StandardNormal));
            let scaled = 2.0 * x.tr_mul(&e).amax() / sigma;
            assert!((scaled - v).abs() <= 1e-12 * v);
        }
    }
}

#[test]
fn rejects_too_few_draws() {
    let x = DMatrix::from_element(5, 1, 1.0);
    let e = simulate_lambda_quantile(&x, 0.05, 99, 0).unwrap_err();
    assert_eq!(e.kind(), ErrorKind::Usage);
    assert!(simulate_lambda_quantile(&x, 1.0, 100, 0).is_err());
}

#[test]
fn noiseless_sigma_iterates_decrease() {
    let mut r = rng(24);
    let (n, p) = (60, 20);
    let x = gaussian_matrix(&mut r, n, p);
    let theta = DVector::from_fn(p, |j, _| if j < 3 { 2.0 } else { 0.0 });
    let problem = RegressionProblem::new(x.clone(), &x * theta).unwrap();
    let cal = estimate_sigma(&problem, &PenaltyParams::default()).unwrap();
    assert!(cal.sigma_iterates.len() >= 2);
    assert!(cal.sigma_hat() <= cal.sigma_iterates[0]);
    assert!(cal.sigma_iterates.windows(2).all(|w| w[1] <= w[0] + 1e-12));
    assert!((cal.lambda_final - cal.c_prime * cal.sigma_hat() * cal.lambda_quantile).abs() < 1e-9 * cal.lambda_final);
}

#[test]
fn constant_response_is_a_data_error() {
    let mut r = rng(25);
    let problem = RegressionProblem::new(gaussian_matrix(&mut r, 10, 3), DVector::from_element(10, 4.0)).unwrap();
    assert_eq!(estimate_sigma(&problem, &PenaltyParams::default()).unwrap_err().kind(), ErrorKind::Data);
}

#[test]
fn condition_v_examples() {
    let problem = planted(26, 80, 30, 3, 1.0, Design::Isotropic);
    let sigma = problem.ground_truth().unwrap().sigma;
    let cal = calibrate_known_sigma(&problem, sigma, &PenaltyParams::default()).unwrap();
    let rep = condition_v_report(&cal, &problem).unwrap();
    assert_eq!((rep.ell, rep.u, rep.sigma_ratio), (1.0, 1.0, 1.0));

    let score = score_sup_norm(&problem).unwrap();
    let c = PenaltyParams::default().c;
    assert!(penalty_event(10.0 * c * 80.0 * score, c, 80, score));
    assert!(!penalty_event(0.5 * c * 80.0 * score, c, 80, score));

    let bare = RegressionProblem::new(problem.x().clone(), problem.y().clone()).unwrap();
    assert!(condition_v_report(&cal, &bare).is_err());
}

#[test]
fn sigma_ratio_reported_against_truth() {
    let x = DMatrix::from_fn(6, 1, |i, _| if i % 2 == 0 { 1.0 } else { -1.0 });
    let problem = RegressionProblem::new(x, DVector::from_element(6, 0.5))
        .unwrap()
        .with_ground_truth(GroundTruth::new(DVector::zeros(6), DVector::zeros(1), 2.0).unwrap())
        .unwrap();
    let params = PenaltyParams { mc_draws: 100, ..PenaltyParams::default() };
    let cal = calibrate_known_sigma(&problem, 3.0, &params).unwrap();
    let rep = condition_v_report(&cal, &problem).unwrap();
    assert_eq!((rep.sigma_ratio, rep.ell, rep.u), (1.5, 1.0, 1.5));
}

#[test]
fn event_frequency_across_replications() {
    let reps = 500;
    let cfg = SimulationConfig {
        n: 100,
        p: 50,
        replications: reps,
        seed: 31,
        design: Design::Isotropic,
        model: Model::Parametric { s_true: 5 },
        c_grid: vec![1.0],
        estimators: vec![Estimator::Lasso],
        ..SimulationConfig::paper()
    };
    let recs = run_sweep(&cfg).unwrap();
    assert!(recs.iter().all(|r| !r.is_error()));
    let freq = recs.iter().filter(|r| r.event_lambda).count() as f64 / reps as f64;
    let alpha = cfg.penalty.alpha;
    assert!(freq >= 1.0 - alpha - 3.0 * (alpha / reps as f64).sqrt(), "frequency {freq}");
}
