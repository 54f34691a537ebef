//! Least-squares refits on models selected by (thresholded) LASSO.
//!
//! Three selectors: the LASSO support itself, a fixed threshold `t = c̃λ/n`,
//! and the fitness threshold `t_γ`, the largest threshold whose refit loses at
//! most `|γ|` of in-sample fit relative to LASSO.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::lasso::{hard_threshold, LassoFit};
use crate::linalg::{lstsq_min_norm, select_columns};
use crate::problem::RegressionProblem;
use crate::support::Support;

/// Largest LASSO support the exhaustive fitness scan accepts.
pub const EXHAUSTIVE_SCAN_LIMIT: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    Plain,
    Traditional,
    Fitness,
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scheme::Plain => "plain",
            Scheme::Traditional => "traditional",
            Scheme::Fitness => "fitness",
        })
    }
}

impl FromStr for Scheme {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "plain" => Ok(Scheme::Plain),
            "traditional" => Ok(Scheme::Traditional),
            "fitness" => Ok(Scheme::Fitness),
            other => Err(Error::invalid(format!("unknown scheme '{other}'"))),
        }
    }
}

/// How `γ` is chosen for the fitness threshold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GammaChoice {
    /// Half the in-sample gain of OLS post LASSO over LASSO.
    Auto,
    Value(f64),
}

impl FromStr for GammaChoice {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        if s == "auto" {
            return Ok(GammaChoice::Auto);
        }
        s.parse::<f64>()
            .map(GammaChoice::Value)
            .map_err(|_| Error::invalid(format!("gamma must be 'auto' or a number, got '{s}'")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FitnessSearch {
    /// Bisection over the sorted candidate thresholds.
    #[default]
    Binary,
    /// Refit at every candidate threshold.
    Exhaustive,
}

#[derive(Debug, Clone)]
pub struct PostSelectionFit {
    pub scheme: Scheme,
    pub threshold_t: f64,
    pub gamma: Option<f64>,
    pub selected: Support,
    pub beta_tilde: DVector<f64>,
    pub objective: f64,
    pub ols_solves: usize,
    /// Fitness scheme: false when even `t = 0` fails the `γ` test.
    pub gamma_feasible: bool,
    /// Exhaustive scan only: a pair of adjacent candidate indices where the
    /// refit objective decreases as the threshold grows.
    pub non_monotone_witness: Option<(usize, usize)>,
}

/// Minimum-norm OLS restricted to the columns in `support`; zero elsewhere.
pub fn ols_on_support(problem: &RegressionProblem, support: &Support) -> Result<DVector<f64>> {
    if support.len() > problem.n() {
        return Err(Error::invalid(format!(
            "selected model has {} columns but only {} observations",
            support.len(),
            problem.n()
        )));
    }
    if let Some(j) = support.max_index() {
        if j >= problem.p() {
            return Err(Error::DimensionMismatch {
                what: "support index",
                expected: problem.p(),
                found: j + 1,
            });
        }
    }
    let mut beta = DVector::zeros(problem.p());
    if support.is_empty() {
        return Ok(beta);
    }
    let xs = select_columns(problem.x(), support.as_slice());
    let z = lstsq_min_norm(&xs, problem.y())?;
    for (k, j) in support.iter().enumerate() {
        beta[j] = z[k];
    }
    Ok(beta)
}

fn refit(
    problem: &RegressionProblem,
    scheme: Scheme,
    t: f64,
    gamma: Option<f64>,
    selected: Support,
    ols_solves: usize,
) -> Result<PostSelectionFit> {
    let beta_tilde = ols_on_support(problem, &selected)?;
    let objective = problem.objective(&beta_tilde)?;
    Ok(PostSelectionFit {
        scheme,
        threshold_t: t,
        gamma,
        selected,
        beta_tilde,
        objective,
        ols_solves,
        gamma_feasible: true,
        non_monotone_witness: None,
    })
}

/// OLS post LASSO (`t = 0`).
pub fn post_lasso(problem: &RegressionProblem, fit: &LassoFit) -> Result<PostSelectionFit> {
    refit(problem, Scheme::Plain, 0.0, None, fit.support.clone(), 1)
}

/// OLS post thresholded LASSO with `t = c̃·λ/n`.
pub fn post_traditional(
    problem: &RegressionProblem,
    fit: &LassoFit,
    c_tilde: f64,
) -> Result<PostSelectionFit> {
    if !(c_tilde >= 1.0) {
        return Err(Error::invalid(format!("c_tilde must be at least 1, got {c_tilde}")));
    }
    let t = c_tilde * fit.lambda / problem.n() as f64;
    let selected = Support::of_vector(hard_threshold(&fit.beta_hat, t).as_slice(), 0.0);
    refit(problem, Scheme::Traditional, t, None, selected, 1)
}

/// Threshold grid for the fitness search: `0` followed by the sorted distinct
/// magnitudes of the nonzero LASSO coefficients.
pub fn fitness_candidates(fit: &LassoFit) -> Vec<f64> {
    let mut mags: Vec<f64> = fit.support.iter().map(|j| fit.beta_hat[j].abs()).collect();
    mags.sort_by(f64::total_cmp);
    mags.dedup();
    let mut out = Vec::with_capacity(mags.len() + 1);
    out.push(0.0);
    out.extend(mags);
    out
}

struct FitnessProbe<'a> {
    problem: &'a RegressionProblem,
    fit: &'a LassoFit,
    candidates: Vec<f64>,
    cache: HashMap<usize, (Support, DVector<f64>, f64)>,
    solves: usize,
}

impl FitnessProbe<'_> {
    fn objective_at(&mut self, idx: usize) -> Result<f64> {
        if let Some((_, _, q)) = self.cache.get(&idx) {
            return Ok(*q);
        }
        let t = self.candidates[idx];
        let selected = Support::of_vector(hard_threshold(&self.fit.beta_hat, t).as_slice(), 0.0);
        let beta = ols_on_support(self.problem, &selected)?;
        let q = self.problem.objective(&beta)?;
        self.solves += 1;
        self.cache.insert(idx, (selected, beta, q));
        Ok(q)
    }
}

/// OLS post fitness-thresholded LASSO.
pub fn post_fitness(
    problem: &RegressionProblem,
    fit: &LassoFit,
    gamma: GammaChoice,
    search: FitnessSearch,
) -> Result<PostSelectionFit> {
    if let GammaChoice::Value(g) = gamma {
        if !(g <= 0.0) {
            return Err(Error::invalid(format!("gamma must be nonpositive, got {g}")));
        }
    }
    if search == FitnessSearch::Exhaustive && fit.support.len() > EXHAUSTIVE_SCAN_LIMIT {
        return Err(Error::Budget {
            what: "exhaustive fitness scan",
            needed: fit.support.len() as u128,
            limit: EXHAUSTIVE_SCAN_LIMIT as u128,
        });
    }
    let q_lasso = fit.objective;
    let mut probe = FitnessProbe {
        problem,
        fit,
        candidates: fitness_candidates(fit),
        cache: HashMap::new(),
        solves: 0,
    };
    let last = probe.candidates.len() - 1;

    let q0 = probe.objective_at(0)?;
    let gamma_value = match gamma {
        GammaChoice::Auto => ((q0 - q_lasso) / 2.0).min(0.0),
        GammaChoice::Value(g) => g,
    };
    // Under the automatic rule t = 0 is feasible by construction; the explicit
    // test could only fail through rounding.
    let feasible0 = matches!(gamma, GammaChoice::Auto) || q0 - q_lasso <= gamma_value;

    let mut witness = None;
    let best = if !feasible0 {
        0
    } else {
        match search {
            FitnessSearch::Binary => {
                // invariant: lo passes, hi fails (hi = last + 1 is a virtual sentinel)
                let (mut lo, mut hi) = (0usize, last + 1);
                while hi - lo > 1 {
                    let mid = lo + (hi - lo) / 2;
                    if probe.objective_at(mid)? - q_lasso <= gamma_value {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                lo
            }
            FitnessSearch::Exhaustive => {
                let mut best = 0;
                let mut prev = q0;
                for idx in 1..=last {
                    let q = probe.objective_at(idx)?;
                    if q < prev && witness.is_none() {
                        witness = Some((idx - 1, idx));
                    }
                    prev = q;
                    if q - q_lasso <= gamma_value {
                        best = idx;
                    }
                }
                best
            }
        }
    };

    let solves = probe.solves;
    let t = probe.candidates[best];
    let (selected, beta_tilde, objective) = probe.cache.remove(&best).expect("evaluated");
    Ok(PostSelectionFit {
        scheme: Scheme::Fitness,
        threshold_t: t,
        gamma: Some(gamma_value),
        selected,
        beta_tilde,
        objective,
        ols_solves: solves,
        gamma_feasible: feasible0,
        non_monotone_witness: witness,
    })
}

/// Upper bound on OLS solves of the binary fitness search.
pub fn fitness_solve_bound(support_len: usize) -> usize {
    if support_len <= 1 {
        return 2;
    }
    (usize::BITS - (support_len - 1).leading_zeros()) as usize + 2
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lasso::{fit_lasso, lambda_max, LassoOptions};
    use nalgebra::DMatrix;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn instance(seed: u64, n: usize, p: usize) -> RegressionProblem {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = DMatrix::from_fn(n, p, |_, _| rng.sample::<f64, _>(StandardNormal));
        let y = DVector::from_fn(n, |i, _| {
            2.0 * x[(i, 0)] - x[(i, 1)] + 0.5 * x[(i, 2)] + rng.sample::<f64, _>(StandardNormal)
        });
        RegressionProblem::new(x, y).unwrap()
    }

    fn fake_fit(beta: Vec<f64>, lambda: f64) -> LassoFit {
        let beta = DVector::from_vec(beta);
        let p = beta.len();
        LassoFit {
            support: Support::of_vector(beta.as_slice(), 0.0),
            beta_hat: beta,
            lambda,
            objective: 0.0,
            kkt_residuals: DVector::zeros(p),
            iterations: 0,
            kkt_tol: 0.0,
        }
    }

    #[test]
    fn solve_bound_values() {
        assert_eq!(fitness_solve_bound(1), 2);
        assert_eq!(fitness_solve_bound(2), 3);
        assert_eq!(fitness_solve_bound(4), 4);
        assert_eq!(fitness_solve_bound(5), 5);
        assert_eq!(fitness_solve_bound(15), 6);
        assert_eq!(fitness_solve_bound(16), 6);
    }

    #[test]
    fn empty_support_gives_zero_fit() {
        let prob = instance(1, 20, 5);
        let b = ols_on_support(&prob, &Support::empty()).unwrap();
        assert_eq!(b, DVector::zeros(5));
        let ey2 = prob.y().norm_squared() / 20.0;
        assert!((prob.objective(&b).unwrap() - ey2).abs() < 1e-14);
    }

    #[test]
    fn full_ols_matches_normal_equations() {
        let prob = instance(2, 30, 4);
        let all = Support::from_indices((0..4).collect());
        let b = ols_on_support(&prob, &all).unwrap();
        let g = prob.x().tr_mul(prob.x());
        let rhs = prob.x().tr_mul(prob.y());
        let ne = g.cholesky().unwrap().solve(&rhs);
        assert!((b - &ne).amax() < 1e-10);
        let resid = prob.y() - prob.x() * ne;
        assert!(prob.x().tr_mul(&resid).amax() / 30.0 < 1e-12);
    }

    #[test]
    fn duplicate_columns_are_handled() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut x = DMatrix::from_fn(12, 3, |_, _| rng.sample::<f64, _>(StandardNormal));
        let c0 = x.column(0).clone_owned();
        x.set_column(1, &c0);
        let y = DVector::from_fn(12, |_, _| rng.sample::<f64, _>(StandardNormal));
        let prob = RegressionProblem::new(x, y).unwrap();
        let pair = ols_on_support(&prob, &Support::from_indices(vec![0, 1])).unwrap();
        let single = ols_on_support(&prob, &Support::from_indices(vec![0])).unwrap();
        assert!(pair.iter().all(|v| v.is_finite()));
        assert!((pair[0] - pair[1]).abs() < 1e-10);
        let qp = prob.objective(&pair).unwrap();
        let qs = prob.objective(&single).unwrap();
        assert!((qp - qs).abs() < 1e-12);
    }

    #[test]
    fn oversized_support_is_rejected() {
        let prob = instance(4, 5, 8);
        let s = Support::from_indices((0..6).collect());
        assert!(ols_on_support(&prob, &s).is_err());
    }

    #[test]
    fn traditional_threshold_default_and_truncation() {
        let prob = instance(5, 10, 3);
        // λ/n = 0.1
        let fit = fake_fit(vec![2.0, 0.05, -0.1], 1.0);
        let post = post_traditional(&prob, &fit, 1.0).unwrap();
        assert!((post.threshold_t - 0.1).abs() < 1e-15);
        assert_eq!(post.selected.as_slice(), &[0]);
        let all_small = fake_fit(vec![0.1, 0.05, -0.1], 1.0);
        let post = post_traditional(&prob, &all_small, 1.0).unwrap();
        assert!(post.selected.is_empty());
        assert_eq!(post.beta_tilde, DVector::zeros(3));
        assert!(post_traditional(&prob, &fit, 0.5).is_err());
    }

    #[test]
    fn fitness_rejects_positive_gamma() {
        let prob = instance(6, 20, 5);
        let fit = fit_lasso(&prob, 0.3 * lambda_max(&prob), &LassoOptions::default()).unwrap();
        assert!(post_fitness(&prob, &fit, GammaChoice::Value(0.1), FitnessSearch::Binary).is_err());
    }

    #[test]
    fn fitness_auto_is_sparser_and_fits_better_than_lasso() {
        let prob = instance(7, 40, 12);
        let fit = fit_lasso(&prob, 0.15 * lambda_max(&prob), &LassoOptions::default()).unwrap();
        let post = post_fitness(&prob, &fit, GammaChoice::Auto, FitnessSearch::Binary).unwrap();
        let gamma = post.gamma.unwrap();
        assert!(gamma <= 0.0);
        assert!(post.objective - fit.objective <= gamma + 1e-12);
        assert!(post.selected.is_subset_of(&fit.support));
        assert!(post.ols_solves <= fitness_solve_bound(fit.support.len()));
        let exhaustive = post_fitness(&prob, &fit, GammaChoice::Auto, FitnessSearch::Exhaustive).unwrap();
        assert_eq!(exhaustive.selected, post.selected);
        assert!(exhaustive.non_monotone_witness.is_none());
    }

    #[test]
    fn fitness_single_candidate() {
        let prob = instance(8, 25, 4);
        let lm = lambda_max(&prob);
        let fit = fit_lasso(&prob, 0.95 * lm, &LassoOptions::default()).unwrap();
        assert_eq!(fit.support.len(), 1);
        let plain = post_lasso(&prob, &fit).unwrap();
        let post = post_fitness(&prob, &fit, GammaChoice::Value(0.0), FitnessSearch::Binary).unwrap();
        assert!(post.ols_solves <= 3);
        assert!(post.selected == plain.selected || post.selected.is_empty());
    }

    #[test]
    fn infeasible_gamma_falls_back_to_post_lasso() {
        let prob = instance(9, 30, 6);
        let fit = fit_lasso(&prob, 0.3 * lambda_max(&prob), &LassoOptions::default()).unwrap();
        let post = post_fitness(&prob, &fit, GammaChoice::Value(-1e6), FitnessSearch::Binary).unwrap();
        assert!(!post.gamma_feasible);
        assert_eq!(post.selected, fit.support);
        assert_eq!(post.threshold_t, 0.0);
    }

    #[test]
    fn scheme_and_gamma_parse() {
        assert_eq!("fitness".parse::<Scheme>().unwrap(), Scheme::Fitness);
        assert!("bogus".parse::<Scheme>().is_err());
        assert_eq!("auto".parse::<GammaChoice>().unwrap(), GammaChoice::Auto);
        assert_eq!("-0.5".parse::<GammaChoice>().unwrap(), GammaChoice::Value(-0.5));
        assert!("x".parse::<GammaChoice>().is_err());
    }
}
