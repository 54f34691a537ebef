//! ℓ1-penalized least squares `min Q(b) + (λ/n)||b||_1` by cyclic coordinate
//! descent, with the KKT residuals of the returned point.

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::problem::RegressionProblem;
use crate::support::Support;

/// Largest absolute coordinate change that counts as converged.
const COORD_CHANGE_TOL: f64 = 1e-10;
/// Ratio between successive penalty levels of the warm-start path.
const PATH_RATIO: f64 = 0.7;
const MAX_PATH_STAGES: usize = 60;
/// Relative KKT tolerance of intermediate path stages.
const PATH_KKT_REL: f64 = 1e-4;
/// Sweep cap for each intermediate path stage.
const PATH_STAGE_SWEEPS: usize = 2_000;
/// Active-set sweeps between exact active-set solves.
const POLISH_EVERY: usize = 200;

#[derive(Debug, Clone)]
pub struct LassoOptions {
    /// Maximum number of coordinate-descent sweeps (full or active-set), and of
    /// breakpoints in the exact path fallback.
    pub max_iter: usize,
    /// KKT tolerance relative to `λ/n`.
    pub kkt_rel_tol: f64,
    /// Coefficients with magnitude at most this are snapped to zero.
    pub zero_tol: f64,
    pub warm_start: Option<DVector<f64>>,
}

impl Default for LassoOptions {
    fn default() -> Self {
        LassoOptions {
            max_iter: 100_000,
            kkt_rel_tol: 1e-8,
            zero_tol: 1e-10,
            warm_start: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct LassoFit {
    pub beta_hat: DVector<f64>,
    pub support: Support,
    pub lambda: f64,
    /// `Q(beta_hat)`, without the penalty.
    pub objective: f64,
    /// `g_j = 2 E_n[x_ij (y_i - x_i' beta_hat)]`.
    pub kkt_residuals: DVector<f64>,
    pub iterations: usize,
    /// Absolute KKT tolerance the fit was certified at.
    pub kkt_tol: f64,
}

impl LassoFit {
    /// Worst violation of the optimality conditions at `beta_hat`.
    pub fn worst_kkt_violation(&self, n: usize) -> f64 {
        kkt_violation(&self.beta_hat, &self.kkt_residuals, self.lambda / n as f64)
    }

    /// `Q(beta_hat) + (λ/n)||beta_hat||_1`.
    pub fn penalized_objective(&self, n: usize) -> f64 {
        self.objective + self.lambda / n as f64 * self.beta_hat.lp_norm(1)
    }
}

fn kkt_violation(beta: &DVector<f64>, g: &DVector<f64>, lam_n: f64) -> f64 {
    beta.iter()
        .zip(g.iter())
        .map(|(&b, &gj)| {
            if b != 0.0 {
                (gj - lam_n * b.signum()).abs()
            } else {
                (gj.abs() - lam_n).max(0.0)
            }
        })
        .fold(0.0, f64::max)
}

fn soft_threshold(z: f64, t: f64) -> f64 {
    if z > t {
        z - t
    } else if z < -t {
        z + t
    } else {
        0.0
    }
}

struct Workspace<'a> {
    problem: &'a RegressionProblem,
    col_sq: Vec<f64>,
    beta: DVector<f64>,
    resid: DVector<f64>,
    half_pen: f64,
    inv_n: f64,
}

impl Workspace<'_> {
    fn update(&mut self, j: usize) -> f64 {
        let x = self.problem.x();
        let col = x.column(j);
        let old = self.beta[j];
        let rho = col.dot(&self.resid) * self.inv_n + self.col_sq[j] * old;
        let new = soft_threshold(rho, self.half_pen) / self.col_sq[j];
        let delta = new - old;
        if delta != 0.0 {
            self.resid.axpy(-delta, &col, 1.0);
            self.beta[j] = new;
        }
        delta.abs()
    }

    fn sweep_all(&mut self) -> f64 {
        (0..self.beta.len()).fold(0.0, |m, j| m.max(self.update(j)))
    }

    fn sweep_active(&mut self) -> f64 {
        let mut m: f64 = 0.0;
        for j in 0..self.beta.len() {
            if self.beta[j] != 0.0 {
                m = m.max(self.update(j));
            }
        }
        m
    }

    fn refresh_residual(&mut self) {
        self.resid = self.problem.y() - self.problem.x() * &self.beta;
    }

    /// Coordinate descent with an exact active-set solve after each active
    /// phase. Returns sweeps used and the final worst KKT violation.
    fn solve(&mut self, lam_n: f64, kkt_tol: f64, max_sweeps: usize) -> (usize, f64) {
        let mut sweeps = 0usize;
        loop {
            let full_change = self.sweep_all();
            sweeps += 1;
            let phase_start = sweeps;
            while sweeps < max_sweeps {
                let change = self.sweep_active();
                sweeps += 1;
                if change < COORD_CHANGE_TOL || sweeps - phase_start >= POLISH_EVERY {
                    break;
                }
            }
            self.refresh_residual();
            let worst = kkt_violation(&self.beta, &self.gradient(), lam_n);
            if worst <= kkt_tol && full_change < COORD_CHANGE_TOL {
                return (sweeps, worst);
            }
            if let Some(w) = self.polish(lam_n, kkt_tol) {
                return (sweeps, w);
            }
            if sweeps >= max_sweeps {
                return (sweeps, worst);
            }
        }
    }

    /// Solves the stationarity equations on the current active set with the
    /// current signs; kept only if signs agree and every KKT condition holds.
    fn polish(&mut self, lam_n: f64, kkt_tol: f64) -> Option<f64> {
        let active: Vec<usize> = (0..self.beta.len()).filter(|&j| self.beta[j] != 0.0).collect();
        if active.is_empty() || active.len() > self.problem.n() {
            return None;
        }
        let xa = self.problem.x().select_columns(&active);
        let gram = xa.tr_mul(&xa) * self.inv_n;
        let z = DVector::from_iterator(active.len(), active.iter().map(|&j| self.beta[j].signum()));
        let rhs = xa.tr_mul(self.problem.y()) * self.inv_n - &z * (0.5 * lam_n);
        let sol = gram.cholesky()?.solve(&rhs);
        if sol.iter().zip(z.iter()).any(|(b, s)| b * s <= 0.0) {
            return None;
        }
        let mut cand = DVector::zeros(self.beta.len());
        for (k, &j) in active.iter().enumerate() {
            cand[j] = sol[k];
        }
        let resid = self.problem.y() - self.problem.x() * &cand;
        let g = self.problem.x().tr_mul(&resid) * (2.0 * self.inv_n);
        let worst = kkt_violation(&cand, &g, lam_n);
        if worst <= kkt_tol {
            self.beta = cand;
            self.resid = resid;
            Some(worst)
        } else {
            None
        }
    }

    fn gradient(&self) -> DVector<f64> {
        self.problem.x().tr_mul(&self.resid) * (2.0 * self.inv_n)
    }
}

/// Solves the LASSO program at penalty level `lambda`.
pub fn fit_lasso(
    problem: &RegressionProblem,
    lambda: f64,
    opts: &LassoOptions,
) -> Result<LassoFit> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(Error::invalid(format!(
            "lambda must be positive and finite, got {lambda}"
        )));
    }
    let n = problem.n();
    let p = problem.p();
    let inv_n = 1.0 / n as f64;
    let lam_n = lambda * inv_n;
    let kkt_tol = opts.kkt_rel_tol * lam_n;

    let beta = match &opts.warm_start {
        Some(w) if w.len() == p => w.clone(),
        Some(w) => {
            return Err(Error::DimensionMismatch {
                what: "warm start",
                expected: p,
                found: w.len(),
            })
        }
        None => DVector::zeros(p),
    };
    let col_sq = problem
        .x()
        .column_iter()
        .map(|c| c.norm_squared() * inv_n)
        .collect();
    let mut ws = Workspace {
        problem,
        col_sq,
        resid: problem.y() - problem.x() * &beta,
        beta,
        half_pen: 0.5 * lam_n,
        inv_n,
    };

    let mut sweeps = 0usize;
    if opts.warm_start.is_none() {
        // geometric path from λ_max down, each stage warm-starting the next
        let lmax = lambda_max(problem);
        if lmax > lambda {
            let stages = ((lmax / lambda).ln() / PATH_RATIO.recip().ln()).ceil() as usize;
            for k in 1..stages.min(MAX_PATH_STAGES) {
                let lam_k = lmax * PATH_RATIO.powi(k as i32) * inv_n;
                ws.half_pen = 0.5 * lam_k;
                let budget = PATH_STAGE_SWEEPS.min(opts.max_iter.saturating_sub(sweeps));
                sweeps += ws.solve(lam_k, PATH_KKT_REL * lam_k, budget).0;
            }
        }
        ws.half_pen = 0.5 * lam_n;
    }
    let (used, mut worst) = ws.solve(lam_n, kkt_tol, opts.max_iter.saturating_sub(sweeps));
    sweeps += used;
    if worst > kkt_tol {
        // degenerate or slowly mixing designs: recover the active set exactly
        if let Some(b) = homotopy(problem, lambda, opts.max_iter) {
            ws.beta = b;
            ws.refresh_residual();
            worst = ws.polish(lam_n, kkt_tol).unwrap_or(f64::INFINITY);
        }
    }
    if worst > kkt_tol {
        return Err(Error::NonConvergence {
            iterations: sweeps,
            worst_kkt: worst,
        });
    }

    // Minimum-support proxy: drop numerically negligible coefficients unless
    // doing so breaks the optimality certificate.
    let snapped: Vec<(usize, f64)> = ws
        .beta
        .iter()
        .enumerate()
        .filter(|(_, b)| **b != 0.0 && b.abs() <= opts.zero_tol)
        .map(|(j, b)| (j, *b))
        .collect();
    if !snapped.is_empty() {
        for &(j, _) in &snapped {
            ws.beta[j] = 0.0;
        }
        ws.refresh_residual();
        if kkt_violation(&ws.beta, &ws.gradient(), lam_n) > kkt_tol {
            for &(j, b) in &snapped {
                ws.beta[j] = b;
            }
            ws.refresh_residual();
        }
    }

    let g = ws.gradient();
    let objective = ws.resid.norm_squared() * inv_n;
    let support = Support::of_vector(ws.beta.as_slice(), 0.0);
    Ok(LassoFit {
        beta_hat: ws.beta,
        support,
        lambda,
        objective,
        kkt_residuals: g,
        iterations: sweeps,
        kkt_tol,
    })
}

/// Piecewise-linear solution path from `λ_max` down to `lambda` (LARS with the
/// LASSO sign-crossing rule), in the scaling `½||y - Xb||² + (λ/2)||b||_1`.
///
/// Returns `None` when an active Gram matrix is singular or the path needs more
/// than `max_steps` breakpoints; the caller certifies the result.
fn homotopy(problem: &RegressionProblem, lambda: f64, max_steps: usize) -> Option<DVector<f64>> {
    let x = problem.x();
    let (n, p) = (problem.n(), problem.p());
    let mu_final = 0.5 * lambda;
    let mut beta = DVector::zeros(p);
    let mut corr = x.tr_mul(problem.y());
    let j0 = corr.iamax();
    let mut mu = corr[j0].abs();
    if mu <= mu_final {
        return Some(beta);
    }
    let mut active = vec![j0];
    let mut signs = vec![corr[j0].signum()];
    let mut in_active = vec![false; p];
    in_active[j0] = true;

    for _ in 0..max_steps.min(20 * (n + p)) {
        let xa = x.select_columns(&active);
        let dir = xa
            .tr_mul(&xa)
            .cholesky()?
            .solve(&DVector::from_column_slice(&signs));
        let a = x.tr_mul(&(&xa * &dir));
        let min_step = 1e-12 * mu;

        let mut gamma = mu - mu_final;
        let mut join: Option<(usize, f64)> = None;
        let mut drop: Option<usize> = None;
        for j in (0..p).filter(|&j| !in_active[j]) {
            for (num, den, sign) in [(mu - corr[j], 1.0 - a[j], 1.0), (mu + corr[j], 1.0 + a[j], -1.0)] {
                if den > 1e-12 {
                    let g = num / den;
                    if g > min_step && g < gamma {
                        gamma = g;
                        join = Some((j, sign));
                        drop = None;
                    }
                }
            }
        }
        for (k, &j) in active.iter().enumerate() {
            let g = -beta[j] / dir[k];
            if g > min_step && g < gamma {
                gamma = g;
                drop = Some(k);
                join = None;
            }
        }

        for (k, &j) in active.iter().enumerate() {
            beta[j] += gamma * dir[k];
        }
        corr.axpy(-gamma, &a, 1.0);
        mu -= gamma;
        match (join, drop) {
            (Some((j, sign)), _) => {
                active.push(j);
                signs.push(sign);
                in_active[j] = true;
                if active.len() > n.min(p) {
                    return None;
                }
            }
            (None, Some(k)) => {
                let j = active.remove(k);
                signs.remove(k);
                beta[j] = 0.0;
                in_active[j] = false;
            }
            (None, None) => return Some(beta),
        }
    }
    None
}

/// `beta(t)_j = beta_j 1{|beta_j| > t}`.
pub fn hard_threshold(beta: &DVector<f64>, t: f64) -> DVector<f64> {
    beta.map(|b| if b.abs() > t { b } else { 0.0 })
}

/// `||S||_inf` with `S = 2 E_n[x_i eps_i]`; needs the simulated noise.
pub fn score_sup_norm(problem: &RegressionProblem) -> Result<f64> {
    let eps = problem.noise()?;
    let s = problem.x().tr_mul(&eps) * (2.0 / problem.n() as f64);
    Ok(s.amax())
}

/// Smallest λ at which the zero vector is optimal: `2n max_j |E_n[x_ij y_i]|`.
pub fn lambda_max(problem: &RegressionProblem) -> f64 {
    2.0 * problem.x().tr_mul(problem.y()).amax()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::GroundTruth;
    use nalgebra::DMatrix;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn random_problem(seed: u64, n: usize, p: usize) -> RegressionProblem {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = DMatrix::from_fn(n, p, |_, _| rng.sample::<f64, _>(StandardNormal));
        let y = DVector::from_fn(n, |i, _| x[(i, 0)] - 0.5 * x[(i, 1 % p)] + rng.sample::<f64, _>(StandardNormal));
        RegressionProblem::new(x, y).unwrap()
    }

    #[test]
    fn zero_solution_above_lambda_max() {
        let prob = random_problem(1, 30, 10);
        let lm = lambda_max(&prob);
        let fit = fit_lasso(&prob, lm * 1.0001, &LassoOptions::default()).unwrap();
        assert!(fit.support.is_empty());
        let fit = fit_lasso(&prob, lm * 0.9, &LassoOptions::default()).unwrap();
        assert!(!fit.support.is_empty());
    }

    #[test]
    fn kkt_and_objective_invariants() {
        let prob = random_problem(2, 25, 40);
        let fit = fit_lasso(&prob, 0.3 * lambda_max(&prob), &LassoOptions::default()).unwrap();
        assert!(fit.worst_kkt_violation(prob.n()) <= fit.kkt_tol);
        assert!((fit.objective - prob.objective(&fit.beta_hat).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn warm_start_agrees_with_cold_start() {
        let prob = random_problem(3, 40, 15);
        let lm = lambda_max(&prob);
        let cold = fit_lasso(&prob, 0.2 * lm, &LassoOptions::default()).unwrap();
        let warm_opts = LassoOptions {
            warm_start: Some(fit_lasso(&prob, 0.5 * lm, &LassoOptions::default()).unwrap().beta_hat),
            ..LassoOptions::default()
        };
        let warm = fit_lasso(&prob, 0.2 * lm, &warm_opts).unwrap();
        assert_eq!(cold.support, warm.support);
        assert!((cold.beta_hat - warm.beta_hat).amax() < 1e-8);
    }

    #[test]
    fn non_convergence_reports_violation() {
        let prob = random_problem(4, 20, 60);
        let opts = LassoOptions {
            max_iter: 2,
            ..LassoOptions::default()
        };
        match fit_lasso(&prob, 0.01 * lambda_max(&prob), &opts) {
            Err(Error::NonConvergence { worst_kkt, .. }) => assert!(worst_kkt > 0.0),
            other => panic!("expected non-convergence, got {other:?}"),
        }
    }

    #[test]
    fn rejects_nonpositive_lambda() {
        let prob = random_problem(5, 10, 3);
        assert!(fit_lasso(&prob, 0.0, &LassoOptions::default()).is_err());
        assert!(fit_lasso(&prob, -1.0, &LassoOptions::default()).is_err());
    }

    #[test]
    fn hard_threshold_cases() {
        let b = DVector::from_vec(vec![0.5, -0.2, 0.1]);
        assert_eq!(hard_threshold(&b, 0.0), b);
        assert_eq!(hard_threshold(&b, 0.2), DVector::from_vec(vec![0.5, 0.0, 0.0]));
        assert_eq!(hard_threshold(&b, 0.5), DVector::zeros(3));
    }

    #[test]
    fn score_cases() {
        let x = DMatrix::from_element(6, 1, 1.0);
        let f = DVector::zeros(6);
        let sigma = 0.7;
        let y = DVector::from_element(6, sigma);
        let truth = GroundTruth::new(f.clone(), DVector::zeros(1), sigma).unwrap();
        let prob = RegressionProblem::new(x.clone(), y).unwrap().with_ground_truth(truth).unwrap();
        assert!((score_sup_norm(&prob).unwrap() - 2.0 * sigma).abs() < 1e-14);

        let truth = GroundTruth::new(f.clone(), DVector::zeros(1), 1.0).unwrap();
        let quiet = RegressionProblem::new(x.clone(), f.clone()).unwrap().with_ground_truth(truth).unwrap();
        assert_eq!(score_sup_norm(&quiet).unwrap(), 0.0);

        let plain = RegressionProblem::new(x, f).unwrap();
        assert!(matches!(score_sup_norm(&plain), Err(Error::MissingGroundTruth)));
    }

    #[test]
    fn score_matches_dense_product() {
        let x = DMatrix::from_row_slice(5, 3, &[
            1.0, 2.0, -1.0, 0.5, -1.0, 2.0, -2.0, 0.3, 1.0, 1.5, 1.0, 0.0, 0.2, -0.7, 1.0,
        ]);
        let eps = DVector::from_vec(vec![0.1, -0.4, 0.3, 0.9, -0.2]);
        let prob = RegressionProblem::new(x, eps.clone()).unwrap();
        let truth = GroundTruth::new(DVector::zeros(5), DVector::zeros(3), 1.0).unwrap();
        let prob = prob.with_ground_truth(truth).unwrap();
        let xn = prob.x();
        let mut best: f64 = 0.0;
        for j in 0..3 {
            let mut acc = 0.0;
            for i in 0..5 {
                acc += xn[(i, j)] * eps[i];
            }
            best = best.max((2.0 * acc / 5.0).abs());
        }
        assert!((score_sup_norm(&prob).unwrap() - best).abs() < 1e-14);
    }
}
