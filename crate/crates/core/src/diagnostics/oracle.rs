//! The oracle risk program `min_k c_k^2 + σ^2 k/n`, with
//! `c_k^2 = min_{||β||_0 ≤ k} E_n[(f_i - x_i'β)^2]`, solved by exhaustive
//! best-subset search at small `p`.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use super::subsets::{binomial, k_subsets};
use crate::error::{Error, Result};
use crate::linalg::{lstsq_min_norm, principal_submatrix, select_columns};
use crate::problem::{ApproxError, RegressionProblem};
use crate::support::Support;

pub const ORACLE_MAX_P: usize = 25;
pub const ORACLE_SUBSET_BUDGET: u128 = 1_000_000;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum OracleMode {
    /// Best-subset search over all supports of each size.
    Exact,
    /// Only the nested supports formed by prefixes of the given column order.
    Nested(Vec<usize>),
}

#[derive(Debug, Clone)]
pub struct OracleSolution {
    pub s: usize,
    pub support_t: Support,
    pub beta0: DVector<f64>,
    /// `(k, c_k^2)` for `k = 0..=k_max`.
    pub c_k_curve: Vec<(usize, f64)>,
    /// `c_s^2 + σ^2 s / n`.
    pub risk: f64,
    pub c_s: f64,
    pub r: DVector<f64>,
    /// Result of the nested-support heuristic rather than exhaustive search.
    pub heuristic: bool,
    /// The minimizer sits at `k_max` below `min(p, n)`, so larger sizes were not examined.
    pub truncated: bool,
}

impl OracleSolution {
    /// The risk curve `c_k^2 + σ^2 k / n`.
    pub fn risk_curve(&self, sigma: f64, n: usize) -> Vec<(usize, f64)> {
        self.c_k_curve
            .iter()
            .map(|&(k, c2)| (k, c2 + sigma * sigma * k as f64 / n as f64))
            .collect()
    }
}

/// Fast subset score: `E_n[f^2] - b_S' G_S^{-1} b_S`, or `None` if `G_S` is singular.
fn subset_score(gram: &DMatrix<f64>, b: &DVector<f64>, ff: f64, subset: &[usize]) -> Option<f64> {
    if subset.is_empty() {
        return Some(ff);
    }
    let gs = principal_submatrix(gram, subset);
    let bs = DVector::from_iterator(subset.len(), subset.iter().map(|&j| b[j]));
    let chol = gs.cholesky()?;
    let z = chol.solve(&bs);
    Some(ff - bs.dot(&z))
}

fn fit_subset(problem: &RegressionProblem, f: &DVector<f64>, subset: &[usize]) -> Result<(DVector<f64>, f64)> {
    let mut beta = DVector::zeros(problem.p());
    if !subset.is_empty() {
        let xs = select_columns(problem.x(), subset);
        let z = lstsq_min_norm(&xs, f)?;
        for (k, &j) in subset.iter().enumerate() {
            beta[j] = z[k];
        }
    }
    let c2 = problem.mean_sq_to(f, &beta);
    Ok((beta, c2))
}

/// Best `k`-subset by exhaustive search; ties go to the lexicographically first subset.
fn best_subset_of_size(
    problem: &RegressionProblem,
    gram: &DMatrix<f64>,
    b: &DVector<f64>,
    ff: f64,
    k: usize,
) -> Result<Vec<usize>> {
    let pool: Vec<usize> = (0..problem.p()).collect();
    let subsets = k_subsets(&pool, k);
    let f = &problem.require_truth()?.f;
    let scored: Vec<(usize, f64)> = subsets
        .par_iter()
        .enumerate()
        .map(|(i, sub)| {
            let score = match subset_score(gram, b, ff, sub) {
                Some(v) => v,
                None => fit_subset(problem, f, sub).map(|(_, c2)| c2).unwrap_or(f64::INFINITY),
            };
            (i, score)
        })
        .collect();
    let (best, _) = scored
        .into_iter()
        .fold((0usize, f64::INFINITY), |acc, (i, v)| if v < acc.1 { (i, v) } else { acc });
    Ok(subsets[best].clone())
}

/// Solves the oracle program for the truth attached to `problem`.
pub fn solve_oracle(
    problem: &RegressionProblem,
    k_max: usize,
    mode: &OracleMode,
) -> Result<OracleSolution> {
    let truth = problem.require_truth()?;
    let (n, p) = (problem.n(), problem.p());
    let k_max = k_max.min(n).min(p);
    let f = &truth.f;

    let mut chosen: Vec<Vec<usize>> = Vec::with_capacity(k_max + 1);
    let heuristic = match mode {
        OracleMode::Exact => {
            if p > ORACLE_MAX_P {
                return Err(Error::Budget {
                    what: "exact oracle enumeration (p); use the nested-support heuristic",
                    needed: p as u128,
                    limit: ORACLE_MAX_P as u128,
                });
            }
            let total: u128 = (0..=k_max).map(|k| binomial(p, k)).sum();
            if total > ORACLE_SUBSET_BUDGET {
                return Err(Error::Budget {
                    what: "exact oracle enumeration (subsets)",
                    needed: total,
                    limit: ORACLE_SUBSET_BUDGET,
                });
            }
            let gram = problem.gram();
            let b = problem.x().tr_mul(f) / n as f64;
            let ff = f.norm_squared() / n as f64;
            for k in 0..=k_max {
                chosen.push(best_subset_of_size(problem, &gram, &b, ff, k)?);
            }
            false
        }
        OracleMode::Nested(order) => {
            if order.iter().any(|&j| j >= p) {
                return Err(Error::invalid("nested oracle order has an out-of-range column"));
            }
            let limit = k_max.min(order.len());
            for k in 0..=limit {
                chosen.push(order[..k].to_vec());
            }
            true
        }
    };

    // Exact refits of each size's winner; c_k^2 is a minimum over ||β||_0 ≤ k,
    // so a smaller winner carries forward if rounding reorders them.
    let mut curve = Vec::with_capacity(chosen.len());
    let mut fits: Vec<(DVector<f64>, f64)> = Vec::with_capacity(chosen.len());
    for (k, sub) in chosen.iter().enumerate() {
        let (beta, c2) = fit_subset(problem, f, sub)?;
        match fits.last() {
            Some((prev_beta, prev_c2)) if *prev_c2 <= c2 => {
                let carried = (prev_beta.clone(), *prev_c2);
                curve.push((k, carried.1));
                fits.push(carried);
            }
            _ => {
                curve.push((k, c2));
                fits.push((beta, c2));
            }
        }
    }

    let var_term = truth.sigma * truth.sigma / n as f64;
    let mut best_k = 0;
    let mut best_risk = f64::INFINITY;
    for &(k, c2) in &curve {
        let risk = c2 + var_term * k as f64;
        if risk < best_risk {
            best_risk = risk;
            best_k = k;
        }
    }
    let beta0 = fits[best_k].0.clone();
    let support_t = Support::of_vector(beta0.as_slice(), 0.0);
    let approx = ApproxError::of(problem, &beta0)?;
    let examined_max = curve.last().map(|c| c.0).unwrap_or(0);
    Ok(OracleSolution {
        s: support_t.len(),
        support_t,
        beta0,
        c_k_curve: curve,
        risk: best_risk,
        c_s: approx.c_s,
        r: approx.r,
        heuristic,
        truncated: best_k == examined_max && examined_max < n.min(p),
    })
}
