#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use postlasso::sim::{generate_design, Design, Model};
use postlasso::{LassoFit, RegressionProblem};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian_matrix<R: Rng>(rng: &mut R, n: usize, p: usize) -> DMatrix<f64> {
    DMatrix::from_fn(n, p, |_, _| rng.sample::<f64, _>(StandardNormal))
}

pub fn gaussian_vector<R: Rng>(rng: &mut R, n: usize) -> DVector<f64> {
    DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal))
}

/// Random problem with `y = X θ + ε`, θ supported on the first `s` columns.
pub fn random_problem<R: Rng>(rng: &mut R, n: usize, p: usize, s: usize, signal: f64) -> RegressionProblem {
    let x = gaussian_matrix(rng, n, p);
    let theta = DVector::from_fn(p, |j, _| if j < s { signal } else { 0.0 });
    let y = &x * theta + gaussian_vector(rng, n);
    RegressionProblem::new(x, y).unwrap()
}

/// `n x p` design with `X'X/n = I` exactly up to rounding.
pub fn orthonormal_design<R: Rng>(rng: &mut R, n: usize, p: usize) -> DMatrix<f64> {
    let q = gaussian_matrix(rng, n, p).qr().q();
    q * (n as f64).sqrt()
}

/// Planted sparse instance with ground truth attached.
pub fn planted(seed: u64, n: usize, p: usize, s: usize, c: f64, design: Design) -> RegressionProblem {
    let mut r = rng(seed);
    let theta = Model::Parametric { s_true: s }.theta0(p, c).unwrap();
    let l = design.cholesky_factor(p).unwrap();
    generate_design(n, &theta, l.as_ref(), 1.0, &mut r).unwrap().problem
}

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations.
pub fn jacobi_eigenvalues(a: &DMatrix<f64>) -> Vec<f64> {
    let k = a.nrows();
    let mut m = a.clone();
    for _ in 0..100 {
        let mut off = 0.0;
        for i in 0..k {
            for j in 0..k {
                if i != j {
                    off += m[(i, j)] * m[(i, j)];
                }
            }
        }
        if off < 1e-26 {
            break;
        }
        for p in 0..k {
            for q in (p + 1)..k {
                if m[(p, q)].abs() < 1e-300 {
                    continue;
                }
                let theta = (m[(q, q)] - m[(p, p)]) / (2.0 * m[(p, q)]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for r in 0..k {
                    let (mrp, mrq) = (m[(r, p)], m[(r, q)]);
                    m[(r, p)] = c * mrp - s * mrq;
                    m[(r, q)] = s * mrp + c * mrq;
                }
                for r in 0..k {
                    let (mpr, mqr) = (m[(p, r)], m[(q, r)]);
                    m[(p, r)] = c * mpr - s * mqr;
                    m[(q, r)] = s * mpr + c * mqr;
                }
            }
        }
    }
    (0..k).map(|i| m[(i, i)]).collect()
}

/// Least-squares residual sum `E_n[(f - X_S b)^2]` by normal equations, for an
/// enumerator independent of the library's solver.
pub fn subset_fit_error(x: &DMatrix<f64>, f: &DVector<f64>, subset: &[usize]) -> f64 {
    let n = x.nrows() as f64;
    if subset.is_empty() {
        return f.norm_squared() / n;
    }
    let xs = x.select_columns(subset);
    let g = xs.tr_mul(&xs);
    let b = xs.tr_mul(f);
    let coef = g.lu().solve(&b).expect("nonsingular subset");
    (f - xs * coef).norm_squared() / n
}

pub fn all_subsets(p: usize, k: usize) -> Vec<Vec<usize>> {
    // recursive enumeration, deliberately unlike the library's iterative one
    fn go(start: usize, p: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for j in start..p {
            cur.push(j);
            go(j + 1, p, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(0, p, k, &mut Vec::new(), &mut out);
    out
}

/// In-sample `Q` of the OLS refit on `subset`, by normal equations.
pub fn refit_q(problem: &RegressionProblem, subset: &[usize]) -> f64 {
    subset_fit_error(problem.x(), problem.y(), subset)
}

pub fn thresholded(fit: &LassoFit, t: f64) -> Vec<usize> {
    (0..fit.beta_hat.len()).filter(|&j| fit.beta_hat[j].abs() > t).collect()
}

/// Largest candidate threshold passing the `γ` test, scanning every candidate.
pub fn exhaustive_choice(problem: &RegressionProblem, fit: &LassoFit, gamma: f64) -> Vec<usize> {
    let mut cands: Vec<f64> = fit.support.iter().map(|j| fit.beta_hat[j].abs()).collect();
    cands.push(0.0);
    cands.sort_by(f64::total_cmp);
    cands.dedup();
    let mut best = thresholded(fit, 0.0);
    for &t in &cands {
        let sel = thresholded(fit, t);
        if refit_q(problem, &sel) - fit.objective <= gamma {
            best = sel;
        }
    }
    best
}
