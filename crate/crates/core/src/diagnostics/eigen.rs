//! Restricted eigenvalue `κ(c̄)` and restricted sparse eigenvalues `κ̃(m)`, `φ(m)`.
//!
//! For a fixed sign pattern `σ` on `T`, normalizing `||δ_T||_1 = 1` turns the
//! cone program for `κ(c̄)^2 / s` into the convex quadratic program
//!
//! ```text
//! min δ'Gδ  s.t.  σ_j δ_j ≥ 0, Σ_T σ_j δ_j = 1 (j ∈ T),  ||δ_{T^c}||_1 ≤ c̄
//! ```
//!
//! over a product of a simplex and an ℓ1 ball. Each pattern is solved by
//! accelerated projected gradient; the linearization of the objective over the
//! feasible set gives a certified lower bound at every iterate. `κ(c̄)` is the
//! minimum over the `2^{s-1}` patterns (`δ → -δ` is a symmetry).

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use super::subsets::{binomial, k_subsets};
use crate::error::{Error, Result};
use crate::linalg::{principal_submatrix, sym_eigen_extremes, sym_max_eigenvalue};
use crate::support::Support;

pub const RSE_SUBSET_BUDGET: u128 = 1_000_000;
pub const RE_MAX_SUPPORT: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReOptions {
    /// Stop a pattern once `(upper - lower) <= gap_tol * upper`.
    pub gap_tol: f64,
    pub max_iter: usize,
}

impl Default for ReOptions {
    fn default() -> Self {
        ReOptions {
            gap_tol: 1e-8,
            max_iter: 20_000,
        }
    }
}

impl ReOptions {
    pub fn tight() -> Self {
        ReOptions {
            gap_tol: 1e-11,
            max_iter: 200_000,
        }
    }
}

/// Bracket `lower ≤ κ(c̄) ≤ upper`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReEstimate {
    pub c_bar: f64,
    pub lower: f64,
    pub upper: f64,
}

impl ReEstimate {
    /// Bracket is tight to within 1%.
    pub fn is_exact(&self) -> bool {
        self.upper.is_finite() && self.upper - self.lower <= 0.01 * self.upper
    }

    /// The smaller end of the bracket.
    pub fn conservative(&self) -> f64 {
        self.lower
    }
}

fn project_simplex(w: &mut [f64]) {
    // Euclidean projection onto {w ≥ 0, Σw = 1}
    let mut u: Vec<f64> = w.to_vec();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut css = 0.0;
    let mut theta = 0.0;
    for (i, &ui) in u.iter().enumerate() {
        css += ui;
        let t = (css - 1.0) / (i as f64 + 1.0);
        if ui - t > 0.0 {
            theta = t;
        }
    }
    for v in w.iter_mut() {
        *v = (*v - theta).max(0.0);
    }
}

fn project_l1_ball(v: &mut [f64], radius: f64) {
    if radius <= 0.0 {
        v.iter_mut().for_each(|x| *x = 0.0);
        return;
    }
    let l1: f64 = v.iter().map(|x| x.abs()).sum();
    if l1 <= radius {
        return;
    }
    let mut a: Vec<f64> = v.iter().map(|x| x.abs()).collect();
    project_simplex_radius(&mut a, radius);
    for (x, m) in v.iter_mut().zip(a) {
        *x = x.signum() * m;
    }
}

fn project_simplex_radius(w: &mut [f64], radius: f64) {
    w.iter_mut().for_each(|x| *x /= radius);
    project_simplex(w);
    w.iter_mut().for_each(|x| *x *= radius);
}

struct PatternProblem<'a> {
    gram: &'a DMatrix<f64>,
    on: &'a [usize],
    off: &'a [usize],
    signs: Vec<f64>,
    c_bar: f64,
}

impl PatternProblem<'_> {
    fn project(&self, d: &mut DVector<f64>) {
        let mut w: Vec<f64> = self.on.iter().zip(&self.signs).map(|(&j, s)| s * d[j]).collect();
        project_simplex(&mut w);
        for ((&j, s), wj) in self.on.iter().zip(&self.signs).zip(w) {
            d[j] = s * wj;
        }
        let mut v: Vec<f64> = self.off.iter().map(|&j| d[j]).collect();
        project_l1_ball(&mut v, self.c_bar);
        for (&j, vj) in self.off.iter().zip(v) {
            d[j] = vj;
        }
    }

    /// `min_{e ∈ D} <grad, e>`.
    fn linear_min(&self, grad: &DVector<f64>) -> f64 {
        let on_min = self
            .on
            .iter()
            .zip(&self.signs)
            .map(|(&j, s)| s * grad[j])
            .fold(f64::INFINITY, f64::min);
        let off_max = self.off.iter().map(|&j| grad[j].abs()).fold(0.0, f64::max);
        on_min - self.c_bar * off_max
    }

    /// Returns `(lower, upper)` on `min δ'Gδ` over the pattern's feasible set.
    fn solve(&self, step: f64, opts: &ReOptions, stop_above: f64) -> (f64, f64) {
        let p = self.gram.nrows();
        let s = self.on.len() as f64;
        let mut x = DVector::zeros(p);
        for (&j, sg) in self.on.iter().zip(&self.signs) {
            x[j] = sg / s;
        }
        let mut x_prev = x.clone();
        let mut y = x.clone();
        let mut tk = 1.0f64;
        let mut best_upper = f64::INFINITY;
        let mut best_lower = f64::NEG_INFINITY;
        let mut f_prev = f64::INFINITY;
        for _ in 0..opts.max_iter {
            let gy = self.gram * &y * 2.0;
            let fy = 0.5 * y.dot(&gy);
            let lower = fy - gy.dot(&y) + self.linear_min(&gy);
            best_lower = best_lower.max(lower);

            let mut next = &y - &gy * step;
            self.project(&mut next);
            let fx = next.dot(&(self.gram * &next));
            best_upper = best_upper.min(fx);
            if best_upper - best_lower <= opts.gap_tol * best_upper.max(f64::MIN_POSITIVE)
                || best_lower >= stop_above
            {
                break;
            }
            // function-value restart keeps the iteration monotone-ish
            let (t_next, momentum) = if fx > f_prev {
                (1.0, 0.0)
            } else {
                let t_next = 0.5 * (1.0 + (1.0 + 4.0 * tk * tk).sqrt());
                (t_next, (tk - 1.0) / t_next)
            };
            x_prev.copy_from(&x);
            x = next;
            y = &x + (&x - &x_prev) * momentum;
            tk = t_next;
            f_prev = fx;
        }
        (best_lower.max(0.0), best_upper)
    }
}

/// Brackets `κ(c̄)` for the Gram matrix `gram = E_n[x x']` and support `T`.
pub fn restricted_eigenvalue_gram(
    gram: &DMatrix<f64>,
    support: &Support,
    c_bar: f64,
    opts: &ReOptions,
) -> Result<ReEstimate> {
    if support.is_empty() {
        return Err(Error::invalid("restricted eigenvalue needs a nonempty support"));
    }
    if !(c_bar >= 0.0) {
        return Err(Error::invalid("c_bar must be nonnegative"));
    }
    let s = support.len();
    if s > RE_MAX_SUPPORT {
        return Err(Error::Budget {
            what: "restricted-eigenvalue sign patterns (support size)",
            needed: s as u128,
            limit: RE_MAX_SUPPORT as u128,
        });
    }
    let p = gram.nrows();
    let on = support.as_slice();
    let off_set = support.complement(p);
    let off = off_set.as_slice();
    let lmax = sym_max_eigenvalue(gram).max(f64::MIN_POSITIVE);
    let step = 1.0 / (2.0 * lmax);

    let mut best_upper = f64::INFINITY;
    let mut best_lower = f64::INFINITY;
    for mask in 0u64..(1u64 << (s - 1)) {
        let signs: Vec<f64> = (0..s)
            .map(|i| if i > 0 && mask >> (i - 1) & 1 == 1 { -1.0 } else { 1.0 })
            .collect();
        let prob = PatternProblem {
            gram,
            on,
            off,
            signs,
            c_bar,
        };
        let (lo, hi) = prob.solve(step, opts, best_upper);
        best_upper = best_upper.min(hi);
        best_lower = best_lower.min(lo);
    }
    let sf = s as f64;
    Ok(ReEstimate {
        c_bar,
        lower: (sf * best_lower.max(0.0)).sqrt(),
        upper: (sf * best_upper).sqrt(),
    })
}

pub fn restricted_eigenvalue(
    x: &DMatrix<f64>,
    support: &Support,
    c_bar: f64,
    opts: &ReOptions,
) -> Result<ReEstimate> {
    let gram = x.tr_mul(x) / x.nrows() as f64;
    restricted_eigenvalue_gram(&gram, support, c_bar, opts)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RseRow {
    pub m: usize,
    pub phi: f64,
    pub kappa_tilde_sq: f64,
}

impl RseRow {
    /// `μ(m) = sqrt(φ(m)) / κ̃(m)`.
    pub fn mu(&self) -> f64 {
        (self.phi / self.kappa_tilde_sq).sqrt()
    }
}

#[derive(Debug, Clone, Default)]
pub struct DesignConstants {
    pub kappa_re: Vec<ReEstimate>,
    pub rse: Vec<RseRow>,
}

impl DesignConstants {
    pub fn row(&self, m: usize) -> Option<&RseRow> {
        self.rse.iter().find(|r| r.m == m)
    }

    pub fn phi(&self, m: usize) -> Option<f64> {
        self.row(m).map(|r| r.phi)
    }

    pub fn kappa_tilde(&self, m: usize) -> Option<f64> {
        self.row(m).map(|r| r.kappa_tilde_sq.sqrt())
    }

    pub fn mu(&self, m: usize) -> Option<f64> {
        self.row(m).map(RseRow::mu)
    }
}

/// Extreme eigenvalues over the principal submatrices on `T ∪ J`, `J ⊆ T^c`,
/// `|J| = min(m, |T^c|)`. By interlacing this equals the extremes over `|J| ≤ m`.
pub fn sparse_eigen_at(gram: &DMatrix<f64>, support: &Support, m: usize) -> Result<RseRow> {
    let p = gram.nrows();
    let off = support.complement(p);
    let m_eff = m.min(off.len());
    let count = binomial(off.len(), m_eff);
    if count > RSE_SUBSET_BUDGET {
        return Err(Error::Budget {
            what: "restricted sparse eigenvalue subsets",
            needed: count,
            limit: RSE_SUBSET_BUDGET,
        });
    }
    if support.is_empty() && m_eff == 0 {
        return Err(Error::invalid(
            "restricted sparse eigenvalues at m = 0 need a nonempty support",
        ));
    }
    let extra = k_subsets(off.as_slice(), m_eff);
    let (lo, hi) = extra
        .par_iter()
        .map(|j| {
            let idx = support.union(&Support::from_indices(j.clone()));
            sym_eigen_extremes(&principal_submatrix(gram, idx.as_slice()))
        })
        .reduce(
            || (f64::INFINITY, f64::NEG_INFINITY),
            |a, b| (a.0.min(b.0), a.1.max(b.1)),
        );
    Ok(RseRow {
        m,
        phi: hi,
        kappa_tilde_sq: lo,
    })
}

/// `κ̃(m)^2` and `φ(m)` for `m = 0..=m_max` (rows with an empty feasible set are skipped).
pub fn restricted_sparse_eigenvalues(
    x: &DMatrix<f64>,
    support: &Support,
    m_max: usize,
) -> Result<DesignConstants> {
    let p = x.ncols();
    let gram = x.tr_mul(x) / x.nrows() as f64;
    let off = p - support.len();
    let top = m_max.min(off);
    let total: u128 = (0..=top).map(|m| binomial(off, m)).sum();
    if total > RSE_SUBSET_BUDGET {
        return Err(Error::Budget {
            what: "restricted sparse eigenvalue subsets",
            needed: total,
            limit: RSE_SUBSET_BUDGET,
        });
    }
    let start = if support.is_empty() { 1 } else { 0 };
    let rse = (start..=top)
        .map(|m| sparse_eigen_at(&gram, support, m))
        .collect::<Result<Vec<_>>>()?;
    Ok(DesignConstants {
        kappa_re: Vec::new(),
        rse,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simplex_projection() {
        let mut w = vec![0.5, 0.5];
        project_simplex(&mut w);
        assert_eq!(w, vec![0.5, 0.5]);
        let mut w = vec![2.0, 0.0, -1.0];
        project_simplex(&mut w);
        assert!((w[0] - 1.0).abs() < 1e-15 && w[1] == 0.0 && w[2] == 0.0);
        let mut v = vec![3.0, -1.0];
        project_l1_ball(&mut v, 2.0);
        assert!((v[0] - 2.0).abs() < 1e-15 && v[1] == 0.0);
    }

    #[test]
    fn identity_gram_gives_unit_kappa() {
        let g = DMatrix::identity(6, 6);
        let t = Support::from_indices(vec![0, 3]);
        let re = restricted_eigenvalue_gram(&g, &t, 3.0, &ReOptions::default()).unwrap();
        assert!(re.lower >= 1.0 - 1e-6, "{re:?}");
        assert!(re.upper <= 1.0 + 1e-6);
        assert!(re.is_exact());
    }

    #[test]
    fn equicorrelated_lower_bound_holds() {
        // off-diagonal 1/(U s) with U > 5 c̄
        let (p, s, c_bar) = (8usize, 2usize, 1.5f64);
        let u = 10.0;
        let rho = 1.0 / (u * s as f64);
        let g = DMatrix::from_fn(p, p, |i, j| if i == j { 1.0 } else { rho });
        let t = Support::from_indices(vec![1, 5]);
        let re = restricted_eigenvalue_gram(&g, &t, c_bar, &ReOptions::default()).unwrap();
        let analytic = (1.0 - (1.0 + 2.0 * c_bar) / u).sqrt();
        assert!(re.lower >= analytic - 1e-9, "{re:?} vs {analytic}");
    }

    #[test]
    fn duplicated_support_column_collapses_kappa() {
        let g = DMatrix::from_row_slice(3, 3, &[1.0, 1.0, 0.2, 1.0, 1.0, 0.2, 0.2, 0.2, 1.0]);
        let t = Support::from_indices(vec![0, 1]);
        let re = restricted_eigenvalue_gram(&g, &t, 1.0, &ReOptions::default()).unwrap();
        assert!(re.upper < 1e-3, "{re:?}");
        assert!(re.lower <= re.upper);
    }

    #[test]
    fn empty_support_rejected() {
        let g = DMatrix::identity(3, 3);
        assert!(restricted_eigenvalue_gram(&g, &Support::empty(), 1.0, &ReOptions::default()).is_err());
    }

    #[test]
    fn isotropic_sparse_eigenvalues() {
        let x = DMatrix::identity(5, 5) * 5f64.sqrt();
        let t = Support::from_indices(vec![2]);
        let dc = restricted_sparse_eigenvalues(&x, &t, 3).unwrap();
        assert_eq!(dc.rse.len(), 4);
        for row in &dc.rse {
            assert!((row.phi - 1.0).abs() < 1e-12 && (row.kappa_tilde_sq - 1.0).abs() < 1e-12);
            assert!((row.mu() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn m_zero_row_only() {
        let x = DMatrix::from_fn(6, 4, |i, j| ((i + 2 * j) as f64).cos() + 0.1 * j as f64);
        let t = Support::from_indices(vec![0, 1]);
        let dc = restricted_sparse_eigenvalues(&x, &t, 0).unwrap();
        assert_eq!(dc.rse.len(), 1);
        let gram = x.tr_mul(&x) / 6.0;
        let (lo, hi) = sym_eigen_extremes(&principal_submatrix(&gram, &[0, 1]));
        assert!((dc.rse[0].phi - hi).abs() < 1e-14 && (dc.rse[0].kappa_tilde_sq - lo).abs() < 1e-14);
    }
}
