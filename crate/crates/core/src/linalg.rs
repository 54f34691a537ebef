//! Small dense helpers shared by the post-selection and diagnostics code.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

pub fn select_columns(x: &DMatrix<f64>, idx: &[usize]) -> DMatrix<f64> {
    x.select_columns(idx)
}

pub fn principal_submatrix(g: &DMatrix<f64>, idx: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(idx.len(), idx.len(), |a, b| g[(idx[a], idx[b])])
}

/// Minimum-norm least-squares solution of `a z = b` via SVD.
///
/// Singular values below `max(rows, cols) * eps * sigma_max` are treated as zero.
pub fn lstsq_min_norm(a: &DMatrix<f64>, b: &DVector<f64>) -> Result<DVector<f64>> {
    if a.ncols() == 0 {
        return Ok(DVector::zeros(0));
    }
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.max();
    if smax == 0.0 {
        return Ok(DVector::zeros(a.ncols()));
    }
    let tol = (a.nrows().max(a.ncols()) as f64) * f64::EPSILON * smax;
    svd.solve(b, tol)
        .map_err(|e| Error::Numerical(format!("least-squares solve failed: {e}")))
}

/// Smallest and largest eigenvalue of a symmetric matrix.
pub fn sym_eigen_extremes(m: &DMatrix<f64>) -> (f64, f64) {
    if m.nrows() == 1 {
        return (m[(0, 0)], m[(0, 0)]);
    }
    let eig = SymmetricEigen::new(m.clone());
    (eig.eigenvalues.min(), eig.eigenvalues.max())
}

/// Largest eigenvalue of a symmetric positive semidefinite matrix.
pub fn sym_max_eigenvalue(m: &DMatrix<f64>) -> f64 {
    sym_eigen_extremes(m).1
}
