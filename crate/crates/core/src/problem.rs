//! Regression data model: a column-normalized design, the response, and the
//! optional simulation ground truth used by the certification routines.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::support::Support;

/// Scales each column so that its uncentered second moment `E_n[x_ij^2]` is 1.
///
/// Returns the normalized matrix and the scale vector `s` with
/// `x_out[(i, j)] = x_in[(i, j)] / s[j]`.
pub fn normalize_columns(x: &DMatrix<f64>) -> Result<(DMatrix<f64>, DVector<f64>)> {
    let n = x.nrows();
    if n == 0 || x.ncols() == 0 {
        return Err(Error::Data("design matrix has no rows or no columns".into()));
    }
    let mut out = x.clone();
    let mut scales = DVector::zeros(x.ncols());
    for (j, mut col) in out.column_iter_mut().enumerate() {
        let second_moment = col.norm_squared() / n as f64;
        if !(second_moment > 0.0) || !second_moment.is_finite() {
            return Err(Error::ZeroColumn { index: j });
        }
        let s = second_moment.sqrt();
        col /= s;
        scales[j] = s;
    }
    Ok((out, scales))
}

/// Simulation-mode truth attached to a problem.
///
/// `beta0` is expressed in the coordinates of the normalized design.
#[derive(Debug, Clone)]
pub struct GroundTruth {
    pub f: DVector<f64>,
    pub beta0: DVector<f64>,
    pub sigma: f64,
    pub support: Support,
}

impl GroundTruth {
    /// Builds the truth record; the support is read off `beta0`.
    pub fn new(f: DVector<f64>, beta0: DVector<f64>, sigma: f64) -> Result<Self> {
        if !(sigma > 0.0) {
            return Err(Error::invalid("ground-truth sigma must be positive"));
        }
        let support = Support::of_vector(beta0.as_slice(), 0.0);
        Ok(GroundTruth {
            f,
            beta0,
            sigma,
            support,
        })
    }
}

/// Design `x` (normalized, n x p), response `y`, and optional truth.
///
/// Immutable after construction.
#[derive(Debug, Clone)]
pub struct RegressionProblem {
    x: DMatrix<f64>,
    y: DVector<f64>,
    scales: DVector<f64>,
    truth: Option<GroundTruth>,
}

impl RegressionProblem {
    /// Normalizes the raw design and validates dimensions.
    pub fn new(x_raw: DMatrix<f64>, y: DVector<f64>) -> Result<Self> {
        if y.len() != x_raw.nrows() {
            return Err(Error::DimensionMismatch {
                what: "response length",
                expected: x_raw.nrows(),
                found: y.len(),
            });
        }
        if y.iter().any(|v| !v.is_finite()) || x_raw.iter().any(|v| !v.is_finite()) {
            return Err(Error::Data("non-finite value in design or response".into()));
        }
        let (x, scales) = normalize_columns(&x_raw)?;
        Ok(RegressionProblem {
            x,
            y,
            scales,
            truth: None,
        })
    }

    pub fn with_ground_truth(mut self, truth: GroundTruth) -> Result<Self> {
        if truth.f.len() != self.n() {
            return Err(Error::DimensionMismatch {
                what: "ground-truth f",
                expected: self.n(),
                found: truth.f.len(),
            });
        }
        if truth.beta0.len() != self.p() {
            return Err(Error::DimensionMismatch {
                what: "ground-truth beta0",
                expected: self.p(),
                found: truth.beta0.len(),
            });
        }
        self.truth = Some(truth);
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn p(&self) -> usize {
        self.x.ncols()
    }

    pub fn x(&self) -> &DMatrix<f64> {
        &self.x
    }

    pub fn y(&self) -> &DVector<f64> {
        &self.y
    }

    pub fn scales(&self) -> &DVector<f64> {
        &self.scales
    }

    pub fn ground_truth(&self) -> Option<&GroundTruth> {
        self.truth.as_ref()
    }

    pub fn require_truth(&self) -> Result<&GroundTruth> {
        self.truth.as_ref().ok_or(Error::MissingGroundTruth)
    }

    /// Noise realization `eps = y - f`.
    pub fn noise(&self) -> Result<DVector<f64>> {
        Ok(&self.y - &self.require_truth()?.f)
    }

    fn check_len(&self, v: &DVector<f64>, what: &'static str) -> Result<()> {
        if v.len() != self.p() {
            return Err(Error::DimensionMismatch {
                what,
                expected: self.p(),
                found: v.len(),
            });
        }
        Ok(())
    }

    /// `||delta||_{2,n} = sqrt(E_n[(x_i' delta)^2])`.
    pub fn prediction_norm(&self, delta: &DVector<f64>) -> Result<f64> {
        self.check_len(delta, "prediction_norm delta")?;
        Ok(((&self.x * delta).norm_squared() / self.n() as f64).sqrt())
    }

    /// `Q(beta) = E_n[(y_i - x_i' beta)^2]`.
    pub fn objective(&self, beta: &DVector<f64>) -> Result<f64> {
        self.check_len(beta, "objective beta")?;
        Ok((&self.y - &self.x * beta).norm_squared() / self.n() as f64)
    }

    /// Same as [`objective`](Self::objective) but against an arbitrary target vector.
    pub fn mean_sq_to(&self, target: &DVector<f64>, beta: &DVector<f64>) -> f64 {
        (target - &self.x * beta).norm_squared() / self.n() as f64
    }

    /// Maps normalized-scale coefficients back to the raw design's scale.
    pub fn to_original_scale(&self, beta: &DVector<f64>) -> DVector<f64> {
        beta.component_div(&self.scales)
    }

    /// Maps raw-scale coefficients to the normalized design's coordinates.
    pub fn to_normalized_scale(&self, theta: &DVector<f64>) -> DVector<f64> {
        theta.component_mul(&self.scales)
    }

    /// `E_n[x_i x_i']`.
    pub fn gram(&self) -> DMatrix<f64> {
        self.x.tr_mul(&self.x) / self.n() as f64
    }
}

/// Approximation error of the truth's linear target: `r = f - X beta0`.
#[derive(Debug, Clone)]
pub struct ApproxError {
    pub r: DVector<f64>,
    pub c_s: f64,
}

impl ApproxError {
    pub fn of(problem: &RegressionProblem, beta0: &DVector<f64>) -> Result<Self> {
        let truth = problem.require_truth()?;
        if beta0.len() != problem.p() {
            return Err(Error::DimensionMismatch {
                what: "beta0",
                expected: problem.p(),
                found: beta0.len(),
            });
        }
        let r = &truth.f - problem.x() * beta0;
        let c_s = (r.norm_squared() / problem.n() as f64).sqrt();
        Ok(ApproxError { r, c_s })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_matrix(rng: &mut ChaCha8Rng, n: usize, p: usize) -> DMatrix<f64> {
        DMatrix::from_fn(n, p, |_, _| rng.random_range(-2.0..2.0))
    }

    #[test]
    fn unit_column_is_unchanged() {
        let x = DMatrix::from_element(4, 1, 1.0);
        let (out, s) = normalize_columns(&x).unwrap();
        assert_eq!(out, x);
        assert_eq!(s[0], 1.0);
    }

    #[test]
    fn constant_column_scales_by_two() {
        let x = DMatrix::from_element(4, 1, 2.0);
        let (out, s) = normalize_columns(&x).unwrap();
        assert!(out.iter().all(|&v| v == 1.0));
        assert_eq!(s[0], 2.0);
    }

    #[test]
    fn random_columns_have_unit_second_moment() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let x = random_matrix(&mut rng, 10, 3);
        let (out, s) = normalize_columns(&x).unwrap();
        for j in 0..3 {
            let m: f64 = out.column(j).iter().map(|v| v * v).sum::<f64>() / 10.0;
            assert!((m - 1.0).abs() < 1e-12);
            for i in 0..10 {
                assert!((out[(i, j)] * s[j] - x[(i, j)]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn zero_column_is_named() {
        let mut x = DMatrix::from_element(3, 3, 1.0);
        x.column_mut(1).fill(0.0);
        match normalize_columns(&x) {
            Err(Error::ZeroColumn { index }) => assert_eq!(index, 1),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn prediction_norm_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let x = random_matrix(&mut rng, 8, 5);
        let y = DVector::from_fn(8, |_, _| rng.random_range(-1.0..1.0));
        let prob = RegressionProblem::new(x, y).unwrap();
        assert_eq!(prob.prediction_norm(&DVector::zeros(5)).unwrap(), 0.0);
        for j in 0..5 {
            let e = DVector::from_fn(5, |i, _| if i == j { 1.0 } else { 0.0 });
            assert!((prob.prediction_norm(&e).unwrap() - 1.0).abs() < 1e-12);
        }
        let delta = DVector::from_fn(5, |_, _| rng.random_range(-1.0..1.0));
        // entrywise recomputation of ||X delta||_2 / sqrt(n)
        let mut ss = 0.0;
        for i in 0..8 {
            let mut v = 0.0;
            for j in 0..5 {
                v += prob.x()[(i, j)] * delta[j];
            }
            ss += v * v;
        }
        let dense = ss.sqrt() / 8f64.sqrt();
        assert!((prob.prediction_norm(&delta).unwrap() - dense).abs() < 1e-12);
        assert!(prob.prediction_norm(&DVector::zeros(4)).is_err());
    }

    #[test]
    fn objective_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let x = random_matrix(&mut rng, 6, 3);
        let y = DVector::from_fn(6, |_, _| rng.random_range(-1.0..1.0));
        let prob = RegressionProblem::new(x, y.clone()).unwrap();
        let ey2 = y.iter().map(|v| v * v).sum::<f64>() / 6.0;
        assert!((prob.objective(&DVector::zeros(3)).unwrap() - ey2).abs() < 1e-14);

        let beta = DVector::from_vec(vec![0.3, -1.0, 2.0]);
        let mut rss = 0.0;
        for i in 0..6 {
            let fit: f64 = (0..3).map(|j| prob.x()[(i, j)] * beta[j]).sum();
            rss += (y[i] - fit).powi(2);
        }
        assert!((prob.objective(&beta).unwrap() - rss / 6.0).abs() < 1e-13);

        let exact = prob.x() * &beta;
        let interp = RegressionProblem::new(prob.x().clone(), exact).unwrap();
        assert!(interp.objective(&beta).unwrap() < 1e-28);
        assert!(prob.objective(&DVector::zeros(2)).is_err());
    }

    #[test]
    fn response_length_checked() {
        let x = DMatrix::from_element(3, 2, 1.0);
        assert!(matches!(
            RegressionProblem::new(x, DVector::zeros(4)),
            Err(Error::DimensionMismatch { .. })
        ));
    }
}
