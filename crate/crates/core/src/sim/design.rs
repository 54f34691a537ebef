//! Gaussian designs and planted coefficient vectors for the Monte Carlo study.

use std::fmt;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::problem::{GroundTruth, RegressionProblem};

/// Regressor covariance `Σ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Design {
    Isotropic,
    /// `Σ_jk = ρ^|j-k|`.
    Toeplitz { rho: f64 },
    /// `Σ_jk = ρ` off the diagonal.
    Equicorrelated { rho: f64 },
}

impl Design {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Design::Isotropic => Ok(()),
            Design::Toeplitz { rho } | Design::Equicorrelated { rho } => {
                if (0.0..1.0).contains(&rho) {
                    Ok(())
                } else {
                    Err(Error::invalid(format!("rho must lie in [0, 1), got {rho}")))
                }
            }
        }
    }

    pub fn covariance(&self, p: usize) -> Result<DMatrix<f64>> {
        self.validate()?;
        Ok(match *self {
            Design::Isotropic => DMatrix::identity(p, p),
            Design::Toeplitz { rho } => {
                DMatrix::from_fn(p, p, |j, k| rho.powi((j as i32 - k as i32).abs()))
            }
            Design::Equicorrelated { rho } => {
                DMatrix::from_fn(p, p, |j, k| if j == k { 1.0 } else { rho })
            }
        })
    }

    /// Lower Cholesky factor of `Σ`; `None` for the identity.
    pub fn cholesky_factor(&self, p: usize) -> Result<Option<DMatrix<f64>>> {
        if let Design::Isotropic = self {
            return Ok(None);
        }
        let sigma = self.covariance(p)?;
        let chol = sigma
            .cholesky()
            .ok_or_else(|| Error::Numerical("design covariance is not positive definite".into()))?;
        Ok(Some(chol.l()))
    }

    /// Parses `isotropic`, `toeplitz` or `equicorrelated` with a correlation.
    pub fn from_name(name: &str, rho: f64) -> Result<Self> {
        let d = match name {
            "isotropic" => Design::Isotropic,
            "toeplitz" => Design::Toeplitz { rho },
            "equicorrelated" => Design::Equicorrelated { rho },
            other => {
                return Err(Error::invalid(format!(
                    "unknown design '{other}' (expected isotropic, toeplitz, equicorrelated)"
                )))
            }
        };
        d.validate()?;
        Ok(d)
    }
}

impl fmt::Display for Design {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Design::Isotropic => f.write_str("isotropic"),
            Design::Toeplitz { rho } => write!(f, "toeplitz(rho={rho})"),
            Design::Equicorrelated { rho } => write!(f, "equicorrelated(rho={rho})"),
        }
    }
}

/// Planted coefficients `θ₀`, scaled by the signal strength `C`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Model {
    /// `θ₀ = C` on the first `s_true` coordinates, zero elsewhere.
    Parametric { s_true: usize },
    /// `θ₀_j = C / j`.
    Nonparametric,
}

impl Model {
    pub fn theta0(&self, p: usize, c: f64) -> Result<DVector<f64>> {
        match *self {
            Model::Parametric { s_true } => {
                if s_true > p {
                    return Err(Error::invalid(format!("s_true = {s_true} exceeds p = {p}")));
                }
                Ok(DVector::from_fn(p, |j, _| if j < s_true { c } else { 0.0 }))
            }
            Model::Nonparametric => Ok(DVector::from_fn(p, |j, _| c / (j + 1) as f64)),
        }
    }

    pub fn from_name(name: &str, s_true: usize) -> Result<Self> {
        match name {
            "parametric" => Ok(Model::Parametric { s_true }),
            "nonparametric" => Ok(Model::Nonparametric),
            other => Err(Error::invalid(format!(
                "unknown model '{other}' (expected parametric, nonparametric)"
            ))),
        }
    }
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Model::Parametric { s_true } => write!(f, "parametric(s_true={s_true})"),
            Model::Nonparametric => f.write_str("nonparametric"),
        }
    }
}

/// A simulated instance together with the planted coefficients on the raw scale.
#[derive(Debug, Clone)]
pub struct SimulatedInstance {
    pub problem: RegressionProblem,
    pub theta0: DVector<f64>,
}

/// Draws `z_i ~ N(0, Σ)`, `y = Zθ₀ + ε` with `ε ~ N(0, σ²)`.
///
/// `chol` is the lower factor from [`Design::cholesky_factor`]. The attached
/// truth carries the planted `θ₀` mapped to normalized coordinates.
pub fn generate_design<R: Rng + ?Sized>(
    n: usize,
    theta0: &DVector<f64>,
    chol: Option<&DMatrix<f64>>,
    sigma: f64,
    rng: &mut R,
) -> Result<SimulatedInstance> {
    let p = theta0.len();
    // row-major draw order so the stream layout does not depend on storage order
    let mut w = DMatrix::zeros(n, p);
    for i in 0..n {
        for j in 0..p {
            w[(i, j)] = rng.sample::<f64, _>(StandardNormal);
        }
    }
    let z = match chol {
        Some(l) => w * l.transpose(),
        None => w,
    };
    let f = &z * theta0;
    let eps = DVector::from_fn(n, |_, _| sigma * rng.sample::<f64, _>(StandardNormal));
    let y = &f + eps;
    let problem = RegressionProblem::new(z, y)?;
    let beta0 = problem.to_normalized_scale(theta0);
    let problem = problem.with_ground_truth(GroundTruth::new(f, beta0, sigma)?)?;
    Ok(SimulatedInstance {
        problem,
        theta0: theta0.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn rho_one_is_rejected() {
        assert!(Design::Toeplitz { rho: 1.0 }.covariance(3).is_err());
        assert!(Design::from_name("equicorrelated", 1.2).is_err());
        assert!(Design::from_name("banded", 0.1).is_err());
    }

    #[test]
    fn theta_shapes() {
        let t = Model::Parametric { s_true: 2 }.theta0(4, 0.5).unwrap();
        assert_eq!(t.as_slice(), &[0.5, 0.5, 0.0, 0.0]);
        let t = Model::Nonparametric.theta0(3, 6.0).unwrap();
        assert_eq!(t.as_slice(), &[6.0, 3.0, 2.0]);
    }

    #[test]
    fn zero_signal_is_pure_noise() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let theta = DVector::zeros(5);
        let inst = generate_design(30, &theta, None, 1.0, &mut rng).unwrap();
        let truth = inst.problem.ground_truth().unwrap();
        assert!(truth.f.iter().all(|&v| v == 0.0));
        assert!(truth.support.is_empty());
        assert_eq!(inst.problem.noise().unwrap(), *inst.problem.y());
    }

    #[test]
    fn truth_is_consistent_with_normalized_design() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let theta = Model::Parametric { s_true: 2 }.theta0(6, 1.5).unwrap();
        let l = Design::Equicorrelated { rho: 0.5 }.cholesky_factor(6).unwrap();
        let inst = generate_design(40, &theta, l.as_ref(), 1.0, &mut rng).unwrap();
        let truth = inst.problem.ground_truth().unwrap();
        let fitted = inst.problem.x() * &truth.beta0;
        assert!((fitted - &truth.f).amax() < 1e-10);
        assert_eq!(truth.support.as_slice(), &[0, 1]);
    }
}
