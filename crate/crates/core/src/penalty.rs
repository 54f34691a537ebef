//! Data-driven penalty level `λ = c'·σ̂·Λ(1-α|X)`.
//!
//! `Λ(1-α|X)` is the design-conditional `(1-α)`-quantile of `n||S/σ||_inf`,
//! `S = 2 E_n[x_i ε_i]`, approximated by Monte Carlo with Gaussian noise. The
//! noise scale is estimated by alternating LASSO fits and residual RMS.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lasso::{fit_lasso, score_sup_norm, LassoFit, LassoOptions};
use crate::problem::RegressionProblem;

pub const MIN_MC_DRAWS: usize = 100;

/// Relative change in successive `σ̂` iterates that stops the refit loop.
pub const SIGMA_REL_TOL: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PenaltyParams {
    pub alpha: f64,
    pub c: f64,
    pub c_prime: f64,
    pub mc_draws: usize,
    pub seed: u64,
    pub max_refits: usize,
}

impl Default for PenaltyParams {
    fn default() -> Self {
        PenaltyParams {
            alpha: 0.05,
            c: 1.1,
            c_prime: 1.1 * 1.1,
            mc_draws: 1000,
            seed: 0,
            max_refits: 3,
        }
    }
}

impl PenaltyParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::invalid(format!("alpha must lie in (0,1), got {}", self.alpha)));
        }
        if !(self.c > 1.0) {
            return Err(Error::invalid(format!("c must exceed 1, got {}", self.c)));
        }
        if !(self.c_prime > self.c) {
            return Err(Error::invalid(format!(
                "c' must exceed c (c = {}, c' = {})",
                self.c, self.c_prime
            )));
        }
        if self.mc_draws < MIN_MC_DRAWS {
            return Err(Error::invalid(format!(
                "mc_draws must be at least {MIN_MC_DRAWS}, got {}",
                self.mc_draws
            )));
        }
        Ok(())
    }

    /// `c̄ = (c+1)/(c-1)`.
    pub fn c_bar(&self) -> f64 {
        (self.c + 1.0) / (self.c - 1.0)
    }
}

#[derive(Debug, Clone)]
pub struct PenaltyCalibration {
    pub alpha: f64,
    pub c: f64,
    pub c_prime: f64,
    pub lambda_quantile: f64,
    pub mc_draws: usize,
    pub sigma_iterates: Vec<f64>,
    pub lambda_final: f64,
    /// `true` when σ was supplied rather than estimated.
    pub known_sigma: bool,
}

impl PenaltyCalibration {
    pub fn sigma_hat(&self) -> f64 {
        *self.sigma_iterates.last().expect("at least one sigma iterate")
    }

    /// Upper bound `2 sqrt(2 n log(p/α))` on the score quantile, from a union bound.
    pub fn quantile_bound(n: usize, p: usize, alpha: f64) -> f64 {
        2.0 * (2.0 * n as f64 * (p as f64 / alpha).ln()).sqrt()
    }
}

/// Draws `n||2 E_n[x_i g_i]||_inf` with `g ~ N(0, I)`, one independent stream per draw.
pub fn simulate_score_draws(x: &DMatrix<f64>, mc_draws: usize, seed: u64) -> Vec<f64> {
    let n = x.nrows();
    (0..mc_draws)
        .into_par_iter()
        .map(|d| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(d as u64);
            let g = DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
            2.0 * x.tr_mul(&g).amax()
        })
        .collect()
}

/// Conservative empirical quantile: order statistic at `ceil(level * R)` (1-based).
pub fn upper_quantile(draws: &mut [f64], level: f64) -> f64 {
    draws.sort_by(f64::total_cmp);
    let r = draws.len();
    let k = ((level * r as f64) - 1e-9).ceil().clamp(1.0, r as f64) as usize;
    draws[k - 1]
}

/// Monte Carlo estimate of `Λ(1-α|X)`; deterministic in `seed`.
pub fn simulate_lambda_quantile(
    x: &DMatrix<f64>,
    alpha: f64,
    mc_draws: usize,
    seed: u64,
) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::invalid(format!("alpha must lie in (0,1), got {alpha}")));
    }
    if mc_draws < MIN_MC_DRAWS {
        return Err(Error::invalid(format!(
            "mc_draws must be at least {MIN_MC_DRAWS}, got {mc_draws}"
        )));
    }
    let mut draws = simulate_score_draws(x, mc_draws, seed);
    Ok(upper_quantile(&mut draws, 1.0 - alpha))
}

/// Sample standard deviation with the `n-1` divisor.
fn sample_sd(y: &DVector<f64>) -> f64 {
    let n = y.len() as f64;
    let mean = y.mean();
    (y.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
}

/// Iterated noise-level estimate: `σ̂₀ = sd(y)`, then
/// `σ̂_{k+1} = sqrt(Q(β̂(c'σ̂_kΛ)))` for up to `max_refits` rounds.
///
/// Returns the calibration together with the last LASSO fit computed.
pub fn estimate_sigma_with_fit(
    problem: &RegressionProblem,
    params: &PenaltyParams,
    lasso_opts: &LassoOptions,
) -> Result<(PenaltyCalibration, Option<LassoFit>)> {
    params.validate()?;
    if problem.n() < 2 {
        return Err(Error::Data("sigma estimation needs at least two observations".into()));
    }
    let sigma0 = sample_sd(problem.y());
    if !(sigma0 > 0.0) {
        return Err(Error::Data("response has zero sample variance".into()));
    }
    let quantile = simulate_lambda_quantile(problem.x(), params.alpha, params.mc_draws, params.seed)?;

    let mut iterates = vec![sigma0];
    let mut last_fit: Option<LassoFit> = None;
    for _ in 0..params.max_refits {
        let current = *iterates.last().unwrap();
        let opts = LassoOptions {
            warm_start: last_fit.as_ref().map(|f| f.beta_hat.clone()),
            ..lasso_opts.clone()
        };
        let fit = fit_lasso(problem, params.c_prime * current * quantile, &opts)?;
        let next = fit.objective.sqrt();
        if !(next > 0.0) {
            return Err(Error::Numerical(
                "residual-based sigma estimate collapsed to zero".into(),
            ));
        }
        iterates.push(next);
        last_fit = Some(fit);
        if ((next - current) / current).abs() < SIGMA_REL_TOL {
            break;
        }
    }
    let lambda_final = params.c_prime * iterates.last().unwrap() * quantile;
    Ok((
        PenaltyCalibration {
            alpha: params.alpha,
            c: params.c,
            c_prime: params.c_prime,
            lambda_quantile: quantile,
            mc_draws: params.mc_draws,
            sigma_iterates: iterates,
            lambda_final,
            known_sigma: false,
        },
        last_fit,
    ))
}

pub fn estimate_sigma(
    problem: &RegressionProblem,
    params: &PenaltyParams,
) -> Result<PenaltyCalibration> {
    estimate_sigma_with_fit(problem, params, &LassoOptions::default()).map(|(c, _)| c)
}

/// Calibration with a supplied noise level (no refits).
pub fn calibrate_known_sigma(
    problem: &RegressionProblem,
    sigma: f64,
    params: &PenaltyParams,
) -> Result<PenaltyCalibration> {
    params.validate()?;
    if !(sigma > 0.0) {
        return Err(Error::invalid("known sigma must be positive"));
    }
    let quantile = simulate_lambda_quantile(problem.x(), params.alpha, params.mc_draws, params.seed)?;
    Ok(PenaltyCalibration {
        alpha: params.alpha,
        c: params.c,
        c_prime: params.c_prime,
        lambda_quantile: quantile,
        mc_draws: params.mc_draws,
        sigma_iterates: vec![sigma],
        lambda_final: params.c_prime * sigma * quantile,
        known_sigma: true,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConditionVReport {
    pub sigma_ratio: f64,
    pub ell: f64,
    pub u: f64,
    /// Whether `λ ≥ c·n·||S||_inf` on this realization.
    pub event_held: bool,
}

/// Realized `σ̂/σ` and penalty-dominance event for a problem with known truth.
pub fn condition_v_report(
    calibration: &PenaltyCalibration,
    problem: &RegressionProblem,
) -> Result<ConditionVReport> {
    let truth = problem.require_truth()?;
    let ratio = calibration.sigma_hat() / truth.sigma;
    let score = score_sup_norm(problem)?;
    Ok(ConditionVReport {
        sigma_ratio: ratio,
        ell: ratio.min(1.0),
        u: ratio.max(1.0),
        event_held: penalty_event(calibration.lambda_final, calibration.c, problem.n(), score),
    })
}

/// The event `λ ≥ c·n·||S||_inf`.
pub fn penalty_event(lambda: f64, c: f64, n: usize, score_sup: f64) -> bool {
    lambda >= c * n as f64 * score_sup
}
