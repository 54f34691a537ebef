//! Simulation configuration, loadable from TOML.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::design::{Design, Model};
use crate::diagnostics::ORACLE_MAX_P;
use crate::error::{Error, Result};
use crate::penalty::PenaltyParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Estimator {
    Lasso,
    PostLasso,
    PostFitness,
    PostTraditional,
}

impl Estimator {
    pub const ALL: [Estimator; 4] = [
        Estimator::Lasso,
        Estimator::PostLasso,
        Estimator::PostFitness,
        Estimator::PostTraditional,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Estimator::Lasso => "lasso",
            Estimator::PostLasso => "post_lasso",
            Estimator::PostFitness => "post_fitness",
            Estimator::PostTraditional => "post_traditional",
        }
    }
}

impl fmt::Display for Estimator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Estimator {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Estimator::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| {
                Error::invalid(format!(
                    "unknown estimator '{s}' (expected lasso, post_lasso, post_fitness, post_traditional)"
                ))
            })
    }
}

fn default_c_tilde() -> f64 {
    1.0
}

fn default_k_max() -> usize {
    6
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationConfig {
    pub n: usize,
    pub p: usize,
    pub sigma: f64,
    pub replications: usize,
    pub seed: u64,
    pub design: Design,
    pub model: Model,
    pub c_grid: Vec<f64>,
    pub estimators: Vec<Estimator>,
    /// Free-text note recorded when the run deviates from the reference scale.
    #[serde(default)]
    pub scale_note: Option<String>,
    #[serde(default)]
    pub penalty: PenaltyParams,
    /// Use the true `σ` instead of the iterated estimate.
    #[serde(default)]
    pub fixed_sigma: bool,
    /// Oracle and bound certification per replication; needs small `p`.
    #[serde(default)]
    pub diagnostics: bool,
    #[serde(default = "default_c_tilde")]
    pub c_tilde: f64,
    #[serde(default = "default_k_max")]
    pub oracle_k_max: usize,
}

impl SimulationConfig {
    /// Reference scale: n = 100, p = 500, 1000 replications, five unit coefficients.
    pub fn paper() -> Self {
        SimulationConfig {
            n: 100,
            p: 500,
            sigma: 1.0,
            replications: 1000,
            seed: 0,
            design: Design::Isotropic,
            model: Model::Parametric { s_true: 5 },
            c_grid: (0..=20).map(|k| k as f64 / 10.0).collect(),
            estimators: Estimator::ALL.to_vec(),
            scale_note: None,
            penalty: PenaltyParams::default(),
            fixed_sigma: false,
            diagnostics: false,
            c_tilde: default_c_tilde(),
            oracle_k_max: default_k_max(),
        }
    }

    /// Reduced scale that runs in minutes.
    pub fn desk() -> Self {
        SimulationConfig {
            p: 100,
            replications: 200,
            design: Design::Equicorrelated { rho: 0.5 },
            c_grid: vec![0.25, 0.5, 0.75, 1.0, 1.5, 2.0],
            scale_note: Some("desk scale: p = 100, 200 replications".into()),
            ..Self::paper()
        }
    }

    pub fn preset(name: &str) -> Result<Self> {
        match name {
            "paper" => Ok(Self::paper()),
            "desk" => Ok(Self::desk()),
            other => Err(Error::invalid(format!(
                "unknown preset '{other}' (expected paper, desk)"
            ))),
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: SimulationConfig =
            toml::from_str(text).map_err(|e| Error::invalid(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 || self.p == 0 {
            return Err(Error::invalid("need n >= 2 and p >= 1"));
        }
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(Error::invalid("sigma must be positive"));
        }
        if self.replications == 0 {
            return Err(Error::invalid("replications must be positive"));
        }
        if self.c_grid.is_empty() || self.c_grid.iter().any(|c| !(*c >= 0.0 && c.is_finite())) {
            return Err(Error::invalid("c_grid must be a nonempty list of nonnegative values"));
        }
        if self.estimators.is_empty() {
            return Err(Error::invalid("at least one estimator is required"));
        }
        if self.c_grid.len() > u32::MAX as usize || self.replications > u32::MAX as usize {
            return Err(Error::invalid("c_grid or replications too large"));
        }
        if !(self.c_tilde >= 1.0) {
            return Err(Error::invalid("c_tilde must be at least 1"));
        }
        if self.diagnostics && self.p > ORACLE_MAX_P {
            return Err(Error::Budget {
                what: "per-replication diagnostics (p)",
                needed: self.p as u128,
                limit: ORACLE_MAX_P as u128,
            });
        }
        self.design.validate()?;
        self.model.theta0(self.p, 0.0)?;
        self.penalty.validate()
    }

    /// True when the run departs from the reference preset's scale.
    pub fn deviates_from_full_scale(&self) -> bool {
        let r = Self::paper();
        self.n != r.n || self.p != r.p || self.replications != r.replications
    }
}
