//! LASSO with a simulated, data-driven penalty level, iterated noise-level
//! estimation, post-selection least squares and finite-sample diagnostics.

// `!(x > 0.0)` deliberately rejects NaN as well
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod diagnostics;
pub mod error;
pub mod lasso;
pub mod linalg;
pub mod penalty;
pub mod postselect;
pub mod problem;
pub mod support;

pub use error::{Error, ErrorKind, Result};
pub use lasso::{fit_lasso, LassoFit, LassoOptions};
pub use penalty::{PenaltyCalibration, PenaltyParams};
pub use postselect::{FitnessSearch, GammaChoice, PostSelectionFit, Scheme};
pub use problem::{GroundTruth, RegressionProblem};
pub use support::Support;
pub mod io;
pub mod sim;
