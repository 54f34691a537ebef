//! Brute-force diagnostics on small designs: the oracle target, restricted and
//! sparse eigenvalues, perfect-selection certificates and bound verification.

pub mod bounds;
pub mod eigen;
pub mod oracle;
pub mod selection;
pub mod subsets;

pub use bounds::{
    certify_bounds, BoundCheck, BoundConstants, BoundReport, PerfectSelection, Verdict,
};
pub use eigen::{
    restricted_eigenvalue, restricted_eigenvalue_gram, restricted_sparse_eigenvalues,
    sparse_eigen_at, DesignConstants, ReEstimate, ReOptions, RseRow,
};
pub use oracle::{solve_oracle, OracleMode, OracleSolution, ORACLE_MAX_P};
pub use selection::{perfect_selection_certificate, perfect_selection_kkt, SelectionCertificate};
