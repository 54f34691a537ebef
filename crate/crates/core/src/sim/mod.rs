//! Monte Carlo study: designs, the estimator sweep and aggregation.

pub mod aggregate;
pub mod config;
pub mod design;
pub mod sweep;

pub use aggregate::{aggregate, write_aggregate_csv, write_records_csv, AggregateRow};
pub use config::{Estimator, SimulationConfig};
pub use design::{generate_design, Design, Model, SimulatedInstance};
pub use sweep::{replication_instance, run_sweep, MetricsRecord};
