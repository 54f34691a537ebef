//! Per-(estimator, C) summaries and CSV serialization.

use std::io::Write;

use nalgebra::DVector;

use super::config::Estimator;
use super::sweep::MetricsRecord;
use crate::error::{Error, Result};
use crate::io::format_f64;

pub const RECORD_COLUMNS: [&str; 15] = [
    "estimator",
    "c_index",
    "c_value",
    "replication",
    "n_selected",
    "empirical_risk",
    "in_sample_q",
    "coef_error_norm",
    "event_lambda",
    "lambda",
    "sigma_hat",
    "covers_true_support",
    "exact_true_support",
    "bounds_all_hold",
    "error",
];

pub const AGGREGATE_COLUMNS: [&str; 8] = [
    "estimator",
    "c_value",
    "replications",
    "errors",
    "mean_n_selected",
    "bias_norm",
    "mean_empirical_risk",
    "event_frequency",
];

#[derive(Debug, Clone, PartialEq)]
pub struct AggregateRow {
    pub estimator: Estimator,
    pub c_index: usize,
    pub c_value: f64,
    /// Records without an error marker; the means run over these.
    pub replications: usize,
    pub errors: usize,
    pub mean_n_selected: f64,
    /// `||mean(β̃ - θ₀)||_2`.
    pub bias_norm: f64,
    pub mean_empirical_risk: f64,
    pub event_frequency: f64,
}

/// Group-by means over `(estimator, C index)`, in that order.
pub fn aggregate(records: &[MetricsRecord]) -> Vec<AggregateRow> {
    let mut sorted: Vec<&MetricsRecord> = records.iter().collect();
    sorted.sort_by_key(|r| (r.estimator, r.c_index, r.replication));
    let mut out = Vec::new();
    for group in sorted.chunk_by(|a, b| (a.estimator, a.c_index) == (b.estimator, b.c_index)) {
        let ok: Vec<&&MetricsRecord> = group.iter().filter(|r| !r.is_error()).collect();
        let k = ok.len() as f64;
        let mean = |f: &dyn Fn(&MetricsRecord) -> f64| ok.iter().map(|r| f(r)).sum::<f64>() / k;
        let bias_norm = if ok.is_empty() {
            f64::NAN
        } else {
            let p = ok[0].coef_error.len();
            let sum = ok.iter().fold(DVector::zeros(p), |acc, r| acc + &r.coef_error);
            (sum / k).norm()
        };
        out.push(AggregateRow {
            estimator: group[0].estimator,
            c_index: group[0].c_index,
            c_value: group[0].c_value,
            replications: ok.len(),
            errors: group.len() - ok.len(),
            mean_n_selected: mean(&|r| r.n_selected as f64),
            bias_norm,
            mean_empirical_risk: mean(&|r| r.empirical_risk),
            event_frequency: mean(&|r| if r.event_lambda { 1.0 } else { 0.0 }),
        });
    }
    out
}

fn num(v: f64) -> String {
    if v.is_finite() {
        format_f64(v)
    } else {
        String::new()
    }
}

fn flag(v: Option<bool>) -> String {
    v.map(|b| b.to_string()).unwrap_or_default()
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

pub fn write_records_csv<W: Write>(records: &[MetricsRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(RECORD_COLUMNS).map_err(csv_err)?;
    for r in records {
        let failed = r.is_error();
        w.write_record([
            r.estimator.name().to_string(),
            r.c_index.to_string(),
            num(r.c_value),
            r.replication.to_string(),
            if failed { String::new() } else { r.n_selected.to_string() },
            num(r.empirical_risk),
            num(r.in_sample_q),
            num(r.coef_error.norm()),
            if failed { String::new() } else { r.event_lambda.to_string() },
            num(r.lambda),
            num(r.sigma_hat),
            flag(r.covers_true_support),
            flag(r.exact_true_support),
            flag(r.bounds_all_hold),
            r.error.clone().unwrap_or_default(),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_aggregate_csv<W: Write>(rows: &[AggregateRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(AGGREGATE_COLUMNS).map_err(csv_err)?;
    for a in rows {
        w.write_record([
            a.estimator.name().to_string(),
            num(a.c_value),
            a.replications.to_string(),
            a.errors.to_string(),
            num(a.mean_n_selected),
            num(a.bias_norm),
            num(a.mean_empirical_risk),
            num(a.event_frequency),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}
