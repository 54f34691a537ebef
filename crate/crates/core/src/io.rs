//! Delimited text input: one observation per row, numeric fields only.

use std::path::Path;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct Dataset {
    pub x: DMatrix<f64>,
    pub y: DVector<f64>,
    /// Regressor names from the header, or `x1..xp`.
    pub names: Vec<String>,
    pub response_name: String,
}

/// Which column holds the response; negative values count from the end.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ResponseColumn(pub isize);

impl Default for ResponseColumn {
    fn default() -> Self {
        ResponseColumn(-1)
    }
}

/// Reads a delimited file. A first row with any non-numeric field is a header.
pub fn read_dataset(path: &Path, delimiter: u8, response: ResponseColumn) -> Result<Dataset> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Data(format!("cannot read {}: {e}", path.display())))?;
    parse_dataset(&text, delimiter, response)
}

pub fn parse_dataset(text: &str, delimiter: u8, response: ResponseColumn) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .delimiter(delimiter)
        .flexible(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());

    let mut header: Option<Vec<String>> = None;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut width: Option<usize> = None;
    for (k, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| Error::Data(format!("malformed input: {e}")))?;
        let line = rec.position().map(|p| p.line()).unwrap_or(k as u64 + 1);
        if rec.iter().all(|f| f.is_empty()) {
            continue;
        }
        match width {
            Some(w) if w != rec.len() => {
                return Err(Error::Data(format!(
                    "line {line}: expected {w} fields, found {}",
                    rec.len()
                )))
            }
            _ => width = Some(rec.len()),
        }
        let parsed: std::result::Result<Vec<f64>, _> = rec.iter().map(str::parse::<f64>).collect();
        match parsed {
            Ok(v) => rows.push(v),
            Err(_) if header.is_none() && rows.is_empty() => {
                header = Some(rec.iter().map(str::to_string).collect());
            }
            Err(_) => {
                let bad = rec.iter().find(|f| f.parse::<f64>().is_err()).unwrap_or("");
                return Err(Error::Data(format!("line {line}: non-numeric field '{bad}'")));
            }
        }
    }
    if rows.is_empty() {
        return Err(Error::Data("no rows".into()));
    }
    let cols = width.unwrap_or(0);
    if cols < 2 {
        return Err(Error::Data(format!(
            "need at least 2 columns (regressors and a response), found {cols}"
        )));
    }
    let resp = if response.0 < 0 {
        cols as isize + response.0
    } else {
        response.0
    };
    if resp < 0 || resp as usize >= cols {
        return Err(Error::invalid(format!(
            "response column {} out of range for {cols} columns",
            response.0
        )));
    }
    let resp = resp as usize;
    let regressors: Vec<usize> = (0..cols).filter(|&j| j != resp).collect();
    let n = rows.len();
    let x = DMatrix::from_fn(n, regressors.len(), |i, j| rows[i][regressors[j]]);
    let y = DVector::from_fn(n, |i, _| rows[i][resp]);
    let names = match &header {
        Some(h) => regressors.iter().map(|&j| h[j].clone()).collect(),
        None => regressors.iter().enumerate().map(|(k, _)| format!("x{}", k + 1)).collect(),
    };
    let response_name = header.map(|h| h[resp].clone()).unwrap_or_else(|| "y".into());
    Ok(Dataset {
        x,
        y,
        names,
        response_name,
    })
}

/// Shortest round-trip text for `v`, switching to exponent form outside `[1e-4, 1e15)`.
pub fn format_f64(v: f64) -> String {
    let a = v.abs();
    if v != 0.0 && v.is_finite() && !(1e-4..1e15).contains(&a) {
        format!("{v:e}")
    } else {
        v.to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn number_format() {
        assert_eq!(format_f64(0.25), "0.25");
        assert_eq!(format_f64(0.0), "0");
        assert_eq!(format_f64(3.7e-16), "3.7e-16");
        assert_eq!(format_f64(-2e20), "-2e20");
        assert_eq!(format_f64(12.0), "12");
    }

    #[test]
    fn header_and_default_response() {
        let d = parse_dataset("a,b,y\n1,2,3\n4,5,6\n", b',', ResponseColumn::default()).unwrap();
        assert_eq!(d.names, vec!["a", "b"]);
        assert_eq!(d.response_name, "y");
        assert_eq!(d.y.as_slice(), &[3.0, 6.0]);
        assert_eq!(d.x[(1, 1)], 5.0);
    }

    #[test]
    fn headerless_with_response_override() {
        let d = parse_dataset("1\t2\t3\n4\t5\t6\n", b'\t', ResponseColumn(0)).unwrap();
        assert_eq!(d.y.as_slice(), &[1.0, 4.0]);
        assert_eq!(d.names, vec!["x1", "x2"]);
    }

    #[test]
    fn failures() {
        let err = |t: &str| parse_dataset(t, b',', ResponseColumn::default()).unwrap_err().to_string();
        assert!(err("").contains("no rows"));
        assert!(err("a,b\n").contains("no rows"));
        assert!(err("1,2\n3,x\n").contains("line 2"));
        assert!(err("1,2\n3,4,5\n").contains("line 2"));
        assert!(err("1\n2\n").contains("at least 2 columns"));
        assert!(parse_dataset("1,2\n", b',', ResponseColumn(5)).is_err());
    }
}
