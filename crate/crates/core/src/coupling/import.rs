//! Ingestion of externally computed decay/coupling matrices.
//!
//! Two formats are accepted:
//!
//! - CSV: N lines of N comma-separated decimal floats, row μ holding γ_μν.
//!   A companion file of identical shape may carry Δ_μν.
//! - JSON: `{"n": N, "gamma": [[...]], "delta": [[...]], "units":
//!   "gamma0"|"per_second"}` with `delta` and `units` optional.
//!
//! Imported decay matrices are validated for physicality; a structured
//! report of every violated invariant accompanies rejections.

use std::fs;
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::validate::{validate_physical, ValidationReport};
use super::{CouplingMatrix, DecayMatrix, RateUnits};

#[derive(Debug, Error)]
pub enum ImportError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("empty matrix file")]
    Empty,
    #[error("malformed float '{token}' at line {line}, column {col}")]
    BadFloat {
        line: usize,
        col: usize,
        token: String,
    },
    #[error("non-square data: {rows} rows but row {line} has {cols} columns")]
    NonSquare {
        rows: usize,
        line: usize,
        cols: usize,
    },
    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("JSON field n = {n} does not match gamma shape {rows}x{cols}")]
    JsonShape { n: usize, rows: usize, cols: usize },
    #[error("companion coupling matrix is {got}x{got}, decay matrix is {expected}x{expected}")]
    CompanionShape { got: usize, expected: usize },
    #[error("decay matrix failed physicality validation:\n{0}")]
    Unphysical(ValidationReport),
    #[error("coupling matrix rejected: {0}")]
    BadCoupling(String),
}

#[derive(Serialize, Deserialize)]
struct DecayJson {
    n: usize,
    gamma: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    delta: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    units: RateUnits,
}

fn parse_csv_matrix(text: &str) -> Result<DMatrix<f64>, ImportError> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let mut row = Vec::new();
        for (colno, tok) in trimmed.split(',').enumerate() {
            let v: f64 = tok.trim().parse().map_err(|_| ImportError::BadFloat {
                line: lineno + 1,
                col: colno + 1,
                token: tok.trim().to_string(),
            })?;
            row.push(v);
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(ImportError::Empty);
    }
    let n = rows.len();
    for (i, row) in rows.iter().enumerate() {
        if row.len() != n {
            return Err(ImportError::NonSquare {
                rows: n,
                line: i + 1,
                cols: row.len(),
            });
        }
    }
    Ok(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
}

fn rows_to_matrix(rows: &[Vec<f64>]) -> Result<DMatrix<f64>, ImportError> {
    if rows.is_empty() {
        return Err(ImportError::Empty);
    }
    let n = rows.len();
    for (i, row) in rows.iter().enumerate() {
        if row.len() != n {
            return Err(ImportError::NonSquare {
                rows: n,
                line: i + 1,
                cols: row.len(),
            });
        }
    }
    Ok(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
}

fn read(path: &Path) -> Result<String, ImportError> {
    fs::read_to_string(path).map_err(|source| ImportError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn finish(
    gamma: DMatrix<f64>,
    delta: Option<DMatrix<f64>>,
    units: RateUnits,
) -> Result<(DecayMatrix, Option<CouplingMatrix>), ImportError> {
    let report = validate_physical(&gamma);
    if !report.is_physical() {
        return Err(ImportError::Unphysical(report));
    }
    let n = gamma.nrows();
    let decay = DecayMatrix::with_units(gamma, units)
        .expect("validated matrix must construct");
    let coupling = match delta {
        Some(d) => {
            if d.nrows() != n || d.ncols() != n {
                return Err(ImportError::CompanionShape {
                    got: d.nrows(),
                    expected: n,
                });
            }
            Some(CouplingMatrix::new(d).map_err(|e| ImportError::BadCoupling(e.to_string()))?)
        }
        None => None,
    };
    Ok((decay, coupling))
}

/// Parse a decay matrix from JSON text.
pub fn import_decay_json(text: &str) -> Result<(DecayMatrix, Option<CouplingMatrix>), ImportError> {
    let doc: DecayJson = serde_json::from_str(text)?;
    let gamma = rows_to_matrix(&doc.gamma)?;
    if gamma.nrows() != doc.n {
        return Err(ImportError::JsonShape {
            n: doc.n,
            rows: gamma.nrows(),
            cols: gamma.ncols(),
        });
    }
    let delta = doc.delta.as_deref().map(rows_to_matrix).transpose()?;
    finish(gamma, delta, doc.units)
}

/// Import a decay matrix (and optional companion coupling matrix) from a
/// file. `.json` files use the JSON schema; anything else is parsed as CSV
/// with rates in γ₀ units. The row/column count is inferred from the data.
pub fn import_decay_matrix(
    path: &Path,
    companion: Option<&Path>,
) -> Result<(DecayMatrix, Option<CouplingMatrix>), ImportError> {
    let text = read(path)?;
    let is_json = path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("json"))
        || text.trim_start().starts_with('{');
    if is_json {
        return import_decay_json(&text);
    }
    let gamma = parse_csv_matrix(&text)?;
    let delta = companion
        .map(|p| read(p).and_then(|t| parse_csv_matrix(&t)))
        .transpose()?;
    finish(gamma, delta, RateUnits::Gamma0)
}

/// Write a matrix as CSV with round-trip-safe floats (17 significant digits).
pub fn export_decay_csv(m: &DMatrix<f64>) -> String {
    let mut out = String::new();
    for i in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols()).map(|j| format!("{:.16e}", m[(i, j)])).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}
