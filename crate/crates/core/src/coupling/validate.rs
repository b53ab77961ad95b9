//! Physicality validation of decay matrices.
//!
//! A physical decay matrix is symmetric with a strictly positive diagonal,
//! obeys the Cauchy–Schwarz bound |γ_μν| ≤ √(γ_μμ γ_νν) (the cross density
//! of states can never exceed the geometric mean of the local ones), and is
//! positive semidefinite. Tolerances absorb double-precision eigensolver
//! noise while catching genuinely unphysical inputs.

use nalgebra::DMatrix;
use std::fmt;

/// Relative symmetry tolerance (scaled by max |γ|).
pub const SYMMETRY_TOL: f64 = 1e-12;
/// Relative slack on the Cauchy–Schwarz bound.
pub const CAUCHY_SCHWARZ_SLACK: f64 = 1e-9;
/// Eigenvalue floor, relative to the trace.
pub const EIGENVALUE_TOL: f64 = 1e-9;

/// One violated physicality invariant, with offending indices and magnitudes.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    NotSquare {
        rows: usize,
        cols: usize,
    },
    NonFiniteEntry {
        row: usize,
        col: usize,
    },
    Asymmetry {
        row: usize,
        col: usize,
        delta: f64,
    },
    NonpositiveDiagonal {
        index: usize,
        value: f64,
    },
    CauchySchwarz {
        row: usize,
        col: usize,
        value: f64,
        bound: f64,
    },
    NegativeEigenvalue {
        value: f64,
        tolerance: f64,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::NotSquare { rows, cols } => write!(f, "matrix is {rows}x{cols}, not square"),
            Self::NonFiniteEntry { row, col } => {
                write!(f, "non-finite entry at ({row},{col})")
            }
            Self::Asymmetry { row, col, delta } => {
                write!(f, "asymmetry at ({row},{col}): |g[r,c] - g[c,r]| = {delta:.3e}")
            }
            Self::NonpositiveDiagonal { index, value } => {
                write!(f, "diagonal entry {index} is {value:.6e} (must be > 0)")
            }
            Self::CauchySchwarz {
                row,
                col,
                value,
                bound,
            } => write!(
                f,
                "Cauchy-Schwarz violated at ({row},{col}): |{value:.6e}| > sqrt-diag bound {bound:.6e}"
            ),
            Self::NegativeEigenvalue { value, tolerance } => {
                write!(f, "negative eigenvalue {value:.6e} below tolerance -{tolerance:.3e}")
            }
        }
    }
}

/// Outcome of [`validate_physical`]; empty means physical.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_physical(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.violations.is_empty() {
            return write!(f, "physical (no violations)");
        }
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

/// Check every physicality invariant and report each violation with the
/// offending indices and magnitudes. Never fails; an empty report means the
/// matrix is physical.
pub fn validate_physical(m: &DMatrix<f64>) -> ValidationReport {
    let mut report = ValidationReport::default();
    let (rows, cols) = m.shape();
    if rows != cols {
        report.violations.push(Violation::NotSquare { rows, cols });
        return report;
    }
    let n = rows;
    for i in 0..n {
        for j in 0..n {
            if !m[(i, j)].is_finite() {
                report
                    .violations
                    .push(Violation::NonFiniteEntry { row: i, col: j });
            }
        }
    }
    if !report.violations.is_empty() {
        return report;
    }

    let max_abs = m.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()));
    for i in 0..n {
        for j in (i + 1)..n {
            let delta = (m[(i, j)] - m[(j, i)]).abs();
            if delta > SYMMETRY_TOL * max_abs.max(1e-300) {
                report.violations.push(Violation::Asymmetry {
                    row: i,
                    col: j,
                    delta,
                });
            }
        }
    }
    for i in 0..n {
        if m[(i, i)] <= 0.0 {
            report.violations.push(Violation::NonpositiveDiagonal {
                index: i,
                value: m[(i, i)],
            });
        }
    }
    for i in 0..n {
        for j in (i + 1)..n {
            if m[(i, i)] > 0.0 && m[(j, j)] > 0.0 {
                let bound = (m[(i, i)] * m[(j, j)]).sqrt() * (1.0 + CAUCHY_SCHWARZ_SLACK);
                let value = m[(i, j)];
                if value.abs() > bound {
                    report.violations.push(Violation::CauchySchwarz {
                        row: i,
                        col: j,
                        value,
                        bound,
                    });
                }
            }
        }
    }
    // eigenvalue floor on the symmetrized matrix
    let sym = (m + m.transpose()) * 0.5;
    let trace = sym.trace();
    let tol = EIGENVALUE_TOL * trace.abs().max(1e-300);
    let eigs = sym.symmetric_eigenvalues();
    if let Some(min) = eigs.iter().cloned().reduce(f64::min) {
        if min < -tol {
            report.violations.push(Violation::NegativeEigenvalue {
                value: min,
                tolerance: tol,
            });
        }
    }
    report
}
