//! Collective decay matrices γ_μν and coherent couplings Δ_μν from
//! environment models.
//!
//! The decay matrix is the only channel through which the electromagnetic
//! environment enters the correlation observables: diagonal entries are
//! single-emitter rates (LDOS), off-diagonal entries are dissipative cross
//! rates (CDOS). Physicality requires symmetry, a strictly positive diagonal,
//! the Cauchy–Schwarz bound |γ_μν| ≤ √(γ_μμ γ_νν), and positive
//! semidefiniteness; [`validate::validate_physical`] reports violations.
//!
//! Rates are stored in units of a reference rate γ₀ unless tagged otherwise.

mod freespace;
mod import;
mod validate;

pub use freespace::free_space_pair_rate;
pub use import::{export_decay_csv, import_decay_json, import_decay_matrix};
pub use validate::{validate_physical, ValidationReport, Violation};

use nalgebra::{DMatrix, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::emitters::EmitterArray;

#[derive(Debug, Error)]
pub enum CouplingError {
    #[error("coincident emitters with distinct dipoles have no finite pair rate")]
    CoincidentEmitters,
    #[error("wavelength must be positive, got {0}")]
    BadWavelength(f64),
    #[error("tabulated matrix is {got}x{got} but the array has {expected} emitters")]
    DimensionMismatch { got: usize, expected: usize },
    #[error("decay matrix failed physicality validation:\n{0}")]
    Unphysical(ValidationReport),
    #[error("environment model parameter out of range: {0}")]
    BadModelParameter(String),
    #[error("reference power P0 must be positive, got {0}")]
    BadReferencePower(f64),
    #[error("power and rate must be non-negative (P = {p}, gamma0 = {gamma0})")]
    BadPower { p: f64, gamma0: f64 },
    #[error("import failed: {0}")]
    Import(#[from] import::ImportError),
}

/// Unit tag for stored rates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum RateUnits {
    /// Units of the reference single-emitter free-space rate γ₀.
    #[default]
    Gamma0,
    /// Absolute rates in s⁻¹.
    PerSecond,
}

/// N×N real symmetric dissipative-rate matrix γ_μν.
#[derive(Debug, Clone, PartialEq)]
pub struct DecayMatrix {
    rates: DMatrix<f64>,
    units: RateUnits,
    /// Provenance indices of the rows/columns in a parent matrix, if this
    /// matrix was produced by subsampling.
    labels: Option<Vec<usize>>,
}

impl DecayMatrix {
    /// Wrap a rate matrix, enforcing the physicality invariants.
    pub fn new(rates: DMatrix<f64>) -> Result<Self, CouplingError> {
        Self::with_units(rates, RateUnits::Gamma0)
    }

    pub fn with_units(rates: DMatrix<f64>, units: RateUnits) -> Result<Self, CouplingError> {
        let report = validate_physical(&rates);
        if !report.is_physical() {
            return Err(CouplingError::Unphysical(report));
        }
        Ok(Self {
            rates,
            units,
            labels: None,
        })
    }

    pub fn n(&self) -> usize {
        self.rates.nrows()
    }

    pub fn rates(&self) -> &DMatrix<f64> {
        &self.rates
    }

    pub fn units(&self) -> RateUnits {
        self.units
    }

    pub fn labels(&self) -> Option<&[usize]> {
        self.labels.as_deref()
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n()).map(|i| self.rates[(i, i)]).collect()
    }

    /// Principal submatrix on the given (sorted) indices, preserving
    /// provenance labels. Used for centered lattice subsampling and
    /// filling-fraction Monte Carlo on tabulated matrices.
    pub fn subsample(&self, indices: &[usize]) -> Result<Self, CouplingError> {
        let n = indices.len();
        let mut m = DMatrix::zeros(n, n);
        for (a, &i) in indices.iter().enumerate() {
            for (b, &j) in indices.iter().enumerate() {
                m[(a, b)] = self.rates[(i, j)];
            }
        }
        let mut out = Self::with_units(m, self.units)?;
        out.labels = Some(match &self.labels {
            Some(parent) => indices.iter().map(|&i| parent[i]).collect(),
            None => indices.to_vec(),
        });
        Ok(out)
    }
}

/// N×N coherent (dipole–dipole) coupling matrix Δ_μν; the diagonal is unused
/// and fixed to 0.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingMatrix {
    shifts: DMatrix<f64>,
}

impl CouplingMatrix {
    pub fn new(mut shifts: DMatrix<f64>) -> Result<Self, CouplingError> {
        let n = shifts.nrows();
        let max = shifts.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        for i in 0..n {
            for j in (i + 1)..n {
                if (shifts[(i, j)] - shifts[(j, i)]).abs() > 1e-12 * max.max(1.0) {
                    return Err(CouplingError::BadModelParameter(format!(
                        "coupling matrix asymmetric at ({i},{j})"
                    )));
                }
            }
            shifts[(i, i)] = 0.0;
        }
        Ok(Self { shifts })
    }

    pub fn zeros(n: usize) -> Self {
        Self {
            shifts: DMatrix::zeros(n, n),
        }
    }

    pub fn n(&self) -> usize {
        self.shifts.nrows()
    }

    pub fn shifts(&self) -> &DMatrix<f64> {
        &self.shifts
    }
}

/// Electromagnetic environment model supplying the decay (and coupling)
/// matrices for an emitter array.
#[derive(Debug, Clone, PartialEq)]
pub enum EnvironmentModel {
    /// Homogeneous vacuum: pair rates from the free-space dyadic Green's
    /// function.
    FreeSpace,
    /// Single-mode BIC coupling: every emitter couples to one delocalized
    /// mode (field along ŷ) with efficiency β, plus an independent residual
    /// channel. For an emitter with in-plane dipole d̂_μ, the mode overlap is
    /// v_μ = d̂_μ·ŷ, giving γ_μν = βγ v_μ v_ν (μ≠ν) and
    /// γ_μμ = γ[(1−β) + β v_μ²]. Aligned arrays (all dipoles ŷ) reduce to
    /// diag γ, off-diag βγ. Geometry does not enter (the mode is treated as
    /// uniform over lattice sites), and Δ = 0.
    SingleModeBic { gamma: f64, beta: f64 },
    /// Maximal collective coupling: every entry equals γ.
    IdealDicke { gamma: f64 },
    /// No cross coupling: diag γ, off-diag 0.
    Independent { gamma: f64 },
    /// Externally computed matrices (e.g. from a full-wave solver), passed
    /// through after validation.
    Tabulated {
        decay: DecayMatrix,
        coupling: Option<CouplingMatrix>,
    },
}

impl EnvironmentModel {
    fn validate(&self) -> Result<(), CouplingError> {
        match self {
            Self::SingleModeBic { gamma, beta } => {
                if !(*gamma > 0.0 && gamma.is_finite()) {
                    return Err(CouplingError::BadModelParameter(format!("gamma = {gamma}")));
                }
                if !(0.0..=1.0).contains(beta) {
                    return Err(CouplingError::BadModelParameter(format!("beta = {beta}")));
                }
            }
            Self::IdealDicke { gamma } | Self::Independent { gamma } => {
                if !(*gamma > 0.0 && gamma.is_finite()) {
                    return Err(CouplingError::BadModelParameter(format!("gamma = {gamma}")));
                }
            }
            Self::FreeSpace | Self::Tabulated { .. } => {}
        }
        Ok(())
    }
}

/// Build the decay and coupling matrices for `array` under `model`.
///
/// All builders are deterministic and their output passes
/// [`validate_physical`].
pub fn build_matrices(
    array: &EmitterArray,
    model: &EnvironmentModel,
) -> Result<(DecayMatrix, CouplingMatrix), CouplingError> {
    model.validate()?;
    let n = array.len();
    match model {
        EnvironmentModel::FreeSpace => {
            let mut g = DMatrix::zeros(n, n);
            let mut d = DMatrix::zeros(n, n);
            let pos = array.positions();
            let dip = array.dipole_dirs();
            for a in 0..n {
                g[(a, a)] = 1.0;
                for b in (a + 1)..n {
                    let (gab, dab) = if array.allows_coincident() && pos[a] == pos[b] {
                        // r -> 0 limit of the pair rate for identical dipoles;
                        // the diverging coherent shift is idealized away.
                        if dip[a] != dip[b] {
                            return Err(CouplingError::CoincidentEmitters);
                        }
                        (1.0, 0.0)
                    } else {
                        free_space_pair_rate(
                            &pos[a],
                            &dip[a],
                            &pos[b],
                            &dip[b],
                            array.lambda0_nm(),
                        )?
                    };
                    g[(a, b)] = gab;
                    g[(b, a)] = gab;
                    d[(a, b)] = dab;
                    d[(b, a)] = dab;
                }
            }
            Ok((DecayMatrix::new(g)?, CouplingMatrix::new(d)?))
        }
        EnvironmentModel::SingleModeBic { gamma, beta } => {
            let y = Vector3::new(0.0, 1.0, 0.0);
            let v: Vec<f64> = array.dipole_dirs().iter().map(|d| d.dot(&y)).collect();
            let mut g = DMatrix::zeros(n, n);
            for a in 0..n {
                for b in 0..n {
                    g[(a, b)] = if a == b {
                        gamma * ((1.0 - beta) + beta * v[a] * v[a])
                    } else {
                        gamma * beta * v[a] * v[b]
                    };
                }
            }
            Ok((DecayMatrix::new(g)?, CouplingMatrix::zeros(n)))
        }
        EnvironmentModel::IdealDicke { gamma } => {
            let g = DMatrix::from_element(n, n, *gamma);
            Ok((DecayMatrix::new(g)?, CouplingMatrix::zeros(n)))
        }
        EnvironmentModel::Independent { gamma } => {
            let g = DMatrix::from_diagonal_element(n, n, *gamma);
            Ok((DecayMatrix::new(g)?, CouplingMatrix::zeros(n)))
        }
        EnvironmentModel::Tabulated { decay, coupling } => {
            if decay.n() != n {
                return Err(CouplingError::DimensionMismatch {
                    got: decay.n(),
                    expected: n,
                });
            }
            if let Some(c) = coupling {
                if c.n() != n {
                    return Err(CouplingError::DimensionMismatch {
                        got: c.n(),
                        expected: n,
                    });
                }
            }
            let report = validate_physical(decay.rates());
            if !report.is_physical() {
                return Err(CouplingError::Unphysical(report));
            }
            Ok((
                decay.clone(),
                coupling.clone().unwrap_or_else(|| CouplingMatrix::zeros(n)),
            ))
        }
    }
}

/// Convert a dissipated-power ratio (Purcell factor P/P₀) to a spontaneous
/// rate: γ = (P/P₀)·γ₀.
pub fn purcell_to_rate(p: f64, p0: f64, gamma0: f64) -> Result<f64, CouplingError> {
    if !(p0 > 0.0 && p0.is_finite()) {
        return Err(CouplingError::BadReferencePower(p0));
    }
    if !(p >= 0.0 && p.is_finite() && gamma0 > 0.0 && gamma0.is_finite()) {
        return Err(CouplingError::BadPower { p, gamma0 });
    }
    Ok(p / p0 * gamma0)
}
