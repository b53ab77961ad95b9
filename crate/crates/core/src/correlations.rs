//! Zero-time second-order photon correlation G²(0,0) of the fully inverted
//! array, plus the analytic limits that bound it.
//!
//! For synchronized detection the correlation reduces to a ratio of decay
//! matrix contractions,
//!
//! ```text
//! G²(0,0) = Σ_{μ,ν,γ,ε} γ_εμ γ_γν (1−δ_μν)(δ_με δ_γν + δ_μγ δ_νε) / (Σ_μ γ_μμ)²
//! ```
//!
//! [`g2_direct`] evaluates the quadruple sum literally in O(N⁴) and serves as
//! the oracle for [`g2_spectral`], which computes the same quantity through
//! the eigendecomposition {Γ_i, α_i} of the decay matrix:
//!
//! ```text
//! G²(0,0) = 1 + Σ_i Γ_i² / (Σ_i Γ_i)² − 2 Σ_μ (Σ_i Γ_i |α_{i,μ}|²)² / (Σ_i Γ_i)²
//! ```
//!
//! (i indexes eigenpairs, μ indexes emitters). Without cross coupling the
//! correlation drops to 1 − Σγ_μμ²/(Σγ_μμ)²; with maximal coupling
//! γ_μν = √(γ_μμ γ_νν) it doubles (the Dicke limit); uniform single-mode
//! coupling with efficiency β interpolates as (1+β²)(N−1)/N. Every physical
//! decay matrix yields a G² between the independent and Dicke limits.
//!
//! G² is homogeneous of degree 0 in the decay matrix, so rate units cancel.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::coupling::{validate_physical, DecayMatrix, ValidationReport};

#[derive(Debug, Error)]
pub enum CorrelationError {
    #[error("G²(0,0) needs at least 2 emitters, got {0}")]
    TooFewEmitters(usize),
    #[error("decay matrix is not physical:\n{0}")]
    Unphysical(ValidationReport),
    #[error("eigendecomposition did not converge")]
    EigenFailure,
    #[error("diagonal rates must be positive, got {0} at index {1}")]
    NonpositiveRate(f64, usize),
}

/// How a G² value was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum G2Method {
    Direct,
    Spectral,
    Analytic,
}

/// A computed G²(0,0) value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct G2Result {
    pub value: f64,
    pub method: G2Method,
    pub n_emitters: usize,
}

/// Eigenvalues Γ_i and orthonormal eigenvectors α_i of a decay matrix.
#[derive(Debug, Clone)]
pub struct SpectralDecomposition {
    eigenvalues: DVector<f64>,
    /// Column i is the eigenvector α_i.
    eigenvectors: DMatrix<f64>,
}

impl SpectralDecomposition {
    /// Decompose a decay matrix. The input is symmetrized as (M + Mᵀ)/2
    /// first to absorb ingestion noise at the 1e−12 level.
    pub fn new(m: &DecayMatrix) -> Result<Self, CorrelationError> {
        let sym = (m.rates() + m.rates().transpose()) * 0.5;
        let eig = nalgebra::SymmetricEigen::try_new(sym, f64::EPSILON, 0)
            .ok_or(CorrelationError::EigenFailure)?;
        Ok(Self {
            eigenvalues: eig.eigenvalues,
            eigenvectors: eig.eigenvectors,
        })
    }

    pub fn eigenvalues(&self) -> &DVector<f64> {
        &self.eigenvalues
    }

    pub fn eigenvectors(&self) -> &DMatrix<f64> {
        &self.eigenvectors
    }

    /// Largest absolute entry of Σ_i Γ_i α_i α_iᵀ − M (reconstruction error).
    pub fn reconstruction_error(&self, m: &DecayMatrix) -> f64 {
        let rebuilt = &self.eigenvectors
            * DMatrix::from_diagonal(&self.eigenvalues)
            * self.eigenvectors.transpose();
        (rebuilt - m.rates())
            .iter()
            .fold(0.0_f64, |acc, v| acc.max(v.abs()))
    }

    /// Largest absolute entry of αᵀα − I (orthonormality error).
    pub fn orthonormality_error(&self) -> f64 {
        let n = self.eigenvectors.nrows();
        let gram = self.eigenvectors.transpose() * &self.eigenvectors;
        (gram - DMatrix::identity(n, n))
            .iter()
            .fold(0.0_f64, |acc, v| acc.max(v.abs()))
    }
}

/// Sum with pairwise (cascade) reduction; error grows as log n instead of n.
fn pairwise_sum(xs: &[f64]) -> f64 {
    match xs.len() {
        0 => 0.0,
        1 => xs[0],
        2 => xs[0] + xs[1],
        n => {
            let (lo, hi) = xs.split_at(n / 2);
            pairwise_sum(lo) + pairwise_sum(hi)
        }
    }
}

fn ensure_physical(m: &DecayMatrix) -> Result<(), CorrelationError> {
    if m.n() < 2 {
        return Err(CorrelationError::TooFewEmitters(m.n()));
    }
    let report = validate_physical(m.rates());
    if !report.is_physical() {
        return Err(CorrelationError::Unphysical(report));
    }
    Ok(())
}

/// G²(0,0) by literal evaluation of the quadruple sum (O(N⁴)).
///
/// The outer emitter index is parallelized; per-index partials are combined
/// in fixed order by pairwise summation, so the result is bit-stable across
/// thread counts.
pub fn g2_direct(m: &DecayMatrix) -> Result<G2Result, CorrelationError> {
    ensure_physical(m)?;
    let n = m.n();
    let data = m.rates().as_slice(); // column-major: m[(r,c)] = data[c*n + r]
    let at = |r: usize, c: usize| data[c * n + r];

    let partials: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|mu| {
            let mut acc = 0.0;
            for nu in 0..n {
                if nu == mu {
                    continue; // the (1 - delta_mu_nu) factor
                }
                for ga in 0..n {
                    for ep in 0..n {
                        // delta_mu_ep * delta_ga_nu + delta_mu_ga * delta_nu_ep
                        if ep == mu && ga == nu {
                            acc += at(ep, mu) * at(ga, nu);
                        }
                        if ga == mu && ep == nu {
                            acc += at(ep, mu) * at(ga, nu);
                        }
                    }
                }
            }
            acc
        })
        .collect();

    let numerator = pairwise_sum(&partials);
    let trace = pairwise_sum(&m.diagonal());
    Ok(G2Result {
        value: numerator / (trace * trace),
        method: G2Method::Direct,
        n_emitters: n,
    })
}

/// G²(0,0) through the eigendecomposition of the decay matrix (O(N³)).
///
/// Equals [`g2_direct`] to better than 1e−10 on physical matrices.
pub fn g2_spectral(m: &DecayMatrix) -> Result<G2Result, CorrelationError> {
    ensure_physical(m)?;
    let n = m.n();
    let spec = SpectralDecomposition::new(m)?;
    let gammas = spec.eigenvalues();
    let vecs = spec.eigenvectors();

    let total: f64 = pairwise_sum(gammas.as_slice());
    let sum_sq: f64 = pairwise_sum(&gammas.iter().map(|g| g * g).collect::<Vec<_>>());
    // per-emitter weights w_mu = sum_i Gamma_i |alpha_{i,mu}|^2
    let mut weight_sq = Vec::with_capacity(n);
    for mu in 0..n {
        let mut w = 0.0;
        for i in 0..n {
            let a = vecs[(mu, i)];
            w += gammas[i] * a * a;
        }
        weight_sq.push(w * w);
    }
    let value = 1.0 + sum_sq / (total * total)
        - 2.0 * pairwise_sum(&weight_sq) / (total * total);
    Ok(G2Result {
        value,
        method: G2Method::Spectral,
        n_emitters: n,
    })
}

fn check_diag(diag: &[f64]) -> Result<(), CorrelationError> {
    if diag.len() < 2 {
        return Err(CorrelationError::TooFewEmitters(diag.len()));
    }
    for (i, &g) in diag.iter().enumerate() {
        if !(g > 0.0 && g.is_finite()) {
            return Err(CorrelationError::NonpositiveRate(g, i));
        }
    }
    Ok(())
}

/// Independent-emitter limit: 1 − Σγ_μμ²/(Σγ_μμ)².
///
/// Equal rates give (N−1)/N; the limit is always below 1, so uncoupled
/// emitters can never bunch.
pub fn g2_independent_limit(diag: &[f64]) -> Result<f64, CorrelationError> {
    check_diag(diag)?;
    let total = pairwise_sum(diag);
    let sq = pairwise_sum(&diag.iter().map(|g| g * g).collect::<Vec<_>>());
    Ok(1.0 - sq / (total * total))
}

/// Dicke limit (maximal collective coupling γ_μν = √(γ_μμ γ_νν)):
/// exactly twice the independent limit; equal rates give 2(N−1)/N.
pub fn g2_dicke_limit(diag: &[f64]) -> Result<f64, CorrelationError> {
    Ok(2.0 * g2_independent_limit(diag)?)
}

/// Closed form for uniform single-mode coupling with efficiency β:
/// (1+β²)(N−1)/N. Recovers the independent limit at β = 0 and the equal-rate
/// Dicke limit at β = 1.
pub fn g2_bic_analytic(n: usize, beta: f64) -> Result<f64, CorrelationError> {
    if n < 2 {
        return Err(CorrelationError::TooFewEmitters(n));
    }
    if !(0.0..=1.0).contains(&beta) {
        return Err(CorrelationError::NonpositiveRate(beta, 0));
    }
    Ok((1.0 + beta * beta) * (n as f64 - 1.0) / n as f64)
}

/// The two-sided bound check on a physical decay matrix.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct BoundsReport {
    pub independent: f64,
    pub value: f64,
    pub dicke: f64,
    /// independent − slack ≤ value ≤ dicke + slack with slack = 1e−9.
    pub holds: bool,
}

/// Verify g2_independent ≤ G² ≤ g2_dicke (with 1e−9 slack) and return all
/// three values.
pub fn check_bounds(m: &DecayMatrix) -> Result<BoundsReport, CorrelationError> {
    const SLACK: f64 = 1e-9;
    let diag = m.diagonal();
    let independent = g2_independent_limit(&diag)?;
    let dicke = g2_dicke_limit(&diag)?;
    let value = g2_spectral(m)?.value;
    Ok(BoundsReport {
        independent,
        value,
        dicke,
        holds: independent - SLACK <= value && value <= dicke + SLACK,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coupling::{build_matrices, EnvironmentModel};
    use crate::emitters::{build_square_lattice, LatticeSpec, DEFAULT_LAMBDA0_NM};
    use approx::assert_abs_diff_eq;
    use nalgebra::dmatrix;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn uniform_beta_matrix(n: usize, beta: f64) -> DecayMatrix {
        let m = DMatrix::from_fn(n, n, |i, j| if i == j { 1.0 } else { beta });
        DecayMatrix::new(m).unwrap()
    }

    fn random_physical(n: usize, rng: &mut ChaCha8Rng) -> DecayMatrix {
        // B^T B is symmetric PSD with positive diagonal almost surely;
        // the small ridge keeps the diagonal strictly positive.
        let b = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
        let m = b.transpose() * &b + DMatrix::identity(n, n) * 1e-6;
        DecayMatrix::new(m).unwrap()
    }

    #[test]
    fn dicke_nine_emitters() {
        // all-to-all equal coupling, N = 9: G² = 2(N−1)/N = 16/9
        let m = uniform_beta_matrix(9, 1.0);
        let direct = g2_direct(&m).unwrap().value;
        assert_abs_diff_eq!(direct, 16.0 / 9.0, epsilon = 1e-12);
        assert_abs_diff_eq!(g2_spectral(&m).unwrap().value, 16.0 / 9.0, epsilon = 1e-12);
    }

    #[test]
    fn independent_two_emitters() {
        let m = uniform_beta_matrix(2, 0.0);
        assert_abs_diff_eq!(g2_direct(&m).unwrap().value, 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(g2_spectral(&m).unwrap().value, 0.5, epsilon = 1e-12);
    }

    #[test]
    fn bic_121_emitters_matches_analytic() {
        let beta = 0.8179;
        let m = uniform_beta_matrix(121, beta);
        let analytic = g2_bic_analytic(121, beta).unwrap();
        let direct = g2_direct(&m).unwrap().value;
        assert_abs_diff_eq!(direct, analytic, epsilon = 1e-12);
        assert_abs_diff_eq!(analytic, 1.6552, epsilon = 1e-4);
    }

    #[test]
    fn spectral_closed_forms() {
        // diag {1, 3}: 1 − (1+9)/16 = 0.375
        let m = DecayMatrix::new(dmatrix![1.0, 0.0; 0.0, 3.0]).unwrap();
        assert_abs_diff_eq!(g2_spectral(&m).unwrap().value, 0.375, epsilon = 1e-12);
        // maximal 2-emitter coupling: 2(N−1)/N = 1
        let d = DecayMatrix::new(dmatrix![1.0, 1.0; 1.0, 1.0]).unwrap();
        assert_abs_diff_eq!(g2_spectral(&d).unwrap().value, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn limit_formulas() {
        assert_abs_diff_eq!(
            g2_independent_limit(&[1.0; 9]).unwrap(),
            8.0 / 9.0,
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(g2_independent_limit(&[1.0, 3.0]).unwrap(), 0.375);
        assert_abs_diff_eq!(g2_independent_limit(&[1.0, 1.0]).unwrap(), 0.5);
        assert_abs_diff_eq!(g2_dicke_limit(&[1.0, 1.0]).unwrap(), 1.0);
        assert_abs_diff_eq!(g2_dicke_limit(&[1.0; 9]).unwrap(), 16.0 / 9.0);
        assert_abs_diff_eq!(g2_dicke_limit(&[1.0, 3.0]).unwrap(), 0.75);
    }

    #[test]
    fn bic_analytic_formulas() {
        // beta = 1 equals the equal-rate Dicke limit for every n
        for n in 2..=12 {
            assert_abs_diff_eq!(
                g2_bic_analytic(n, 1.0).unwrap(),
                g2_dicke_limit(&vec![1.0; n]).unwrap(),
                epsilon = 1e-15
            );
        }
        assert_abs_diff_eq!(g2_bic_analytic(9, 0.0).unwrap(), 8.0 / 9.0);
        assert_abs_diff_eq!(g2_bic_analytic(121, 0.8179).unwrap(), 1.6552, epsilon = 1e-4);
    }

    #[test]
    fn single_emitter_is_an_error() {
        let m = DecayMatrix::new(dmatrix![1.0]).unwrap();
        assert!(matches!(
            g2_direct(&m),
            Err(CorrelationError::TooFewEmitters(1))
        ));
        assert!(matches!(
            g2_spectral(&m),
            Err(CorrelationError::TooFewEmitters(1))
        ));
        assert!(g2_independent_limit(&[1.0]).is_err());
        assert!(g2_bic_analytic(1, 0.5).is_err());
    }

    #[test]
    fn oracle_equivalence_on_random_matrices() {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        for trial in 0..200 {
            let n = rng.random_range(2..=14usize);
            let m = random_physical(n, &mut rng);
            let d = g2_direct(&m).unwrap().value;
            let s = g2_spectral(&m).unwrap().value;
            assert!(
                (d - s).abs() <= 1e-10,
                "trial {trial}: n={n} direct={d} spectral={s}"
            );
        }
    }

    #[test]
    fn uniform_beta_matrix_equals_analytic_exactly() {
        for &beta in &[0.0, 0.25, 0.5, 0.8179, 1.0] {
            for n in 2..=12 {
                let m = uniform_beta_matrix(n, beta);
                let d = g2_direct(&m).unwrap().value;
                let a = g2_bic_analytic(n, beta).unwrap();
                assert!(
                    (d - a).abs() <= 1e-12,
                    "beta={beta} n={n}: direct={d} analytic={a}"
                );
            }
        }
    }

    #[test]
    fn bound_attainment() {
        let dicke = uniform_beta_matrix(7, 1.0);
        let diag = dicke.diagonal();
        assert!(
            (g2_spectral(&dicke).unwrap().value - g2_dicke_limit(&diag).unwrap()).abs() <= 1e-12
        );
        let indep = uniform_beta_matrix(7, 0.0);
        assert!(
            (g2_spectral(&indep).unwrap().value - g2_independent_limit(&diag).unwrap()).abs()
                <= 1e-12
        );
    }

    #[test]
    fn bounds_hold_for_free_space_geometries() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let mut spec = LatticeSpec::optimal(3);
            spec.lattice_const_nm = rng.random_range(0.1..3.0) * DEFAULT_LAMBDA0_NM;
            let arr = build_square_lattice(&spec, DEFAULT_LAMBDA0_NM).unwrap();
            let (g, _) = build_matrices(&arr, &EnvironmentModel::FreeSpace).unwrap();
            let report = check_bounds(&g).unwrap();
            assert!(
                report.holds,
                "bounds failed at d = {}: {:?}",
                spec.lattice_const_nm, report
            );
        }
    }

    #[test]
    fn spectral_decomposition_invariants() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let m = random_physical(10, &mut rng);
            let spec = SpectralDecomposition::new(&m).unwrap();
            let max_abs = m.rates().iter().fold(0.0_f64, |a, v| a.max(v.abs()));
            assert!(spec.reconstruction_error(&m) <= 1e-10 * max_abs.max(1.0));
            assert!(spec.orthonormality_error() <= 1e-10);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn scale_invariance(seed in 0u64..1000, scale in 1e-3f64..1e3) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let n = rng.random_range(2..=8usize);
            let m = random_physical(n, &mut rng);
            let scaled = DecayMatrix::new(m.rates() * scale).unwrap();
            let a = g2_spectral(&m).unwrap().value;
            let b = g2_spectral(&scaled).unwrap().value;
            prop_assert!((a - b).abs() < 1e-12, "a={a} b={b}");
        }

        #[test]
        fn permutation_invariance(seed in 0u64..1000) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let n = rng.random_range(2..=8usize);
            let m = random_physical(n, &mut rng);
            // reverse-order relabeling
            let perm: Vec<usize> = (0..n).rev().collect();
            let relabeled = DMatrix::from_fn(n, n, |i, j| m.rates()[(perm[i], perm[j])]);
            let relabeled = DecayMatrix::new(relabeled).unwrap();
            let a = g2_direct(&m).unwrap().value;
            let b = g2_direct(&relabeled).unwrap().value;
            prop_assert!((a - b).abs() < 1e-12, "a={a} b={b}");
        }
    }
}
