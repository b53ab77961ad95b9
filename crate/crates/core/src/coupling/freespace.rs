//! Free-space pair rates from the vacuum dyadic Green's function.
//!
//! For unit dipoles u_a, u_b separated by r with x = k|r|, k = 2π/λ₀, and
//! r̂ = r/|r|, writing p = u_a·u_b and q = (u_a·r̂)(u_b·r̂):
//!
//! ```text
//! γ_ab/γ₀ = (3/2) [ (p − q) sin x / x + (p − 3q)(cos x / x² − sin x / x³) ]
//! Δ_ab/γ₀ = (3/4) [ −(p − q) cos x / x + (p − 3q)(sin x / x² + cos x / x³) ]
//! ```
//!
//! γ follows from Im G of the vacuum Green's function normalized to the
//! free-space single-emitter rate (γ_aa/γ₀ = 1 exactly). Δ uses the sign
//! convention in which two parallel side-by-side dipoles at small separation
//! acquire a positive shift (the static dipole–dipole repulsion); with the
//! e^{+ikr} Green's function convention this equals −(3π/k)·Re[u_a·G·u_b]/
//! normalization. The coherent part drops out of G²(0,0) and of manifold
//! populations, so only |Δ| is observable downstream.

use nalgebra::Vector3;

use super::CouplingError;

/// Dissipative and coherent pair rates (γ_ab/γ₀, Δ_ab/γ₀) between two
/// emitters in free space.
///
/// Coincident positions are accepted only for identical dipoles (the
/// self-rate, γ/γ₀ = 1, Δ = 0); a coincident pair with distinct dipoles is
/// rejected.
pub fn free_space_pair_rate(
    pos_a: &Vector3<f64>,
    dip_a: &Vector3<f64>,
    pos_b: &Vector3<f64>,
    dip_b: &Vector3<f64>,
    lambda0_nm: f64,
) -> Result<(f64, f64), CouplingError> {
    if !(lambda0_nm > 0.0 && lambda0_nm.is_finite()) {
        return Err(CouplingError::BadWavelength(lambda0_nm));
    }
    let r = pos_b - pos_a;
    let dist = r.norm();
    if dist == 0.0 {
        if dip_a == dip_b {
            return Ok((1.0, 0.0));
        }
        return Err(CouplingError::CoincidentEmitters);
    }
    let k = 2.0 * std::f64::consts::PI / lambda0_nm;
    let x = k * dist;
    let r_hat = r / dist;
    let p = dip_a.dot(dip_b);
    let q = dip_a.dot(&r_hat) * dip_b.dot(&r_hat);

    let (sin_x, cos_x) = x.sin_cos();
    let transverse = p - q;
    let longitudinal = p - 3.0 * q;

    let gamma = 1.5 * (transverse * sin_x / x + longitudinal * (cos_x / (x * x) - sin_x / (x * x * x)));
    let delta =
        0.75 * (-transverse * cos_x / x + longitudinal * (sin_x / (x * x) + cos_x / (x * x * x)));
    Ok((gamma, delta))
}
