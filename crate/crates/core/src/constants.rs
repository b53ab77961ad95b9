//! Physical constants (CODATA 2018) used for unit conversions.
//!
//! Internally every rate is expressed in units of a reference rate γ₀, so
//! these values only matter when converting to or from SI quantities.

/// Vacuum permeability μ₀ (N·A⁻²).
pub const MU_0: f64 = 1.256_637_062_12e-6;

/// Vacuum permittivity ε₀ (F·m⁻¹).
pub const EPSILON_0: f64 = 8.854_187_812_8e-12;

/// Reduced Planck constant ħ (J·s).
pub const HBAR: f64 = 1.054_571_817e-34;

/// Speed of light in vacuum c (m·s⁻¹), exact.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Angular transition frequency ω₀ (rad/s) for a vacuum wavelength in nm.
pub fn omega0_from_lambda_nm(lambda0_nm: f64) -> f64 {
    2.0 * std::f64::consts::PI * SPEED_OF_LIGHT / (lambda0_nm * 1e-9)
}

/// Free-space spontaneous decay rate γ₀ (s⁻¹) of a dipole with moment
/// `dipole_cm` (C·m) at vacuum wavelength `lambda0_nm`:
/// γ₀ = ω₀³ d² / (3π ε₀ ħ c³).
pub fn gamma0_si(lambda0_nm: f64, dipole_cm: f64) -> f64 {
    let w = omega0_from_lambda_nm(lambda0_nm);
    w.powi(3) * dipole_cm * dipole_cm
        / (3.0 * std::f64::consts::PI * EPSILON_0 * HBAR * SPEED_OF_LIGHT.powi(3))
}
