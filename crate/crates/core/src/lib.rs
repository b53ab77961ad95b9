//! Cooperative-emission observables for 2D arrays of two-level quantum emitters.
//!
//! The crate models an array of identical two-level emitters coupled through a
//! shared electromagnetic environment. The environment enters only through the
//! collective decay matrix γ_μν (and, for time dynamics, the coherent coupling
//! matrix Δ_μν). From these it computes:
//!
//! - the zero-time second-order photon correlation G²(0,0) of the fully
//!   inverted array, by literal quadruple summation and by the equivalent
//!   spectral (eigendecomposition) form, together with the independent-emitter
//!   and Dicke limits that bound it;
//! - emission-rate traces R(t) by four methods of increasing approximation:
//!   full Lindblad master equation, excitation-manifold birth–death chain,
//!   mean-field ODE, and its closed-form sech² solution;
//! - Monte Carlo distributions of G²(0,0) under filling-fraction, positional,
//!   and dipole-orientation disorder, with the summary statistics used to
//!   report them.
//!
//! Environment models: free space (dyadic Green's function pair rates), a
//! single-mode bound-state-in-the-continuum (BIC) coupling parametrized by a
//! β-factor, the ideal Dicke and independent limits, and externally tabulated
//! decay matrices ingested from CSV/JSON.
//!
//! All rates are handled in units of a caller-declared reference rate γ₀
//! (default 1); nothing downstream depends on the absolute scale.

pub mod constants;
pub mod correlations;
pub mod coupling;
pub mod dynamics;
pub mod emitters;
pub mod montecarlo;
pub mod ode;

pub use coupling::{CouplingMatrix, DecayMatrix, EnvironmentModel};
pub use emitters::{EmitterArray, LatticeSpec};
