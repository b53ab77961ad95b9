//! Emitter arrays: square-lattice construction and disorder transforms.
//!
//! The canonical geometry is a square lattice of lattice constant `d` in the
//! x–y plane at fixed height z, with every emitter offset along x by `x0`
//! (the offset that maximizes coupling to the metasurface BIC mode) and all
//! dipoles along ŷ. Three disorder transforms model experimental
//! imperfections: incomplete lattices (filling fraction η), in-plane
//! positional jitter within a disc of radius δr, and in-plane dipole
//! orientation jitter within ±δθ of ŷ.
//!
//! Jittered offsets are drawn from a discrete grid of `steps` equally spaced
//! values spanning [−δ, +δ] inclusive, so repeated draws land on a finite set
//! of geometries that downstream Monte Carlo code can memoize. All transforms
//! are pure given the caller's RNG: iterating emitters in index order and
//! drawing x before y per attempt makes identical seeds produce bit-identical
//! arrays.

use nalgebra::Vector3;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Default lattice constant of the reference metasurface (nm).
pub const DEFAULT_LATTICE_CONST_NM: f64 = 400.0;
/// Default lateral offset x0 = 0.163 a for optimal BIC coupling (nm).
pub const DEFAULT_OFFSET_X0_NM: f64 = 0.163 * DEFAULT_LATTICE_CONST_NM;
/// Default emitter height above the metasurface plane (nm).
pub const DEFAULT_HEIGHT_Z_NM: f64 = 104.0;
/// Transition wavelength resonant with the magnetic-dipole BIC (nm).
pub const DEFAULT_LAMBDA0_NM: f64 = 708.9;

/// Tolerance on dipole direction norms.
const DIPOLE_NORM_TOL: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum EmitterError {
    #[error("lattice must have n_side >= 1")]
    EmptyLattice,
    #[error("non-finite length in lattice spec: {0}")]
    NonFiniteLength(&'static str),
    #[error("positions ({positions}) and dipole directions ({dipoles}) differ in length")]
    LengthMismatch { positions: usize, dipoles: usize },
    #[error("array must contain at least one emitter")]
    Empty,
    #[error("dipole direction {index} has norm {norm} (must be 1 within {DIPOLE_NORM_TOL:e})")]
    DipoleNorm { index: usize, norm: f64 },
    #[error("emitters {a} and {b} coincide; pass allow_coincident for the Dicke idealization")]
    CoincidentPositions { a: usize, b: usize },
    #[error("non-finite coordinate in emitter {0}")]
    NonFiniteEmitter(usize),
    #[error("wavelength must be positive and finite, got {0}")]
    BadWavelength(f64),
    #[error("filling fraction must lie in [0, 1], got {0}")]
    BadFraction(f64),
    #[error("filling fraction {eta} of {n} emitters rounds to an empty array")]
    EmptySelection { eta: f64, n: usize },
    #[error("jitter radius must be non-negative and finite, got {0}")]
    BadJitterRadius(f64),
    #[error("orientation jitter must lie in [0, 180] degrees, got {0}")]
    BadJitterAngle(f64),
    #[error("jitter grid needs steps >= 1")]
    ZeroSteps,
    #[error("failed to parse emitter JSON: {0}")]
    Json(#[from] serde_json::Error),
}

/// Square-lattice specification.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatticeSpec {
    /// Emitters per side (total N = n_side²).
    pub n_side: usize,
    /// Lattice constant d (nm).
    pub lattice_const_nm: f64,
    /// Lateral offset x0 applied to every emitter along x (nm).
    pub offset_x0_nm: f64,
    /// Height z above the metasurface plane (nm).
    pub height_z_nm: f64,
    /// Common dipole direction (unit vector).
    pub dipole_axis: Vector3<f64>,
}

impl LatticeSpec {
    /// Spec for an `n_side` × `n_side` lattice in the optimal configuration
    /// (d = 400 nm, x0 = 0.163 d, z = 104 nm, dipoles along ŷ).
    pub fn optimal(n_side: usize) -> Self {
        Self {
            n_side,
            lattice_const_nm: DEFAULT_LATTICE_CONST_NM,
            offset_x0_nm: DEFAULT_OFFSET_X0_NM,
            height_z_nm: DEFAULT_HEIGHT_Z_NM,
            dipole_axis: Vector3::new(0.0, 1.0, 0.0),
        }
    }

    fn validate(&self) -> Result<(), EmitterError> {
        if self.n_side == 0 {
            return Err(EmitterError::EmptyLattice);
        }
        if !self.lattice_const_nm.is_finite() || self.lattice_const_nm < 0.0 {
            return Err(EmitterError::NonFiniteLength("lattice_const_nm"));
        }
        if !self.offset_x0_nm.is_finite() {
            return Err(EmitterError::NonFiniteLength("offset_x0_nm"));
        }
        if !self.height_z_nm.is_finite() {
            return Err(EmitterError::NonFiniteLength("height_z_nm"));
        }
        let norm = self.dipole_axis.norm();
        if (norm - 1.0).abs() > DIPOLE_NORM_TOL {
            return Err(EmitterError::DipoleNorm { index: 0, norm });
        }
        Ok(())
    }
}

/// Positions, dipole orientations, and transition wavelength of N two-level
/// emitters. Immutable after construction; all lengths in nm.
#[derive(Debug, Clone, PartialEq)]
pub struct EmitterArray {
    positions: Vec<Vector3<f64>>,
    dipole_dirs: Vec<Vector3<f64>>,
    /// Dipole moment magnitude (reduced units; 1 by default).
    dipole_magnitude: f64,
    lambda0_nm: f64,
    /// Whether coincident positions are permitted (d = 0 Dicke idealization).
    allow_coincident: bool,
}

impl EmitterArray {
    pub fn new(
        positions: Vec<Vector3<f64>>,
        dipole_dirs: Vec<Vector3<f64>>,
        dipole_magnitude: f64,
        lambda0_nm: f64,
        allow_coincident: bool,
    ) -> Result<Self, EmitterError> {
        if positions.len() != dipole_dirs.len() {
            return Err(EmitterError::LengthMismatch {
                positions: positions.len(),
                dipoles: dipole_dirs.len(),
            });
        }
        if positions.is_empty() {
            return Err(EmitterError::Empty);
        }
        if !(lambda0_nm.is_finite() && lambda0_nm > 0.0) {
            return Err(EmitterError::BadWavelength(lambda0_nm));
        }
        for (i, (p, d)) in positions.iter().zip(&dipole_dirs).enumerate() {
            if !(p.iter().all(|c| c.is_finite()) && d.iter().all(|c| c.is_finite())) {
                return Err(EmitterError::NonFiniteEmitter(i));
            }
            let norm = d.norm();
            if (norm - 1.0).abs() > DIPOLE_NORM_TOL {
                return Err(EmitterError::DipoleNorm { index: i, norm });
            }
        }
        if !allow_coincident {
            for a in 0..positions.len() {
                for b in (a + 1)..positions.len() {
                    if positions[a] == positions[b] {
                        return Err(EmitterError::CoincidentPositions { a, b });
                    }
                }
            }
        }
        Ok(Self {
            positions,
            dipole_dirs,
            dipole_magnitude,
            lambda0_nm,
            allow_coincident,
        })
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn positions(&self) -> &[Vector3<f64>] {
        &self.positions
    }

    pub fn dipole_dirs(&self) -> &[Vector3<f64>] {
        &self.dipole_dirs
    }

    pub fn dipole_magnitude(&self) -> f64 {
        self.dipole_magnitude
    }

    pub fn lambda0_nm(&self) -> f64 {
        self.lambda0_nm
    }

    pub fn omega0(&self) -> f64 {
        crate::constants::omega0_from_lambda_nm(self.lambda0_nm)
    }

    pub fn allows_coincident(&self) -> bool {
        self.allow_coincident
    }

    /// Serialize to the documented JSON schema:
    /// `{"lambda0_nm": f, "emitters": [{"pos_nm": [x,y,z], "dip": [ux,uy,uz]}, ...]}`.
    pub fn to_json(&self) -> String {
        let doc = ArrayJson {
            lambda0_nm: self.lambda0_nm,
            emitters: self
                .positions
                .iter()
                .zip(&self.dipole_dirs)
                .map(|(p, d)| EmitterJson {
                    pos_nm: [p.x, p.y, p.z],
                    dip: [d.x, d.y, d.z],
                })
                .collect(),
        };
        serde_json::to_string_pretty(&doc).expect("emitter array serialization cannot fail")
    }

    /// Parse the documented JSON schema. The serialized form carries unit
    /// dipole magnitude and no coincident-point flag.
    pub fn from_json(s: &str) -> Result<Self, EmitterError> {
        let doc: ArrayJson = serde_json::from_str(s)?;
        Self::new(
            doc.emitters
                .iter()
                .map(|e| Vector3::new(e.pos_nm[0], e.pos_nm[1], e.pos_nm[2]))
                .collect(),
            doc.emitters
                .iter()
                .map(|e| Vector3::new(e.dip[0], e.dip[1], e.dip[2]))
                .collect(),
            1.0,
            doc.lambda0_nm,
            false,
        )
    }

    /// Copy of this array marked as a coincident-point Dicke idealization.
    pub fn with_coincident_allowed(mut self) -> Self {
        self.allow_coincident = true;
        self
    }
}

#[derive(Serialize, Deserialize)]
struct ArrayJson {
    lambda0_nm: f64,
    emitters: Vec<EmitterJson>,
}

#[derive(Serialize, Deserialize)]
struct EmitterJson {
    pos_nm: [f64; 3],
    dip: [f64; 3],
}

/// Build the n_side × n_side square lattice centered on the origin in x–y:
/// R_(i,j) = [x0 + d(i − (n−1)/2), d(j − (n−1)/2), z], row-major index
/// μ = i·n_side + j, all dipoles along the spec axis. For odd n_side the
/// central emitter sits at [x0, 0, z].
pub fn build_square_lattice(
    spec: &LatticeSpec,
    lambda0_nm: f64,
) -> Result<EmitterArray, EmitterError> {
    spec.validate()?;
    let n = spec.n_side;
    let d = spec.lattice_const_nm;
    let half = (n as f64 - 1.0) / 2.0;
    let mut positions = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            positions.push(Vector3::new(
                spec.offset_x0_nm + d * (i as f64 - half),
                d * (j as f64 - half),
                spec.height_z_nm,
            ));
        }
    }
    let dirs = vec![spec.dipole_axis; n * n];
    // d = 0 collapses every site onto [x0, 0, z]: a deliberate Dicke idealization.
    let coincident = d == 0.0 && n > 1;
    EmitterArray::new(positions, dirs, 1.0, lambda0_nm, coincident)
}

/// Number of emitters retained at filling fraction `eta`: round-half-up of η·N.
pub fn filling_count(eta: f64, n: usize) -> usize {
    (eta * n as f64 + 0.5).floor() as usize
}

/// Draw the sorted index set of retained emitters for filling fraction `eta`.
pub fn sample_filling_indices<R: Rng>(
    n: usize,
    eta: f64,
    rng: &mut R,
) -> Result<Vec<usize>, EmitterError> {
    if !(0.0..=1.0).contains(&eta) || !eta.is_finite() {
        return Err(EmitterError::BadFraction(eta));
    }
    let k = filling_count(eta, n);
    if k == 0 {
        return Err(EmitterError::EmptySelection { eta, n });
    }
    let mut idx = rand::seq::index::sample(rng, n, k).into_vec();
    idx.sort_unstable();
    Ok(idx)
}

/// Restrict an array to the given (sorted) emitter indices.
pub fn select_emitters(array: &EmitterArray, indices: &[usize]) -> EmitterArray {
    EmitterArray {
        positions: indices.iter().map(|&i| array.positions[i]).collect(),
        dipole_dirs: indices.iter().map(|&i| array.dipole_dirs[i]).collect(),
        dipole_magnitude: array.dipole_magnitude,
        lambda0_nm: array.lambda0_nm,
        allow_coincident: array.allow_coincident,
    }
}

/// Keep a uniformly random subset of round(η·N) emitters. Deterministic for a
/// given RNG state; output preserves the input ordering of retained emitters.
pub fn apply_filling_fraction<R: Rng>(
    array: &EmitterArray,
    eta: f64,
    rng: &mut R,
) -> Result<EmitterArray, EmitterError> {
    let idx = sample_filling_indices(array.len(), eta, rng)?;
    Ok(select_emitters(array, &idx))
}

/// Value of grid point `idx` on the `steps`-point uniform grid spanning
/// [−delta, +delta] inclusive. A single-point grid degenerates to 0.
pub fn jitter_grid_value(delta: f64, steps: usize, idx: usize) -> f64 {
    debug_assert!(idx < steps);
    if steps == 1 {
        return 0.0;
    }
    -delta + 2.0 * delta * idx as f64 / (steps - 1) as f64
}

/// Grid spacing of the `steps`-point jitter grid over [−delta, +delta].
pub fn jitter_grid_spacing(delta: f64, steps: usize) -> f64 {
    if steps <= 1 {
        0.0
    } else {
        2.0 * delta / (steps - 1) as f64
    }
}

/// Number of grid points reproducing the reference position spacing 2δr/50
/// (51 values per axis).
pub const PAPER_POSITION_STEPS: usize = 51;
/// Number of grid points reproducing the reference orientation spacing 2δθ/100
/// (101 values).
pub const PAPER_ORIENTATION_STEPS: usize = 101;

/// Draw per-emitter in-plane offset grid indices (ix, iy) subject to the disc
/// condition √(δx² + δy²) ≤ δr; offending draws are rejected and redrawn.
pub fn sample_position_offsets<R: Rng>(
    n: usize,
    delta_r_nm: f64,
    steps: usize,
    rng: &mut R,
) -> Result<Vec<[u32; 2]>, EmitterError> {
    if !(delta_r_nm.is_finite() && delta_r_nm >= 0.0) {
        return Err(EmitterError::BadJitterRadius(delta_r_nm));
    }
    if steps == 0 {
        return Err(EmitterError::ZeroSteps);
    }
    let r2 = delta_r_nm * delta_r_nm;
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        loop {
            let ix = rng.random_range(0..steps);
            let iy = rng.random_range(0..steps);
            let dx = jitter_grid_value(delta_r_nm, steps, ix);
            let dy = jitter_grid_value(delta_r_nm, steps, iy);
            if dx * dx + dy * dy <= r2 {
                out.push([ix as u32, iy as u32]);
                break;
            }
        }
    }
    Ok(out)
}

/// Apply previously drawn position-offset indices to an array.
pub fn apply_position_offsets(
    array: &EmitterArray,
    delta_r_nm: f64,
    steps: usize,
    offsets: &[[u32; 2]],
) -> EmitterArray {
    assert_eq!(offsets.len(), array.len());
    let positions = array
        .positions
        .iter()
        .zip(offsets)
        .map(|(p, &[ix, iy])| {
            Vector3::new(
                p.x + jitter_grid_value(delta_r_nm, steps, ix as usize),
                p.y + jitter_grid_value(delta_r_nm, steps, iy as usize),
                p.z,
            )
        })
        .collect();
    EmitterArray {
        positions,
        dipole_dirs: array.dipole_dirs.clone(),
        dipole_magnitude: array.dipole_magnitude,
        lambda0_nm: array.lambda0_nm,
        allow_coincident: array.allow_coincident,
    }
}

/// Shift every emitter by an independent in-plane offset drawn from the
/// `steps`-point grid on [−δr, +δr] per axis, rejecting draws outside the
/// disc of radius δr. z coordinates and dipoles are unchanged.
pub fn apply_position_jitter<R: Rng>(
    array: &EmitterArray,
    delta_r_nm: f64,
    steps: usize,
    rng: &mut R,
) -> Result<EmitterArray, EmitterError> {
    let offsets = sample_position_offsets(array.len(), delta_r_nm, steps, rng)?;
    Ok(apply_position_offsets(array, delta_r_nm, steps, &offsets))
}

/// In-plane dipole direction at angle 90° + θ from the x-axis:
/// d̂ = [cos(90° + θ), sin(90° + θ), 0]; θ = 0 is ŷ.
pub fn dipole_from_angle_deg(theta_deg: f64) -> Vector3<f64> {
    let a = (90.0 + theta_deg).to_radians();
    Vector3::new(a.cos(), a.sin(), 0.0)
}

/// Draw per-emitter orientation grid indices for angles θ ∈ [−δθ, +δθ].
pub fn sample_orientation_offsets<R: Rng>(
    n: usize,
    delta_theta_deg: f64,
    steps: usize,
    rng: &mut R,
) -> Result<Vec<u32>, EmitterError> {
    if !(delta_theta_deg.is_finite() && (0.0..=180.0).contains(&delta_theta_deg)) {
        return Err(EmitterError::BadJitterAngle(delta_theta_deg));
    }
    if steps == 0 {
        return Err(EmitterError::ZeroSteps);
    }
    Ok((0..n).map(|_| rng.random_range(0..steps) as u32).collect())
}

/// Apply previously drawn orientation indices: every dipole is replaced by the
/// in-plane unit vector at angle 90° + θ_μ from the x-axis.
pub fn apply_orientation_offsets(
    array: &EmitterArray,
    delta_theta_deg: f64,
    steps: usize,
    offsets: &[u32],
) -> EmitterArray {
    assert_eq!(offsets.len(), array.len());
    let dirs = offsets
        .iter()
        .map(|&i| dipole_from_angle_deg(jitter_grid_value(delta_theta_deg, steps, i as usize)))
        .collect();
    EmitterArray {
        positions: array.positions.clone(),
        dipole_dirs: dirs,
        dipole_magnitude: array.dipole_magnitude,
        lambda0_nm: array.lambda0_nm,
        allow_coincident: array.allow_coincident,
    }
}

/// Replace every dipole by the in-plane unit vector at angle 90° + θ_μ from
/// the x-axis, θ_μ drawn from the `steps`-point grid on [−δθ, +δθ].
/// Positions are unchanged.
pub fn apply_orientation_jitter<R: Rng>(
    array: &EmitterArray,
    delta_theta_deg: f64,
    steps: usize,
    rng: &mut R,
) -> Result<EmitterArray, EmitterError> {
    let offsets = sample_orientation_offsets(array.len(), delta_theta_deg, steps, rng)?;
    Ok(apply_orientation_offsets(array, delta_theta_deg, steps, &offsets))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    #[test]
    fn lattice_3x3_center_emitter() {
        let spec = LatticeSpec {
            n_side: 3,
            lattice_const_nm: 400.0,
            offset_x0_nm: 65.2,
            height_z_nm: 104.0,
            dipole_axis: Vector3::new(0.0, 1.0, 0.0),
        };
        let arr = build_square_lattice(&spec, DEFAULT_LAMBDA0_NM).unwrap();
        assert_eq!(arr.len(), 9);
        // center index (1,1) -> 1*3 + 1 = 4
        assert_abs_diff_eq!(arr.positions()[4].x, 65.2);
        assert_abs_diff_eq!(arr.positions()[4].y, 0.0);
        assert_abs_diff_eq!(arr.positions()[4].z, 104.0);
        // lattice index span is i,j in {-1, 0, 1} around the center
        assert_abs_diff_eq!(arr.positions()[0].x, 65.2 - 400.0);
        assert_abs_diff_eq!(arr.positions()[0].y, -400.0);
        assert!(arr.dipole_dirs().iter().all(|d| *d == Vector3::new(0.0, 1.0, 0.0)));
    }

    #[test]
    fn lattice_1x1_sits_at_offset() {
        let arr = build_square_lattice(&LatticeSpec::optimal(1), DEFAULT_LAMBDA0_NM).unwrap();
        assert_eq!(arr.len(), 1);
        assert_abs_diff_eq!(arr.positions()[0].x, DEFAULT_OFFSET_X0_NM);
        assert_abs_diff_eq!(arr.positions()[0].y, 0.0);
        assert_abs_diff_eq!(arr.positions()[0].z, DEFAULT_HEIGHT_Z_NM);
    }

    #[test]
    fn lattice_2x2_pairwise_separations() {
        let mut spec = LatticeSpec::optimal(2);
        spec.lattice_const_nm = 100.0;
        let arr = build_square_lattice(&spec, DEFAULT_LAMBDA0_NM).unwrap();
        assert_eq!(arr.len(), 4);
        // brute-force check: every pair differs by exactly 0 or 100 nm per axis
        for a in 0..4 {
            for b in (a + 1)..4 {
                let d = arr.positions()[a] - arr.positions()[b];
                for c in [d.x.abs(), d.y.abs()] {
                    assert!(
                        c.abs() < 1e-12 || (c - 100.0).abs() < 1e-12,
                        "separation component {c}"
                    );
                }
                assert!(d.norm() > 0.0);
            }
        }
    }

    #[test]
    fn lattice_rejects_bad_specs() {
        let mut spec = LatticeSpec::optimal(0);
        assert!(matches!(
            build_square_lattice(&spec, DEFAULT_LAMBDA0_NM),
            Err(EmitterError::EmptyLattice)
        ));
        spec.n_side = 2;
        spec.lattice_const_nm = f64::NAN;
        assert!(matches!(
            build_square_lattice(&spec, DEFAULT_LAMBDA0_NM),
            Err(EmitterError::NonFiniteLength(_))
        ));
    }

    #[test]
    fn lattice_d0_is_coincident_idealization() {
        let mut spec = LatticeSpec::optimal(3);
        spec.lattice_const_nm = 0.0;
        let arr = build_square_lattice(&spec, DEFAULT_LAMBDA0_NM).unwrap();
        assert!(arr.allows_coincident());
        assert!(arr.positions().iter().all(|p| *p == arr.positions()[0]));
    }

    #[test]
    fn filling_full_is_identity() {
        let arr = build_square_lattice(&LatticeSpec::optimal(5), DEFAULT_LAMBDA0_NM).unwrap();
        let sub = apply_filling_fraction(&arr, 1.0, &mut rng(1)).unwrap();
        assert_eq!(sub, arr);
    }

    #[test]
    fn filling_counts_round_half_up() {
        // 0.8 * 25 = 20; 0.2 * 121 = 24.2 -> 24
        assert_eq!(filling_count(0.8, 25), 20);
        assert_eq!(filling_count(0.2, 121), 24);
        let arr = build_square_lattice(&LatticeSpec::optimal(5), DEFAULT_LAMBDA0_NM).unwrap();
        assert_eq!(apply_filling_fraction(&arr, 0.8, &mut rng(2)).unwrap().len(), 20);
        let arr11 = build_square_lattice(&LatticeSpec::optimal(11), DEFAULT_LAMBDA0_NM).unwrap();
        assert_eq!(apply_filling_fraction(&arr11, 0.2, &mut rng(2)).unwrap().len(), 24);
    }

    #[test]
    fn filling_output_is_subset() {
        let arr = build_square_lattice(&LatticeSpec::optimal(7), DEFAULT_LAMBDA0_NM).unwrap();
        for seed in 0..20 {
            let sub = apply_filling_fraction(&arr, 0.5, &mut rng(seed)).unwrap();
            for p in sub.positions() {
                assert!(arr.positions().contains(p));
            }
        }
    }

    #[test]
    fn filling_rejects_bad_eta_and_empty() {
        let arr = build_square_lattice(&LatticeSpec::optimal(3), DEFAULT_LAMBDA0_NM).unwrap();
        assert!(apply_filling_fraction(&arr, 1.2, &mut rng(0)).is_err());
        assert!(matches!(
            apply_filling_fraction(&arr, 0.0, &mut rng(0)),
            Err(EmitterError::EmptySelection { .. })
        ));
    }

    #[test]
    fn position_jitter_zero_radius_is_identity() {
        let arr = build_square_lattice(&LatticeSpec::optimal(3), DEFAULT_LAMBDA0_NM).unwrap();
        let out = apply_position_jitter(&arr, 0.0, 100, &mut rng(3)).unwrap();
        assert_eq!(out, arr);
    }

    #[test]
    fn position_jitter_respects_disc_bound() {
        let arr = build_square_lattice(&LatticeSpec::optimal(3), DEFAULT_LAMBDA0_NM).unwrap();
        let delta = 30.0;
        let mut r = rng(4);
        for _ in 0..1000 {
            let out = apply_position_jitter(&arr, delta, 100, &mut r).unwrap();
            for (p, q) in arr.positions().iter().zip(out.positions()) {
                let dx = q.x - p.x;
                let dy = q.y - p.y;
                assert!((dx * dx + dy * dy).sqrt() <= delta + 1e-12);
                assert_eq!(p.z, q.z);
            }
            assert_eq!(out.dipole_dirs(), arr.dipole_dirs());
        }
    }

    #[test]
    fn jitter_grid_reference_spacings() {
        // 51-point grid on [-10, 10] nm: spacing 2*10/50 = 0.4 nm
        assert_abs_diff_eq!(jitter_grid_spacing(10.0, PAPER_POSITION_STEPS), 0.4);
        // 101-point grid on [-30, 30] deg: spacing 2*30/100 = 0.6 deg
        assert_abs_diff_eq!(jitter_grid_spacing(30.0, PAPER_ORIENTATION_STEPS), 0.6);
        // default 100-point grid spans the full interval inclusive
        assert_abs_diff_eq!(jitter_grid_value(10.0, 100, 0), -10.0);
        assert_abs_diff_eq!(jitter_grid_value(10.0, 100, 99), 10.0);
    }

    #[test]
    fn orientation_jitter_zero_angle_gives_y() {
        let arr = build_square_lattice(&LatticeSpec::optimal(3), DEFAULT_LAMBDA0_NM).unwrap();
        let out = apply_orientation_jitter(&arr, 0.0, 100, &mut rng(5)).unwrap();
        for d in out.dipole_dirs() {
            assert_abs_diff_eq!(d.x, 0.0, epsilon = 1e-15);
            assert_abs_diff_eq!(d.y, 1.0, epsilon = 1e-15);
            assert_abs_diff_eq!(d.z, 0.0);
        }
        assert_eq!(out.positions(), arr.positions());
    }

    #[test]
    fn dipole_angle_formula() {
        // theta = 90 deg: d = [cos 180, sin 180, 0] = [-1, 0, 0]
        let d = dipole_from_angle_deg(90.0);
        assert_abs_diff_eq!(d.x, -1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(d.y, 0.0, epsilon = 1e-15);
        // theta = -90 deg: d = [cos 0, sin 0, 0] = [1, 0, 0]
        let d = dipole_from_angle_deg(-90.0);
        assert_abs_diff_eq!(d.x, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn jitter_preserves_counts_norms_and_is_reproducible() {
        let arr = build_square_lattice(&LatticeSpec::optimal(4), DEFAULT_LAMBDA0_NM).unwrap();
        let a = apply_position_jitter(&arr, 20.0, 100, &mut rng(6)).unwrap();
        let b = apply_position_jitter(&arr, 20.0, 100, &mut rng(6)).unwrap();
        assert_eq!(a, b);
        let c = apply_orientation_jitter(&arr, 60.0, 100, &mut rng(7)).unwrap();
        let d = apply_orientation_jitter(&arr, 60.0, 100, &mut rng(7)).unwrap();
        assert_eq!(c, d);
        assert_eq!(c.len(), arr.len());
        for v in c.dipole_dirs() {
            assert!((v.norm() - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn json_roundtrip() {
        let arr = build_square_lattice(&LatticeSpec::optimal(3), DEFAULT_LAMBDA0_NM).unwrap();
        let s = arr.to_json();
        assert!(s.contains("\"lambda0_nm\""));
        assert!(s.contains("\"pos_nm\""));
        let back = EmitterArray::from_json(&s).unwrap();
        assert_eq!(back, arr);
    }

    #[test]
    fn rejects_bad_dipole_norm_and_coincident() {
        let bad = EmitterArray::new(
            vec![Vector3::zeros(), Vector3::new(1.0, 0.0, 0.0)],
            vec![Vector3::new(0.0, 2.0, 0.0), Vector3::new(0.0, 1.0, 0.0)],
            1.0,
            708.9,
            false,
        );
        assert!(matches!(bad, Err(EmitterError::DipoleNorm { index: 0, .. })));
        let dup = EmitterArray::new(
            vec![Vector3::zeros(), Vector3::zeros()],
            vec![Vector3::new(0.0, 1.0, 0.0); 2],
            1.0,
            708.9,
            false,
        );
        assert!(matches!(dup, Err(EmitterError::CoincidentPositions { .. })));
    }
}
