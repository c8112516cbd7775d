//! Two-qubit density matrices: validation, Bell-diagonal states and thermal
//! states of the XXZ dimer.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{eig_hermitian, kron, matrix_exp_hermitian, paulis, ComplexMatrix};
use crate::xxzmodel;

/// Hermiticity tolerance for a valid density matrix (entrywise).
pub const DENSITY_HERMITIAN_TOL: f64 = 1e-10;
/// Trace tolerance for a valid density matrix.
pub const DENSITY_TRACE_TOL: f64 = 1e-10;
/// Smallest eigenvalue accepted for a valid density matrix.
pub const DENSITY_EIGEN_FLOOR: f64 = -1e-10;
/// Smallest Bell weight accepted by [`CVector::check_physical`].
pub const BELL_WEIGHT_FLOOR: f64 = -1e-12;
/// `high_t` mode flags its result once `J / T` exceeds this.
pub const HIGH_T_VALIDITY_LIMIT: f64 = 0.1;

/// A validated two-qubit density matrix: 4×4, Hermitian, unit trace and
/// positive semidefinite up to a `1e-10` floor.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    matrix: ComplexMatrix,
}

impl DensityMatrix {
    pub fn new(matrix: ComplexMatrix) -> Result<Self> {
        if matrix.dim() != 4 {
            return Err(Error::BadDimension {
                expected: 4,
                found: matrix.dim(),
            });
        }
        matrix.check_hermitian(DENSITY_HERMITIAN_TOL)?;
        let tr = matrix.trace();
        if (tr.re - 1.0).abs() > DENSITY_TRACE_TOL || tr.im.abs() > DENSITY_TRACE_TOL {
            return Err(Error::Unphysical(format!("trace is {tr}, expected 1")));
        }
        let eig = eig_hermitian(&matrix)?;
        if eig.values[0] < DENSITY_EIGEN_FLOOR {
            return Err(Error::Unphysical(format!(
                "smallest eigenvalue {:e} is negative",
                eig.values[0]
            )));
        }
        Ok(Self { matrix })
    }

    pub fn maximally_mixed() -> Self {
        Self {
            matrix: ComplexMatrix::identity(4).scale(0.25),
        }
    }

    /// Projector onto a (not necessarily normalized) pure state.
    pub fn pure(amplitudes: [Complex64; 4]) -> Result<Self> {
        let norm2: f64 = amplitudes.iter().map(|z| z.norm_sqr()).sum();
        if norm2 == 0.0 {
            return Err(Error::InvalidParameter("zero state vector".into()));
        }
        let mut m = ComplexMatrix::zeros(4);
        for i in 0..4 {
            for j in 0..4 {
                m[(i, j)] = amplitudes[i] * amplitudes[j].conj() / norm2;
            }
        }
        Self::new(m)
    }

    /// Product state `a ⊗ b` of two single-qubit density matrices.
    pub fn product(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<Self> {
        Self::new(kron(a, b)?)
    }

    pub(crate) fn from_trusted(matrix: ComplexMatrix) -> Self {
        debug_assert_eq!(matrix.dim(), 4);
        Self { matrix }
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.matrix
    }

    /// Population of basis level `i` (zero-based).
    pub fn population(&self, i: usize) -> f64 {
        self.matrix[(i, i)].re
    }

    pub fn purity(&self) -> f64 {
        (&self.matrix * &self.matrix).trace().re
    }

    /// `½‖ρ − σ‖₁`.
    pub fn trace_distance(&self, other: &DensityMatrix) -> f64 {
        trace_distance(&self.matrix, &other.matrix)
    }
}

impl AsRef<ComplexMatrix> for DensityMatrix {
    fn as_ref(&self) -> &ComplexMatrix {
        &self.matrix
    }
}

/// `½‖a − b‖₁` for Hermitian `a`, `b`.
pub fn trace_distance(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    let diff = (a - b).hermitian_part();
    match eig_hermitian(&diff) {
        Ok(e) => 0.5 * e.values.iter().map(|x| x.abs()).sum::<f64>(),
        Err(_) => f64::NAN,
    }
}

/// The four Bell states, in the order used for Bell weights everywhere in
/// this crate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BellState {
    PhiPlus,
    PhiMinus,
    PsiPlus,
    PsiMinus,
}

impl BellState {
    pub const ALL: [BellState; 4] = [
        BellState::PhiPlus,
        BellState::PhiMinus,
        BellState::PsiPlus,
        BellState::PsiMinus,
    ];

    /// Eigenvalues of (σxσx, σyσy, σzσz) on this Bell state.
    pub fn signature(self) -> [f64; 3] {
        match self {
            BellState::PhiPlus => [1.0, -1.0, 1.0],
            BellState::PhiMinus => [-1.0, 1.0, 1.0],
            BellState::PsiPlus => [1.0, 1.0, -1.0],
            BellState::PsiMinus => [-1.0, -1.0, -1.0],
        }
    }

    pub fn amplitudes(self) -> [Complex64; 4] {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let (z, p, m) = (
            Complex64::new(0.0, 0.0),
            Complex64::new(h, 0.0),
            Complex64::new(-h, 0.0),
        );
        match self {
            BellState::PhiPlus => [p, z, z, p],
            BellState::PhiMinus => [p, z, z, m],
            BellState::PsiPlus => [z, p, p, z],
            BellState::PsiMinus => [z, p, m, z],
        }
    }
}

/// Correlation coefficients `(c_x, c_y, c_z)` of a Bell-diagonal state
/// `(𝟙 + Σ c_i σ_i ⊗ σ_i) / 4`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct CVector {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl CVector {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    /// Bell-state weights `(1 + s·c) / 4`, ordered as [`BellState::ALL`].
    pub fn bell_weights(&self) -> [f64; 4] {
        BellState::ALL.map(|b| {
            let s = b.signature();
            (1.0 + s[0] * self.x + s[1] * self.y + s[2] * self.z) / 4.0
        })
    }

    /// The c-vector with the given Bell weights (inverse of [`bell_weights`]).
    ///
    /// [`bell_weights`]: CVector::bell_weights
    pub fn from_bell_weights(w: [f64; 4]) -> Self {
        let mut c = [0.0; 3];
        for (b, wb) in BellState::ALL.iter().zip(w) {
            let s = b.signature();
            for k in 0..3 {
                c[k] += s[k] * wb;
            }
        }
        Self::new(c[0], c[1], c[2])
    }

    pub fn check_physical(&self) -> Result<()> {
        if !(self.x.is_finite() && self.y.is_finite() && self.z.is_finite()) {
            return Err(Error::Unphysical(format!("non-finite c-vector {self:?}")));
        }
        for (b, w) in BellState::ALL.iter().zip(self.bell_weights()) {
            if w < BELL_WEIGHT_FLOOR {
                return Err(Error::Unphysical(format!(
                    "Bell weight of {b:?} (signature {:?}) is {w:e}",
                    b.signature()
                )));
            }
        }
        Ok(())
    }

    pub fn max_abs_diff(&self, other: &CVector) -> f64 {
        (self.x - other.x)
            .abs()
            .max((self.y - other.y).abs())
            .max((self.z - other.z).abs())
    }
}

fn correlators() -> [ComplexMatrix; 3] {
    paulis().map(|p| kron(&p, &p).expect("2x2 ⊗ 2x2 is within the cap"))
}

fn bell_diagonal_matrix(c: &CVector) -> ComplexMatrix {
    let [xx, yy, zz] = correlators();
    let mut m = ComplexMatrix::identity(4);
    m = &m + &xx.scale(c.x);
    m = &m + &yy.scale(c.y);
    m = &m + &zz.scale(c.z);
    m.scale(0.25)
}

/// `(𝟙 + c_x σxσx + c_y σyσy + c_z σzσz) / 4`.
pub fn bell_diagonal(c: &CVector) -> Result<DensityMatrix> {
    c.check_physical()?;
    Ok(DensityMatrix::from_trusted(bell_diagonal_matrix(c)))
}

/// Extracts `c_i = Tr(ρ σ_iσ_i)`, and the Frobenius distance between `ρ` and
/// the Bell-diagonal state with that c-vector.
pub fn c_vector_of(rho: &DensityMatrix) -> (CVector, f64) {
    let m = rho.matrix();
    let [xx, yy, zz] = correlators();
    let c = CVector::new((m * &xx).trace().re, (m * &yy).trace().re, (m * &zz).trace().re);
    let residual = (m - &bell_diagonal_matrix(&c)).frobenius_norm();
    (c, residual)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ThermalMode {
    /// Canonical ensemble `e^{-H/T} / Z`.
    #[default]
    Exact,
    /// First-order expansion `𝟙/4 − (J / 16T)(σxσx + σyσy + Δ σzσz)`.
    HighT,
}

impl std::str::FromStr for ThermalMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(ThermalMode::Exact),
            "high_t" | "high-t" => Ok(ThermalMode::HighT),
            other => Err(Error::InvalidParameter(format!(
                "unknown thermal mode {other:?} (expected exact or high_t)"
            ))),
        }
    }
}

/// XXZ dimer in units with `J` setting the energy scale and `k_B = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThermalParams {
    pub j: f64,
    pub delta: f64,
    pub t: f64,
    pub mode: ThermalMode,
}

#[derive(Debug, Clone)]
pub struct ThermalState {
    pub rho: DensityMatrix,
    /// Set in `high_t` mode when `J / T > 0.1`, where the expansion is poor.
    pub high_t_warning: bool,
}

/// High-temperature c-vector `(−J/4T, −J/4T, −ΔJ/4T)`.
pub fn high_t_c_vector(j: f64, delta: f64, t: f64) -> CVector {
    let k = -j / (4.0 * t);
    CVector::new(k, k, delta * k)
}

pub fn thermal_state(p: &ThermalParams) -> Result<ThermalState> {
    if !(p.j.is_finite() && p.delta.is_finite() && !p.t.is_nan()) {
        return Err(Error::InvalidParameter(format!("non-finite thermal parameters {p:?}")));
    }
    match p.mode {
        ThermalMode::HighT => {
            if !(p.t > 0.0) {
                return Err(Error::InvalidParameter(format!("high_t mode needs T > 0, got {}", p.t)));
            }
            let c = high_t_c_vector(p.j, p.delta, p.t);
            let rho = bell_diagonal(&c)?;
            let high_t_warning = (p.j / p.t).abs() > HIGH_T_VALIDITY_LIMIT;
            if high_t_warning {
                log::warn!("high_t expansion used outside its range: J/T = {}", p.j / p.t);
            }
            Ok(ThermalState { rho, high_t_warning })
        }
        ThermalMode::Exact => {
            if p.t < 0.0 {
                return Err(Error::InvalidParameter(format!(
                    "temperature must be non-negative, got {}",
                    p.t
                )));
            }
            let h = xxzmodel::hamiltonian(p.j, p.delta);
            let rho = if p.t == 0.0 {
                ground_state_mixture(&h)?
            } else {
                canonical_ensemble(&h, p.t)?
            };
            Ok(ThermalState {
                rho: DensityMatrix::from_trusted(rho),
                high_t_warning: false,
            })
        }
    }
}

fn canonical_ensemble(h: &ComplexMatrix, t: f64) -> Result<ComplexMatrix> {
    // Shift by the ground energy so the Boltzmann factors stay in [0, 1].
    let e_min = eig_hermitian(h)?.values[0];
    let shifted = h - &ComplexMatrix::identity(4).scale(e_min);
    let unnormalized = matrix_exp_hermitian(&shifted, -1.0 / t)?;
    let z = unnormalized.trace().re;
    Ok(unnormalized.scale(1.0 / z).hermitian_part())
}

/// Equal mixture over the ground eigenspace.
fn ground_state_mixture(h: &ComplexMatrix) -> Result<ComplexMatrix> {
    let eig = eig_hermitian(h)?;
    let e_min = eig.values[0];
    let tol = 1e-12 * e_min.abs().max(1.0);
    let g = eig.values.iter().filter(|&&e| (e - e_min).abs() < tol).count();
    Ok(eig
        .map_values(|e| if (e - e_min).abs() < tol { 1.0 / g as f64 } else { 0.0 })
        .hermitian_part())
}
