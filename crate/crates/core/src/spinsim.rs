//! Electron–nuclear spin pair (S = 1/2, I = 1/2) with isotropic hyperfine
//! coupling: transition frequencies, selective pulses, phenomenological
//! dephasing and the pulse sequence that prepares Bell-diagonal states.
//!
//! Levels are numbered 1–4 as `|↑↑⟩, |↑↓⟩, |↓↑⟩, |↓↓⟩` with the electron on
//! the left. The labeled transitions are MW1 = (2,4), MW2 = (1,3),
//! RF1 = (1,2) and RF2 = (3,4). Internally level `k` is matrix index `k - 1`.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{eig_hermitian, kron, paulis, ComplexMatrix};
use crate::states::{CVector, DensityMatrix};

/// Electron g-factor of the phosphorus donor in silicon.
pub const G_ELECTRON_SI_P: f64 = 1.9985;
/// Bohr magneton over Planck's constant, Hz/T.
pub const BOHR_MAGNETON_HZ_PER_T: f64 = 13.996_244_94e9;
/// Gyromagnetic ratio of ³¹P over 2π, Hz/T.
pub const GAMMA_P31_HZ_PER_T: f64 = 17.235e6;
/// Isotropic hyperfine constant of Si:P, Hz.
pub const HYPERFINE_SI_P_HZ: f64 = 117e6;
/// Electron polarization parameter of the 8 K experiment.
pub const EPSILON_SI_P: f64 = 7.35e-3;

/// Relaxation and decoherence constants, all in seconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayConstants {
    pub t1e: f64,
    pub t2e: f64,
    pub t2n_star: f64,
    /// Decay constant of the zero- and double-quantum coherences ρ₂₃, ρ₁₄.
    pub t_c: f64,
    #[serde(default)]
    pub shape: CoherenceDecayShape,
}

/// Functional form of the ρ₂₃ / ρ₁₄ decay.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoherenceDecayShape {
    /// `exp(−t / t_c)`.
    #[default]
    Exponential,
    /// `exp(−(t / t_c)²)`, for sensitivity studies.
    Gaussian,
}

impl DecayConstants {
    /// Si:P at 8 K: T1e = 5.6 ms, T2e = 120 µs, T2n* = 24.3 µs, t_c = 200 ns.
    pub fn si_p() -> Self {
        Self {
            t1e: 5.6e-3,
            t2e: 120e-6,
            t2n_star: 24.3e-6,
            t_c: 200e-9,
            shape: CoherenceDecayShape::Exponential,
        }
    }

    /// Fails on non-positive constants; returns warnings for an unusual
    /// ordering or a coherence-time table that is not completely positive.
    pub fn validate(&self) -> Result<Vec<String>> {
        for (name, v) in [
            ("T1e", self.t1e),
            ("T2e", self.t2e),
            ("T2n*", self.t2n_star),
            ("t_c", self.t_c),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")));
            }
        }
        let mut warnings = Vec::new();
        if !(self.t_c < self.t2n_star && self.t2n_star < self.t2e && self.t2e < self.t1e) {
            warnings.push(format!(
                "decay constants out of the usual order t_c < T2n* < T2e < T1e: {self:?}"
            ));
        }
        if !self.rates_completely_positive() {
            warnings.push(
                "coherence decay table is not completely positive; dephasing of states with \
                 several simultaneous coherences can leave the physical state space"
                    .to_string(),
            );
        }
        Ok(warnings)
    }

    /// Decay constant of the coherence between levels `i` and `j` (1-based).
    pub fn coherence_time(&self, i: usize, j: usize) -> f64 {
        match CoherenceClass::of(i, j) {
            CoherenceClass::Electron => self.t2e,
            CoherenceClass::Nuclear => self.t2n_star,
            CoherenceClass::MultiQuantum => self.t_c,
        }
    }

    /// Multiplicative decay of coherence `(i, j)` after `duration`.
    pub fn decay_factor(&self, i: usize, j: usize, duration: f64) -> f64 {
        let tau = self.coherence_time(i, j);
        match (CoherenceClass::of(i, j), self.shape) {
            (CoherenceClass::MultiQuantum, CoherenceDecayShape::Gaussian) => (-(duration / tau).powi(2)).exp(),
            _ => (-duration / tau).exp(),
        }
    }

    /// `λ(τ)`: decay of ρ₂₃ over a wait of `tau`.
    pub fn lambda(&self, tau: f64) -> f64 {
        self.decay_factor(2, 3, tau)
    }

    /// Whether `ρ_ij ↦ ρ_ij e^{−t Γ_ij}` with `Γ_ij = 1/τ_ij` is completely
    /// positive for every `t ≥ 0`.
    ///
    /// That holds iff `Γ` is conditionally negative definite, i.e. iff
    /// `G_ij = Γ_i1 + Γ_j1 − Γ_ij` (i, j = 2..4) is positive semidefinite.
    pub fn rates_completely_positive(&self) -> bool {
        let rate = |i: usize, j: usize| if i == j { 0.0 } else { 1.0 / self.coherence_time(i, j) };
        let mut g = ComplexMatrix::zeros(3);
        for i in 2..=4 {
            for j in 2..=4 {
                g[(i - 2, j - 2)] = Complex64::new(rate(i, 1) + rate(j, 1) - rate(i, j), 0.0);
            }
        }
        let scale = g.max_abs().max(f64::MIN_POSITIVE);
        match eig_hermitian(&g) {
            Ok(e) => e.values[0] >= -1e-12 * scale,
            Err(_) => false,
        }
    }
}

impl Default for DecayConstants {
    fn default() -> Self {
        Self::si_p()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum CoherenceClass {
    Electron,
    Nuclear,
    MultiQuantum,
}

impl CoherenceClass {
    fn of(i: usize, j: usize) -> Self {
        let (electron_i, nuclear_i) = ((i - 1) / 2, (i - 1) % 2);
        let (electron_j, nuclear_j) = ((j - 1) / 2, (j - 1) % 2);
        match (electron_i != electron_j, nuclear_i != nuclear_j) {
            (true, false) => CoherenceClass::Electron,
            (false, true) => CoherenceClass::Nuclear,
            _ => CoherenceClass::MultiQuantum,
        }
    }
}

/// Parameters of the spin Hamiltonian and of the initial polarization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpinSystem {
    /// Electron Zeeman angular frequency, rad/s.
    pub omega_e: f64,
    /// Nuclear Zeeman angular frequency, rad/s.
    pub omega_i: f64,
    /// Isotropic hyperfine constant, Hz.
    pub a_hz: f64,
    pub decay: DecayConstants,
    /// Electron polarization parameter.
    pub epsilon: f64,
}

impl SpinSystem {
    pub fn new(omega_e: f64, omega_i: f64, a_hz: f64, decay: DecayConstants, epsilon: f64) -> Result<Self> {
        let sys = Self {
            omega_e,
            omega_i,
            a_hz,
            decay,
            epsilon,
        };
        sys.validate()?;
        Ok(sys)
    }

    pub fn validate(&self) -> Result<Vec<String>> {
        if !(self.a_hz > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "hyperfine constant must be positive, got {}",
                self.a_hz
            )));
        }
        if !(self.omega_e > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "ω_e must be positive, got {}",
                self.omega_e
            )));
        }
        if !self.omega_i.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "ω_I must be finite, got {}",
                self.omega_i
            )));
        }
        if !(self.epsilon > 0.0 && self.epsilon < 0.25) {
            return Err(Error::InvalidParameter(format!(
                "ε must lie in (0, 0.25), got {}",
                self.epsilon
            )));
        }
        self.decay.validate()
    }

    /// Si:P at field `b0` (tesla).
    pub fn si_p_at_field(b0: f64) -> Self {
        Self {
            omega_e: TAU * G_ELECTRON_SI_P * BOHR_MAGNETON_HZ_PER_T * b0,
            omega_i: TAU * GAMMA_P31_HZ_PER_T * b0,
            a_hz: HYPERFINE_SI_P_HZ,
            decay: DecayConstants::si_p(),
            epsilon: EPSILON_SI_P,
        }
    }

    /// Si:P with the field chosen so that MW1 equals `mw1_hz`.
    pub fn si_p_fit_mw1(mw1_hz: f64) -> Result<Self> {
        let mw1_at = |b0: f64| transition_frequencies(&Self::si_p_at_field(b0)).map(|f| f.mw1);
        let (mut lo, mut hi) = (1e-3, 10.0);
        if !(mw1_at(lo)? < mw1_hz && mw1_hz < mw1_at(hi)?) {
            return Err(Error::InvalidParameter(format!(
                "MW1 = {mw1_hz} Hz is outside the fit range"
            )));
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mw1_at(mid)? < mw1_hz {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo < 1e-15 {
                break;
            }
        }
        Ok(Self::si_p_at_field(0.5 * (lo + hi)))
    }

    /// The system used throughout the experiment simulations: Si:P fitted to
    /// MW1 = 9.701 GHz.
    pub fn si_p_default() -> Self {
        Self::si_p_fit_mw1(9.701e9).expect("9.701 GHz lies inside the fit bracket")
    }
}

/// `H / h` in Hz: `(ω_e/2π) S_z − (ω_I/2π) I_z + a S·I`.
pub fn hamiltonian_hz(sys: &SpinSystem) -> ComplexMatrix {
    let [sx, sy, sz] = paulis().map(|p| p.scale(0.5));
    let id = ComplexMatrix::identity(2);
    let k = |a: &ComplexMatrix, b: &ComplexMatrix| kron(a, b).expect("4x4");
    let s_z = k(&sz, &id);
    let i_z = k(&id, &sz);
    let s_dot_i = &(&k(&sx, &sx) + &k(&sy, &sy)) + &k(&sz, &sz);
    let h = &(&s_z.scale(sys.omega_e / TAU) - &i_z.scale(sys.omega_i / TAU)) + &s_dot_i.scale(sys.a_hz);
    h.hermitian_part()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Transition {
    #[serde(rename = "MW1")]
    Mw1,
    #[serde(rename = "MW2")]
    Mw2,
    #[serde(rename = "RF1")]
    Rf1,
    #[serde(rename = "RF2")]
    Rf2,
}

impl Transition {
    pub const ALL: [Transition; 4] = [Transition::Mw1, Transition::Mw2, Transition::Rf1, Transition::Rf2];

    /// The level pair, 1-based.
    pub fn levels(self) -> (usize, usize) {
        match self {
            Transition::Mw1 => (2, 4),
            Transition::Mw2 => (1, 3),
            Transition::Rf1 => (1, 2),
            Transition::Rf2 => (3, 4),
        }
    }

    pub fn from_levels(pair: (usize, usize)) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|t| t.levels() == pair)
            .ok_or(Error::BadTransition(pair))
    }

    pub fn name(self) -> &'static str {
        match self {
            Transition::Mw1 => "MW1",
            Transition::Mw2 => "MW2",
            Transition::Rf1 => "RF1",
            Transition::Rf2 => "RF2",
        }
    }
}

/// Transition frequencies in Hz.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransitionFrequencies {
    pub mw1: f64,
    pub mw2: f64,
    pub rf1: f64,
    pub rf2: f64,
}

impl TransitionFrequencies {
    pub fn get(&self, t: Transition) -> f64 {
        match t {
            Transition::Mw1 => self.mw1,
            Transition::Mw2 => self.mw2,
            Transition::Rf1 => self.rf1,
            Transition::Rf2 => self.rf2,
        }
    }
}

/// Transition frequencies from exact diagonalization of the spin
/// Hamiltonian. Each eigenstate is assigned to the product level it overlaps
/// most.
pub fn transition_frequencies(sys: &SpinSystem) -> Result<TransitionFrequencies> {
    let eig = eig_hermitian(&hamiltonian_hz(sys))?;
    let mut energy = [f64::NAN; 4];
    for k in 0..4 {
        let v = eig.vector(k);
        let level = (0..4)
            .max_by(|&a, &b| v[a].norm_sqr().total_cmp(&v[b].norm_sqr()))
            .expect("nonempty");
        if !energy[level].is_nan() {
            return Err(Error::InvalidParameter(
                "eigenstates cannot be assigned to product levels (hyperfine mixing too strong)".into(),
            ));
        }
        energy[level] = eig.values[k];
    }
    let gap = |t: Transition| {
        let (i, j) = t.levels();
        (energy[i - 1] - energy[j - 1]).abs()
    };
    Ok(TransitionFrequencies {
        mw1: gap(Transition::Mw1),
        mw2: gap(Transition::Mw2),
        rf1: gap(Transition::Rf1),
        rf2: gap(Transition::Rf2),
    })
}

/// Selective rotation `exp(−i(angle/2)(cos φ σx + sin φ σy))` on the two
/// levels of `transition`, identity elsewhere. The lower-numbered level plays
/// the role of `|0⟩`.
pub fn apply_rotation(rho: &DensityMatrix, transition: Transition, angle: f64, phase: f64) -> DensityMatrix {
    let (i, j) = transition.levels();
    let (p, q) = (i - 1, j - 1);
    let (s, c) = (angle / 2.0).sin_cos();
    let e_minus = Complex64::from_polar(1.0, -phase);
    let e_plus = Complex64::from_polar(1.0, phase);
    let mi = Complex64::new(0.0, -1.0);

    let mut u = ComplexMatrix::identity(4);
    u[(p, p)] = Complex64::new(c, 0.0);
    u[(q, q)] = Complex64::new(c, 0.0);
    u[(p, q)] = mi * s * e_minus;
    u[(q, p)] = mi * s * e_plus;

    let out = &(&u * rho.matrix()) * &u.adjoint();
    DensityMatrix::from_trusted(out.hermitian_part())
}

/// [`apply_rotation`] addressed by a 1-based level pair.
pub fn apply_rotation_levels(
    rho: &DensityMatrix,
    levels: (usize, usize),
    angle: f64,
    phase: f64,
) -> Result<DensityMatrix> {
    Ok(apply_rotation(rho, Transition::from_levels(levels)?, angle, phase))
}

/// Which coherences a wait step lets decay.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DephasingChannel {
    #[default]
    All,
    /// (1,3) and (2,4).
    Electron,
    /// (1,2) and (3,4).
    Nuclear,
    /// (2,3) and (1,4).
    MultiQuantum,
}

impl DephasingChannel {
    fn includes(self, class: CoherenceClass) -> bool {
        match self {
            DephasingChannel::All => true,
            DephasingChannel::Electron => class == CoherenceClass::Electron,
            DephasingChannel::Nuclear => class == CoherenceClass::Nuclear,
            DephasingChannel::MultiQuantum => class == CoherenceClass::MultiQuantum,
        }
    }
}

/// Multiplies every coherence `ρ_ij` by its decay factor over `duration`;
/// populations are untouched.
pub fn apply_dephasing(rho: &DensityMatrix, duration: f64, decay: &DecayConstants) -> Result<DensityMatrix> {
    apply_dephasing_channel(rho, duration, decay, DephasingChannel::All)
}

pub fn apply_dephasing_channel(
    rho: &DensityMatrix,
    duration: f64,
    decay: &DecayConstants,
    channel: DephasingChannel,
) -> Result<DensityMatrix> {
    if !(duration >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "wait duration must be non-negative, got {duration}"
        )));
    }
    let mut m = rho.matrix().clone();
    let mut any = false;
    for i in 1..=4 {
        for j in (i + 1)..=4 {
            if !channel.includes(CoherenceClass::of(i, j)) {
                continue;
            }
            let f = decay.decay_factor(i, j, duration);
            m[(i - 1, j - 1)] *= f;
            m[(j - 1, i - 1)] *= f;
            any |= m[(i - 1, j - 1)].norm() > 0.0;
        }
    }
    if any && !decay.rates_completely_positive() {
        // Not guaranteed positive for this table; check the output.
        return DensityMatrix::new(m);
    }
    Ok(DensityMatrix::from_trusted(m))
}

/// Population relaxation during a wait. Deliberately the identity: every
/// sequence here is far shorter than T1e.
pub fn apply_population_relaxation(rho: &DensityMatrix, _duration: f64, _decay: &DecayConstants) -> DensityMatrix {
    rho.clone()
}

/// `𝟙/4 + 2ε S_z ⊗ 𝟙`: populations `(¼+ε, ¼+ε, ¼−ε, ¼−ε)`.
pub fn initial_thermal_state(sys: &SpinSystem) -> DensityMatrix {
    let e = sys.epsilon;
    DensityMatrix::from_trusted(ComplexMatrix::from_real_diagonal(&[
        0.25 + e,
        0.25 + e,
        0.25 - e,
        0.25 - e,
    ]))
}

/// One step of a pulse sequence. Angles are in radians, durations in seconds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Step {
    Rotate {
        transition: Transition,
        angle: f64,
        phase: f64,
    },
    Wait {
        duration: f64,
        channel: DephasingChannel,
    },
}

/// Wire form of [`Step`]: angles in degrees.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case", deny_unknown_fields)]
enum StepRecord {
    Rotate {
        transition: Transition,
        angle_deg: f64,
        #[serde(default)]
        phase_deg: f64,
    },
    Wait {
        duration_s: f64,
        #[serde(default)]
        channel: DephasingChannel,
    },
}

impl From<&Step> for StepRecord {
    fn from(s: &Step) -> Self {
        match *s {
            Step::Rotate {
                transition,
                angle,
                phase,
            } => StepRecord::Rotate {
                transition,
                angle_deg: angle.to_degrees(),
                phase_deg: phase.to_degrees(),
            },
            Step::Wait { duration, channel } => StepRecord::Wait {
                duration_s: duration,
                channel,
            },
        }
    }
}

impl From<StepRecord> for Step {
    fn from(r: StepRecord) -> Self {
        match r {
            StepRecord::Rotate {
                transition,
                angle_deg,
                phase_deg,
            } => Step::Rotate {
                transition,
                angle: angle_deg.to_radians(),
                phase: phase_deg.to_radians(),
            },
            StepRecord::Wait { duration_s, channel } => Step::Wait {
                duration: duration_s,
                channel,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct PulseSequence {
    pub steps: Vec<Step>,
}

impl PulseSequence {
    pub fn new(steps: Vec<Step>) -> Self {
        Self { steps }
    }

    pub fn run(&self, rho: &DensityMatrix, decay: &DecayConstants) -> Result<DensityMatrix> {
        let mut state = rho.clone();
        for step in &self.steps {
            state = match *step {
                Step::Rotate {
                    transition,
                    angle,
                    phase,
                } => apply_rotation(&state, transition, angle, phase),
                Step::Wait { duration, channel } => {
                    let s = apply_dephasing_channel(&state, duration, decay, channel)?;
                    apply_population_relaxation(&s, duration, decay)
                }
            };
        }
        Ok(state)
    }

    /// Parses a JSON array of `{"op": "rotate" | "wait", ...}` objects.
    pub fn from_json(text: &str) -> Result<Self> {
        let records: Vec<StepRecord> = serde_json::from_str(text)?;
        let seq = Self {
            steps: records.into_iter().map(Step::from).collect(),
        };
        for step in &seq.steps {
            if let Step::Wait { duration, .. } = step {
                if !(*duration >= 0.0) {
                    return Err(Error::InvalidParameter(format!("negative wait {duration}")));
                }
            }
        }
        Ok(seq)
    }

    pub fn to_json(&self) -> Result<String> {
        let records: Vec<StepRecord> = self.steps.iter().map(StepRecord::from).collect();
        Ok(serde_json::to_string_pretty(&records)?)
    }
}

/// Branch of the preparation sequence, i.e. the sign of `c_z`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn value(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }
}

impl std::str::FromStr for Sign {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "+" | "plus" | "+1" | "1" => Ok(Sign::Plus),
            "-" | "minus" | "-1" => Ok(Sign::Minus),
            other => Err(Error::InvalidParameter(format!("sign must be + or -, got {other:?}"))),
        }
    }
}

/// The two dephasing waits of the preparation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PreparationTiming {
    /// Wait after the θ pulse, for the electron coherence to decay.
    pub tau1: f64,
    /// Wait after the first RF pulse, for the nuclear coherence to decay.
    pub tau2: f64,
}

impl PreparationTiming {
    /// 20 times the relevant coherence time, so residual coherences are
    /// below `e^{-20}` of their initial size.
    pub fn idealized(decay: &DecayConstants) -> Self {
        Self {
            tau1: 20.0 * decay.t2e,
            tau2: 20.0 * decay.t2n_star,
        }
    }

    /// The literal experimental waits, τ1 = 1 µs and τ2 = 200 µs.
    pub fn experimental() -> Self {
        Self {
            tau1: 1e-6,
            tau2: 200e-6,
        }
    }
}

/// The preparation sequence. For `Sign::Plus`:
/// `θ(MW1) – τ1 – 90(RF1) – τ2 – 90(RF2) – 180₋ₓ(MW1) – τ3`;
/// for `Sign::Minus` the RF pulses swap and the π pulse is on MW2.
pub fn preparation_sequence(theta: f64, tau3: f64, sign: Sign, timing: &PreparationTiming) -> PulseSequence {
    let (first_rf, second_rf, pi_pulse) = match sign {
        Sign::Plus => (Transition::Rf1, Transition::Rf2, Transition::Mw1),
        Sign::Minus => (Transition::Rf2, Transition::Rf1, Transition::Mw2),
    };
    let wait = |duration| Step::Wait {
        duration,
        channel: DephasingChannel::All,
    };
    PulseSequence::new(vec![
        Step::Rotate {
            transition: Transition::Mw1,
            angle: theta,
            phase: 0.0,
        },
        wait(timing.tau1),
        Step::Rotate {
            transition: first_rf,
            angle: PI / 2.0,
            phase: 0.0,
        },
        wait(timing.tau2),
        Step::Rotate {
            transition: second_rf,
            angle: PI / 2.0,
            phase: 0.0,
        },
        Step::Rotate {
            transition: pi_pulse,
            angle: PI,
            phase: PI,
        },
        wait(tau3),
    ])
}

/// `c_x = c_y = −ε(1 − cos θ) λ(τ3)`, `c_z = ±2ε(1 + cos θ)`.
pub fn predicted_c_vector(epsilon: f64, decay: &DecayConstants, theta: f64, tau3: f64, sign: Sign) -> CVector {
    let c_perp = -epsilon * (1.0 - theta.cos()) * decay.lambda(tau3);
    CVector::new(c_perp, c_perp, sign.value() * 2.0 * epsilon * (1.0 + theta.cos()))
}

/// Preparation parameters `(θ, τ3, sign)` that give `c_x = c_y = c_perp`
/// and the requested `c_z` according to [`predicted_c_vector`].
pub fn invert_closed_form(epsilon: f64, decay: &DecayConstants, c_perp: f64, c_z: f64) -> Result<(f64, f64, Sign)> {
    let cos_theta = c_z.abs() / (2.0 * epsilon) - 1.0;
    if !(-1.0..=1.0).contains(&cos_theta) {
        return Err(Error::InvalidParameter(format!(
            "|c_z| = {} is not reachable with ε = {epsilon}",
            c_z.abs()
        )));
    }
    let theta = cos_theta.acos();
    let scale = epsilon * (1.0 - cos_theta);
    let lambda = if scale > 0.0 { -c_perp / scale } else { 1.0 };
    if !(lambda > 0.0 && lambda <= 1.0 + 1e-12) {
        return Err(Error::InvalidParameter(format!(
            "c_perp = {c_perp} needs a decay factor {lambda} outside (0, 1]"
        )));
    }
    let lambda = lambda.min(1.0);
    let tau3 = match decay.shape {
        CoherenceDecayShape::Exponential => -decay.t_c * lambda.ln(),
        CoherenceDecayShape::Gaussian => decay.t_c * (-lambda.ln()).sqrt(),
    };
    let sign = if c_z < 0.0 { Sign::Minus } else { Sign::Plus };
    Ok((theta, tau3, sign))
}

#[derive(Debug, Clone)]
pub struct Preparation {
    pub rho: DensityMatrix,
    pub predicted: CVector,
}

/// Runs the preparation sequence from the thermal state with idealized waits.
pub fn prepare_bell_diagonal(sys: &SpinSystem, theta: f64, tau3: f64, sign: Sign) -> Result<Preparation> {
    prepare_bell_diagonal_with(sys, theta, tau3, sign, &PreparationTiming::idealized(&sys.decay))
}

pub fn prepare_bell_diagonal_with(
    sys: &SpinSystem,
    theta: f64,
    tau3: f64,
    sign: Sign,
    timing: &PreparationTiming,
) -> Result<Preparation> {
    if !(0.0..=PI).contains(&theta) {
        return Err(Error::InvalidParameter(format!("θ must lie in [0, π], got {theta}")));
    }
    if !(tau3 >= 0.0) {
        return Err(Error::InvalidParameter(format!("τ3 must be non-negative, got {tau3}")));
    }
    let rho0 = initial_thermal_state(sys);
    let rho = preparation_sequence(theta, tau3, sign, timing).run(&rho0, &sys.decay)?;
    Ok(Preparation {
        rho,
        predicted: predicted_c_vector(sys.epsilon, &sys.decay, theta, tau3, sign),
    })
}
