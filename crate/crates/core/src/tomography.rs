//! Simulated readout and reconstruction of the electron–nuclear density
//! matrix: selective nutations for the populations, phase-cycled two-pulse
//! readouts for ρ₂₃ and ρ₁₄, normalization by the electron Rabi amplitude and
//! projection onto the physical states.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::{Error, Result};
use crate::numerics::{eig_hermitian, solve_symmetric, ComplexMatrix};
use crate::spinsim::{apply_rotation, Transition};
use crate::states::{trace_distance, DensityMatrix};

pub const SCHEMA: &str = "tomo/1";
/// Hermiticity tolerance of [`project_to_physical`].
pub const PROJECTION_HERMITIAN_TOL: f64 = 1e-8;
/// Below this `Σ sin²φ` (or `Σ u²` for nutations) a fit is refused.
pub const DEGENERATE_GRID_TOL: f64 = 1e-12;

/// Selective nutation on one transition.
#[derive(Debug, Clone, PartialEq)]
pub struct NutationRecord {
    pub transition: Transition,
    /// Rotation angles, strictly increasing.
    pub axis: Vec<f64>,
    pub signal: Vec<Complex64>,
    pub noise_sigma: f64,
}

/// The four phase settings of the two-pulse coherence readout.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseCycleRecord {
    pub phi_grid: Vec<f64>,
    pub i_plus_x: Vec<f64>,
    pub i_minus_x: Vec<f64>,
    pub i_plus_y: Vec<f64>,
    pub i_minus_y: Vec<f64>,
    pub noise_sigma: f64,
}

impl PhaseCycleRecord {
    pub fn diff_x(&self) -> Vec<f64> {
        self.i_plus_x.iter().zip(&self.i_minus_x).map(|(a, b)| a - b).collect()
    }

    pub fn diff_y(&self) -> Vec<f64> {
        self.i_plus_y.iter().zip(&self.i_minus_y).map(|(a, b)| a - b).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
struct NutationPoint {
    angle: f64,
    signal_re: f64,
    signal_im: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NutationWire {
    schema: String,
    transition: Transition,
    noise_sigma: f64,
    points: Vec<NutationPoint>,
}

impl NutationRecord {
    pub fn to_json(&self) -> Result<String> {
        let wire = NutationWire {
            schema: SCHEMA.into(),
            transition: self.transition,
            noise_sigma: self.noise_sigma,
            points: self
                .axis
                .iter()
                .zip(&self.signal)
                .map(|(&angle, s)| NutationPoint {
                    angle,
                    signal_re: s.re,
                    signal_im: s.im,
                })
                .collect(),
        };
        Ok(serde_json::to_string(&wire)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let wire: NutationWire = serde_json::from_str(text)?;
        if wire.schema != SCHEMA {
            return Err(Error::Json(format!("unsupported schema {:?}", wire.schema)));
        }
        let rec = Self {
            transition: wire.transition,
            axis: wire.points.iter().map(|p| p.angle).collect(),
            signal: wire
                .points
                .iter()
                .map(|p| Complex64::new(p.signal_re, p.signal_im))
                .collect(),
            noise_sigma: wire.noise_sigma,
        };
        check_axis(&rec.axis)?;
        Ok(rec)
    }
}

fn check_axis(axis: &[f64]) -> Result<()> {
    if axis.is_empty() {
        return Err(Error::InvalidParameter("empty angle axis".into()));
    }
    if axis.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::InvalidParameter("angle axis must be strictly increasing".into()));
    }
    Ok(())
}

fn check_sigma(sigma: f64) -> Result<()> {
    if !(sigma >= 0.0) || !sigma.is_finite() {
        return Err(Error::InvalidParameter(format!("noise sigma must be ≥ 0, got {sigma}")));
    }
    Ok(())
}

/// Additive Gaussian noise. Draws nothing when `sigma == 0`, so noiseless
/// runs leave the generator untouched.
struct Noise {
    normal: Option<Normal<f64>>,
}

impl Noise {
    fn new(sigma: f64) -> Result<Self> {
        check_sigma(sigma)?;
        let normal = if sigma > 0.0 {
            Some(Normal::new(0.0, sigma).map_err(|e| Error::InvalidParameter(e.to_string()))?)
        } else {
            None
        };
        Ok(Self { normal })
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.normal.map_or(0.0, |n| n.sample(rng))
    }
}

fn dephase_fully(rho: &DensityMatrix) -> DensityMatrix {
    DensityMatrix::from_trusted(ComplexMatrix::from_real_diagonal(&rho.matrix().diagonal_real()))
}

/// Selective nutation after a long wait that removes every coherence.
///
/// For the pair `(i, j)` the signal at angle `α` is the population change of
/// level `i`, `S(α) = (ρ_jj − ρ_ii)(1 − cos α)/2`. Noise is drawn per point,
/// in-phase then quadrature.
pub fn simulate_diagonal_readout<R: Rng + ?Sized>(
    rho: &DensityMatrix,
    transition: Transition,
    axis: &[f64],
    noise_sigma: f64,
    rng: &mut R,
) -> Result<NutationRecord> {
    check_axis(axis)?;
    let noise = Noise::new(noise_sigma)?;
    let (i, _) = transition.levels();
    let base = dephase_fully(rho);
    let before = base.population(i - 1);
    let signal = axis
        .iter()
        .map(|&alpha| {
            let after = apply_rotation(&base, transition, alpha, 0.0).population(i - 1);
            let re = after - before + noise.sample(rng);
            let im = noise.sample(rng);
            Complex64::new(re, im)
        })
        .collect();
    Ok(NutationRecord {
        transition,
        axis: axis.to_vec(),
        signal,
        noise_sigma,
    })
}

/// Phases of the 180° pulse for the `+x, −x, +y, −y` settings.
const PHASE_CYCLE: [f64; 4] = [0.0, PI, PI / 2.0, 3.0 * PI / 2.0];

fn simulate_phase_cycle<R: Rng + ?Sized>(
    rho: &DensityMatrix,
    pi_pulse: Transition,
    read: Transition,
    phi_grid: &[f64],
    noise_sigma: f64,
    rng: &mut R,
) -> Result<PhaseCycleRecord> {
    let noise = Noise::new(noise_sigma)?;
    let (a, b) = read.levels();
    let mut series: [Vec<f64>; 4] = Default::default();
    for (k, &phase) in PHASE_CYCLE.iter().enumerate() {
        let flipped = apply_rotation(rho, pi_pulse, PI, phase);
        series[k] = phi_grid
            .iter()
            .map(|&phi| {
                let out = apply_rotation(&flipped, read, phi, 0.0);
                (out.population(a - 1) - out.population(b - 1)) / 4.0 + noise.sample(rng)
            })
            .collect();
    }
    let [i_plus_x, i_minus_x, i_plus_y, i_minus_y] = series;
    Ok(PhaseCycleRecord {
        phi_grid: phi_grid.to_vec(),
        i_plus_x,
        i_minus_x,
        i_plus_y,
        i_minus_y,
        noise_sigma,
    })
}

/// `180_{2,4}` with four phases, then `φ_{3,4}`. Noiseless differences are
/// `I₊ₓ − I₋ₓ = −Re ρ₂₃ sin φ` and `I₊ᵧ − I₋ᵧ = Im ρ₂₃ sin φ`.
pub fn simulate_rho23_readout<R: Rng + ?Sized>(
    rho: &DensityMatrix,
    phi_grid: &[f64],
    noise_sigma: f64,
    rng: &mut R,
) -> Result<PhaseCycleRecord> {
    simulate_phase_cycle(rho, Transition::Mw1, Transition::Rf2, phi_grid, noise_sigma, rng)
}

/// `180_{2,4}` with four phases, then `φ_{1,2}`; same identities for ρ₁₄.
pub fn simulate_rho14_readout<R: Rng + ?Sized>(
    rho: &DensityMatrix,
    phi_grid: &[f64],
    noise_sigma: f64,
    rng: &mut R,
) -> Result<PhaseCycleRecord> {
    simulate_phase_cycle(rho, Transition::Mw1, Transition::Rf1, phi_grid, noise_sigma, rng)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SineFit {
    pub amplitude: f64,
    pub residual_rms: f64,
}

/// Least-squares projection onto a single basis function.
fn fit_single(basis: &[f64], series: &[f64]) -> Result<SineFit> {
    if basis.len() != series.len() {
        return Err(Error::InvalidParameter(format!(
            "grid has {} points but series has {}",
            basis.len(),
            series.len()
        )));
    }
    let norm: f64 = basis.iter().map(|b| b * b).sum();
    if norm < DEGENERATE_GRID_TOL {
        return Err(Error::DegenerateGrid(norm));
    }
    let amplitude = basis.iter().zip(series).map(|(b, s)| b * s).sum::<f64>() / norm;
    let ss: f64 = basis.iter().zip(series).map(|(b, s)| (s - amplitude * b).powi(2)).sum();
    Ok(SineFit {
        amplitude,
        residual_rms: (ss / series.len() as f64).sqrt(),
    })
}

/// Fits `A sin φ`.
pub fn fit_sine_amplitude(phi_grid: &[f64], series: &[f64]) -> Result<SineFit> {
    let basis: Vec<f64> = phi_grid.iter().map(|p| p.sin()).collect();
    fit_single(&basis, series)
}

/// Fits `A (1 − cos α)/2` to the in-phase signal; `A = ρ_jj − ρ_ii`.
pub fn fit_nutation_amplitude(record: &NutationRecord) -> Result<SineFit> {
    let basis: Vec<f64> = record.axis.iter().map(|a| 0.5 * (1.0 - a.cos())).collect();
    let series: Vec<f64> = record.signal.iter().map(|s| s.re).collect();
    fit_single(&basis, &series)
}

/// `ρ` (in signal units) from a phase-cycle record.
pub fn extract_coherence(record: &PhaseCycleRecord) -> Result<Complex64> {
    let x = fit_sine_amplitude(&record.phi_grid, &record.diff_x())?;
    let y = fit_sine_amplitude(&record.phi_grid, &record.diff_y())?;
    Ok(Complex64::new(-x.amplitude, y.amplitude))
}

/// Converts signal units to density-matrix units: the electron Rabi
/// amplitude of the thermal state is taken as `2ε`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Normalization {
    pub reference_amplitude: f64,
    pub epsilon: f64,
}

impl Normalization {
    pub fn scale(&self) -> Result<f64> {
        if !(self.reference_amplitude > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "reference amplitude must be positive, got {}",
                self.reference_amplitude
            )));
        }
        Ok(2.0 * self.epsilon / self.reference_amplitude)
    }
}

#[derive(Debug, Clone)]
pub struct ReconstructionReport {
    pub rho: DensityMatrix,
    /// Assembled matrix before the physicality projection.
    pub raw: ComplexMatrix,
    pub trace_distance_raw_to_physical: f64,
    pub normalization_amplitude: f64,
}

fn matrix_json(m: &ComplexMatrix) -> serde_json::Value {
    let n = m.dim();
    (0..n)
        .map(|i| (0..n).map(|j| json!([m[(i, j)].re, m[(i, j)].im])).collect::<Vec<_>>())
        .collect::<Vec<_>>()
        .into()
}

impl ReconstructionReport {
    pub fn to_json_value(&self) -> serde_json::Value {
        json!({
            "schema": SCHEMA,
            "rho": matrix_json(self.rho.matrix()),
            "raw": matrix_json(&self.raw),
            "trace_distance_raw_to_physical": self.trace_distance_raw_to_physical,
            "normalization_amplitude": self.normalization_amplitude,
        })
    }
}

/// Populations from the four nutation amplitudes
/// (MW1: p₄−p₂, MW2: p₃−p₁, RF1: p₂−p₁, RF2: p₄−p₃) by least squares with
/// unit trace. Returns the populations and the noise level in population
/// units.
pub fn populations_from_records(records: &[NutationRecord], scale: f64) -> Result<([f64; 4], f64)> {
    if records.is_empty() {
        return Err(Error::InconsistentRecords("no nutation records".into()));
    }
    let mut rows: Vec<[f64; 4]> = Vec::new();
    let mut rhs = Vec::new();
    let mut sigma: f64 = 0.0;
    for rec in records {
        let (i, j) = rec.transition.levels();
        let mut row = [0.0; 4];
        row[j - 1] = 1.0;
        row[i - 1] = -1.0;
        rows.push(row);
        rhs.push(scale * fit_nutation_amplitude(rec)?.amplitude);
        sigma = sigma.max(scale * rec.noise_sigma);
    }
    // (DᵀD + 11ᵀ) δ = Dᵀ d keeps Σδ = 0 and is regular when the transitions
    // connect all four levels.
    let mut a = vec![vec![1.0; 4]; 4];
    let mut b = vec![0.0; 4];
    for (row, d) in rows.iter().zip(&rhs) {
        for p in 0..4 {
            b[p] += row[p] * d;
            for q in 0..4 {
                a[p][q] += row[p] * row[q];
            }
        }
    }
    let delta = solve_symmetric(&a, &b)
        .map_err(|_| Error::InconsistentRecords("nutation records do not connect all four levels".into()))?;
    let pops = [0.25 + delta[0], 0.25 + delta[1], 0.25 + delta[2], 0.25 + delta[3]];
    if let Some((k, &p)) = pops.iter().enumerate().find(|&(_, &p)| p < -3.0 * sigma - 1e-12) {
        return Err(Error::InconsistentRecords(format!(
            "population {} = {p:e} is negative beyond 3σ = {:e}",
            k + 1,
            3.0 * sigma
        )));
    }
    Ok((pops, sigma))
}

/// Assembles populations and the two measured coherences (already in
/// density-matrix units), zeroes the other coherences and projects.
pub fn reconstruct_from_populations(
    populations: [f64; 4],
    rho23: Complex64,
    rho14: Complex64,
    normalization_amplitude: f64,
) -> Result<ReconstructionReport> {
    let total: f64 = populations.iter().sum();
    if !(total > 0.0) {
        return Err(Error::InconsistentRecords(format!("populations sum to {total}")));
    }
    let mut raw = ComplexMatrix::from_real_diagonal(&populations.map(|p| p / total));
    raw[(1, 2)] = rho23;
    raw[(2, 1)] = rho23.conj();
    raw[(0, 3)] = rho14;
    raw[(3, 0)] = rho14.conj();
    let rho = project_to_physical(&raw)?;
    Ok(ReconstructionReport {
        trace_distance_raw_to_physical: trace_distance(&raw, rho.matrix()),
        rho,
        raw,
        normalization_amplitude,
    })
}

/// Full reconstruction from records in signal units.
pub fn reconstruct(
    diagonal: &[NutationRecord],
    rho23: &PhaseCycleRecord,
    rho14: &PhaseCycleRecord,
    normalization: Normalization,
) -> Result<ReconstructionReport> {
    let scale = normalization.scale()?;
    let (pops, _) = populations_from_records(diagonal, scale)?;
    reconstruct_from_populations(
        pops,
        extract_coherence(rho23)? * scale,
        extract_coherence(rho14)? * scale,
        normalization.reference_amplitude,
    )
}

/// Closest unit-trace positive semidefinite matrix in Frobenius norm:
/// eigenvalues are projected onto the probability simplex, eigenvectors kept.
pub fn project_to_physical(m: &ComplexMatrix) -> Result<DensityMatrix> {
    let (defect, row, col) = m.hermiticity_defect();
    if defect > PROJECTION_HERMITIAN_TOL {
        return Err(Error::NotHermitian {
            row,
            col,
            deviation: defect,
        });
    }
    let h = m.hermitian_part();
    let eig = eig_hermitian(&h)?;
    if eig.values[0] >= 0.0 && (h.trace().re - 1.0).abs() <= 1e-12 {
        return Ok(DensityMatrix::from_trusted(h));
    }
    let shift = simplex_shift(&eig.values);
    let out = eig.map_values(|v| (v - shift).max(0.0));
    Ok(DensityMatrix::from_trusted(out.hermitian_part()))
}

/// Euclidean projection of `values` onto `{x ≥ 0, Σx = 1}`.
pub fn simplex_projection(values: &[f64]) -> Vec<f64> {
    let shift = simplex_shift(values);
    values.iter().map(|v| (v - shift).max(0.0)).collect()
}

/// The uniform shift `s` with `Σ max(x − s, 0) = 1`.
fn simplex_shift(values: &[f64]) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cumulative = 0.0;
    let mut shift = 0.0;
    for (k, &v) in sorted.iter().enumerate() {
        cumulative += v;
        let candidate = (cumulative - 1.0) / (k + 1) as f64;
        if v - candidate > 0.0 {
            shift = candidate;
        }
    }
    shift
}

/// Grids and noise of a full tomography run.
#[derive(Debug, Clone, PartialEq)]
pub struct ReadoutConfig {
    pub nutation_axis: Vec<f64>,
    pub phi_grid: Vec<f64>,
    pub noise_sigma: f64,
}

impl Default for ReadoutConfig {
    /// Nutation over 0°..360° and φ over 0°..350°, both in 10° steps.
    fn default() -> Self {
        Self {
            nutation_axis: (0..=36).map(|k| (10.0 * k as f64).to_radians()).collect(),
            phi_grid: (0..36).map(|k| (10.0 * k as f64).to_radians()).collect(),
            noise_sigma: 0.0,
        }
    }
}

/// Every record of one tomography run.
#[derive(Debug, Clone)]
pub struct TomographyRecords {
    /// MW1 nutation of the thermal state.
    pub reference: NutationRecord,
    pub diagonal: Vec<NutationRecord>,
    pub rho23: PhaseCycleRecord,
    pub rho14: PhaseCycleRecord,
}

/// Simulates the reference and all state records, drawing noise in the order
/// reference, MW1, MW2, RF1, RF2, ρ₂₃ cycle, ρ₁₄ cycle.
pub fn simulate_records<R: Rng + ?Sized>(
    rho: &DensityMatrix,
    epsilon: f64,
    cfg: &ReadoutConfig,
    rng: &mut R,
) -> Result<TomographyRecords> {
    let thermal = DensityMatrix::from_trusted(ComplexMatrix::from_real_diagonal(&[
        0.25 + epsilon,
        0.25 + epsilon,
        0.25 - epsilon,
        0.25 - epsilon,
    ]));
    let reference = simulate_diagonal_readout(&thermal, Transition::Mw1, &cfg.nutation_axis, cfg.noise_sigma, rng)?;
    let diagonal = Transition::ALL
        .iter()
        .map(|&t| simulate_diagonal_readout(rho, t, &cfg.nutation_axis, cfg.noise_sigma, rng))
        .collect::<Result<Vec<_>>>()?;
    let rho23 = simulate_rho23_readout(rho, &cfg.phi_grid, cfg.noise_sigma, rng)?;
    let rho14 = simulate_rho14_readout(rho, &cfg.phi_grid, cfg.noise_sigma, rng)?;
    Ok(TomographyRecords {
        reference,
        diagonal,
        rho23,
        rho14,
    })
}

/// Reconstruction normalized by the fitted reference amplitude.
pub fn reconstruct_records(records: &TomographyRecords, epsilon: f64) -> Result<ReconstructionReport> {
    let reference_amplitude = fit_nutation_amplitude(&records.reference)?.amplitude.abs();
    reconstruct(
        &records.diagonal,
        &records.rho23,
        &records.rho14,
        Normalization {
            reference_amplitude,
            epsilon,
        },
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::correlations::discord_bell_diagonal;
    use crate::states::{bell_diagonal, c_vector_of, CVector};
    use proptest::prelude::{any, prop_assert, proptest, ProptestConfig};
    use rand::SeedableRng;
    use rand_xoshiro::Xoshiro256PlusPlus;

    const EPS: f64 = 7.35e-3;

    fn rng(seed: u64) -> Xoshiro256PlusPlus {
        Xoshiro256PlusPlus::seed_from_u64(seed)
    }

    fn target() -> DensityMatrix {
        bell_diagonal(&CVector::new(-0.0044, -0.0044, 0.0008)).unwrap()
    }

    fn thermal() -> DensityMatrix {
        DensityMatrix::new(ComplexMatrix::from_real_diagonal(&[
            0.25 + EPS,
            0.25 + EPS,
            0.25 - EPS,
            0.25 - EPS,
        ]))
        .unwrap()
    }

    fn with_coherences(rho23: Complex64, rho14: Complex64) -> DensityMatrix {
        let mut m = ComplexMatrix::identity(4).scale(0.25);
        m[(1, 2)] = rho23;
        m[(2, 1)] = rho23.conj();
        m[(0, 3)] = rho14;
        m[(3, 0)] = rho14.conj();
        DensityMatrix::new(m).unwrap()
    }

    fn random_c(rng: &mut impl Rng) -> CVector {
        // Uniform on the tetrahedron via Bell weights from a flat Dirichlet.
        let e: [f64; 4] = std::array::from_fn(|_| -(1.0 - rng.random::<f64>()).ln());
        let s: f64 = e.iter().sum();
        CVector::from_bell_weights(e.map(|x| x / s))
    }

    fn phi36() -> Vec<f64> {
        ReadoutConfig::default().phi_grid
    }

    #[test]
    fn mixed_state_gives_flat_nutation() {
        let axis = ReadoutConfig::default().nutation_axis;
        for t in Transition::ALL {
            let rec = simulate_diagonal_readout(&DensityMatrix::maximally_mixed(), t, &axis, 0.0, &mut rng(1)).unwrap();
            assert!(rec.signal.iter().all(|s| s.norm() < 1e-16));
        }
    }

    #[test]
    fn thermal_electron_rabi_amplitude_is_two_epsilon() {
        let rec = simulate_diagonal_readout(
            &thermal(),
            Transition::Mw1,
            &ReadoutConfig::default().nutation_axis,
            0.0,
            &mut rng(1),
        )
        .unwrap();
        let fit = fit_nutation_amplitude(&rec).unwrap();
        assert!((fit.amplitude.abs() - 2.0 * EPS).abs() < 1e-15);
        assert!(fit.residual_rms < 1e-15);
    }

    #[test]
    fn zero_angle_gives_zero_signal() {
        let rec = simulate_diagonal_readout(&thermal(), Transition::Rf2, &[0.0], 0.0, &mut rng(1)).unwrap();
        assert_eq!(rec.signal, vec![Complex64::new(0.0, 0.0)]);
    }

    #[test]
    fn nutation_input_validation() {
        let rho = thermal();
        assert!(simulate_diagonal_readout(&rho, Transition::Mw1, &[], 0.0, &mut rng(1)).is_err());
        assert!(simulate_diagonal_readout(&rho, Transition::Mw1, &[1.0, 0.5], 0.0, &mut rng(1)).is_err());
        assert!(simulate_diagonal_readout(&rho, Transition::Mw1, &[1.0], -0.1, &mut rng(1)).is_err());
    }

    #[test]
    fn nutation_follows_population_difference() {
        let rho = DensityMatrix::new(ComplexMatrix::from_real_diagonal(&[0.4, 0.3, 0.2, 0.1])).unwrap();
        let axis = [0.3, 1.1, 2.0, PI];
        for t in Transition::ALL {
            let (i, j) = t.levels();
            let rec = simulate_diagonal_readout(&rho, t, &axis, 0.0, &mut rng(1)).unwrap();
            let diff = rho.population(j - 1) - rho.population(i - 1);
            for (a, s) in axis.iter().zip(&rec.signal) {
                assert!((s.re - diff * (1.0 - a.cos()) / 2.0).abs() < 1e-15);
            }
        }
    }

    fn assert_identities(rec: &PhaseCycleRecord, z: Complex64) {
        for ((phi, dx), dy) in rec.phi_grid.iter().zip(rec.diff_x()).zip(rec.diff_y()) {
            assert!(
                (dx + z.re * phi.sin()).abs() < 1e-12,
                "φ={phi}: {dx} vs {}",
                -z.re * phi.sin()
            );
            assert!(
                (dy - z.im * phi.sin()).abs() < 1e-12,
                "φ={phi}: {dy} vs {}",
                z.im * phi.sin()
            );
        }
    }

    #[test]
    fn rho23_readout_identities() {
        for z in [
            Complex64::new(0.0, 0.0),
            Complex64::new(0.1, 0.0),
            Complex64::new(0.0, 0.07),
            Complex64::new(-0.05, 0.12),
        ] {
            let rho = with_coherences(z, Complex64::new(0.03, -0.02));
            let rec = simulate_rho23_readout(&rho, &phi36(), 0.0, &mut rng(1)).unwrap();
            assert_identities(&rec, z);
        }
    }

    #[test]
    fn rho14_readout_identities() {
        let w = Complex64::new(-0.08, 0.04);
        let rho = with_coherences(Complex64::new(0.05, 0.1), w);
        let rec = simulate_rho14_readout(&rho, &phi36(), 0.0, &mut rng(1)).unwrap();
        assert_identities(&rec, w);
    }

    #[test]
    fn readout_identities_on_random_states() {
        let mut r = rng(2);
        for _ in 0..50 {
            let mut a = ComplexMatrix::zeros(4);
            for i in 0..4 {
                for j in 0..4 {
                    a[(i, j)] = Complex64::new(r.random_range(-1.0..1.0), r.random_range(-1.0..1.0));
                }
            }
            let m = &a.adjoint() * &a;
            let tr = m.trace().re;
            let rho = DensityMatrix::new(m.scale(1.0 / tr)).unwrap();
            assert_identities(
                &simulate_rho23_readout(&rho, &phi36(), 0.0, &mut r).unwrap(),
                rho.matrix()[(1, 2)],
            );
            assert_identities(
                &simulate_rho14_readout(&rho, &phi36(), 0.0, &mut r).unwrap(),
                rho.matrix()[(0, 3)],
            );
        }
    }

    #[test]
    fn sine_fit_examples() {
        let phi = phi36();
        let two: Vec<f64> = phi.iter().map(|p| 2.0 * p.sin()).collect();
        let fit = fit_sine_amplitude(&phi, &two).unwrap();
        assert!((fit.amplitude - 2.0).abs() < 1e-14);
        assert!(fit.residual_rms < 1e-14);
        let zero = fit_sine_amplitude(&phi, &vec![0.0; phi.len()]).unwrap();
        assert_eq!(zero.amplitude, 0.0);
        assert!(matches!(
            fit_sine_amplitude(&[0.0, PI, 2.0 * PI], &[1.0, 2.0, 3.0]),
            Err(Error::DegenerateGrid(_))
        ));
        assert!(fit_sine_amplitude(&phi, &[1.0]).is_err());
    }

    #[test]
    fn sine_fit_statistical_bound() {
        let phi = phi36();
        let norm: f64 = phi.iter().map(|p| p.sin().powi(2)).sum();
        let (a_true, sigma) = (0.3, 0.05);
        let normal = Normal::new(0.0, sigma).unwrap();
        let mut r = rng(3);
        let bound = 3.0 * sigma / norm.sqrt();
        let inside = (0..500)
            .filter(|_| {
                let s: Vec<f64> = phi.iter().map(|p| a_true * p.sin() + normal.sample(&mut r)).collect();
                (fit_sine_amplitude(&phi, &s).unwrap().amplitude - a_true).abs() <= bound
            })
            .count();
        // 3σ covers 99.7%; allow sampling slack.
        assert!(inside >= 490, "{inside}/500 inside the 3σ bound");
    }

    #[test]
    fn target_round_trip() {
        let rho = target();
        let recs = simulate_records(&rho, EPS, &ReadoutConfig::default(), &mut rng(4)).unwrap();
        let rep = reconstruct_records(&recs, EPS).unwrap();
        assert!(rep.rho.trace_distance(&rho) < 1e-10);
        assert!((rep.normalization_amplitude - 2.0 * EPS).abs() < 1e-15);
    }

    #[test]
    fn mixed_state_round_trip() {
        let rho = DensityMatrix::maximally_mixed();
        let recs = simulate_records(&rho, EPS, &ReadoutConfig::default(), &mut rng(5)).unwrap();
        let rep = reconstruct_records(&recs, EPS).unwrap();
        assert!(rep.rho.trace_distance(&rho) < 1e-15);
        assert!(rep.trace_distance_raw_to_physical < 1e-15);
    }

    #[test]
    fn bell_diagonal_round_trip_preserves_discord() {
        let mut r = rng(6);
        for _ in 0..100 {
            let c = random_c(&mut r);
            let rho = bell_diagonal(&c).unwrap();
            let recs = simulate_records(&rho, EPS, &ReadoutConfig::default(), &mut r).unwrap();
            let rep = reconstruct_records(&recs, EPS).unwrap();
            assert!(rep.rho.trace_distance(&rho) < 1e-9);
            let got = discord_bell_diagonal(&c_vector_of(&rep.rho).0).unwrap().discord;
            let want = discord_bell_diagonal(&c).unwrap().discord;
            assert!((got - want).abs() < 1e-9);
        }
    }

    #[test]
    fn gain_cancels_in_normalization() {
        let rho = target();
        let recs = simulate_records(&rho, EPS, &ReadoutConfig::default(), &mut rng(7)).unwrap();
        let gain = 37.5;
        let scale_rec = |r: &NutationRecord| NutationRecord {
            signal: r.signal.iter().map(|s| s * gain).collect(),
            ..r.clone()
        };
        let scale_cycle = |r: &PhaseCycleRecord| PhaseCycleRecord {
            i_plus_x: r.i_plus_x.iter().map(|s| s * gain).collect(),
            i_minus_x: r.i_minus_x.iter().map(|s| s * gain).collect(),
            i_plus_y: r.i_plus_y.iter().map(|s| s * gain).collect(),
            i_minus_y: r.i_minus_y.iter().map(|s| s * gain).collect(),
            ..r.clone()
        };
        let scaled = TomographyRecords {
            reference: scale_rec(&recs.reference),
            diagonal: recs.diagonal.iter().map(scale_rec).collect(),
            rho23: scale_cycle(&recs.rho23),
            rho14: scale_cycle(&recs.rho14),
        };
        let rep = reconstruct_records(&scaled, EPS).unwrap();
        assert!(rep.rho.trace_distance(&rho) < 1e-10);
    }

    #[test]
    fn reconstruct_rejects_bad_inputs() {
        let recs = simulate_records(&target(), EPS, &ReadoutConfig::default(), &mut rng(8)).unwrap();
        let bad = Normalization {
            reference_amplitude: 0.0,
            epsilon: EPS,
        };
        assert!(reconstruct(&recs.diagonal, &recs.rho23, &recs.rho14, bad).is_err());
        // One transition alone cannot fix four populations.
        let ok = Normalization {
            reference_amplitude: 2.0 * EPS,
            epsilon: EPS,
        };
        assert!(matches!(
            reconstruct(&recs.diagonal[..1], &recs.rho23, &recs.rho14, ok),
            Err(Error::InconsistentRecords(_))
        ));
    }

    #[test]
    fn strongly_negative_population_is_inconsistent() {
        // p₁ − p₂ far beyond any physical state.
        let axis = ReadoutConfig::default().nutation_axis;
        let mk = |t: Transition, amp: f64| NutationRecord {
            transition: t,
            axis: axis.clone(),
            signal: axis
                .iter()
                .map(|a| Complex64::new(amp * (1.0 - a.cos()) / 2.0, 0.0))
                .collect(),
            noise_sigma: 0.001,
        };
        let recs = vec![
            mk(Transition::Mw1, 0.0),
            mk(Transition::Mw2, 0.0),
            mk(Transition::Rf1, 3.0),
            mk(Transition::Rf2, 0.0),
        ];
        assert!(matches!(
            populations_from_records(&recs, 1.0),
            Err(Error::InconsistentRecords(_))
        ));
    }

    #[test]
    fn projection_examples() {
        let p = project_to_physical(&ComplexMatrix::from_real_diagonal(&[1.1, 0.1, -0.1, -0.1])).unwrap();
        assert!((p.matrix() - &ComplexMatrix::from_real_diagonal(&[1.0, 0.0, 0.0, 0.0])).max_abs() < 1e-12);

        let p = project_to_physical(&ComplexMatrix::from_real_diagonal(&[0.5, 0.5, 0.1, -0.1])).unwrap();
        let want = [7.0 / 15.0, 7.0 / 15.0, 1.0 / 15.0, 0.0];
        let got = p.matrix().diagonal_real();
        for (g, w) in got.iter().zip(want) {
            assert!((g - w).abs() < 1e-12, "{got:?}");
        }
    }

    #[test]
    fn simplex_projection_beats_brute_force() {
        let target = [0.5, 0.5, 0.1, -0.1];
        let dist = |x: &[f64]| x.iter().zip(&target).map(|(a, b)| (a - b).powi(2)).sum::<f64>();
        let best = simplex_projection(&target);
        let d_best = dist(&best);
        // The hand-guessed candidate is strictly worse.
        assert!(d_best < dist(&[0.45, 0.45, 0.1, 0.0]) - 1e-4);
        // Exhaustive search on a 1/200 lattice of the simplex.
        let n = 200;
        let mut lattice_best = f64::INFINITY;
        for a in 0..=n {
            for b in 0..=(n - a) {
                for c in 0..=(n - a - b) {
                    let d = n - a - b - c;
                    let x = [a, b, c, d].map(|k| k as f64 / n as f64);
                    lattice_best = lattice_best.min(dist(&x));
                }
            }
        }
        assert!(d_best <= lattice_best + 1e-15);
        assert!(lattice_best - d_best < 1e-3);
    }

    #[test]
    fn projection_leaves_physical_states() {
        let rho = target();
        let p = project_to_physical(rho.matrix()).unwrap();
        assert!((p.matrix() - rho.matrix()).max_abs() < 1e-12);
    }

    #[test]
    fn projection_rejects_non_hermitian() {
        let mut m = ComplexMatrix::identity(4).scale(0.25);
        m[(0, 1)] = Complex64::new(1e-6, 0.0);
        assert!(matches!(project_to_physical(&m), Err(Error::NotHermitian { .. })));
    }

    fn random_hermitian_unit_trace(r: &mut impl Rng) -> ComplexMatrix {
        let mut m = ComplexMatrix::zeros(4);
        for i in 0..4 {
            m[(i, i)] = Complex64::new(r.random_range(-0.5..1.0), 0.0);
            for j in (i + 1)..4 {
                let z = Complex64::new(r.random_range(-0.5..0.5), r.random_range(-0.5..0.5));
                m[(i, j)] = z;
                m[(j, i)] = z.conj();
            }
        }
        let shift = (1.0 - m.trace().re) / 4.0;
        &m + &ComplexMatrix::identity(4).scale(shift)
    }

    #[test]
    fn projection_is_nearest_physical_state() {
        let mut r = rng(9);
        for _ in 0..50 {
            let m = random_hermitian_unit_trace(&mut r);
            let p = project_to_physical(&m).unwrap();
            let d = (&m - p.matrix()).frobenius_norm();
            for _ in 0..200 {
                let mut a = ComplexMatrix::zeros(4);
                for i in 0..4 {
                    for j in 0..4 {
                        a[(i, j)] = Complex64::new(r.random_range(-1.0..1.0), r.random_range(-1.0..1.0));
                    }
                }
                let s = &a.adjoint() * &a;
                let tr = s.trace().re;
                let other = s.scale(1.0 / tr);
                assert!(d <= (&m - &other).frobenius_norm() + 1e-12);
            }
            // Idempotent.
            let pp = project_to_physical(p.matrix()).unwrap();
            assert!((pp.matrix() - p.matrix()).max_abs() < 1e-12);
        }
    }

    #[test]
    fn noise_band_of_target_discord() {
        // Golden 95% interval of the reconstructed discord at σ = 0.05·2ε,
        // from 1000 trials with seed 2024.
        const GOLDEN: (f64, f64) = (6.416805582443175e-6, 1.9413818218794177e-5);
        let cfg = ReadoutConfig {
            noise_sigma: 0.05 * 2.0 * EPS,
            ..ReadoutConfig::default()
        };
        let mut r = rng(2024);
        let mut values: Vec<f64> = (0..1000)
            .map(|_| {
                let recs = simulate_records(&target(), EPS, &cfg, &mut r).unwrap();
                let rep = reconstruct_records(&recs, EPS).unwrap();
                let d = discord_bell_diagonal(&c_vector_of(&rep.rho).0).unwrap().discord;
                assert!(d >= 0.0);
                d
            })
            .collect();
        values.sort_by(f64::total_cmp);
        let (lo, hi) = (values[25], values[974]);
        assert!((lo - GOLDEN.0).abs() <= 1e-9 * GOLDEN.0.abs().max(1e-12), "lo = {lo:e}");
        assert!((hi - GOLDEN.1).abs() <= 1e-9 * GOLDEN.1.abs().max(1e-12), "hi = {hi:e}");
        let noiseless = discord_bell_diagonal(&CVector::new(-0.0044, -0.0044, 0.0008))
            .unwrap()
            .discord;
        assert!(lo < noiseless && noiseless < hi);
    }

    #[test]
    fn record_json_round_trip() {
        let rec = simulate_diagonal_readout(&target(), Transition::Rf1, &[0.1, 0.2, 0.5], 0.01, &mut rng(10)).unwrap();
        let text = rec.to_json().unwrap();
        assert!(text.contains("\"schema\":\"tomo/1\""));
        assert!(text.contains("signal_im"));
        assert_eq!(NutationRecord::from_json(&text).unwrap(), rec);
        assert!(NutationRecord::from_json(&text.replace("tomo/1", "tomo/9")).is_err());
    }

    #[test]
    fn report_json_has_complex_pairs() {
        let recs = simulate_records(&target(), EPS, &ReadoutConfig::default(), &mut rng(11)).unwrap();
        let v = reconstruct_records(&recs, EPS).unwrap().to_json_value();
        assert_eq!(v["schema"], "tomo/1");
        assert_eq!(v["rho"].as_array().unwrap().len(), 4);
        assert_eq!(v["rho"][1][2].as_array().unwrap().len(), 2);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn reconstructed_discord_is_never_negative(seed in any::<u64>(), sigma in 0.0f64..0.01) {
            let cfg = ReadoutConfig { noise_sigma: sigma, ..ReadoutConfig::default() };
            let mut r = rng(seed);
            let recs = simulate_records(&target(), EPS, &cfg, &mut r).unwrap();
            if let Ok(rep) = reconstruct_records(&recs, EPS) {
                let d = discord_bell_diagonal(&c_vector_of(&rep.rho).0).unwrap().discord;
                prop_assert!(d >= 0.0);
            }
        }
    }
}
