//! The two-site XXZ Heisenberg model `H = J/4 (σxσx + σyσy + Δ σzσz)`:
//! spectrum, level crossings, and sweeps of thermal-state correlations over
//! the anisotropy with detection of the discord's sudden changes.
//!
//! Units are `J = k_B = ħ = 1` unless `J` is passed explicitly.

use serde::{Deserialize, Serialize};

use crate::correlations::{discord_bell_diagonal, eof, max_branch, Axis, BRANCH_TIE_TOL};
use crate::error::{Error, Result};
use crate::numerics::{kron, paulis, ComplexMatrix};
use crate::states::{c_vector_of, thermal_state, CVector, ThermalMode, ThermalParams};

const BISECTION_MAX_ITERS: usize = 60;
/// Bisection stops once the bracket is narrower than this (relative to
/// `max(1, |Δ|)`); always well inside the required `1e-6`.
const BISECTION_WIDTH: f64 = 1e-12;

pub fn hamiltonian(j: f64, delta: f64) -> ComplexMatrix {
    let [x, y, z] = paulis();
    let xx = kron(&x, &x).expect("4x4");
    let yy = kron(&y, &y).expect("4x4");
    let zz = kron(&z, &z).expect("4x4");
    let h = &(&xx + &yy) + &zz.scale(delta);
    h.scale(j / 4.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, PartialOrd, Ord)]
#[serde(rename_all = "kebab-case")]
pub enum LevelLabel {
    UpUp,
    DownDown,
    Triplet0,
    Singlet,
}

impl LevelLabel {
    pub const ALL: [LevelLabel; 4] = [
        LevelLabel::UpUp,
        LevelLabel::DownDown,
        LevelLabel::Triplet0,
        LevelLabel::Singlet,
    ];

    pub fn name(self) -> &'static str {
        match self {
            LevelLabel::UpUp => "up-up",
            LevelLabel::DownDown => "down-down",
            LevelLabel::Triplet0 => "triplet0",
            LevelLabel::Singlet => "singlet",
        }
    }

    /// Energy as `offset + slope * Δ`, both in units of `J`.
    fn linear_form(self) -> (f64, f64) {
        match self {
            LevelLabel::UpUp | LevelLabel::DownDown => (0.0, 0.25),
            LevelLabel::Triplet0 => (0.5, -0.25),
            LevelLabel::Singlet => (-0.5, -0.25),
        }
    }

    pub fn energy(self, j: f64, delta: f64) -> f64 {
        let (offset, slope) = self.linear_form();
        j * (offset + slope * delta)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct XxzSpectrum {
    pub j: f64,
    pub delta: f64,
    /// One entry per label, in [`LevelLabel::ALL`] order.
    pub levels: [(LevelLabel, f64); 4],
}

impl XxzSpectrum {
    pub fn energy(&self, label: LevelLabel) -> f64 {
        self.levels
            .iter()
            .find(|(l, _)| *l == label)
            .map(|&(_, e)| e)
            .expect("all labels present")
    }

    pub fn sorted_energies(&self) -> [f64; 4] {
        let mut e = self.levels.map(|(_, e)| e);
        e.sort_by(f64::total_cmp);
        e
    }
}

/// Analytic levels: `JΔ/4` (twice), `−JΔ/4 + J/2`, `−JΔ/4 − J/2`.
pub fn spectrum(j: f64, delta: f64) -> XxzSpectrum {
    XxzSpectrum {
        j,
        delta,
        levels: LevelLabel::ALL.map(|l| (l, l.energy(j, delta))),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LevelCrossing {
    pub delta: f64,
    pub levels: (LevelLabel, LevelLabel),
}

/// Anisotropies strictly inside `(lo, hi)` where two distinct level
/// functions intersect. The down-down level is the same function as up-up
/// and is reported through it.
pub fn level_crossings(j: f64, lo: f64, hi: f64) -> Result<Vec<LevelCrossing>> {
    if j == 0.0 || !j.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "level crossings need a finite nonzero coupling, got J = {j}"
        )));
    }
    if !(lo < hi) {
        return Err(Error::InvalidParameter(format!("empty range [{lo}, {hi}]")));
    }
    let distinct = [LevelLabel::UpUp, LevelLabel::Triplet0, LevelLabel::Singlet];
    let mut out = Vec::new();
    for (k, &a) in distinct.iter().enumerate() {
        for &b in &distinct[k + 1..] {
            let (oa, sa) = a.linear_form();
            let (ob, sb) = b.linear_form();
            if sa == sb {
                continue;
            }
            // J cancels: J(oa + sa Δ) = J(ob + sb Δ).
            let delta = (ob - oa) / (sa - sb);
            if lo < delta && delta < hi {
                out.push(LevelCrossing { delta, levels: (a, b) });
            }
        }
    }
    out.sort_by(|x, y| x.delta.total_cmp(&y.delta));
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSeries {
    pub axis: Vec<f64>,
    pub discord: Vec<f64>,
    pub eof: Vec<f64>,
    pub c_vectors: Vec<CVector>,
    pub branches: Vec<Axis>,
    pub sudden_change_points: Vec<f64>,
}

/// Correlations of one thermal state along the sweep.
#[derive(Debug, Clone, Copy)]
pub struct SweepPoint {
    pub c: CVector,
    pub discord: f64,
    pub eof: f64,
    pub branch: Axis,
}

pub fn evaluate_point(j: f64, t: f64, delta: f64, mode: ThermalMode) -> Result<SweepPoint> {
    let st = thermal_state(&ThermalParams { j, delta, t, mode })
        .map_err(|e| Error::InvalidParameter(format!("at Δ = {delta}: {e}")))?;
    let (c, _) = c_vector_of(&st.rho);
    let d = discord_bell_diagonal(&c)?;
    Ok(SweepPoint {
        c,
        discord: d.discord,
        eof: eof(&st.rho)?,
        branch: d.branch,
    })
}

/// Evenly spaced grid `lo, lo + step, …` up to `hi` (inclusive when `hi` lies
/// on the lattice up to rounding).
pub fn delta_grid(lo: f64, hi: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0) || !step.is_finite() {
        return Err(Error::InvalidParameter(format!("step must be positive, got {step}")));
    }
    if !(lo <= hi) {
        return Err(Error::InvalidParameter(format!("empty range [{lo}, {hi}]")));
    }
    let n = ((hi - lo) / step + 1e-9).floor() as usize + 1;
    Ok((0..n).map(|k| lo + k as f64 * step).collect())
}

/// Discord and EoF of thermal states along `grid`, plus the anisotropies
/// where the maximizing component of `|c|` switches.
///
/// Each switch between neighbouring grid points is refined by bisection on
/// `|c_a(Δ)| − |c_b(Δ)|` for the two branches involved and reported as the
/// midpoint of the final bracket.
pub fn sweep(j: f64, t: f64, grid: &[f64], mode: ThermalMode) -> Result<SweepSeries> {
    if grid.len() < 3 {
        return Err(Error::InvalidParameter(format!(
            "sweep grid needs at least 3 points, got {}",
            grid.len()
        )));
    }
    if grid.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::InvalidParameter("sweep grid must be strictly increasing".into()));
    }
    let points = grid
        .iter()
        .map(|&delta| evaluate_point(j, t, delta, mode))
        .collect::<Result<Vec<_>>>()?;

    let mut sudden = Vec::new();
    for k in 1..points.len() {
        let (a, b) = (points[k - 1].branch, points[k].branch);
        if a != b {
            sudden.push(refine_switch(j, t, mode, grid[k - 1], grid[k], a, b)?);
        }
    }

    Ok(SweepSeries {
        axis: grid.to_vec(),
        discord: points.iter().map(|p| p.discord).collect(),
        eof: points.iter().map(|p| p.eof).collect(),
        c_vectors: points.iter().map(|p| p.c).collect(),
        branches: points.iter().map(|p| p.branch).collect(),
        sudden_change_points: sudden,
    })
}

fn refine_switch(j: f64, t: f64, mode: ThermalMode, lo: f64, hi: f64, a: Axis, b: Axis) -> Result<f64> {
    let gap = |delta: f64| -> Result<f64> {
        let st = thermal_state(&ThermalParams { j, delta, t, mode })?;
        let (c, _) = c_vector_of(&st.rho);
        Ok(a.component(&c).abs() - b.component(&c).abs())
    };
    let (mut lo, mut hi) = (lo, hi);
    let (g_lo, g_hi) = (gap(lo)?, gap(hi)?);
    // A grid point can sit on the tie itself.
    if g_lo.abs() <= BRANCH_TIE_TOL {
        return Ok(lo);
    }
    if g_hi.abs() <= BRANCH_TIE_TOL || (g_lo > 0.0) == (g_hi > 0.0) {
        return Ok(if g_hi.abs() < g_lo.abs() { hi } else { lo });
    }
    for _ in 0..BISECTION_MAX_ITERS {
        if hi - lo <= BISECTION_WIDTH * lo.abs().max(hi.abs()).max(1.0) {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let g = gap(mid)?;
        if g == 0.0 {
            return Ok(mid);
        }
        if (g > 0.0) == (g_lo > 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Rough local Lipschitz constant of a series: the largest absolute slope
/// between neighbouring grid points.
pub fn local_lipschitz(axis: &[f64], values: &[f64]) -> f64 {
    axis.windows(2)
        .zip(values.windows(2))
        .map(|(x, y)| ((y[1] - y[0]) / (x[1] - x[0])).abs())
        .fold(0.0, f64::max)
}

/// Returns the branch at `delta` (helper for callers that re-evaluate
/// individual points).
pub fn branch_at(j: f64, t: f64, delta: f64, mode: ThermalMode) -> Result<Axis> {
    let st = thermal_state(&ThermalParams { j, delta, t, mode })?;
    Ok(max_branch(&c_vector_of(&st.rho).0).0)
}
