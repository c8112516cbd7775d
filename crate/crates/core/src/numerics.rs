//! Dense complex linear algebra for the small matrices that appear in
//! two-qubit problems.
//!
//! Everything here works on [`ComplexMatrix`], a square row-major matrix of
//! `Complex64`. Hermitian eigenproblems are solved with cyclic complex Jacobi
//! rotations, which is robust and exact enough at dimension 8 and below.

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Largest dimension accepted by [`eig_hermitian`].
pub const EIG_DIM_CAP: usize = 8;
/// Largest dimension [`kron`] will produce.
pub const KRON_DIM_CAP: usize = 16;
/// Entrywise Hermiticity tolerance, relative to `max(1, max |m_ij|)`.
pub const HERMITIAN_TOL: f64 = 1e-10;

const JACOBI_MAX_SWEEPS: usize = 100;
const JACOBI_OFF_TOL: f64 = 1e-14;

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);
pub const I: Complex64 = Complex64::new(0.0, 1.0);

/// Square complex matrix stored row-major.
#[derive(Clone, PartialEq)]
pub struct ComplexMatrix {
    dim: usize,
    data: Vec<Complex64>,
}

impl ComplexMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![ZERO; dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m[(i, i)] = ONE;
        }
        m
    }

    /// Builds a matrix from row-major entries. Fails unless `data.len()` is a
    /// perfect square.
    pub fn from_vec(dim: usize, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != dim * dim {
            return Err(Error::BadDimension {
                expected: dim * dim,
                found: data.len(),
            });
        }
        Ok(Self { dim, data })
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = Complex64::new(d, 0.0);
        }
        m
    }

    /// Builds a matrix from nested rows of `(re, im)` pairs.
    pub fn from_rows(rows: &[&[(f64, f64)]]) -> Result<Self> {
        let dim = rows.len();
        let mut data = Vec::with_capacity(dim * dim);
        for row in rows {
            if row.len() != dim {
                return Err(Error::BadDimension {
                    expected: dim,
                    found: row.len(),
                });
            }
            data.extend(row.iter().map(|&(re, im)| Complex64::new(re, im)));
        }
        Ok(Self { dim, data })
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn adjoint(&self) -> Self {
        let n = self.dim;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                out[(j, i)] = self[(i, j)].conj();
            }
        }
        out
    }

    /// Entrywise complex conjugate (not the adjoint).
    pub fn conj(&self) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().map(|z| z.conj()).collect(),
        }
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().map(|z| z * s).collect(),
        }
    }

    pub fn scale_complex(&self, s: Complex64) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().map(|z| z * s).collect(),
        }
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.dim).map(|i| self[(i, i)]).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn diagonal_real(&self) -> Vec<f64> {
        (0..self.dim).map(|i| self[(i, i)].re).collect()
    }

    /// Largest entrywise deviation `|m_ij - conj(m_ji)|` and where it occurs.
    pub fn hermiticity_defect(&self) -> (f64, usize, usize) {
        let n = self.dim;
        let mut worst = (0.0, 0, 0);
        for i in 0..n {
            for j in i..n {
                let d = (self[(i, j)] - self[(j, i)].conj()).norm();
                if d > worst.0 {
                    worst = (d, i, j);
                }
            }
        }
        worst
    }

    /// Checks Hermiticity within `tol * max(1, max |m_ij|)` entrywise.
    pub fn check_hermitian(&self, tol: f64) -> Result<()> {
        let (dev, row, col) = self.hermiticity_defect();
        if dev > tol * self.max_abs().max(1.0) {
            return Err(Error::NotHermitian {
                row,
                col,
                deviation: dev,
            });
        }
        Ok(())
    }

    /// `(M + M^†) / 2`.
    pub fn hermitian_part(&self) -> Self {
        (self + &self.adjoint()).scale(0.5)
    }

    pub fn commutator(&self, other: &Self) -> Self {
        &(self * other) - &(other * self)
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = Complex64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.data[i * self.dim + j]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.data[i * self.dim + j]
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.dim, rhs.dim, "dimension mismatch in matrix product");
        let n = self.dim;
        let mut out = ComplexMatrix::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self[(i, k)];
                if a == ZERO {
                    continue;
                }
                for j in 0..n {
                    out.data[i * n + j] += a * rhs.data[k * n + j];
                }
            }
        }
        out
    }
}

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.dim, rhs.dim, "dimension mismatch in matrix sum");
        ComplexMatrix {
            dim: self.dim,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn sub(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.dim, rhs.dim, "dimension mismatch in matrix difference");
        ComplexMatrix {
            dim: self.dim,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix({}x{}) [", self.dim, self.dim)?;
        for i in 0..self.dim {
            write!(f, "  ")?;
            for j in 0..self.dim {
                let z = self[(i, j)];
                write!(f, "{:+.6e}{:+.6e}i  ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

pub fn pauli_x() -> ComplexMatrix {
    ComplexMatrix::from_vec(2, vec![ZERO, ONE, ONE, ZERO]).unwrap()
}

pub fn pauli_y() -> ComplexMatrix {
    ComplexMatrix::from_vec(2, vec![ZERO, -I, I, ZERO]).unwrap()
}

pub fn pauli_z() -> ComplexMatrix {
    ComplexMatrix::from_real_diagonal(&[1.0, -1.0])
}

/// The three Pauli matrices in x, y, z order.
pub fn paulis() -> [ComplexMatrix; 3] {
    [pauli_x(), pauli_y(), pauli_z()]
}

/// Tensor product `a ⊗ b`.
pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<ComplexMatrix> {
    let (na, nb) = (a.dim, b.dim);
    let n = na * nb;
    if n > KRON_DIM_CAP {
        return Err(Error::DimensionOverflow {
            dim: n,
            cap: KRON_DIM_CAP,
        });
    }
    let mut out = ComplexMatrix::zeros(n);
    for i in 0..na {
        for j in 0..na {
            let aij = a[(i, j)];
            for k in 0..nb {
                for l in 0..nb {
                    out[(i * nb + k, j * nb + l)] = aij * b[(k, l)];
                }
            }
        }
    }
    Ok(out)
}

/// Which qubit of a two-qubit register. Qubit 1 is the most significant
/// index bit, so basis index `2 * a + b` is `|a⟩ ⊗ |b⟩`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum Qubit {
    First,
    Second,
}

impl Qubit {
    pub fn from_index(k: usize) -> Result<Self> {
        match k {
            1 => Ok(Qubit::First),
            2 => Ok(Qubit::Second),
            _ => Err(Error::InvalidParameter(format!("qubit index must be 1 or 2, got {k}"))),
        }
    }

    pub fn other(self) -> Self {
        match self {
            Qubit::First => Qubit::Second,
            Qubit::Second => Qubit::First,
        }
    }
}

/// Reduced state of the qubit `keep`, tracing out the other one.
pub fn partial_trace(rho: &ComplexMatrix, keep: Qubit) -> Result<ComplexMatrix> {
    if rho.dim != 4 {
        return Err(Error::BadDimension {
            expected: 4,
            found: rho.dim,
        });
    }
    let mut out = ComplexMatrix::zeros(2);
    for a in 0..2 {
        for a2 in 0..2 {
            let mut acc = ZERO;
            for b in 0..2 {
                acc += match keep {
                    Qubit::First => rho[(2 * a + b, 2 * a2 + b)],
                    Qubit::Second => rho[(2 * b + a, 2 * b + a2)],
                };
            }
            out[(a, a2)] = acc;
        }
    }
    Ok(out)
}

/// Spectral decomposition `M = V diag(values) V^†` of a Hermitian matrix.
#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    /// Ascending.
    pub values: Vec<f64>,
    /// Orthonormal eigenvectors stored as columns, in the order of `values`.
    pub vectors: ComplexMatrix,
}

impl EigenDecomposition {
    pub fn dim(&self) -> usize {
        self.values.len()
    }

    /// Column `k` of `vectors`.
    pub fn vector(&self, k: usize) -> Vec<Complex64> {
        (0..self.dim()).map(|i| self.vectors[(i, k)]).collect()
    }

    /// `V diag(f(λ)) V^†`.
    pub fn map_values(&self, f: impl Fn(f64) -> f64) -> ComplexMatrix {
        let n = self.dim();
        let mut out = ComplexMatrix::zeros(n);
        for (k, &lam) in self.values.iter().enumerate() {
            let w = f(lam);
            if w == 0.0 {
                continue;
            }
            for i in 0..n {
                let vik = self.vectors[(i, k)] * w;
                for j in 0..n {
                    out[(i, j)] += vik * self.vectors[(j, k)].conj();
                }
            }
        }
        out
    }

    pub fn reconstruct(&self) -> ComplexMatrix {
        self.map_values(|x| x)
    }
}

/// Hermitian eigendecomposition by cyclic complex Jacobi rotations.
///
/// Eigenvalues come back ascending. Within (numerically) degenerate clusters
/// the eigenvectors are re-orthonormalized by Gram–Schmidt, and every column is
/// phase-fixed so its largest component is real and positive, which makes the
/// output deterministic.
pub fn eig_hermitian(m: &ComplexMatrix) -> Result<EigenDecomposition> {
    let n = m.dim;
    if n > EIG_DIM_CAP {
        return Err(Error::DimensionOverflow {
            dim: n,
            cap: EIG_DIM_CAP,
        });
    }
    m.check_hermitian(HERMITIAN_TOL)?;

    let mut a = m.hermitian_part();
    for i in 0..n {
        a[(i, i)].im = 0.0;
    }
    let mut v = ComplexMatrix::identity(n);

    let scale = a.frobenius_norm();
    if scale > 0.0 {
        let off_tol = JACOBI_OFF_TOL * scale;
        let negligible = 1e-2 * f64::EPSILON * scale;
        let mut converged = false;
        let mut off = off_norm(&a);
        for _ in 0..JACOBI_MAX_SWEEPS {
            if off <= off_tol {
                converged = true;
                break;
            }
            for p in 0..n {
                for q in (p + 1)..n {
                    jacobi_rotate(&mut a, &mut v, p, q, negligible);
                }
            }
            off = off_norm(&a);
        }
        if !converged && off > off_tol {
            return Err(Error::NoConvergence {
                sweeps: JACOBI_MAX_SWEEPS,
                off_norm: off,
            });
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    let diag = a.diagonal_real();
    order.sort_by(|&i, &j| diag[i].total_cmp(&diag[j]).then(i.cmp(&j)));
    let values: Vec<f64> = order.iter().map(|&k| diag[k]).collect();
    let mut vectors = ComplexMatrix::zeros(n);
    for (new, &old) in order.iter().enumerate() {
        for i in 0..n {
            vectors[(i, new)] = v[(i, old)];
        }
    }

    let span = values.iter().fold(1.0_f64, |acc, x| acc.max(x.abs()));
    let degenerate_tol = 1e-10 * span;
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && values[end] - values[end - 1] <= degenerate_tol {
            end += 1;
        }
        gram_schmidt_columns(&mut vectors, start, end);
        start = end;
    }
    for k in 0..n {
        fix_column_phase(&mut vectors, k);
    }

    Ok(EigenDecomposition { values, vectors })
}

fn off_norm(a: &ComplexMatrix) -> f64 {
    let n = a.dim;
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s += a[(i, j)].norm_sqr();
            }
        }
    }
    s.sqrt()
}

/// Zeroes `a[p][q]` with the unitary `R = diag(1, conj(u)) G`, where `u` is
/// the phase of `a[p][q]` and `G` the real Jacobi rotation of the resulting
/// real symmetric 2×2 block.
fn jacobi_rotate(a: &mut ComplexMatrix, v: &mut ComplexMatrix, p: usize, q: usize, negligible: f64) {
    let n = a.dim;
    let apq = a[(p, q)];
    let mag = apq.norm();
    if mag == 0.0 {
        return;
    }
    if mag < negligible {
        a[(p, q)] = ZERO;
        a[(q, p)] = ZERO;
        return;
    }
    let u = apq / mag;
    let app = a[(p, p)].re;
    let aqq = a[(q, q)].re;
    let theta = (aqq - app) / (2.0 * mag);
    let t = if theta.abs() > 1e150 {
        0.5 / theta
    } else {
        let sgn = if theta >= 0.0 { 1.0 } else { -1.0 };
        sgn / (theta.abs() + (theta * theta + 1.0).sqrt())
    };
    let c = 1.0 / (1.0 + t * t).sqrt();
    let s = t * c;

    let r_pp = Complex64::new(c, 0.0);
    let r_pq = Complex64::new(s, 0.0);
    let r_qp = -u.conj() * s;
    let r_qq = u.conj() * c;

    for k in 0..n {
        let akp = a[(k, p)];
        let akq = a[(k, q)];
        a[(k, p)] = akp * r_pp + akq * r_qp;
        a[(k, q)] = akp * r_pq + akq * r_qq;
    }
    for k in 0..n {
        let apk = a[(p, k)];
        let aqk = a[(q, k)];
        a[(p, k)] = r_pp.conj() * apk + r_qp.conj() * aqk;
        a[(q, k)] = r_pq.conj() * apk + r_qq.conj() * aqk;
    }
    a[(p, q)] = ZERO;
    a[(q, p)] = ZERO;
    a[(p, p)].im = 0.0;
    a[(q, q)].im = 0.0;

    for k in 0..n {
        let vkp = v[(k, p)];
        let vkq = v[(k, q)];
        v[(k, p)] = vkp * r_pp + vkq * r_qp;
        v[(k, q)] = vkp * r_pq + vkq * r_qq;
    }
}

fn gram_schmidt_columns(v: &mut ComplexMatrix, start: usize, end: usize) {
    let n = v.dim;
    for k in start..end {
        for prev in start..k {
            let mut overlap = ZERO;
            for i in 0..n {
                overlap += v[(i, prev)].conj() * v[(i, k)];
            }
            for i in 0..n {
                let sub = overlap * v[(i, prev)];
                v[(i, k)] -= sub;
            }
        }
        let norm = (0..n).map(|i| v[(i, k)].norm_sqr()).sum::<f64>().sqrt();
        if norm > 0.0 {
            for i in 0..n {
                v[(i, k)] /= norm;
            }
        }
    }
}

fn fix_column_phase(v: &mut ComplexMatrix, k: usize) {
    let n = v.dim;
    let mut best = 0;
    let mut best_mag = -1.0;
    for i in 0..n {
        // Ties resolved towards the lowest row so the choice is reproducible.
        let mag = v[(i, k)].norm();
        if mag > best_mag * (1.0 + 1e-12) {
            best = i;
            best_mag = mag;
        }
    }
    if best_mag <= 0.0 {
        return;
    }
    let phase = v[(best, k)].conj() / best_mag;
    for i in 0..n {
        v[(i, k)] *= phase;
    }
    v[(best, k)].im = 0.0;
}

/// `exp(scale * M)` for Hermitian `M`, via its eigendecomposition.
pub fn matrix_exp_hermitian(m: &ComplexMatrix, scale: f64) -> Result<ComplexMatrix> {
    let eig = eig_hermitian(m)?;
    Ok(eig.map_values(|x| (scale * x).exp()))
}

/// Solves `A x = b` for real symmetric positive-definite `A`.
pub(crate) fn solve_symmetric(a: &[Vec<f64>], b: &[f64]) -> Result<Vec<f64>> {
    let n = b.len();
    let mut m = ComplexMatrix::zeros(n);
    for i in 0..n {
        for j in 0..n {
            m[(i, j)] = Complex64::new(a[i][j], 0.0);
        }
    }
    let eig = eig_hermitian(&m)?;
    let smallest = eig.values.iter().fold(f64::INFINITY, |acc, x| acc.min(x.abs()));
    if smallest <= 1e-14 * eig.values.iter().fold(0.0_f64, |acc, x| acc.max(x.abs())) {
        return Err(Error::InvalidParameter("singular linear system".into()));
    }
    let inv = eig.map_values(|x| 1.0 / x);
    Ok((0..n).map(|i| (0..n).map(|j| inv[(i, j)].re * b[j]).sum()).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_xoshiro::Xoshiro256PlusPlus;

    fn random_hermitian(rng: &mut impl Rng, n: usize) -> ComplexMatrix {
        let mut m = ComplexMatrix::zeros(n);
        for i in 0..n {
            m[(i, i)] = Complex64::new(rng.random_range(-1.0..1.0), 0.0);
            for j in (i + 1)..n {
                let z = Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
                m[(i, j)] = z;
                m[(j, i)] = z.conj();
            }
        }
        m
    }

    fn xxz(j: f64, delta: f64) -> ComplexMatrix {
        let [x, y, z] = paulis();
        let xx = kron(&x, &x).unwrap();
        let yy = kron(&y, &y).unwrap();
        let zz = kron(&z, &z).unwrap();
        (&(&xx + &yy) + &zz.scale(delta)).scale(j / 4.0)
    }

    #[test]
    fn identity_spectrum() {
        let e = eig_hermitian(&ComplexMatrix::identity(4)).unwrap();
        assert_eq!(e.values, vec![1.0; 4]);
    }

    #[test]
    fn pauli_x_spectrum() {
        let e = eig_hermitian(&pauli_x()).unwrap();
        assert!((e.values[0] + 1.0).abs() < 1e-15);
        assert!((e.values[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn xxz_spectrum_by_hand() {
        let e = eig_hermitian(&xxz(1.0, 0.5)).unwrap();
        let expected = [-0.625, 0.125, 0.125, 0.375];
        for (got, want) in e.values.iter().zip(expected) {
            assert!((got - want).abs() < 1e-14, "{got} vs {want}");
        }
    }

    #[test]
    fn real_diagonal_is_exact() {
        let diag = [0.3, -2.5, 7.0, 0.3, 1e-9];
        let e = eig_hermitian(&ComplexMatrix::from_real_diagonal(&diag)).unwrap();
        let mut sorted = diag.to_vec();
        sorted.sort_by(f64::total_cmp);
        for (got, want) in e.values.iter().zip(&sorted) {
            assert!((got - want).abs() <= 1e-14);
        }
    }

    #[test]
    fn random_hermitian_reconstruction_and_orthonormality() {
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(7);
        for trial in 0..1000 {
            let n = if trial % 5 == 0 { 2 } else { 4 };
            let m = random_hermitian(&mut rng, n);
            let e = eig_hermitian(&m).unwrap();
            assert!(e.values.windows(2).all(|w| w[0] <= w[1]));
            let err = (&e.reconstruct() - &m).frobenius_norm();
            assert!(err < 1e-10, "trial {trial}: reconstruction error {err:e}");
            let gram = &e.vectors.adjoint() * &e.vectors;
            let dev = (&gram - &ComplexMatrix::identity(n)).max_abs();
            assert!(dev < 1e-12, "trial {trial}: orthonormality defect {dev:e}");
        }
    }

    #[test]
    fn degenerate_subspace_stays_orthonormal() {
        // Rank-one perturbation of the identity: three-fold degeneracy.
        let v = [
            Complex64::new(0.5, 0.1),
            Complex64::new(-0.3, 0.4),
            Complex64::new(0.2, -0.6),
            Complex64::new(0.1, 0.2),
        ];
        let mut m = ComplexMatrix::identity(4);
        for i in 0..4 {
            for j in 0..4 {
                m[(i, j)] += v[i] * v[j].conj();
            }
        }
        let e = eig_hermitian(&m).unwrap();
        let gram = &e.vectors.adjoint() * &e.vectors;
        assert!((&gram - &ComplexMatrix::identity(4)).max_abs() < 1e-12);
        assert!((e.values[0] - 1.0).abs() < 1e-12 && (e.values[2] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_non_hermitian_and_oversized() {
        let mut m = ComplexMatrix::identity(2);
        m[(0, 1)] = Complex64::new(1.0, 0.0);
        assert!(matches!(eig_hermitian(&m), Err(Error::NotHermitian { .. })));
        assert!(matches!(
            eig_hermitian(&ComplexMatrix::identity(9)),
            Err(Error::DimensionOverflow { dim: 9, cap: 8 })
        ));
    }

    #[test]
    fn deterministic_output() {
        let m = xxz(1.3, -0.7);
        let a = eig_hermitian(&m).unwrap();
        let b = eig_hermitian(&m).unwrap();
        assert_eq!(a.values, b.values);
        assert_eq!(a.vectors, b.vectors);
    }

    #[test]
    fn exp_of_zero_is_identity() {
        let e = matrix_exp_hermitian(&ComplexMatrix::zeros(4), 3.7).unwrap();
        assert!((&e - &ComplexMatrix::identity(4)).max_abs() < 1e-15);
    }

    #[test]
    fn exp_of_diagonal() {
        let m = ComplexMatrix::from_real_diagonal(&[1.0, -1.0]);
        let e = matrix_exp_hermitian(&m, std::f64::consts::LN_2).unwrap();
        assert!((e[(0, 0)].re - 2.0).abs() < 1e-14);
        assert!((e[(1, 1)].re - 0.5).abs() < 1e-14);
        assert!(e[(0, 1)].norm() < 1e-15);
    }

    #[test]
    fn exp_of_isotropic_xxz() {
        let h = xxz(1.0, 1.0);
        let e = matrix_exp_hermitian(&h, -1.0).unwrap();
        let spec = eig_hermitian(&e).unwrap();
        let mut expected: Vec<f64> = [0.25, 0.25, 0.25, -0.75].iter().map(|x: &f64| (-x).exp()).collect();
        expected.sort_by(f64::total_cmp);
        for (got, want) in spec.values.iter().zip(&expected) {
            assert!((got - want).abs() < 1e-13);
        }
    }

    #[test]
    fn exp_commutes_with_argument() {
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(11);
        for _ in 0..200 {
            let m = random_hermitian(&mut rng, 4);
            let s = rng.random_range(-2.0..2.0);
            let e = matrix_exp_hermitian(&m, s).unwrap();
            assert!(m.commutator(&e).frobenius_norm() < 1e-10);
        }
    }

    #[test]
    fn kron_products() {
        let i2 = ComplexMatrix::identity(2);
        assert_eq!(kron(&i2, &i2).unwrap(), ComplexMatrix::identity(4));
        let zz = kron(&pauli_z(), &pauli_z()).unwrap();
        assert_eq!(zz, ComplexMatrix::from_real_diagonal(&[1.0, -1.0, -1.0, 1.0]));

        // σx ⊗ σy = [[0, σy], [σy, 0]]
        let xy = kron(&pauli_x(), &pauli_y()).unwrap();
        let mut want = ComplexMatrix::zeros(4);
        want[(0, 3)] = -I;
        want[(1, 2)] = I;
        want[(2, 1)] = -I;
        want[(3, 0)] = I;
        assert_eq!(xy, want);
    }

    #[test]
    fn kron_cap() {
        let big = ComplexMatrix::identity(8);
        assert!(matches!(
            kron(&big, &ComplexMatrix::identity(4)),
            Err(Error::DimensionOverflow { dim: 32, cap: 16 })
        ));
        assert_eq!(kron(&big, &ComplexMatrix::identity(2)).unwrap().dim(), 16);
    }

    #[test]
    fn partial_trace_of_product() {
        let a = ComplexMatrix::from_rows(&[&[(0.7, 0.0), (0.1, -0.2)], &[(0.1, 0.2), (0.3, 0.0)]]).unwrap();
        let b = ComplexMatrix::from_rows(&[&[(0.4, 0.0), (0.0, 0.3)], &[(0.0, -0.3), (0.6, 0.0)]]).unwrap();
        let ab = kron(&a, &b).unwrap();
        assert!((&partial_trace(&ab, Qubit::First).unwrap() - &a).max_abs() < 1e-15);
        assert!((&partial_trace(&ab, Qubit::Second).unwrap() - &b).max_abs() < 1e-15);
    }

    #[test]
    fn partial_trace_of_maximally_mixed() {
        let rho = ComplexMatrix::identity(4).scale(0.25);
        let r = partial_trace(&rho, Qubit::First).unwrap();
        assert!((&r - &ComplexMatrix::identity(2).scale(0.5)).max_abs() < 1e-15);
    }

    #[test]
    fn partial_trace_needs_two_qubits() {
        assert!(matches!(
            partial_trace(&ComplexMatrix::identity(2), Qubit::First),
            Err(Error::BadDimension { expected: 4, found: 2 })
        ));
    }

    #[test]
    fn solve_small_system() {
        let a = vec![vec![4.0, 1.0], vec![1.0, 3.0]];
        let x = solve_symmetric(&a, &[1.0, 2.0]).unwrap();
        assert!((x[0] - 1.0 / 11.0).abs() < 1e-14);
        assert!((x[1] - 7.0 / 11.0).abs() < 1e-14);
    }

    proptest::proptest! {
        #[test]
        fn partial_trace_preserves_trace(entries in proptest::collection::vec(-1.0f64..1.0, 32)) {
            let data = entries.chunks(2).map(|c| Complex64::new(c[0], c[1])).collect();
            let m = ComplexMatrix::from_vec(4, data).unwrap();
            for keep in [Qubit::First, Qubit::Second] {
                let r = partial_trace(&m, keep).unwrap();
                proptest::prop_assert!((r.trace() - m.trace()).norm() < 1e-12);
            }
        }
    }
}
