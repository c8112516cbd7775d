//! C ABI for qdiscord.
//!
//! Every function returns a [`QdStatus`]; on failure a message is available
//! from [`qd_last_error_message`] on the same thread. Objects are opaque
//! handles created by `*_new`/`*_run` functions and released with the
//! matching `*_free`. Panics never cross the boundary.

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use qdiscord::correlations::{
    concurrence, discord_bell_diagonal, discord_oracle, eof, mutual_information, von_neumann_entropy, OracleConfig,
};
use qdiscord::numerics::ComplexMatrix;
use qdiscord::states::{bell_diagonal, c_vector_of, thermal_state, CVector, DensityMatrix, ThermalMode, ThermalParams};
use qdiscord::xxzmodel::{delta_grid, sweep, SweepSeries};
use qdiscord::Error;

use num_complex::Complex64;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QdStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Unphysical = 3,
    NotHermitian = 4,
    NoConvergence = 5,
    Panic = 6,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QdThermalMode {
    Exact = 0,
    HighT = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QdCVector {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl From<QdCVector> for CVector {
    fn from(c: QdCVector) -> Self {
        CVector::new(c.x, c.y, c.z)
    }
}

impl From<CVector> for QdCVector {
    fn from(c: CVector) -> Self {
        QdCVector { x: c.x, y: c.y, z: c.z }
    }
}

/// A validated two-qubit density matrix.
pub struct QdDensityMatrix(DensityMatrix);

/// Result of a thermal sweep over Δ.
pub struct QdSweep(SweepSeries);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn clear_last_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

struct Failure(QdStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match e {
            Error::NotHermitian { .. } => QdStatus::NotHermitian,
            Error::NoConvergence { .. } => QdStatus::NoConvergence,
            Error::Unphysical(_) => QdStatus::Unphysical,
            _ => QdStatus::InvalidArgument,
        };
        Failure(status, e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(QdStatus::NullPointer, format!("{what} is null"))
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> QdStatus {
    clear_last_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => QdStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_last_error(&msg);
            status
        }
        Err(_) => {
            set_last_error("internal panic");
            QdStatus::Panic
        }
    }
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn write<T>(p: *mut T, value: T, what: &str) -> Result<(), Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    p.write(value);
    Ok(())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn qd_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failed call on this thread, or NULL. Valid until the
/// next call into the library on this thread.
#[no_mangle]
pub extern "C" fn qd_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Builds a density matrix from 16 real and 16 imaginary parts, row-major.
#[no_mangle]
pub unsafe extern "C" fn qd_density_matrix_new(
    re: *const f64,
    im: *const f64,
    out: *mut *mut QdDensityMatrix,
) -> QdStatus {
    guard(|| {
        if re.is_null() || im.is_null() {
            return Err(null("entry array"));
        }
        let re = std::slice::from_raw_parts(re, 16);
        let im = std::slice::from_raw_parts(im, 16);
        let data = re.iter().zip(im).map(|(&a, &b)| Complex64::new(a, b)).collect();
        let rho = DensityMatrix::new(ComplexMatrix::from_vec(4, data)?)?;
        write(out, Box::into_raw(Box::new(QdDensityMatrix(rho))), "out")
    })
}

#[no_mangle]
pub unsafe extern "C" fn qd_density_matrix_bell_diagonal(c: QdCVector, out: *mut *mut QdDensityMatrix) -> QdStatus {
    guard(|| {
        let rho = bell_diagonal(&c.into())?;
        write(out, Box::into_raw(Box::new(QdDensityMatrix(rho))), "out")
    })
}

/// Thermal state of the XXZ dimer.
#[no_mangle]
pub unsafe extern "C" fn qd_density_matrix_thermal(
    j: f64,
    delta: f64,
    t: f64,
    mode: QdThermalMode,
    out: *mut *mut QdDensityMatrix,
) -> QdStatus {
    guard(|| {
        let mode = match mode {
            QdThermalMode::Exact => ThermalMode::Exact,
            QdThermalMode::HighT => ThermalMode::HighT,
        };
        let st = thermal_state(&ThermalParams { j, delta, t, mode })?;
        write(out, Box::into_raw(Box::new(QdDensityMatrix(st.rho))), "out")
    })
}

#[no_mangle]
pub unsafe extern "C" fn qd_density_matrix_free(m: *mut QdDensityMatrix) {
    if !m.is_null() {
        drop(Box::from_raw(m));
    }
}

/// Copies the 16 entries, row-major, into `re` and `im`.
#[no_mangle]
pub unsafe extern "C" fn qd_density_matrix_entries(m: *const QdDensityMatrix, re: *mut f64, im: *mut f64) -> QdStatus {
    guard(|| {
        let m = deref(m, "matrix")?;
        if re.is_null() || im.is_null() {
            return Err(null("output array"));
        }
        for (k, z) in m.0.matrix().as_slice().iter().enumerate() {
            re.add(k).write(z.re);
            im.add(k).write(z.im);
        }
        Ok(())
    })
}

/// Correlation vector and the norm of the non-Bell-diagonal remainder
/// (`residual` may be NULL).
#[no_mangle]
pub unsafe extern "C" fn qd_density_matrix_c_vector(
    m: *const QdDensityMatrix,
    out: *mut QdCVector,
    residual: *mut f64,
) -> QdStatus {
    guard(|| {
        let (c, r) = c_vector_of(&deref(m, "matrix")?.0);
        write(out, c.into(), "out")?;
        if !residual.is_null() {
            residual.write(r);
        }
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn qd_discord_bell_diagonal(c: QdCVector, out: *mut f64) -> QdStatus {
    guard(|| write(out, discord_bell_diagonal(&c.into())?.discord, "out"))
}

/// Discord by numerical optimization over projective measurements on qubit 2.
#[no_mangle]
pub unsafe extern "C" fn qd_discord_oracle(m: *const QdDensityMatrix, out: *mut f64) -> QdStatus {
    guard(|| {
        let r = discord_oracle(&deref(m, "matrix")?.0, &OracleConfig::default())?;
        write(out, r.discord, "out")
    })
}

#[no_mangle]
pub unsafe extern "C" fn qd_concurrence(m: *const QdDensityMatrix, out: *mut f64) -> QdStatus {
    guard(|| write(out, concurrence(&deref(m, "matrix")?.0)?, "out"))
}

#[no_mangle]
pub unsafe extern "C" fn qd_entanglement_of_formation(m: *const QdDensityMatrix, out: *mut f64) -> QdStatus {
    guard(|| write(out, eof(&deref(m, "matrix")?.0)?, "out"))
}

#[no_mangle]
pub unsafe extern "C" fn qd_mutual_information(m: *const QdDensityMatrix, out: *mut f64) -> QdStatus {
    guard(|| write(out, mutual_information(&deref(m, "matrix")?.0)?, "out"))
}

#[no_mangle]
pub unsafe extern "C" fn qd_von_neumann_entropy(m: *const QdDensityMatrix, out: *mut f64) -> QdStatus {
    guard(|| write(out, von_neumann_entropy(deref(m, "matrix")?.0.matrix())?, "out"))
}

/// Thermal sweep over `delta_min, delta_min + step, …, delta_max`.
#[no_mangle]
pub unsafe extern "C" fn qd_sweep_run(
    j: f64,
    t: f64,
    delta_min: f64,
    delta_max: f64,
    step: f64,
    mode: QdThermalMode,
    out: *mut *mut QdSweep,
) -> QdStatus {
    guard(|| {
        let mode = match mode {
            QdThermalMode::Exact => ThermalMode::Exact,
            QdThermalMode::HighT => ThermalMode::HighT,
        };
        let grid = delta_grid(delta_min, delta_max, step)?;
        let s = sweep(j, t, &grid, mode)?;
        write(out, Box::into_raw(Box::new(QdSweep(s))), "out")
    })
}

#[no_mangle]
pub unsafe extern "C" fn qd_sweep_free(s: *mut QdSweep) {
    if !s.is_null() {
        drop(Box::from_raw(s));
    }
}

/// Number of grid points; 0 for a NULL handle.
#[no_mangle]
pub unsafe extern "C" fn qd_sweep_len(s: *const QdSweep) -> usize {
    s.as_ref().map_or(0, |s| s.0.axis.len())
}

/// Grid point `k`. Any output pointer may be NULL.
#[no_mangle]
pub unsafe extern "C" fn qd_sweep_point(
    s: *const QdSweep,
    k: usize,
    delta: *mut f64,
    c: *mut QdCVector,
    discord: *mut f64,
    eof_out: *mut f64,
) -> QdStatus {
    guard(|| {
        let s = &deref(s, "sweep")?.0;
        if k >= s.axis.len() {
            return Err(Failure(
                QdStatus::InvalidArgument,
                format!("index {k} out of range for {} points", s.axis.len()),
            ));
        }
        if !delta.is_null() {
            delta.write(s.axis[k]);
        }
        if !c.is_null() {
            c.write(s.c_vectors[k].into());
        }
        if !discord.is_null() {
            discord.write(s.discord[k]);
        }
        if !eof_out.is_null() {
            eof_out.write(s.eof[k]);
        }
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn qd_sweep_sudden_change_count(s: *const QdSweep) -> usize {
    s.as_ref().map_or(0, |s| s.0.sudden_change_points.len())
}

#[no_mangle]
pub unsafe extern "C" fn qd_sweep_sudden_change(s: *const QdSweep, k: usize, out: *mut f64) -> QdStatus {
    guard(|| {
        let points = &deref(s, "sweep")?.0.sudden_change_points;
        let v = *points.get(k).ok_or_else(|| {
            Failure(
                QdStatus::InvalidArgument,
                format!("index {k} out of range for {} points", points.len()),
            )
        })?;
        write(out, v, "out")
    })
}
