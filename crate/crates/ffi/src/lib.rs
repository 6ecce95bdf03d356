//! C interface to the forward model: operator, Dirichlet solve, exterior
//! data and the Gaussian log-likelihood.
//!
//! Every entry point returns an [`FcStatus`]. On failure the message is kept
//! per thread and can be read with [`fc_last_error_message`]. Panics never
//! cross the boundary; they are reported as [`FcStatus::Panic`].

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use fraccal::error::Error;
use fraccal::forward::{ForwardModel, Potential};
use fraccal::grid::{GridSpec, PhiBump, RegionSpec};
use fraccal::observation::{log_likelihood, predict, MeasurementSet};

/// Status code returned by every fallible function.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FcStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    DimensionMismatch = 3,
    SolverFailure = 4,
    Panic = 5,
}

/// Opaque handle to a forward model with the default regions and exterior
/// datum. Create with [`fc_model_new`], release with [`fc_model_free`].
pub struct FcModel {
    model: ForwardModel,
}

struct Failure {
    status: FcStatus,
    message: String,
}

impl Failure {
    fn new(status: FcStatus, message: impl Into<String>) -> Self {
        Self { status, message: message.into() }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match e {
            Error::DimensionMismatch { .. } => FcStatus::DimensionMismatch,
            Error::Factorization { .. } | Error::Residual { .. } | Error::Chain { .. } => FcStatus::SolverFailure,
            _ => FcStatus::InvalidArgument,
        };
        Self::new(status, e.to_string())
    }
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(message: &str) {
    let c = CString::new(message.replace('\0', " ")).expect("interior NULs were removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn guard(body: impl FnOnce() -> Result<(), Failure>) -> FcStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => FcStatus::Ok,
        Ok(Err(f)) => {
            set_last_error(&f.message);
            f.status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_last_error(&format!("panic: {msg}"));
            FcStatus::Panic
        }
    }
}

unsafe fn model_ref<'a>(model: *const FcModel) -> Result<&'a ForwardModel, Failure> {
    model.as_ref().map(|m| &m.model).ok_or_else(|| Failure::new(FcStatus::NullPointer, "model handle is null"))
}

unsafe fn input<'a>(ptr: *const f64, len: usize, name: &str) -> Result<&'a [f64], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if ptr.is_null() {
        return Err(Failure::new(FcStatus::NullPointer, format!("{name} is null")));
    }
    Ok(std::slice::from_raw_parts(ptr, len))
}

unsafe fn output<'a>(ptr: *mut f64, len: usize, name: &str) -> Result<&'a mut [f64], Failure> {
    if len == 0 {
        return Ok(&mut []);
    }
    if ptr.is_null() {
        return Err(Failure::new(FcStatus::NullPointer, format!("{name} is null")));
    }
    Ok(std::slice::from_raw_parts_mut(ptr, len))
}

fn expect_len(name: &str, expected: usize, got: usize) -> Result<(), Failure> {
    if expected == got {
        Ok(())
    } else {
        Err(Failure::new(FcStatus::DimensionMismatch, format!("{name}: expected length {expected}, got {got}")))
    }
}

fn potential(model: &ForwardModel, f: &[f64]) -> Result<Potential, Failure> {
    expect_len("f", model.omega_len(), f.len())?;
    Ok(Potential::new(f.to_vec())?)
}

/// Builds a model on `[-ell, ell]` with `K = 6m` cells and order `s`.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn fc_model_new(ell: f64, m: usize, s: f64, out: *mut *mut FcModel) -> FcStatus {
    guard(|| {
        if out.is_null() {
            return Err(Failure::new(FcStatus::NullPointer, "out is null"));
        }
        let grid = GridSpec::new(ell, m, s)?;
        let model = ForwardModel::new(&grid, &RegionSpec::default(), &PhiBump::default())?;
        *out = Box::into_raw(Box::new(FcModel { model }));
        Ok(())
    })
}

/// Releases a handle. Null is ignored.
///
/// # Safety
/// `model` must come from [`fc_model_new`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn fc_model_free(model: *mut FcModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Interior node count `K - 1`, number of `Omega` nodes and number of
/// measurement nodes.
///
/// # Safety
/// `model` must be a live handle; the out pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn fc_model_dims(
    model: *const FcModel,
    interior: *mut usize,
    omega: *mut usize,
    measurement: *mut usize,
) -> FcStatus {
    guard(|| {
        let m = model_ref(model)?;
        if interior.is_null() || omega.is_null() || measurement.is_null() {
            return Err(Failure::new(FcStatus::NullPointer, "dimension output is null"));
        }
        *interior = m.grid().interior_len();
        *omega = m.omega_len();
        *measurement = m.regions().measurement.len();
        Ok(())
    })
}

/// Coordinates of the `Omega` nodes, the layout expected for potentials.
///
/// # Safety
/// `out` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn fc_model_omega_coords(model: *const FcModel, out: *mut f64, len: usize) -> FcStatus {
    guard(|| {
        let m = model_ref(model)?;
        expect_len("out", m.omega_len(), len)?;
        let out = output(out, len, "out")?;
        for (o, &i) in out.iter_mut().zip(&m.regions().omega) {
            *o = m.grid().x(i);
        }
        Ok(())
    })
}

/// Solves the Dirichlet problem for the potential `f` on the `Omega` nodes.
/// Writes `u` on `Omega` (`u_len` = omega count) and `(-Δ)^s u` on the
/// measurement nodes (`dn_len` = measurement count).
///
/// # Safety
/// Pointers must reference arrays of the stated lengths.
#[no_mangle]
pub unsafe extern "C" fn fc_model_solve(
    model: *const FcModel,
    f: *const f64,
    f_len: usize,
    u_out: *mut f64,
    u_len: usize,
    dn_out: *mut f64,
    dn_len: usize,
) -> FcStatus {
    guard(|| {
        let m = model_ref(model)?;
        let f = potential(m, input(f, f_len, "f")?)?;
        expect_len("u_out", m.omega_len(), u_len)?;
        expect_len("dn_out", m.regions().measurement.len(), dn_len)?;
        let u_out = output(u_out, u_len, "u_out")?;
        let dn_out = output(dn_out, dn_len, "dn_out")?;
        let sol = m.solve(&f)?;
        for (o, &i) in u_out.iter_mut().zip(&m.regions().omega) {
            *o = sol.u.at(i);
        }
        dn_out.copy_from_slice(&sol.dn);
        Ok(())
    })
}

/// Copies the Toeplitz symbol `a_0..a_{K-2}` (length `K - 1`).
///
/// # Safety
/// `out` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn fc_operator_symbol(model: *const FcModel, out: *mut f64, len: usize) -> FcStatus {
    guard(|| {
        let m = model_ref(model)?;
        let symbol = m.operator().symbol();
        expect_len("out", symbol.len(), len)?;
        output(out, len, "out")?.copy_from_slice(symbol);
        Ok(())
    })
}

/// `out = A v` on the interior nodes (both of length `K - 1`).
///
/// # Safety
/// `v` and `out` must hold `len` doubles and may not overlap.
#[no_mangle]
pub unsafe extern "C" fn fc_operator_apply(model: *const FcModel, v: *const f64, out: *mut f64, len: usize) -> FcStatus {
    guard(|| {
        let m = model_ref(model)?;
        expect_len("v", m.grid().interior_len(), len)?;
        let av = m.operator().apply_slice(input(v, len, "v")?)?;
        output(out, len, "out")?.copy_from_slice(&av);
        Ok(())
    })
}

/// `G(f)(x_k)` for `n` points in the admissible measurement set.
///
/// # Safety
/// `f` holds `f_len` doubles; `xs` and `out` hold `n` doubles.
#[no_mangle]
pub unsafe extern "C" fn fc_eval_g(
    model: *const FcModel,
    f: *const f64,
    f_len: usize,
    xs: *const f64,
    out: *mut f64,
    n: usize,
) -> FcStatus {
    guard(|| {
        let m = model_ref(model)?;
        let f = potential(m, input(f, f_len, "f")?)?;
        let g = predict(m, &f, input(xs, n, "xs")?)?;
        output(out, n, "out")?.copy_from_slice(&g);
        Ok(())
    })
}

/// `-(1/2σ²) Σ (y_k - G(f)(x_k))²`.
///
/// # Safety
/// `f` holds `f_len` doubles; `xs` and `ys` hold `n` doubles; `out` is valid.
#[no_mangle]
pub unsafe extern "C" fn fc_log_likelihood(
    model: *const FcModel,
    f: *const f64,
    f_len: usize,
    xs: *const f64,
    ys: *const f64,
    n: usize,
    sigma: f64,
    out: *mut f64,
) -> FcStatus {
    guard(|| {
        let m = model_ref(model)?;
        if out.is_null() {
            return Err(Failure::new(FcStatus::NullPointer, "out is null"));
        }
        let f = potential(m, input(f, f_len, "f")?)?;
        let data = MeasurementSet::new(input(xs, n, "xs")?.to_vec(), input(ys, n, "ys")?.to_vec(), sigma, None)?;
        *out = log_likelihood(m, &f, &data)?;
        Ok(())
    })
}

/// Message of the last failed call on this thread, or null. The pointer is
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn fc_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(std::ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn fc_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}
