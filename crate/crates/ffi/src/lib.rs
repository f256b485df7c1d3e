//! C ABI over `fchlab`.
//!
//! Fields are opaque heap handles released with [`fch_field_free`]. Every
//! fallible call returns an [`FchStatus`]; on failure a message for the
//! calling thread is available from [`fch_last_error`]. Panics never cross
//! the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use fchlab::analyticity::fourier_decay_fit;
use fchlab::bony::commutator;
use fchlab::evolution::{integrate, SolverConfig};
use fchlab::io::{read_snapshot, write_snapshot, NamedProfile, Snapshot};
use fchlab::littlewood_paley::es_norm_truncated;
use fchlab::model::{rhs, FchParams, Form};
use fchlab::picard::lifespan;
use fchlab::{besov_norm, BesovSpec, FchError, GridSpec, SpectralField};

/// Result codes.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FchStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    GridMismatch = 3,
    Io = 4,
    Format = 5,
    /// Blow-up, iteration failure or non-finite values.
    Numerical = 6,
    /// No decay fit: too few modes above the floor.
    NoFit = 7,
    BufferTooSmall = 8,
    Panic = 9,
}

/// Equation form selector.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FchForm {
    Direct11 = 0,
    Nonlocal31 = 1,
    Simplified32 = 2,
}

impl From<FchForm> for Form {
    fn from(f: FchForm) -> Self {
        match f {
            FchForm::Direct11 => Form::Direct11,
            FchForm::Nonlocal31 => Form::Nonlocal31,
            FchForm::Simplified32 => Form::Simplified32,
        }
    }
}

/// Opaque periodic field.
pub struct FchField {
    inner: SpectralField,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("interior nul removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

struct Failure(FchStatus, String);

impl From<FchError> for Failure {
    fn from(e: FchError) -> Self {
        let status = match &e {
            FchError::InvalidGrid(_) | FchError::InvalidArgument(_) => FchStatus::InvalidArgument,
            FchError::GridMismatch => FchStatus::GridMismatch,
            FchError::Io { .. } => FchStatus::Io,
            FchError::Format { .. } => FchStatus::Format,
            FchError::NoFit { .. } => FchStatus::NoFit,
            _ if e.is_numerical() => FchStatus::Numerical,
            _ => FchStatus::InvalidArgument,
        };
        Failure(status, e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(FchStatus::NullPointer, format!("{what} is null"))
}

/// Runs `f`, converting errors and panics into a status and the thread's
/// last-error message.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> FchStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            clear_error();
            FchStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".to_string());
            set_error(format!("internal panic: {msg}"));
            FchStatus::Panic
        }
    }
}

unsafe fn field_ref<'a>(f: *const FchField, what: &str) -> Result<&'a SpectralField, Failure> {
    // SAFETY: caller passes a handle from this library or null.
    unsafe { f.as_ref() }.map(|h| &h.inner).ok_or_else(|| null(what))
}

unsafe fn out_ref<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    // SAFETY: caller passes writable storage or null.
    unsafe { p.as_mut() }.ok_or_else(|| null(what))
}

unsafe fn c_str<'a>(s: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if s.is_null() {
        return Err(null(what));
    }
    // SAFETY: non-null, caller guarantees nul termination.
    unsafe { CStr::from_ptr(s) }
        .to_str()
        .map_err(|_| Failure(FchStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

fn boxed(field: SpectralField) -> *mut FchField {
    Box::into_raw(Box::new(FchField { inner: field }))
}

/// Message of the last failed call on this thread, or null after a
/// success. Valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn fch_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn fch_version() -> *const c_char {
    static VERSION: &str = concat!(env!("CARGO_PKG_VERSION"), "\0");
    VERSION.as_ptr().cast()
}

/// Field from `n` samples at `x_j = jL/n`.
///
/// # Safety
/// `samples` must point to `n` readable doubles; `out` to writable storage.
#[no_mangle]
pub unsafe extern "C" fn fch_field_from_samples(
    length: f64,
    n: usize,
    samples: *const f64,
    out: *mut *mut FchField,
) -> FchStatus {
    guard(|| {
        let out = unsafe { out_ref(out, "out") }?;
        if samples.is_null() {
            return Err(null("samples"));
        }
        let grid = GridSpec::new(length, n)?;
        // SAFETY: caller guarantees n readable values.
        let values = unsafe { std::slice::from_raw_parts(samples, n) }.to_vec();
        *out = boxed(SpectralField::from_values(grid, values)?);
        Ok(())
    })
}

/// Field from a named profile (`cosine:amp,k`, `gaussian:amp,width`,
/// `sech:amp,width` or a snapshot path).
///
/// # Safety
/// `spec` must be a nul-terminated string; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn fch_field_from_profile(
    spec: *const c_char,
    length: f64,
    n: usize,
    out: *mut *mut FchField,
) -> FchStatus {
    guard(|| {
        let out = unsafe { out_ref(out, "out") }?;
        let profile: NamedProfile = unsafe { c_str(spec, "spec") }?.parse()?;
        let grid = GridSpec::new(length, n)?;
        *out = boxed(profile.field(grid)?);
        Ok(())
    })
}

/// Reads an `FCH1` snapshot. `t` and `nu` may be null.
///
/// # Safety
/// `path` nul-terminated; `out` writable; `t`, `nu` writable or null.
#[no_mangle]
pub unsafe extern "C" fn fch_field_read_snapshot(
    path: *const c_char,
    out: *mut *mut FchField,
    t: *mut f64,
    nu: *mut f64,
) -> FchStatus {
    guard(|| {
        let out = unsafe { out_ref(out, "out") }?;
        let snap = read_snapshot(Path::new(unsafe { c_str(path, "path") }?))?;
        if let Some(t) = unsafe { t.as_mut() } {
            *t = snap.t;
        }
        if let Some(nu) = unsafe { nu.as_mut() } {
            *nu = snap.nu;
        }
        *out = boxed(snap.field);
        Ok(())
    })
}

/// Writes an `FCH1` snapshot.
///
/// # Safety
/// `field` a live handle; `path` nul-terminated.
#[no_mangle]
pub unsafe extern "C" fn fch_field_write_snapshot(
    field: *const FchField,
    path: *const c_char,
    t: f64,
    nu: f64,
) -> FchStatus {
    guard(|| {
        let u = unsafe { field_ref(field, "field") }?;
        let path = unsafe { c_str(path, "path") }?;
        write_snapshot(Path::new(path), &Snapshot::new(u.clone(), t, nu))?;
        Ok(())
    })
}

/// Releases a handle; null is ignored.
///
/// # Safety
/// `field` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn fch_field_free(field: *mut FchField) {
    if !field.is_null() {
        // SAFETY: handle was created by Box::into_raw here.
        drop(unsafe { Box::from_raw(field) });
    }
}

/// Number of grid points, or 0 for null.
///
/// # Safety
/// `field` a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn fch_field_len(field: *const FchField) -> usize {
    unsafe { field.as_ref() }.map_or(0, |f| f.inner.grid().n())
}

/// Period length, or NaN for null.
///
/// # Safety
/// `field` a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn fch_field_period(field: *const FchField) -> f64 {
    unsafe { field.as_ref() }.map_or(f64::NAN, |f| f.inner.grid().length())
}

/// Copies grid samples into `buf` of capacity `len`.
///
/// # Safety
/// `field` a live handle; `buf` writable for `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn fch_field_samples(field: *const FchField, buf: *mut f64, len: usize) -> FchStatus {
    guard(|| {
        let u = unsafe { field_ref(field, "field") }?;
        if buf.is_null() {
            return Err(null("buf"));
        }
        let n = u.grid().n();
        if len < n {
            return Err(Failure(FchStatus::BufferTooSmall, format!("need {n} doubles, got {len}")));
        }
        // SAFETY: buf has room for len ≥ n values.
        unsafe { std::slice::from_raw_parts_mut(buf, n) }.copy_from_slice(u.values());
        Ok(())
    })
}

/// `‖u‖_{B^s_{p,r}}` with `p ∈ {2, ∞}`, `r ∈ {1, 2, ∞}` (pass `INFINITY`).
///
/// # Safety
/// `field` a live handle; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn fch_besov_norm(field: *const FchField, s: f64, p: f64, r: f64, out: *mut f64) -> FchStatus {
    guard(|| {
        let u = unsafe { field_ref(field, "field") }?;
        let out = unsafe { out_ref(out, "out") }?;
        *out = besov_norm(u, &BesovSpec::new(s, p, r)?);
        Ok(())
    })
}

/// Truncated `E_s` norm with its maximizing order and convergence flag.
///
/// # Safety
/// `field` a live handle; outputs writable (`argmax`, `converged` may be null).
#[no_mangle]
pub unsafe extern "C" fn fch_es_norm(
    field: *const FchField,
    s: f64,
    kmax: usize,
    nu: f64,
    value: *mut f64,
    argmax: *mut usize,
    converged: *mut bool,
) -> FchStatus {
    guard(|| {
        let u = unsafe { field_ref(field, "field") }?;
        let value = unsafe { out_ref(value, "value") }?;
        let e = es_norm_truncated(u, s, kmax, nu)?;
        *value = e.value;
        if let Some(a) = unsafe { argmax.as_mut() } {
            *a = e.argmax_k;
        }
        if let Some(c) = unsafe { converged.as_mut() } {
            *c = e.converged;
        }
        Ok(())
    })
}

/// Fourier-decay fit; `sigma` is NaN when the fit quality is too poor.
///
/// # Safety
/// `field` a live handle; outputs writable.
#[no_mangle]
pub unsafe extern "C" fn fch_decay_fit(
    field: *const FchField,
    floor: f64,
    amplitude: *mut f64,
    sigma: *mut f64,
    residual: *mut f64,
) -> FchStatus {
    guard(|| {
        let u = unsafe { field_ref(field, "field") }?;
        let (a, s, r) = (
            unsafe { out_ref(amplitude, "amplitude") }?,
            unsafe { out_ref(sigma, "sigma") }?,
            unsafe { out_ref(residual, "residual") }?,
        );
        let fit = fourier_decay_fit(u, floor)?;
        *a = fit.a;
        *s = fit.sigma.unwrap_or(f64::NAN);
        *r = fit.residual;
        Ok(())
    })
}

/// `[f, Λ^{2ν}]g` as a new handle.
///
/// # Safety
/// `f`, `g` live handles; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn fch_commutator(
    f: *const FchField,
    g: *const FchField,
    nu: f64,
    out: *mut *mut FchField,
) -> FchStatus {
    guard(|| {
        let (f, g) = (unsafe { field_ref(f, "f") }?, unsafe { field_ref(g, "g") }?);
        let out = unsafe { out_ref(out, "out") }?;
        *out = boxed(commutator(f, g, nu)?);
        Ok(())
    })
}

/// Time derivative `u_t` in the chosen form.
///
/// # Safety
/// `field` a live handle; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn fch_rhs(field: *const FchField, nu: f64, form: FchForm, out: *mut *mut FchField) -> FchStatus {
    guard(|| {
        let u = unsafe { field_ref(field, "field") }?;
        let out = unsafe { out_ref(out, "out") }?;
        let params = FchParams::new(nu, form.into(), *u.grid())?;
        *out = boxed(rhs(u, &params)?);
        Ok(())
    })
}

/// Lifespan `min(1/C, 1/(8C‖u₀‖_{B^{s₀}_{2,1}}))`.
///
/// # Safety
/// `field` a live handle; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn fch_lifespan(field: *const FchField, c_hat: f64, nu: f64, out: *mut f64) -> FchStatus {
    guard(|| {
        let u = unsafe { field_ref(field, "field") }?;
        let out = unsafe { out_ref(out, "out") }?;
        *out = lifespan(u, c_hat, nu)?.t;
        Ok(())
    })
}

/// Integrates to `t_end` with RK4 (step capped by the CFL bound) and
/// returns the final field and time. Blow-up reports `Numerical`.
///
/// # Safety
/// `field` a live handle; `out` writable; `t_final` writable or null.
#[no_mangle]
pub unsafe extern "C" fn fch_integrate(
    field: *const FchField,
    nu: f64,
    form: FchForm,
    dt: f64,
    t_end: f64,
    out: *mut *mut FchField,
    t_final: *mut f64,
) -> FchStatus {
    guard(|| {
        let u = unsafe { field_ref(field, "field") }?;
        let out = unsafe { out_ref(out, "out") }?;
        let params = FchParams::new(nu, form.into(), *u.grid())?;
        let cfg = SolverConfig::new(dt, t_end);
        let record = integrate(u, &cfg, &params)?;
        let last = record
            .final_field()
            .cloned()
            .ok_or_else(|| Failure(FchStatus::Numerical, "no final field recorded".into()))?;
        if let Some(t) = unsafe { t_final.as_mut() } {
            *t = record.final_time().unwrap_or(0.0);
        }
        *out = boxed(last);
        Ok(())
    })
}
