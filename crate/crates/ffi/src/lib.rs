//! C ABI over the `pairscatter` core.
//!
//! Grids, amplitudes and spectra are opaque heap handles created by
//! `ps_*_new`-style calls and released with the matching `ps_*_free`.
//! Every fallible function returns a [`PsStatus`]; on failure the message is
//! available from [`ps_last_error_message`] on the same thread. Panics are
//! caught at the boundary and reported as `PS_STATUS_PANIC`.
//!
//! Amplitude values are exchanged as interleaved `(re, im)` doubles in
//! row-major order, particle a as the row index.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use pairscatter::model::{build_grid_with, inner_product, BipartiteAmplitude, ModelParams, MomentumGrid};
use pairscatter::schmidt::{self, SchmidtModes, SchmidtSpectrum};
use pairscatter::{dynamics, io, steady, Error};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PsStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidParameter = 2,
    /// The lattice fails the resolution or extent checks.
    GridRejected = 3,
    /// Amplitudes on different lattices or in the wrong representation.
    Mismatch = 4,
    /// The quantity is undefined for these inputs (vacuum, δ = 0, ...).
    Undefined = 5,
    Numerical = 6,
    Io = 7,
    Format = 8,
    BufferTooSmall = 9,
    /// The handle was created without the requested data.
    Unavailable = 10,
    Panic = 11,
}

/// Physical parameters, field for field as in the core library.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PsModelParams {
    pub k_c: f64,
    pub sigma: f64,
    pub delta: f64,
    pub gamma_rate: f64,
    pub em_over_hbar: f64,
    pub detuning: f64,
    pub t: f64,
}

impl From<PsModelParams> for ModelParams {
    fn from(p: PsModelParams) -> Self {
        ModelParams {
            k_c: p.k_c,
            sigma: p.sigma,
            delta: p.delta,
            gamma_rate: p.gamma_rate,
            em_over_hbar: p.em_over_hbar,
            detuning: p.detuning,
            t: p.t,
        }
    }
}

impl From<ModelParams> for PsModelParams {
    fn from(p: ModelParams) -> Self {
        PsModelParams {
            k_c: p.k_c,
            sigma: p.sigma,
            delta: p.delta,
            gamma_rate: p.gamma_rate,
            em_over_hbar: p.em_over_hbar,
            detuning: p.detuning,
            t: p.t,
        }
    }
}

/// Opaque momentum lattice.
pub struct PsGrid(MomentumGrid);

/// Opaque two-particle amplitude.
pub struct PsAmplitude(BipartiteAmplitude);

/// Opaque Schmidt spectrum, optionally with its modes.
pub struct PsSpectrum {
    spectrum: SchmidtSpectrum,
    modes: Option<SchmidtModes>,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(c));
}

fn clear_last_error() {
    LAST_ERROR.with(|slot| *slot.borrow_mut() = None);
}

fn status_of(err: &Error) -> PsStatus {
    match err {
        Error::InvalidParameter { .. } | Error::Config(_) | Error::InvalidDownsample { .. } => {
            PsStatus::InvalidParameter
        }
        Error::UnderResolved { .. } | Error::ExtentTooSmall { .. } => PsStatus::GridRejected,
        Error::GridMismatch | Error::WrongRepresentation { .. } => PsStatus::Mismatch,
        Error::Vacuum | Error::Undefined(_) => PsStatus::Undefined,
        Error::Io(_) => PsStatus::Io,
        Error::Format(_) => PsStatus::Format,
        Error::TraceSample { source, .. } | Error::SweepRow { source, .. } => status_of(source),
        _ => PsStatus::Numerical,
    }
}

struct Failure(PsStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(PsStatus::NullPointer, format!("null pointer: {what}"))
}

fn guard<F>(body: F) -> PsStatus
where
    F: FnOnce() -> Result<(), Failure>,
{
    clear_last_error();
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => PsStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_last_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_last_error(format!("panic: {msg}"));
            PsStatus::Panic
        }
    }
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    // SAFETY: the caller guarantees `p` is null or a live, aligned pointer.
    unsafe { p.as_ref() }.ok_or_else(|| null(what))
}

unsafe fn out_ptr<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    // SAFETY: the caller guarantees `p` is null or valid for writes.
    unsafe { p.as_mut() }.ok_or_else(|| null(what))
}

unsafe fn path_arg<'a>(p: *const c_char, what: &str) -> Result<&'a Path, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    // SAFETY: non-null and NUL-terminated per the API contract.
    let s = unsafe { CStr::from_ptr(p) }
        .to_str()
        .map_err(|_| Failure(PsStatus::InvalidParameter, format!("{what} is not UTF-8")))?;
    Ok(Path::new(s))
}

/// Message of the last failed call on this thread, or NULL. The pointer
/// stays valid until the next `ps_*` call on the same thread.
#[no_mangle]
pub extern "C" fn ps_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Static, human-readable name of a status code.
#[no_mangle]
pub extern "C" fn ps_status_string(status: PsStatus) -> *const c_char {
    let s: &'static CStr = match status {
        PsStatus::Ok => c"ok",
        PsStatus::NullPointer => c"null pointer",
        PsStatus::InvalidParameter => c"invalid parameter",
        PsStatus::GridRejected => c"grid rejected",
        PsStatus::Mismatch => c"grid or representation mismatch",
        PsStatus::Undefined => c"undefined",
        PsStatus::Numerical => c"numerical failure",
        PsStatus::Io => c"i/o error",
        PsStatus::Format => c"bad file format",
        PsStatus::BufferTooSmall => c"buffer too small",
        PsStatus::Unavailable => c"not available",
        PsStatus::Panic => c"internal panic",
    };
    s.as_ptr()
}

/// Fills `out` with the default parameter set.
///
/// # Safety
/// `out` must be null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ps_params_default(out: *mut PsModelParams) -> PsStatus {
    guard(|| {
        *unsafe { out_ptr(out, "out")? } = ModelParams::default().into();
        Ok(())
    })
}

/// Validates a parameter set.
///
/// # Safety
/// `params` must be null or point to a valid struct.
#[no_mangle]
pub unsafe extern "C" fn ps_params_validate(params: *const PsModelParams) -> PsStatus {
    guard(|| {
        let p: ModelParams = (*unsafe { deref(params, "params")? }).into();
        p.validate()?;
        Ok(())
    })
}

/// Builds a lattice of `n_points` momenta on `[-extent, extent)`. The
/// resolution and extent checks against `params` can be skipped with
/// `allow_under_resolved`.
///
/// # Safety
/// `params` must be valid; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ps_grid_new(
    params: *const PsModelParams,
    n_points: usize,
    extent: f64,
    allow_under_resolved: bool,
    out: *mut *mut PsGrid,
) -> PsStatus {
    guard(|| {
        let p: ModelParams = (*unsafe { deref(params, "params")? }).into();
        let out = unsafe { out_ptr(out, "out")? };
        let grid = build_grid_with(&p, n_points, extent, allow_under_resolved)?;
        *out = Box::into_raw(Box::new(PsGrid(grid)));
        Ok(())
    })
}

/// # Safety
/// `grid` must be null or a handle from `ps_grid_new` not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ps_grid_free(grid: *mut PsGrid) {
    if !grid.is_null() {
        // SAFETY: created by Box::into_raw in ps_grid_new.
        drop(unsafe { Box::from_raw(grid) });
    }
}

/// Number of points per axis, or 0 for a null handle.
///
/// # Safety
/// `grid` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ps_grid_n_points(grid: *const PsGrid) -> usize {
    unsafe { grid.as_ref() }.map_or(0, |g| g.0.n_points())
}

/// Momentum spacing, or NaN for a null handle.
///
/// # Safety
/// `grid` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ps_grid_spacing(grid: *const PsGrid) -> f64 {
    unsafe { grid.as_ref() }.map_or(f64::NAN, |g| g.0.spacing())
}

unsafe fn make_amplitude<F>(
    params: *const PsModelParams,
    grid: *const PsGrid,
    out: *mut *mut PsAmplitude,
    build: F,
) -> PsStatus
where
    F: FnOnce(&ModelParams, &MomentumGrid) -> pairscatter::Result<BipartiteAmplitude>,
{
    guard(|| {
        let p: ModelParams = (*unsafe { deref(params, "params")? }).into();
        let g = unsafe { deref(grid, "grid")? };
        let out = unsafe { out_ptr(out, "out")? };
        let amp = build(&p, &g.0)?;
        *out = Box::into_raw(Box::new(PsAmplitude(amp)));
        Ok(())
    })
}

/// Normalized pairwise-scattering steady state.
///
/// # Safety
/// `params` and `grid` must be valid; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ps_steady_pairwise(
    params: *const PsModelParams,
    grid: *const PsGrid,
    out: *mut *mut PsAmplitude,
) -> PsStatus {
    unsafe { make_amplitude(params, grid, out, steady::steady_state_pairwise) }
}

/// Normalized Bell-like steady state.
///
/// # Safety
/// As for [`ps_steady_pairwise`].
#[no_mangle]
pub unsafe extern "C" fn ps_steady_bell(
    params: *const PsModelParams,
    grid: *const PsGrid,
    out: *mut *mut PsAmplitude,
) -> PsStatus {
    unsafe { make_amplitude(params, grid, out, steady::steady_state_bell) }
}

/// Normalized momentum amplitude at coupling time `t`.
///
/// # Safety
/// As for [`ps_steady_pairwise`].
#[no_mangle]
pub unsafe extern "C" fn ps_amplitude_at_time(
    params: *const PsModelParams,
    grid: *const PsGrid,
    t: f64,
    out: *mut *mut PsAmplitude,
) -> PsStatus {
    unsafe { make_amplitude(params, grid, out, |p, g| dynamics::amplitude_at_time(p, g, t)) }
}

/// # Safety
/// `amp` must be null or a live amplitude handle.
#[no_mangle]
pub unsafe extern "C" fn ps_amplitude_free(amp: *mut PsAmplitude) {
    if !amp.is_null() {
        // SAFETY: created by Box::into_raw in this crate.
        drop(unsafe { Box::from_raw(amp) });
    }
}

/// Points per axis of an amplitude, or 0 for a null handle.
///
/// # Safety
/// `amp` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ps_amplitude_n_points(amp: *const PsAmplitude) -> usize {
    unsafe { amp.as_ref() }.map_or(0, |a| a.0.grid().n_points())
}

/// Copies the amplitude into `buf` as `2·n²` interleaved doubles.
///
/// # Safety
/// `buf` must be valid for `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn ps_amplitude_copy_values(
    amp: *const PsAmplitude,
    buf: *mut f64,
    len: usize,
) -> PsStatus {
    guard(|| {
        let a = unsafe { deref(amp, "amp")? };
        if buf.is_null() {
            return Err(null("buf"));
        }
        let values = a.0.values();
        let needed = 2 * values.len();
        if len < needed {
            return Err(Failure(
                PsStatus::BufferTooSmall,
                format!("need {needed} doubles, got {len}"),
            ));
        }
        // SAFETY: checked non-null and at least `needed` long.
        let out = unsafe { std::slice::from_raw_parts_mut(buf, needed) };
        for (k, z) in values.iter().enumerate() {
            out[2 * k] = z.re;
            out[2 * k + 1] = z.im;
        }
        Ok(())
    })
}

/// Grid inner product `Σ conj(a)·b·h²`.
///
/// # Safety
/// Handles must be live; `re` and `im` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ps_inner_product(
    a: *const PsAmplitude,
    b: *const PsAmplitude,
    re: *mut f64,
    im: *mut f64,
) -> PsStatus {
    guard(|| {
        let a = unsafe { deref(a, "a")? };
        let b = unsafe { deref(b, "b")? };
        let re = unsafe { out_ptr(re, "re")? };
        let im = unsafe { out_ptr(im, "im")? };
        let z = inner_product(&a.0, &b.0)?;
        *re = z.re;
        *im = z.im;
        Ok(())
    })
}

/// Schmidt decomposition. With `with_modes` false only the spectrum is
/// computed, which is cheaper.
///
/// # Safety
/// `amp` must be live; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ps_schmidt(
    amp: *const PsAmplitude,
    with_modes: bool,
    out: *mut *mut PsSpectrum,
) -> PsStatus {
    guard(|| {
        let a = unsafe { deref(amp, "amp")? };
        let out = unsafe { out_ptr(out, "out")? };
        let handle = if with_modes {
            let (spectrum, modes) = schmidt::decompose(&a.0)?;
            PsSpectrum {
                spectrum,
                modes: Some(modes),
            }
        } else {
            PsSpectrum {
                spectrum: schmidt::spectrum(&a.0)?,
                modes: None,
            }
        };
        *out = Box::into_raw(Box::new(handle));
        Ok(())
    })
}

/// # Safety
/// `spec` must be null or a live spectrum handle.
#[no_mangle]
pub unsafe extern "C" fn ps_spectrum_free(spec: *mut PsSpectrum) {
    if !spec.is_null() {
        // SAFETY: created by Box::into_raw in ps_schmidt.
        drop(unsafe { Box::from_raw(spec) });
    }
}

/// Schmidt number `1/Σλ²`, or NaN for a null handle.
///
/// # Safety
/// `spec` must be null or live.
#[no_mangle]
pub unsafe extern "C" fn ps_spectrum_k_number(spec: *const PsSpectrum) -> f64 {
    unsafe { spec.as_ref() }.map_or(f64::NAN, |s| s.spectrum.k_number)
}

/// Entanglement entropy in bits, or NaN for a null handle.
///
/// # Safety
/// `spec` must be null or live.
#[no_mangle]
pub unsafe extern "C" fn ps_spectrum_entropy(spec: *const PsSpectrum) -> f64 {
    unsafe { spec.as_ref() }.map_or(f64::NAN, |s| s.spectrum.entropy)
}

/// Number of retained eigenvalues, or 0 for a null handle.
///
/// # Safety
/// `spec` must be null or live.
#[no_mangle]
pub unsafe extern "C" fn ps_spectrum_rank(spec: *const PsSpectrum) -> usize {
    unsafe { spec.as_ref() }.map_or(0, |s| s.spectrum.rank())
}

/// Copies up to `len` eigenvalues (descending) into `buf` and stores the
/// number copied in `written`.
///
/// # Safety
/// `buf` must be valid for `len` doubles; `written` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ps_spectrum_copy_lambdas(
    spec: *const PsSpectrum,
    buf: *mut f64,
    len: usize,
    written: *mut usize,
) -> PsStatus {
    guard(|| {
        let s = unsafe { deref(spec, "spec")? };
        let written = unsafe { out_ptr(written, "written")? };
        let lambdas = &s.spectrum.lambdas;
        let count = lambdas.len().min(len);
        if count > 0 {
            if buf.is_null() {
                return Err(null("buf"));
            }
            // SAFETY: non-null and valid for `len >= count` doubles.
            unsafe { std::slice::from_raw_parts_mut(buf, count) }
                .copy_from_slice(&lambdas[..count]);
        }
        *written = count;
        Ok(())
    })
}

/// Copies Schmidt mode `index` of particle a (`particle` 0) or b (1) into
/// `buf` as `2·n` interleaved doubles, normalized on the grid.
///
/// # Safety
/// `buf` must be valid for `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn ps_spectrum_copy_mode(
    spec: *const PsSpectrum,
    particle: u32,
    index: usize,
    buf: *mut f64,
    len: usize,
) -> PsStatus {
    guard(|| {
        let s = unsafe { deref(spec, "spec")? };
        let modes = s.modes.as_ref().ok_or_else(|| {
            Failure(
                PsStatus::Unavailable,
                "spectrum was computed without modes".into(),
            )
        })?;
        if index >= modes.count() {
            return Err(Failure(
                PsStatus::InvalidParameter,
                format!("mode {index} out of range (have {})", modes.count()),
            ));
        }
        let mode = match particle {
            0 => modes.mode_a(index),
            1 => modes.mode_b(index),
            _ => {
                return Err(Failure(
                    PsStatus::InvalidParameter,
                    "particle must be 0 or 1".into(),
                ))
            }
        };
        let needed = 2 * mode.len();
        if buf.is_null() {
            return Err(null("buf"));
        }
        if len < needed {
            return Err(Failure(
                PsStatus::BufferTooSmall,
                format!("need {needed} doubles, got {len}"),
            ));
        }
        // SAFETY: checked non-null and long enough.
        let out = unsafe { std::slice::from_raw_parts_mut(buf, needed) };
        for (k, z) in mode.iter().enumerate() {
            out[2 * k] = z.re;
            out[2 * k + 1] = z.im;
        }
        Ok(())
    })
}

/// Schmidt number from the purity of the reduced density matrix, computed
/// without a decomposition.
///
/// # Safety
/// `amp` must be live; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ps_purity_k(amp: *const PsAmplitude, out: *mut f64) -> PsStatus {
    guard(|| {
        let a = unsafe { deref(amp, "amp")? };
        let out = unsafe { out_ptr(out, "out")? };
        *out = schmidt::purity_oracle(&a.0)?;
        Ok(())
    })
}

/// Closed-form Schmidt number of the pairwise state and its small-δ
/// approximation.
///
/// # Safety
/// `exact` and `approx` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ps_analytic_k(delta: f64, exact: *mut f64, approx: *mut f64) -> PsStatus {
    guard(|| {
        let exact = unsafe { out_ptr(exact, "exact")? };
        let approx = unsafe { out_ptr(approx, "approx")? };
        let k = schmidt::analytic_k(delta)?;
        *exact = k.exact;
        *approx = k.approx;
        Ok(())
    })
}

/// Writes `<dir>/<name>.meta` and `<dir>/<name>.dat`.
///
/// # Safety
/// Strings must be NUL-terminated; pointers valid.
#[no_mangle]
pub unsafe extern "C" fn ps_state_write(
    amp: *const PsAmplitude,
    params: *const PsModelParams,
    dir: *const c_char,
    name: *const c_char,
) -> PsStatus {
    guard(|| {
        let a = unsafe { deref(amp, "amp")? };
        let p: ModelParams = (*unsafe { deref(params, "params")? }).into();
        let dir = unsafe { path_arg(dir, "dir")? };
        let name = unsafe { path_arg(name, "name")? };
        let name = name
            .to_str()
            .ok_or_else(|| Failure(PsStatus::InvalidParameter, "name is not UTF-8".into()))?;
        io::write_state(dir, name, &a.0, &p, &[])?;
        Ok(())
    })
}

/// Reads a state file pair. `path` may name the stem or either file.
/// `params_out` may be null.
///
/// # Safety
/// `path` must be NUL-terminated; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ps_state_read(
    path: *const c_char,
    out: *mut *mut PsAmplitude,
    params_out: *mut PsModelParams,
) -> PsStatus {
    guard(|| {
        let path = unsafe { path_arg(path, "path")? };
        let out = unsafe { out_ptr(out, "out")? };
        let state = io::read_state(path)?;
        if let Some(p) = unsafe { params_out.as_mut() } {
            *p = state.params.into();
        }
        *out = Box::into_raw(Box::new(PsAmplitude(state.amplitude)));
        Ok(())
    })
}
