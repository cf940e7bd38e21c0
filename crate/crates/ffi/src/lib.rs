//! C ABI over `holoq`.
//!
//! Models and frames are opaque heap handles released with their `_free` function.
//! Every fallible call returns an [`HqStatus`]; on failure the message is kept per thread
//! and can be copied out with [`hq_last_error_message`]. Matrices are row-major arrays of
//! [`HqComplex`]. No call unwinds across the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use holoq::biorth::{build_frame, pseudo_norm, BiorthFrame, FrameOptions};
use holoq::geometry::{curvature_plaquette, holonomy_discrete, ParameterLoop};
use holoq::linalg::{eigendecompose, sort_eigenvalues, C64};
use holoq::models::ModelHandle;
use holoq::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HqStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    /// Frame construction failed: defective, near-defective or singular.
    NonDiagonalizable = 3,
    /// Any other numerical failure.
    Numerical = 4,
    Panic = 5,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct HqComplex {
    pub re: f64,
    pub im: f64,
}

impl From<C64> for HqComplex {
    fn from(z: C64) -> Self {
        HqComplex { re: z.re, im: z.im }
    }
}

/// Opaque model handle.
pub struct HqModel(ModelHandle);

/// Opaque biorthonormal frame.
pub struct HqFrame(BiorthFrame);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> HqStatus {
    match e.root() {
        Error::InvalidInput(_) | Error::DimensionMismatch { .. } => HqStatus::InvalidArgument,
        Error::NonDiagonalizable(_) | Error::NearDefective { .. } | Error::Singular { .. } => {
            HqStatus::NonDiagonalizable
        }
        _ => HqStatus::Numerical,
    }
}

/// Runs `f`, translating errors and panics into a status and the thread's last message.
fn guard(f: impl FnOnce() -> Result<(), (HqStatus, String)>) -> HqStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => HqStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            HqStatus::Panic
        }
    }
}

fn numerical(e: Error) -> (HqStatus, String) {
    (status_of(&e), e.to_string())
}

fn null() -> (HqStatus, String) {
    (HqStatus::NullPointer, "null pointer argument".into())
}

unsafe fn point<'a>(r: *const f64) -> Result<&'a [f64; 3], (HqStatus, String)> {
    if r.is_null() {
        return Err(null());
    }
    Ok(&*(r as *const [f64; 3]))
}

unsafe fn model_ref<'a>(m: *const HqModel) -> Result<&'a ModelHandle, (HqStatus, String)> {
    m.as_ref().map(|m| &m.0).ok_or_else(null)
}

unsafe fn frame_ref<'a>(f: *const HqFrame) -> Result<&'a BiorthFrame, (HqStatus, String)> {
    f.as_ref().map(|f| &f.0).ok_or_else(null)
}

unsafe fn write_out(out: *mut HqComplex, values: &[C64]) -> Result<(), (HqStatus, String)> {
    if out.is_null() {
        return Err(null());
    }
    for (k, v) in values.iter().enumerate() {
        *out.add(k) = (*v).into();
    }
    Ok(())
}

fn plane(a: u32, b: u32) -> Result<(usize, usize), (HqStatus, String)> {
    if a > 2 || b > 2 || a == b {
        return Err((HqStatus::InvalidArgument, format!("plane axes ({a}, {b}) must be distinct and in 0..=2")));
    }
    Ok((a as usize, b as usize))
}

/// Dirac model with non-Hermiticity strength `s`. Never null.
#[no_mangle]
pub extern "C" fn hq_model_dirac(s: f64) -> *mut HqModel {
    Box::into_raw(Box::new(HqModel(ModelHandle::dirac(s))))
}

/// Two-band Bogoliubov-de Gennes model. Never null.
#[no_mangle]
pub extern "C" fn hq_model_bdg() -> *mut HqModel {
    Box::into_raw(Box::new(HqModel(ModelHandle::bdg())))
}

/// # Safety
/// `model` must come from an `hq_model_*` constructor and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn hq_model_free(model: *mut HqModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Hilbert-space dimension, or 0 for a null handle.
///
/// # Safety
/// `model` must be null or a live model handle.
#[no_mangle]
pub unsafe extern "C" fn hq_model_dim(model: *const HqModel) -> usize {
    model.as_ref().map_or(0, |m| m.0.dim())
}

/// Writes `H(R)` (dim*dim entries, row-major) into `out`.
///
/// # Safety
/// `r` points to 3 doubles; `out` has room for dim*dim values.
#[no_mangle]
pub unsafe extern "C" fn hq_model_hamiltonian(model: *const HqModel, r: *const f64, out: *mut HqComplex) -> HqStatus {
    guard(|| {
        let m = model_ref(model)?;
        let r = point(r)?;
        write_out(out, m.hamiltonian(r).as_slice())
    })
}

/// Eigenvalues of `H(R)`, descending real part then descending imaginary part.
///
/// # Safety
/// `r` points to 3 doubles; `out` has room for dim values.
#[no_mangle]
pub unsafe extern "C" fn hq_spectrum(model: *const HqModel, r: *const f64, out: *mut HqComplex) -> HqStatus {
    guard(|| {
        let m = model_ref(model)?;
        let r = point(r)?;
        let h = m.hamiltonian(r);
        let e = eigendecompose(&h).map_err(|e| numerical(e.at(*r)))?;
        write_out(out, &sort_eigenvalues(e.values, h.frobenius_norm()))
    })
}

/// Builds the balanced-gauge biorthonormal frame at `R` with default tolerances.
///
/// # Safety
/// `r` points to 3 doubles; `out` is a valid location for a handle. On failure `*out` is null.
#[no_mangle]
pub unsafe extern "C" fn hq_frame_build(model: *const HqModel, r: *const f64, out: *mut *mut HqFrame) -> HqStatus {
    if !out.is_null() {
        *out = ptr::null_mut();
    }
    guard(|| {
        let m = model_ref(model)?;
        let r = point(r)?;
        if out.is_null() {
            return Err(null());
        }
        let frame = build_frame(&m.hamiltonian(r), &FrameOptions::default()).map_err(|e| numerical(e.at(*r)))?;
        *out = Box::into_raw(Box::new(HqFrame(frame)));
        Ok(())
    })
}

/// # Safety
/// `frame` must come from [`hq_frame_build`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn hq_frame_free(frame: *mut HqFrame) {
    if !frame.is_null() {
        drop(Box::from_raw(frame));
    }
}

/// # Safety
/// `out` has room for dim values.
#[no_mangle]
pub unsafe extern "C" fn hq_frame_energies(frame: *const HqFrame, out: *mut HqComplex) -> HqStatus {
    guard(|| write_out(out, frame_ref(frame)?.energies()))
}

/// Metric `X = sum_j |phi^j><phi^j|`, row-major.
///
/// # Safety
/// `out` has room for dim*dim values.
#[no_mangle]
pub unsafe extern "C" fn hq_frame_metric(frame: *const HqFrame, out: *mut HqComplex) -> HqStatus {
    guard(|| write_out(out, frame_ref(frame)?.metric().as_slice()))
}

/// `<psi|X|psi>` for a state of `dim` components.
///
/// # Safety
/// `state` points to dim values; `out` to one double.
#[no_mangle]
pub unsafe extern "C" fn hq_frame_pseudo_norm(frame: *const HqFrame, state: *const HqComplex, out: *mut f64) -> HqStatus {
    guard(|| {
        let f = frame_ref(frame)?;
        if state.is_null() || out.is_null() {
            return Err(null());
        }
        let psi: Vec<C64> = (0..f.dim()).map(|k| {
            let z = *state.add(k);
            C64::new(z.re, z.im)
        }).collect();
        *out = pseudo_norm(f, &psi).map_err(numerical)?;
        Ok(())
    })
}

/// Discrete holonomy of band `band` around a circle of `vertices` points in the plane of
/// axes (`axis_a`, `axis_b`).
///
/// # Safety
/// `center` points to 3 doubles; `out` to one value.
#[no_mangle]
pub unsafe extern "C" fn hq_holonomy_circle(
    model: *const HqModel,
    center: *const f64,
    radius: f64,
    axis_a: u32,
    axis_b: u32,
    vertices: usize,
    band: usize,
    out: *mut HqComplex,
) -> HqStatus {
    guard(|| {
        let m = model_ref(model)?;
        let c = point(center)?;
        let lp = ParameterLoop::circle(*c, radius, plane(axis_a, axis_b)?, vertices).map_err(numerical)?;
        let res = holonomy_discrete(m, &lp, band).map_err(numerical)?;
        write_out(out, &[res.beta])
    })
}

/// Plaquette Berry curvature of band `band` at `R` in the plane (`axis_a`, `axis_b`).
///
/// # Safety
/// `r` points to 3 doubles; `out` to one value.
#[no_mangle]
pub unsafe extern "C" fn hq_curvature_plaquette(
    model: *const HqModel,
    r: *const f64,
    axis_a: u32,
    axis_b: u32,
    h: f64,
    band: usize,
    out: *mut HqComplex,
) -> HqStatus {
    guard(|| {
        let m = model_ref(model)?;
        let r = point(r)?;
        let b = curvature_plaquette(m, r, plane(axis_a, axis_b)?, h, band).map_err(numerical)?;
        write_out(out, &[b])
    })
}

/// Copies the calling thread's last error message into `buf` (NUL-terminated, truncated to
/// `len`). Returns the full message length including the terminator, or 0 when none is set.
///
/// # Safety
/// `buf` is null or has room for `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn hq_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| match e.borrow().as_ref() {
        None => 0,
        Some(msg) => {
            let bytes = msg.as_bytes_with_nul();
            if !buf.is_null() && len > 0 {
                let n = bytes.len().min(len);
                ptr::copy_nonoverlapping(bytes.as_ptr() as *const c_char, buf, n);
                *buf.add(n - 1) = 0;
            }
            bytes.len()
        }
    })
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn hq_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}
