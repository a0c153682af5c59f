//! C ABI for `wentzell-core`.
//!
//! Handles are opaque pointers owned by the caller and released with the
//! matching `*_free`. Every fallible call returns one of the `WZ_*` status
//! codes; on failure the message is kept per thread and can be copied out
//! with [`wz_last_error`]. Panics never cross the boundary.
//!
//! Dof vectors are the free (unconstrained) coefficients in the order used by
//! the assembled matrices; their length is [`wz_system_size`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::slice;

use wentzell_core::config::parse_config;
use wentzell_core::coefficient::{DegeneracyClass, DegenerateCoefficient};
use wentzell_core::discretization::build_mesh;
use wentzell_core::evolution::{resolvent_residual, resolvent_solve, run_on, Trajectory};
use wentzell_core::forms::{assemble, AssembledSystem, OperatorForm, WentzellParams};
use wentzell_core::Error;

pub const WZ_OK: i32 = 0;
pub const WZ_ERR_NULL: i32 = 1;
pub const WZ_ERR_INVALID: i32 = 2;
pub const WZ_ERR_DIVERGENT: i32 = 3;
pub const WZ_ERR_HYPOTHESIS: i32 = 4;
pub const WZ_ERR_NOT_COERCIVE: i32 = 5;
pub const WZ_ERR_FACTORIZATION: i32 = 6;
pub const WZ_ERR_UNSUPPORTED: i32 = 7;
pub const WZ_ERR_CONFIG: i32 = 8;
pub const WZ_ERR_IO: i32 = 9;
/// A caller-supplied buffer has the wrong length.
pub const WZ_ERR_LENGTH: i32 = 10;
pub const WZ_ERR_PANIC: i32 = 11;

pub const WZ_FORM_DIVERGENCE: i32 = 0;
pub const WZ_FORM_NONDIVERGENCE: i32 = 1;

pub const WZ_CLASS_WEAK: i32 = 0;
pub const WZ_CLASS_STRONG: i32 = 1;
pub const WZ_CLASS_NONDEGENERATE: i32 = 2;

/// Assembled mass and energy matrices.
pub struct WzSystem {
    inner: AssembledSystem,
}

/// A finished time integration.
pub struct WzTrajectory {
    inner: Trajectory,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn code(e: &Error) -> i32 {
    match e {
        Error::InvalidInput(_) => WZ_ERR_INVALID,
        Error::Divergent(_) => WZ_ERR_DIVERGENT,
        Error::HypothesisFailed(_) => WZ_ERR_HYPOTHESIS,
        Error::NotCoercive { .. } => WZ_ERR_NOT_COERCIVE,
        Error::Factorization { .. } => WZ_ERR_FACTORIZATION,
        Error::Unsupported(_) => WZ_ERR_UNSUPPORTED,
        Error::Config { .. } => WZ_ERR_CONFIG,
        Error::Io(_) => WZ_ERR_IO,
    }
}

struct Fail(i32, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(code(&e), e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(WZ_ERR_NULL, format!("{what} is null"))
}

/// Runs `f`, translating errors and panics into status codes.
fn guard(f: impl FnOnce() -> Result<(), Fail>) -> i32 {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            WZ_OK
        }
        Ok(Err(Fail(c, msg))) => {
            set_error(msg);
            c
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("internal panic: {msg}"));
            WZ_ERR_PANIC
        }
    }
}

unsafe fn input<'a>(ptr: *const f64, len: usize, what: &str) -> Result<&'a [f64], Fail> {
    if len == 0 {
        return Ok(&[]);
    }
    if ptr.is_null() {
        return Err(null(what));
    }
    Ok(slice::from_raw_parts(ptr, len))
}

unsafe fn output<'a>(ptr: *mut f64, len: usize, what: &str) -> Result<&'a mut [f64], Fail> {
    if len == 0 {
        return Ok(&mut []);
    }
    if ptr.is_null() {
        return Err(null(what));
    }
    Ok(slice::from_raw_parts_mut(ptr, len))
}

unsafe fn system<'a>(sys: *const WzSystem) -> Result<&'a AssembledSystem, Fail> {
    sys.as_ref().map(|s| &s.inner).ok_or_else(|| null("system"))
}

fn check_len(got: usize, want: usize, what: &str) -> Result<(), Fail> {
    if got != want {
        return Err(Fail(WZ_ERR_LENGTH, format!("{what} has length {got}, expected {want}")));
    }
    Ok(())
}

unsafe fn text<'a>(s: *const c_char) -> Result<&'a str, Fail> {
    if s.is_null() {
        return Err(null("string"));
    }
    CStr::from_ptr(s)
        .to_str()
        .map_err(|_| Fail(WZ_ERR_INVALID, "string is not UTF-8".into()))
}

/// Copies the last error message of this thread into `buf` (NUL-terminated,
/// truncated to `len`). Returns the full message length without the NUL, or 0
/// if the last call succeeded.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn wz_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let e = e.borrow();
        let Some(msg) = e.as_ref() else { return 0 };
        let bytes = msg.as_bytes();
        if !buf.is_null() && len > 0 {
            let n = bytes.len().min(len - 1);
            ptr::copy_nonoverlapping(bytes.as_ptr() as *const c_char, buf, n);
            *buf.add(n) = 0;
        }
        bytes.len()
    })
}

/// Assembles a power-law problem `a = |x - x0|^k` (`k = 0`: `a ≡ 1`).
///
/// # Safety
/// `out` must be a valid pointer; on success it receives a new handle.
#[no_mangle]
#[allow(clippy::too_many_arguments)]
pub unsafe extern "C" fn wz_system_assemble(
    form: i32,
    x0: f64,
    k: f64,
    n: usize,
    grading: f64,
    beta0: f64,
    beta1: f64,
    gamma0: f64,
    gamma1: f64,
    out: *mut *mut WzSystem,
) -> i32 {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let form = match form {
            WZ_FORM_DIVERGENCE => OperatorForm::Divergence,
            WZ_FORM_NONDIVERGENCE => OperatorForm::NonDivergence,
            other => return Err(Fail(WZ_ERR_INVALID, format!("unknown form {other}"))),
        };
        let coeff = if k == 0.0 {
            DegenerateCoefficient::constant(1.0, x0)?
        } else {
            DegenerateCoefficient::power_profile(x0, k)?
        };
        let params = WentzellParams::new(beta0, beta1, gamma0, gamma1)?;
        let mesh = build_mesh(n, x0, grading)?;
        let inner = assemble(form, &mesh, &coeff, &params)?;
        *out = Box::into_raw(Box::new(WzSystem { inner }));
        Ok(())
    })
}

/// Assembles the problem described by a JSON config (the CLI format).
///
/// # Safety
/// `json` must be a NUL-terminated string, `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn wz_system_from_config(json: *const c_char, out: *mut *mut WzSystem) -> i32 {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let cfg = parse_config(text(json)?)?;
        let inner = cfg.problem.assemble()?;
        *out = Box::into_raw(Box::new(WzSystem { inner }));
        Ok(())
    })
}

/// # Safety
/// `sys` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn wz_system_free(sys: *mut WzSystem) {
    if !sys.is_null() {
        drop(Box::from_raw(sys));
    }
}

/// Number of free dofs, 0 for a null handle.
///
/// # Safety
/// `sys` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn wz_system_size(sys: *const WzSystem) -> usize {
    sys.as_ref().map_or(0, |s| s.inner.size())
}

/// One of `WZ_CLASS_*`, or -1 for a null handle.
///
/// # Safety
/// `sys` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn wz_system_class(sys: *const WzSystem) -> i32 {
    match sys.as_ref().map(|s| s.inner.class) {
        Some(DegeneracyClass::Weak) => WZ_CLASS_WEAK,
        Some(DegeneracyClass::Strong) => WZ_CLASS_STRONG,
        Some(DegeneracyClass::Nondegenerate) => WZ_CLASS_NONDEGENERATE,
        None => -1,
    }
}

/// Squared norm `uᵀMu` and energy `uᵀKu` of a dof vector.
///
/// # Safety
/// `u` must hold `len` values; `norm_sq` and `energy` must be valid or null.
#[no_mangle]
pub unsafe extern "C" fn wz_system_norms(
    sys: *const WzSystem,
    u: *const f64,
    len: usize,
    norm_sq: *mut f64,
    energy: *mut f64,
) -> i32 {
    guard(|| {
        let s = system(sys)?;
        check_len(len, s.size(), "u")?;
        let u = input(u, len, "u")?;
        if let Some(p) = norm_sq.as_mut() {
            *p = s.mass_norm_sq(u);
        }
        if let Some(p) = energy.as_mut() {
            *p = s.energy_value(u);
        }
        Ok(())
    })
}

/// Hermite interpolant of the polynomial `Σ coeffs[i] xⁱ`.
///
/// # Safety
/// `coeffs` must hold `ncoeffs` values and `u` must hold `len` writable values.
#[no_mangle]
pub unsafe extern "C" fn wz_system_interpolate(
    sys: *const WzSystem,
    coeffs: *const f64,
    ncoeffs: usize,
    u: *mut f64,
    len: usize,
) -> i32 {
    guard(|| {
        let s = system(sys)?;
        check_len(len, s.size(), "u")?;
        let c = input(coeffs, ncoeffs, "coeffs")?;
        let v = s.interpolate(|x| {
            let (mut p, mut dp) = (0.0, 0.0);
            for &ck in c.iter().rev() {
                dp = dp * x + p;
                p = p * x + ck;
            }
            (p, dp)
        });
        output(u, len, "u")?.copy_from_slice(&v);
        Ok(())
    })
}

/// Solves `(λM + K) u = M f`; the relative residual goes to `residual` if
/// non-null.
///
/// # Safety
/// `f` and `u` must each hold `len` values; `residual` must be valid or null.
#[no_mangle]
pub unsafe extern "C" fn wz_resolvent_solve(
    sys: *const WzSystem,
    lambda: f64,
    f: *const f64,
    u: *mut f64,
    len: usize,
    residual: *mut f64,
) -> i32 {
    guard(|| {
        let s = system(sys)?;
        check_len(len, s.size(), "f")?;
        let f = input(f, len, "f")?;
        let sol = resolvent_solve(s, lambda, f)?;
        if let Some(r) = residual.as_mut() {
            *r = resolvent_residual(s, lambda, f, &sol);
        }
        output(u, len, "u")?.copy_from_slice(&sol);
        Ok(())
    })
}

/// Integrates the problem of a JSON config (the CLI format).
///
/// # Safety
/// `json` must be a NUL-terminated string, `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn wz_run_config(json: *const c_char, out: *mut *mut WzTrajectory) -> i32 {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let cfg = parse_config(text(json)?)?;
        let system = cfg.problem.assemble()?;
        let inner = run_on(&cfg.problem, &system)?;
        *out = Box::into_raw(Box::new(WzTrajectory { inner }));
        Ok(())
    })
}

/// # Safety
/// `traj` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn wz_trajectory_free(traj: *mut WzTrajectory) {
    if !traj.is_null() {
        drop(Box::from_raw(traj));
    }
}

/// Number of stored states (steps + 1), 0 for a null handle.
///
/// # Safety
/// `traj` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn wz_trajectory_len(traj: *const WzTrajectory) -> usize {
    traj.as_ref().map_or(0, |t| t.inner.states.len())
}

/// Time, squared norm and energy of state `index`. Null outputs are skipped.
///
/// # Safety
/// `traj` must be a live handle; outputs must be valid or null.
#[no_mangle]
pub unsafe extern "C" fn wz_trajectory_state(
    traj: *const WzTrajectory,
    index: usize,
    t: *mut f64,
    norm_sq: *mut f64,
    energy: *mut f64,
) -> i32 {
    guard(|| {
        let tr = &traj.as_ref().ok_or_else(|| null("trajectory"))?.inner;
        let st = tr
            .states
            .get(index)
            .ok_or_else(|| Fail(WZ_ERR_LENGTH, format!("state {index} out of range")))?;
        for (p, v) in [(t, st.t), (norm_sq, st.norm_mu_sq), (energy, st.energy)] {
            if let Some(p) = p.as_mut() {
                *p = v;
            }
        }
        Ok(())
    })
}

/// Dofs of state `index` into `u` (length [`wz_system_size`]).
///
/// # Safety
/// `traj` must be a live handle and `u` must hold `len` writable values.
#[no_mangle]
pub unsafe extern "C" fn wz_trajectory_dofs(
    traj: *const WzTrajectory,
    index: usize,
    u: *mut f64,
    len: usize,
) -> i32 {
    guard(|| {
        let tr = &traj.as_ref().ok_or_else(|| null("trajectory"))?.inner;
        let st = tr
            .states
            .get(index)
            .ok_or_else(|| Fail(WZ_ERR_LENGTH, format!("state {index} out of range")))?;
        check_len(len, st.dofs.len(), "u")?;
        output(u, len, "u")?.copy_from_slice(&st.dofs);
        Ok(())
    })
}

/// Contraction and energy-bound flags (1 = holds).
///
/// # Safety
/// `traj` must be a live handle; outputs must be valid or null.
#[no_mangle]
pub unsafe extern "C" fn wz_trajectory_checks(
    traj: *const WzTrajectory,
    contraction_ok: *mut i32,
    energy_bound_ok: *mut i32,
) -> i32 {
    guard(|| {
        let tr = &traj.as_ref().ok_or_else(|| null("trajectory"))?.inner;
        if let Some(p) = contraction_ok.as_mut() {
            *p = tr.contraction_ok as i32;
        }
        if let Some(p) = energy_bound_ok.as_mut() {
            *p = tr.energy_bound_ok() as i32;
        }
        Ok(())
    })
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn wz_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}
