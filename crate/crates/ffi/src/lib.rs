//! C ABI over `fracspec`. Every call returns a [`FracspecStatus`]; on failure the message
//! is available from [`fracspec_last_error_message`] on the same thread.
//!
//! Arrays are passed as pointer plus length and must hold exactly `dof_count` entries.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use fracspec::coeff::{CoefficientParams, RadialBump};
use fracspec::extension::{conormal_recover, extend_at, ExtensionResolution};
use fracspec::grid::Boundary;
use fracspec::problem::{Problem, Setup};
use fracspec::spectral::{fractional_power, unitary_propagate};
use fracspec::ucprobe::{nonlocality_probe, VanishingSpec};
use fracspec::Error;
use nalgebra::DVector;
use num_complex::Complex64;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FracspecStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    LengthMismatch = 3,
    Numerical = 4,
    Panic = 5,
}

/// Grid and coefficient description. `boundary`: 0 Dirichlet, 1 periodic.
/// `coefficients`: 0 identity, 1 isotropic radial bump `I + scale·exp(-|x|²/width²)·I`.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct FracspecProblem {
    pub dim: u32,
    pub n: u32,
    pub half_length: f64,
    pub boundary: u32,
    pub coefficients: u32,
    pub bump_scale: f64,
    pub bump_width: f64,
}

/// A diagonalized operator.
pub struct FracspecOperator {
    setup: Setup,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).expect("nul bytes removed"));
}

struct Failure(FracspecStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match e {
            Error::DimensionMismatch { .. } => FracspecStatus::LengthMismatch,
            Error::InvalidGrid(_)
            | Error::InvalidParams(_)
            | Error::InvalidArgument(_)
            | Error::InvalidSpec(_)
            | Error::TooLarge { .. }
            | Error::MissingGrid
            | Error::Config(_) => FracspecStatus::InvalidArgument,
            _ => FracspecStatus::Numerical,
        };
        Failure(status, e.to_string())
    }
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> FracspecStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            FracspecStatus::Ok
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
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("panic: {msg}"));
            FracspecStatus::Panic
        }
    }
}

fn null(what: &str) -> Failure {
    Failure(FracspecStatus::NullPointer, format!("{what} is null"))
}

unsafe fn operator<'a>(op: *const FracspecOperator) -> Result<&'a FracspecOperator, Failure> {
    op.as_ref().ok_or_else(|| null("operator"))
}

unsafe fn input<'a>(p: *const f64, len: usize, op: &FracspecOperator, what: &str) -> Result<&'a [f64], Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    check_len(len, op)?;
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn output<'a>(p: *mut f64, len: usize, op: &FracspecOperator, what: &str) -> Result<&'a mut [f64], Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    check_len(len, op)?;
    Ok(std::slice::from_raw_parts_mut(p, len))
}

fn check_len(len: usize, op: &FracspecOperator) -> Result<(), Failure> {
    let dofs = op.setup.decomposition.dof_count();
    if len != dofs {
        return Err(Failure(
            FracspecStatus::LengthMismatch,
            format!("array length {len} does not match {dofs} degrees of freedom"),
        ));
    }
    Ok(())
}

fn problem(spec: &FracspecProblem) -> Result<Problem, Failure> {
    let bad = |m: String| Failure(FracspecStatus::InvalidArgument, m);
    let boundary = match spec.boundary {
        0 => Boundary::Dirichlet,
        1 => Boundary::Periodic,
        b => return Err(bad(format!("boundary must be 0 or 1, got {b}"))),
    };
    let dim = spec.dim as usize;
    let params = match spec.coefficients {
        0 => CoefficientParams::Identity,
        1 => CoefficientParams::RadialBump(RadialBump::isotropic(dim, spec.bump_scale, spec.bump_width)),
        c => return Err(bad(format!("coefficients must be 0 or 1, got {c}"))),
    };
    Ok(Problem::new(dim, spec.n as usize, spec.half_length, boundary, params))
}

/// Assembles and diagonalizes the operator. Release it with [`fracspec_operator_free`].
///
/// # Safety
/// `spec` must point to a valid `FracspecProblem`; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fracspec_operator_new(
    spec: *const FracspecProblem,
    out: *mut *mut FracspecOperator,
) -> FracspecStatus {
    guard(|| {
        let spec = spec.as_ref().ok_or_else(|| null("spec"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let setup = problem(spec)?.build()?;
        *out = Box::into_raw(Box::new(FracspecOperator { setup }));
        Ok(())
    })
}

/// # Safety
/// `op` must come from [`fracspec_operator_new`] and not be used afterwards. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn fracspec_operator_free(op: *mut FracspecOperator) {
    if !op.is_null() {
        drop(Box::from_raw(op));
    }
}

/// # Safety
/// `op` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fracspec_operator_dof_count(op: *const FracspecOperator, out: *mut usize) -> FracspecStatus {
    guard(|| {
        let op = operator(op)?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        *out = op.setup.decomposition.dof_count();
        Ok(())
    })
}

/// Eigenvalues in ascending order.
///
/// # Safety
/// `op` must be a live handle; `out` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn fracspec_operator_eigenvalues(
    op: *const FracspecOperator,
    out: *mut f64,
    len: usize,
) -> FracspecStatus {
    guard(|| {
        let op = operator(op)?;
        let out = output(out, len, op, "out")?;
        out.copy_from_slice(op.setup.decomposition.eigenvalues().as_slice());
        Ok(())
    })
}

/// `out = L^alpha f`, `alpha >= 0`.
///
/// # Safety
/// `op` must be a live handle; `f` and `out` must hold `len` doubles and may not overlap.
#[no_mangle]
pub unsafe extern "C" fn fracspec_fractional_power(
    op: *const FracspecOperator,
    alpha: f64,
    f: *const f64,
    out: *mut f64,
    len: usize,
) -> FracspecStatus {
    guard(|| {
        let op = operator(op)?;
        let f = DVector::from_column_slice(input(f, len, op, "f")?);
        let g = fractional_power(&op.setup.decomposition, alpha, &f)?;
        output(out, len, op, "out")?.copy_from_slice(g.as_slice());
        Ok(())
    })
}

/// `out = exp(i t L^alpha) f` with real and imaginary parts in separate arrays.
///
/// # Safety
/// `op` must be a live handle; all four arrays must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn fracspec_unitary_propagate(
    op: *const FracspecOperator,
    alpha: f64,
    t: f64,
    f_re: *const f64,
    f_im: *const f64,
    out_re: *mut f64,
    out_im: *mut f64,
    len: usize,
) -> FracspecStatus {
    guard(|| {
        let op = operator(op)?;
        let re = input(f_re, len, op, "f_re")?;
        let im = input(f_im, len, op, "f_im")?;
        let f = DVector::from_iterator(len, re.iter().zip(im).map(|(&a, &b)| Complex64::new(a, b)));
        let g = unitary_propagate(&op.setup.decomposition, alpha, t, &f)?;
        let out_re = output(out_re, len, op, "out_re")?;
        for (o, z) in out_re.iter_mut().zip(g.iter()) {
            *o = z.re;
        }
        let out_im = output(out_im, len, op, "out_im")?;
        for (o, z) in out_im.iter_mut().zip(g.iter()) {
            *o = z.im;
        }
        Ok(())
    })
}

/// Extends `u` at the default resolution and recovers `L^alpha u` from the weighted normal
/// derivative at `y = 0`, `0 < alpha < 1`.
///
/// # Safety
/// `op` must be a live handle; `u` and `out` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn fracspec_conormal_recover(
    op: *const FracspecOperator,
    alpha: f64,
    u: *const f64,
    out: *mut f64,
    len: usize,
) -> FracspecStatus {
    guard(|| {
        let op = operator(op)?;
        let u = DVector::from_column_slice(input(u, len, op, "u")?);
        let dec = &op.setup.decomposition;
        let ext = extend_at(dec, alpha, &u, &ExtensionResolution::for_spectrum(dec))?;
        let g = conormal_recover(&ext)?;
        output(out, len, op, "out")?.copy_from_slice(g.as_slice());
        Ok(())
    })
}

/// `‖L^alpha f‖ on Θ / ‖L^alpha f‖` for the standard bump `f` on `[1, 2]^n` and
/// `Θ = (-1, 0)^n`, `0 < alpha < 1`.
///
/// # Safety
/// `op` must be a live handle; `ratio` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fracspec_nonlocality_probe(
    op: *const FracspecOperator,
    alpha: f64,
    ratio: *mut f64,
) -> FracspecStatus {
    guard(|| {
        let op = operator(op)?;
        let ratio = ratio.as_mut().ok_or_else(|| null("ratio"))?;
        let spec = VanishingSpec::standard(op.setup.grid.dim());
        *ratio = nonlocality_probe(&op.setup.decomposition, alpha, &spec)?.ratio;
        Ok(())
    })
}

/// Message of the last failed call on this thread, empty after a successful one. The
/// pointer stays valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn fracspec_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}
