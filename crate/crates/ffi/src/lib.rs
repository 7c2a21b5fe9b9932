//! C interface to `intflux`.
//!
//! Every function returns an [`IntfluxStatus`]. On failure a message is kept
//! per thread and can be copied out with [`intflux_last_error`]. Handles are
//! opaque and released with their `_free` function; strings returned by the
//! library are released with [`intflux_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use intflux::geom::{Aabb, GridSpec, Vec3};
use intflux::metric::{metric_upper_bound, Density, DomainSpec};
use intflux::minimize::{minimize_charged, Charge, ChargeSpec, SolverOptions};
use intflux::norms::{lp_norm, IntegrationOptions, Region};
use intflux::synthesis::{counterexample_field, test_dictionary, Dipole, DipoleSpec, TargetMeasure, DEFAULT_SEGMENT_CAP};
use intflux::{fld, Error, FieldSource, SphereQuadrature};

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum IntfluxStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidInput = 2,
    SingularPoint = 3,
    OutOfDomain = 4,
    NonFinite = 5,
    ResourceLimit = 6,
    Incompatible = 7,
    NoConvergence = 8,
    Io = 9,
    Format = 10,
    Panic = 11,
}

/// Opaque vector field.
pub struct IntfluxField {
    inner: FieldSource,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> IntfluxStatus {
    match e {
        Error::SingularPoint(..) | Error::SingularOnSphere { .. } => IntfluxStatus::SingularPoint,
        Error::OutOfDomain(..) => IntfluxStatus::OutOfDomain,
        Error::NonFinite(..) => IntfluxStatus::NonFinite,
        Error::ResourceLimit { .. } => IntfluxStatus::ResourceLimit,
        Error::Incompatible(_) => IntfluxStatus::Incompatible,
        Error::NoConvergence { .. } => IntfluxStatus::NoConvergence,
        Error::Io(_) => IntfluxStatus::Io,
        Error::Format(_) => IntfluxStatus::Format,
        _ => IntfluxStatus::InvalidInput,
    }
}

fn guard(f: impl FnOnce() -> Result<(), IntfluxStatus>) -> IntfluxStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => IntfluxStatus::Ok,
        Ok(Err(s)) => s,
        Err(_) => {
            set_error("internal panic".into());
            IntfluxStatus::Panic
        }
    }
}

fn fail(e: Error) -> IntfluxStatus {
    let s = status_of(&e);
    set_error(e.to_string());
    s
}

fn null() -> IntfluxStatus {
    set_error("null pointer argument".into());
    IntfluxStatus::NullPointer
}

unsafe fn read3(p: *const f64) -> Result<Vec3, IntfluxStatus> {
    if p.is_null() {
        return Err(null());
    }
    let s = std::slice::from_raw_parts(p, 3);
    Ok(Vec3::new(s[0], s[1], s[2]))
}

unsafe fn field_ref<'a>(f: *const IntfluxField) -> Result<&'a FieldSource, IntfluxStatus> {
    f.as_ref().map(|f| &f.inner).ok_or_else(null)
}

unsafe fn put_field(out: *mut *mut IntfluxField, inner: FieldSource) -> Result<(), IntfluxStatus> {
    if out.is_null() {
        return Err(null());
    }
    *out = Box::into_raw(Box::new(IntfluxField { inner }));
    Ok(())
}

unsafe fn put_string(out: *mut *mut c_char, s: String) -> Result<(), IntfluxStatus> {
    if out.is_null() {
        return Err(null());
    }
    *out = CString::new(s).map_err(|e| fail(Error::Format(e.to_string())))?.into_raw();
    Ok(())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn intflux_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Copies the calling thread's last error message into `buf` (truncated and
/// NUL-terminated) and returns the full message length. Returns 0 when no
/// error is recorded.
///
/// # Safety
/// `buf` must be null or valid for `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn intflux_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| match &*e.borrow() {
        None => 0,
        Some(msg) => {
            let bytes = msg.as_bytes();
            if !buf.is_null() && len > 0 {
                let n = bytes.len().min(len - 1);
                ptr::copy_nonoverlapping(bytes.as_ptr() as *const c_char, buf, n);
                *buf.add(n) = 0;
            }
            bytes.len()
        }
    })
}

/// Unit monopole at `center[3]`.
///
/// # Safety
/// `center` must point to 3 doubles and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn intflux_field_monopole(center: *const f64, out: *mut *mut IntfluxField) -> IntfluxStatus {
    guard(|| {
        let c = read3(center)?;
        put_field(out, FieldSource::monopole(c))
    })
}

/// Dipole from `b` to `a`; `rho <= 0` selects the default width.
///
/// # Safety
/// `a` and `b` must point to 3 doubles and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn intflux_field_dipole(
    a: *const f64,
    b: *const f64,
    rho: f64,
    out: *mut *mut IntfluxField,
) -> IntfluxStatus {
    guard(|| {
        let mut spec = DipoleSpec::new(read3(a)?, read3(b)?);
        if rho > 0.0 {
            spec = spec.with_rho(rho);
        }
        let d = Dipole::new(&spec).map_err(fail)?;
        put_field(out, FieldSource::Dipole(d))
    })
}

/// Lattice counterexample of level `k` for the constant density.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn intflux_field_counterexample(k: u32, out: *mut *mut IntfluxField) -> IntfluxStatus {
    guard(|| {
        let c = counterexample_field(k, &TargetMeasure::ConstantX, DEFAULT_SEGMENT_CAP).map_err(fail)?;
        put_field(out, c.field())
    })
}

/// Field sampled in an FLD1 file.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn intflux_field_load(path: *const c_char, out: *mut *mut IntfluxField) -> IntfluxStatus {
    guard(|| {
        if path.is_null() {
            return Err(null());
        }
        let p = CStr::from_ptr(path).to_str().map_err(|e| fail(Error::InvalidInput(e.to_string())))?;
        let g = fld::load(p).map_err(fail)?;
        put_field(out, FieldSource::Grid(g))
    })
}

/// New field `s * field`; the input handle stays valid.
///
/// # Safety
/// `field` must be a live handle and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn intflux_field_scaled(
    field: *const IntfluxField,
    s: f64,
    out: *mut *mut IntfluxField,
) -> IntfluxStatus {
    guard(|| {
        let f = field_ref(field)?.clone();
        put_field(out, f.scaled(s))
    })
}

/// # Safety
/// `field` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn intflux_field_free(field: *mut IntfluxField) {
    if !field.is_null() {
        drop(Box::from_raw(field));
    }
}

/// # Safety
/// `field` must be a live handle, `point` 3 readable and `out` 3 writable
/// doubles.
#[no_mangle]
pub unsafe extern "C" fn intflux_field_evaluate(
    field: *const IntfluxField,
    point: *const f64,
    out: *mut f64,
) -> IntfluxStatus {
    guard(|| {
        let f = field_ref(field)?;
        let v = f.evaluate(&read3(point)?).map_err(fail)?;
        if out.is_null() {
            return Err(null());
        }
        std::slice::from_raw_parts_mut(out, 3).copy_from_slice(v.as_slice());
        Ok(())
    })
}

/// Flux through the sphere `|x - center| = radius` at quadrature `order`.
///
/// # Safety
/// `field` must be a live handle, `center` 3 readable doubles and `out`
/// writable.
#[no_mangle]
pub unsafe extern "C" fn intflux_sphere_flux(
    field: *const IntfluxField,
    center: *const f64,
    radius: f64,
    order: usize,
    out: *mut f64,
) -> IntfluxStatus {
    guard(|| {
        let f = field_ref(field)?;
        let c = read3(center)?;
        if order < 2 {
            return Err(fail(Error::InvalidInput("order must be at least 2".into())));
        }
        let v = intflux::slicing::sphere_flux(f, &c, radius, &SphereQuadrature::shared(order)).map_err(fail)?;
        if out.is_null() {
            return Err(null());
        }
        *out = v;
        Ok(())
    })
}

/// `‖field‖_{L^p}` over the box `[lo, hi]`.
///
/// # Safety
/// `field` must be a live handle, `lo` and `hi` 3 readable doubles and `out`
/// writable.
#[no_mangle]
pub unsafe extern "C" fn intflux_lp_norm_box(
    field: *const IntfluxField,
    p: f64,
    lo: *const f64,
    hi: *const f64,
    out: *mut f64,
) -> IntfluxStatus {
    guard(|| {
        let f = field_ref(field)?;
        let (lo, hi) = (read3(lo)?, read3(hi)?);
        let b = Aabb::new(lo.into(), hi.into()).map_err(fail)?;
        let v = lp_norm(f, p, &Region::Box(b), &IntegrationOptions::default()).map_err(fail)?;
        if out.is_null() {
            return Err(null());
        }
        *out = v;
        Ok(())
    })
}

/// JSON report of the level-`k` counterexample for `p = 1, 1.2`.
///
/// # Safety
/// `out` must be writable; free the string with [`intflux_string_free`].
#[no_mangle]
pub unsafe extern "C" fn intflux_counterexample_report(k: u32, out: *mut *mut c_char) -> IntfluxStatus {
    guard(|| {
        let c = counterexample_field(k, &TargetMeasure::ConstantX, DEFAULT_SEGMENT_CAP).map_err(fail)?;
        let rep = c.report(&TargetMeasure::ConstantX, &[1.0, 1.2], &test_dictionary()).map_err(fail)?;
        put_string(out, intflux::output::to_json_string(&rep).map_err(fail)?)
    })
}

/// # Safety
/// `s` must be null or a string returned by this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn intflux_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Slice-metric upper bound between two densities on the periodic `n x n`
/// grid (`n * n` values each, x fastest).
///
/// # Safety
/// `h1` and `h2` must point to `n * n` doubles; `bound` and `gap` must be
/// writable.
#[no_mangle]
pub unsafe extern "C" fn intflux_metric_upper_bound_square(
    n: usize,
    h1: *const f64,
    h2: *const f64,
    p: f64,
    bound: *mut f64,
    gap: *mut i64,
) -> IntfluxStatus {
    guard(|| {
        if h1.is_null() || h2.is_null() || bound.is_null() || gap.is_null() {
            return Err(null());
        }
        let domain = DomainSpec::square(n).map_err(fail)?;
        let len = n.checked_mul(n).ok_or_else(|| fail(Error::InvalidInput("n too large".into())))?;
        let a = Density::Square(std::slice::from_raw_parts(h1, len).to_vec());
        let b = Density::Square(std::slice::from_raw_parts(h2, len).to_vec());
        let m = metric_upper_bound(&a, &b, p, &domain).map_err(fail)?;
        *bound = m.upper_bound;
        *gap = m.integer_gap;
        Ok(())
    })
}

/// Minimizes the smoothed `L^p` energy on an `n³` grid over the unit cube
/// with `count` charges at `points` (3 doubles each). Writes the objective
/// and the final divergence residual.
///
/// # Safety
/// `points` must hold `3 * count` doubles, `charges` `count` integers;
/// `objective` and `residual` must be writable.
#[no_mangle]
pub unsafe extern "C" fn intflux_minimize(
    points: *const f64,
    charges: *const i64,
    count: usize,
    n: usize,
    p: f64,
    objective: *mut f64,
    residual: *mut f64,
) -> IntfluxStatus {
    guard(|| {
        if (count > 0 && (points.is_null() || charges.is_null())) || objective.is_null() || residual.is_null() {
            return Err(null());
        }
        let atoms: Vec<Charge> = (0..count)
            .map(|i| {
                let s = std::slice::from_raw_parts(points.add(3 * i), 3);
                Charge { point: [s[0], s[1], s[2]], charge: *charges.add(i) }
            })
            .collect();
        let grid = GridSpec::spanning(&Aabb::unit_cube(), n).map_err(fail)?;
        let spec = ChargeSpec::new(atoms, grid).map_err(fail)?;
        let (sol, trace) = minimize_charged(&spec, p, &SolverOptions::default()).map_err(fail)?;
        *objective = sol.objective;
        *residual = trace.final_residual();
        Ok(())
    })
}
