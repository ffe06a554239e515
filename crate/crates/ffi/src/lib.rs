//! C interface to `magnitude-core`.
//!
//! Objects cross the boundary as opaque handles created by `*_new` or
//! `*_from_*` functions and released by the matching `*_free`. Every
//! fallible call returns a [`MagStatus`]; on failure the message is kept
//! per thread and can be read with [`mag_last_error`]. Strings returned to
//! the caller are released with [`mag_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use magnitude_core::domain::DomainSpec;
use magnitude_core::geometry::functionals_quadrature;
use magnitude_core::metric::{self, FiniteMetricSpace};
use magnitude_core::sampler::{estimate_magnitude, Strategy};
use magnitude_core::symbol::{self, PolyhomSymbol};
use magnitude_core::Error;

/// Result of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MagStatus {
    Ok = 0,
    /// A required pointer argument was null.
    NullPointer = 1,
    /// Malformed arguments, unsupported domains or shapes.
    InvalidInput = 2,
    /// A kernel solve failed: not positive definite, ill-conditioned or
    /// inaccurate.
    SolveFailed = 3,
    DegenerateMesh = 4,
    MissingLambda = 5,
    /// Symbol calculus refused the request.
    SymbolError = 6,
    /// A caller-provided buffer is too small.
    BufferTooSmall = 7,
    /// Internal panic; the library state is unchanged.
    Panic = 8,
}

impl From<&Error> for MagStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::CutoffTooLow { .. }
            | Error::NotElliptic(_)
            | Error::UnboundScalar(_)
            | Error::JetTooShallow { .. }
            | Error::UnsupportedSymbol(_) => MagStatus::SymbolError,
            _ => match e.exit_code() {
                3 => MagStatus::SolveFailed,
                4 => MagStatus::DegenerateMesh,
                5 => MagStatus::MissingLambda,
                _ => MagStatus::InvalidInput,
            },
        }
    }
}

/// A finite metric space.
pub struct MagSpace(FiniteMetricSpace);

/// A polyhomogeneous symbol.
pub struct MagSymbol(PolyhomSymbol);

/// Volume, boundary area, integrated mean curvature and Willmore energy.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct MagFunctionals {
    pub volume: f64,
    pub area: f64,
    pub mean_curvature_integral: f64,
    pub willmore: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn fail(status: MagStatus, msg: impl Into<String>) -> MagStatus {
    set_error(msg.into());
    status
}

/// Runs `f`, recording errors and panics for [`mag_last_error`].
fn guard(f: impl FnOnce() -> Result<(), MagStatus>) -> MagStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => MagStatus::Ok,
        Ok(Err(s)) => s,
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            fail(MagStatus::Panic, msg)
        }
    }
}

fn core<T>(r: magnitude_core::Result<T>) -> Result<T, MagStatus> {
    r.map_err(|e| fail(MagStatus::from(&e), e.to_string()))
}

unsafe fn text<'a>(s: *const c_char) -> Result<&'a str, MagStatus> {
    if s.is_null() {
        return Err(fail(MagStatus::NullPointer, "null string"));
    }
    CStr::from_ptr(s)
        .to_str()
        .map_err(|_| fail(MagStatus::InvalidInput, "string is not UTF-8"))
}

unsafe fn out_ref<'a, T>(p: *mut T) -> Result<&'a mut T, MagStatus> {
    p.as_mut().ok_or_else(|| fail(MagStatus::NullPointer, "null output pointer"))
}

unsafe fn handle<'a, T>(p: *const T) -> Result<&'a T, MagStatus> {
    p.as_ref().ok_or_else(|| fail(MagStatus::NullPointer, "null handle"))
}

fn into_c_string(s: String) -> Result<*mut c_char, MagStatus> {
    CString::new(s)
        .map(CString::into_raw)
        .map_err(|_| fail(MagStatus::InvalidInput, "string contains NUL"))
}

/// Message of the last failed call on this thread, or null. Valid until the
/// next call into the library on the same thread.
#[no_mangle]
pub extern "C" fn mag_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn mag_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Releases a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn mag_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Space of `n` points in `R^dim`, coordinates row-major in `coords`.
///
/// # Safety
/// `coords` must point to `n * dim` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mag_space_from_points(
    coords: *const f64,
    n: usize,
    dim: usize,
    out: *mut *mut MagSpace,
) -> MagStatus {
    guard(|| {
        let out = out_ref(out)?;
        if coords.is_null() {
            return Err(fail(MagStatus::NullPointer, "null coordinates"));
        }
        let len = n
            .checked_mul(dim)
            .ok_or_else(|| fail(MagStatus::InvalidInput, "n * dim overflows"))?;
        let c = std::slice::from_raw_parts(coords, len).to_vec();
        let space = core(FiniteMetricSpace::from_coords(dim, c))?;
        *out = Box::into_raw(Box::new(MagSpace(space)));
        Ok(())
    })
}

/// Space from a row-major `n × n` distance matrix.
///
/// # Safety
/// `dist` must point to `n * n` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mag_space_from_distances(
    dist: *const f64,
    n: usize,
    out: *mut *mut MagSpace,
) -> MagStatus {
    guard(|| {
        let out = out_ref(out)?;
        if dist.is_null() {
            return Err(fail(MagStatus::NullPointer, "null distance matrix"));
        }
        let flat = std::slice::from_raw_parts(dist, n * n);
        let rows: Vec<Vec<f64>> = flat.chunks(n.max(1)).map(<[f64]>::to_vec).collect();
        let space = core(FiniteMetricSpace::from_distance_matrix(None, &rows))?;
        *out = Box::into_raw(Box::new(MagSpace(space)));
        Ok(())
    })
}

/// # Safety
/// `space` must come from this library and not have been freed. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn mag_space_free(space: *mut MagSpace) {
    if !space.is_null() {
        drop(Box::from_raw(space));
    }
}

/// Number of points, 0 for a null handle.
///
/// # Safety
/// `space` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn mag_space_len(space: *const MagSpace) -> usize {
    space.as_ref().map_or(0, |s| s.0.len())
}

/// Magnitude of `space` with its metric scaled by `r`.
///
/// # Safety
/// `space` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mag_magnitude(space: *const MagSpace, r: f64, out: *mut f64) -> MagStatus {
    guard(|| {
        let s = handle(space)?;
        let out = out_ref(out)?;
        *out = core(metric::magnitude(&s.0, r))?;
        Ok(())
    })
}

/// Weighting at scale `r` into `weights`, which holds `len` doubles.
///
/// # Safety
/// `space` must be a live handle; `weights` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn mag_weighting(
    space: *const MagSpace,
    r: f64,
    weights: *mut f64,
    len: usize,
) -> MagStatus {
    guard(|| {
        let s = handle(space)?;
        if weights.is_null() {
            return Err(fail(MagStatus::NullPointer, "null weight buffer"));
        }
        if len < s.0.len() {
            return Err(fail(
                MagStatus::BufferTooSmall,
                format!("weight buffer holds {len}, need {}", s.0.len()),
            ));
        }
        let w = core(metric::weighting(&s.0, r))?;
        std::slice::from_raw_parts_mut(weights, w.w.len()).copy_from_slice(&w.w);
        Ok(())
    })
}

/// Sampled lower bound for the magnitude of a domain (JSON or a bare name)
/// at scale `r`, refined with farthest-point samples up to `n_max` points.
///
/// # Safety
/// `domain` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mag_estimate_domain(
    domain: *const c_char,
    r: f64,
    tol: f64,
    n_max: usize,
    seed: u64,
    out: *mut f64,
) -> MagStatus {
    guard(|| {
        let spec: DomainSpec = core(text(domain)?.parse())?;
        let out = out_ref(out)?;
        let rep = core(estimate_magnitude(&spec, r, tol, n_max, Strategy::FarthestPoint, seed))?;
        *out = rep.final_value;
        Ok(())
    })
}

/// Boundary functionals of a domain by quadrature of `quad_order` nodes per axis.
///
/// # Safety
/// `domain` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mag_geometry(
    domain: *const c_char,
    quad_order: usize,
    out: *mut MagFunctionals,
) -> MagStatus {
    guard(|| {
        let spec: DomainSpec = core(text(domain)?.parse())?;
        let out = out_ref(out)?;
        let g = core(functionals_quadrature(&spec, quad_order))?;
        *out = MagFunctionals {
            volume: g.volume,
            area: g.area,
            mean_curvature_integral: g.mean_curvature_integral,
            willmore: g.willmore,
        };
        Ok(())
    })
}

/// Parses a symbol from its JSON form.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mag_symbol_from_json(json: *const c_char, out: *mut *mut MagSymbol) -> MagStatus {
    guard(|| {
        let s = core(PolyhomSymbol::from_json(text(json)?))?;
        *out_ref(out)? = Box::into_raw(Box::new(MagSymbol(s)));
        Ok(())
    })
}

/// JSON form of a symbol; release with [`mag_string_free`].
///
/// # Safety
/// `sym` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mag_symbol_to_json(sym: *const MagSymbol, out: *mut *mut c_char) -> MagStatus {
    guard(|| {
        let s = handle(sym)?;
        let out = out_ref(out)?;
        *out = into_c_string(core(s.0.to_json())?)?;
        Ok(())
    })
}

/// # Safety
/// `sym` must come from this library and not have been freed. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn mag_symbol_free(sym: *mut MagSymbol) {
    if !sym.is_null() {
        drop(Box::from_raw(sym));
    }
}

/// Composition `a ∘ b` down to degree `cutoff`.
///
/// # Safety
/// `a` and `b` must be live handles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mag_symbol_product(
    a: *const MagSymbol,
    b: *const MagSymbol,
    cutoff: i32,
    out: *mut *mut MagSymbol,
) -> MagStatus {
    guard(|| {
        let (a, b) = (handle(a)?, handle(b)?);
        let out = out_ref(out)?;
        let c = core(symbol::symbol_product(&a.0, &b.0, cutoff))?;
        *out = Box::into_raw(Box::new(MagSymbol(c)));
        Ok(())
    })
}

/// Parametrix of `a` down to degree `cutoff`.
///
/// # Safety
/// `a` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mag_symbol_parametrix(
    a: *const MagSymbol,
    cutoff: i32,
    out: *mut *mut MagSymbol,
) -> MagStatus {
    guard(|| {
        let a = handle(a)?;
        let out = out_ref(out)?;
        let b = core(symbol::parametrix(&a.0, cutoff))?;
        *out = Box::into_raw(Box::new(MagSymbol(b)));
        Ok(())
    })
}

/// Writes 1 to `out` when every retained term of `sym` matches the identity.
///
/// # Safety
/// `sym` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mag_symbol_is_identity(sym: *const MagSymbol, out: *mut i32) -> MagStatus {
    guard(|| {
        let s = handle(sym)?;
        *out_ref(out)? = i32::from(symbol::is_identity(&s.0));
        Ok(())
    })
}

/// Order of a symbol, 0 for a null handle.
///
/// # Safety
/// `sym` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn mag_symbol_order(sym: *const MagSymbol) -> i32 {
    sym.as_ref().map_or(0, |s| s.0.order())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn status_mapping() {
        assert_eq!(MagStatus::from(&Error::MissingLambda), MagStatus::MissingLambda);
        assert_eq!(MagStatus::from(&Error::NotElliptic("x".into())), MagStatus::SymbolError);
        assert_eq!(
            MagStatus::from(&Error::IllConditioned { condition: 1e15, limit: 1e14 }),
            MagStatus::SolveFailed
        );
    }

    #[test]
    fn panics_become_status() {
        let s = guard(|| panic!("boom"));
        assert_eq!(s, MagStatus::Panic);
        let msg = unsafe { CStr::from_ptr(mag_last_error()) }.to_str().unwrap();
        assert_eq!(msg, "boom");
    }
}
