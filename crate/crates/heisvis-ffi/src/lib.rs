//! C ABI over the heisvis core: opaque handles, integer status codes, and a
//! thread-local last-error message. The header `include/heisvis.h` is
//! generated by cbindgen at build time.
//!
//! Conventions: every function that can fail returns [`HvStatus`]; outputs
//! go through pointers. Handles are created by `hv_*_new`-style constructors
//! and must be released by the matching `hv_*_free`. Passing a handle to any
//! other thread is fine (they are immutable), but error messages are
//! per-thread. Coordinate arrays use standard coordinates with the center
//! last; matrices are row-major.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use heisvis::classify::{build_isometry, classify, verify_isometry, BoundaryMap, RATIO_RTOL};
use heisvis::derivation::{DerivationSpec, GradedStructure};
use heisvis::error::HeisError;
use heisvis::heis::LieElement;
use heisvis::linalg::Mat;
use heisvis::metric::Quasimetric;
use heisvis::report::parse_spec;

/// Status codes returned by every fallible function.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HvStatus {
    Ok = 0,
    /// A required pointer argument was null.
    NullArgument = 1,
    /// A string argument was not valid UTF-8.
    InvalidUtf8 = 2,
    /// Spec text failed to parse; see hv_last_error_message.
    ParseError = 3,
    /// Input rejected (wrong dimensions, not a derivation, bad scale ...).
    InvalidInput = 4,
    /// A converged computation failed numerically.
    NumericError = 5,
    /// The two structures are not quasiisometrically equivalent.
    NotEquivalent = 6,
    /// An output buffer is shorter than required.
    BufferTooSmall = 7,
    /// A panic was caught at the boundary; state is unspecified.
    InternalPanic = 8,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::new("").unwrap());
}

fn set_error(msg: &str) {
    let sanitized: String = msg.chars().map(|c| if c == '\0' { ' ' } else { c }).collect();
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(sanitized).unwrap());
}

fn status_of(e: &HeisError) -> HvStatus {
    match e {
        HeisError::NotEquivalent(_) => HvStatus::NotEquivalent,
        HeisError::DegeneratePairing(_) => HvStatus::NumericError,
        _ => HvStatus::InvalidInput,
    }
}

fn guarded(f: impl FnOnce() -> HvStatus) -> HvStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(_) => {
            set_error("internal panic crossed the FFI boundary");
            HvStatus::InternalPanic
        }
    }
}

/// A validated graded structure (derivation eigendecomposition plus adapted
/// basis). Opaque; create with hv_structure_from_json/from_matrix, release
/// with hv_structure_free.
pub struct HvStructure {
    gs: GradedStructure,
}

/// A boundary isometry between two equivalent structures. Opaque.
pub struct HvIsometry {
    map: BoundaryMap,
}

/// Message describing the most recent failure on this thread. Valid until
/// the next failing call on the same thread; never null.
#[no_mangle]
pub extern "C" fn hv_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn hv_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

unsafe fn read_str<'a>(ptr: *const c_char) -> Result<&'a str, HvStatus> {
    if ptr.is_null() {
        set_error("null string argument");
        return Err(HvStatus::NullArgument);
    }
    CStr::from_ptr(ptr).to_str().map_err(|_| {
        set_error("string argument is not valid UTF-8");
        HvStatus::InvalidUtf8
    })
}

/// Parse a JSON spec (same schema as the CLI) and build its structure.
/// On success writes a new handle to `out`.
///
/// # Safety
/// `text` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn hv_structure_from_json(
    text: *const c_char,
    out: *mut *mut HvStructure,
) -> HvStatus {
    guarded(|| {
        if out.is_null() {
            set_error("null output pointer");
            return HvStatus::NullArgument;
        }
        let text = match read_str(text) {
            Ok(t) => t,
            Err(s) => return s,
        };
        let parsed = match parse_spec(text) {
            Ok(p) => p,
            Err(e) => {
                set_error(&e.to_string());
                return HvStatus::ParseError;
            }
        };
        match parsed.spec.decompose(1e-9) {
            Ok(gs) => {
                *out = Box::into_raw(Box::new(HvStructure { gs }));
                HvStatus::Ok
            }
            Err(e) => {
                set_error(&e.to_string());
                status_of(&e)
            }
        }
    })
}

/// Build a structure from a dense row-major (2n+1) x (2n+1) derivation
/// matrix.
///
/// # Safety
/// `entries` must point to (2n+1)^2 doubles; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn hv_structure_from_matrix(
    n: usize,
    entries: *const f64,
    out: *mut *mut HvStructure,
) -> HvStatus {
    guarded(|| {
        if entries.is_null() || out.is_null() {
            set_error("null argument");
            return HvStatus::NullArgument;
        }
        let d = 2 * n + 1;
        let data = std::slice::from_raw_parts(entries, d * d);
        let rows: Vec<Vec<f64>> = data.chunks(d).map(<[f64]>::to_vec).collect();
        let built = DerivationSpec::from_matrix_rows(n, &rows).and_then(|s| s.decompose(1e-9));
        match built {
            Ok(gs) => {
                *out = Box::into_raw(Box::new(HvStructure { gs }));
                HvStatus::Ok
            }
            Err(e) => {
                set_error(&e.to_string());
                status_of(&e)
            }
        }
    })
}

/// Release a structure handle. Null is ignored.
///
/// # Safety
/// `s` must be a handle from a structure constructor, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn hv_structure_free(s: *mut HvStructure) {
    if !s.is_null() {
        drop(Box::from_raw(s));
    }
}

/// Heisenberg index n; 0 if the handle is null.
///
/// # Safety
/// `s` must be a live structure handle or null.
#[no_mangle]
pub unsafe extern "C" fn hv_structure_n(s: *const HvStructure) -> usize {
    if s.is_null() {
        return 0;
    }
    (*s).gs.n()
}

/// Grading depth k (number of non-center blocks); 0 if null.
///
/// # Safety
/// `s` must be a live structure handle or null.
#[no_mangle]
pub unsafe extern "C" fn hv_structure_k(s: *const HvStructure) -> usize {
    if s.is_null() {
        return 0;
    }
    (*s).gs.k()
}

/// Number of distinct eigenvalues (k + 1, counting the center); 0 if null.
///
/// # Safety
/// `s` must be a live structure handle or null.
#[no_mangle]
pub unsafe extern "C" fn hv_structure_block_count(s: *const HvStructure) -> usize {
    if s.is_null() {
        return 0;
    }
    (*s).gs.eigenvalues().len()
}

/// Copy the increasing eigenvalues into `out` (capacity `len`); writes
/// hv_structure_block_count(s) values.
///
/// # Safety
/// `s` must be a live handle; `out` must point to at least `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn hv_structure_eigenvalues(
    s: *const HvStructure,
    out: *mut f64,
    len: usize,
) -> HvStatus {
    guarded(|| {
        if s.is_null() || out.is_null() {
            set_error("null argument");
            return HvStatus::NullArgument;
        }
        let ev = (*s).gs.eigenvalues();
        if len < ev.len() {
            set_error("eigenvalue buffer too small");
            return HvStatus::BufferTooSmall;
        }
        std::slice::from_raw_parts_mut(out, ev.len()).copy_from_slice(ev);
        HvStatus::Ok
    })
}

/// Copy the block dimensions (m_1 ... m_k, m_center) into `out`.
///
/// # Safety
/// `s` must be a live handle; `out` must point to at least `len` usize.
#[no_mangle]
pub unsafe extern "C" fn hv_structure_dims(
    s: *const HvStructure,
    out: *mut usize,
    len: usize,
) -> HvStatus {
    guarded(|| {
        if s.is_null() || out.is_null() {
            set_error("null argument");
            return HvStatus::NullArgument;
        }
        let dims = (*s).gs.dims();
        if len < dims.len() {
            set_error("dims buffer too small");
            return HvStatus::BufferTooSmall;
        }
        std::slice::from_raw_parts_mut(out, dims.len()).copy_from_slice(dims);
        HvStatus::Ok
    })
}

unsafe fn read_point(
    gs: &GradedStructure,
    ptr: *const f64,
    len: usize,
) -> Result<LieElement, HvStatus> {
    if ptr.is_null() {
        set_error("null coordinate pointer");
        return Err(HvStatus::NullArgument);
    }
    if len != gs.dim() {
        set_error("coordinate length does not match 2n+1");
        return Err(HvStatus::InvalidInput);
    }
    LieElement::new(gs.n(), std::slice::from_raw_parts(ptr, len).to_vec()).map_err(|e| {
        set_error(&e.to_string());
        HvStatus::InvalidInput
    })
}

/// Quasinorm of x at metric scale `scale` (use 1.0 for the unit metric).
///
/// # Safety
/// `s` live handle; `x` points to `len` doubles; `out` valid.
#[no_mangle]
pub unsafe extern "C" fn hv_norm(
    s: *const HvStructure,
    scale: f64,
    x: *const f64,
    len: usize,
    out: *mut f64,
) -> HvStatus {
    guarded(|| {
        if s.is_null() || out.is_null() {
            set_error("null argument");
            return HvStatus::NullArgument;
        }
        let gs = &(*s).gs;
        let xe = match read_point(gs, x, len) {
            Ok(v) => v,
            Err(st) => return st,
        };
        let qp = match Quasimetric::new(gs, scale) {
            Ok(q) => q,
            Err(e) => {
                set_error(&e.to_string());
                return HvStatus::InvalidInput;
            }
        };
        match qp.norm(&xe) {
            Ok(v) => {
                *out = v;
                HvStatus::Ok
            }
            Err(e) => {
                set_error(&e.to_string());
                HvStatus::NumericError
            }
        }
    })
}

/// Quasimetric distance d_A(p, q) at metric scale `scale`.
///
/// # Safety
/// `s` live handle; `p`, `q` point to `len` doubles; `out` valid.
#[no_mangle]
pub unsafe extern "C" fn hv_dist(
    s: *const HvStructure,
    scale: f64,
    p: *const f64,
    q: *const f64,
    len: usize,
    out: *mut f64,
) -> HvStatus {
    guarded(|| {
        if s.is_null() || out.is_null() {
            set_error("null argument");
            return HvStatus::NullArgument;
        }
        let gs = &(*s).gs;
        let (pe, qe) = match (read_point(gs, p, len), read_point(gs, q, len)) {
            (Ok(a), Ok(b)) => (a, b),
            (Err(st), _) | (_, Err(st)) => return st,
        };
        let qp = match Quasimetric::new(gs, scale) {
            Ok(qm) => qm,
            Err(e) => {
                set_error(&e.to_string());
                return HvStatus::InvalidInput;
            }
        };
        match qp.dist(&pe, &qe) {
            Ok(v) => {
                *out = v;
                HvStatus::Ok
            }
            Err(e) => {
                set_error(&e.to_string());
                HvStatus::NumericError
            }
        }
    })
}

/// Quasiisometric equivalence of two structures. Writes 1/0 to
/// `out_equivalent` and the exponent ratio lambda (alpha_1/beta_1) to
/// `out_lambda` (NaN when not equivalent).
///
/// # Safety
/// `a`, `b` live handles; output pointers valid.
#[no_mangle]
pub unsafe extern "C" fn hv_classify(
    a: *const HvStructure,
    b: *const HvStructure,
    out_equivalent: *mut bool,
    out_lambda: *mut f64,
) -> HvStatus {
    guarded(|| {
        if a.is_null() || b.is_null() || out_equivalent.is_null() || out_lambda.is_null() {
            set_error("null argument");
            return HvStatus::NullArgument;
        }
        let c = classify(&(*a).gs, &(*b).gs, RATIO_RTOL);
        *out_equivalent = c.equivalent;
        *out_lambda = c.lambda.unwrap_or(f64::NAN);
        HvStatus::Ok
    })
}

/// Build the boundary isometry from `a` to `b`; fails with
/// HV_STATUS_NOT_EQUIVALENT when none exists.
///
/// # Safety
/// `a`, `b` live handles; `out` valid.
#[no_mangle]
pub unsafe extern "C" fn hv_isometry_build(
    a: *const HvStructure,
    b: *const HvStructure,
    out: *mut *mut HvIsometry,
) -> HvStatus {
    guarded(|| {
        if a.is_null() || b.is_null() || out.is_null() {
            set_error("null argument");
            return HvStatus::NullArgument;
        }
        match build_isometry(&(*a).gs, &(*b).gs) {
            Ok(map) => {
                *out = Box::into_raw(Box::new(HvIsometry { map }));
                HvStatus::Ok
            }
            Err(e) => {
                set_error(&e.to_string());
                status_of(&e)
            }
        }
    })
}

/// Release an isometry handle. Null is ignored.
///
/// # Safety
/// `m` must come from hv_isometry_build, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn hv_isometry_free(m: *mut HvIsometry) {
    if !m.is_null() {
        drop(Box::from_raw(m));
    }
}

/// Exponent ratio lambda of the map; NaN if the handle is null.
///
/// # Safety
/// `m` must be a live isometry handle or null.
#[no_mangle]
pub unsafe extern "C" fn hv_isometry_lambda(m: *const HvIsometry) -> f64 {
    if m.is_null() {
        return f64::NAN;
    }
    (*m).map.lambda()
}

/// Apply the map to a point (both sides have the same 2n+1 coordinates).
///
/// # Safety
/// `m` live handle; `x` and `out` point to `len` doubles each.
#[no_mangle]
pub unsafe extern "C" fn hv_isometry_apply(
    m: *const HvIsometry,
    x: *const f64,
    len: usize,
    out: *mut f64,
) -> HvStatus {
    guarded(|| {
        if m.is_null() || out.is_null() {
            set_error("null argument");
            return HvStatus::NullArgument;
        }
        let map = &(*m).map;
        let xe = match read_point(map.source(), x, len) {
            Ok(v) => v,
            Err(st) => return st,
        };
        match map.apply(&xe) {
            Ok(y) => {
                std::slice::from_raw_parts_mut(out, len).copy_from_slice(y.coords());
                HvStatus::Ok
            }
            Err(e) => {
                set_error(&e.to_string());
                HvStatus::NumericError
            }
        }
    })
}

/// Copy the (2n+1) x (2n+1) row-major map matrix into `out` (capacity `len`).
///
/// # Safety
/// `m` live handle; `out` points to at least `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn hv_isometry_matrix(
    m: *const HvIsometry,
    out: *mut f64,
    len: usize,
) -> HvStatus {
    guarded(|| {
        if m.is_null() || out.is_null() {
            set_error("null argument");
            return HvStatus::NullArgument;
        }
        let mat: &Mat = (*m).map.matrix();
        let d = mat.rows();
        if len < d * d {
            set_error("matrix buffer too small");
            return HvStatus::BufferTooSmall;
        }
        let dst = std::slice::from_raw_parts_mut(out, d * d);
        for i in 0..d {
            for j in 0..d {
                dst[i * d + j] = mat.get(i, j);
            }
        }
        HvStatus::Ok
    })
}

/// Verify the isometry contract on `pairs` random pairs; writes the maximum
/// relative error.
///
/// # Safety
/// `m` live handle; `out_max_rel_error` valid.
#[no_mangle]
pub unsafe extern "C" fn hv_isometry_verify(
    m: *const HvIsometry,
    pairs: u64,
    seed: u64,
    out_max_rel_error: *mut f64,
) -> HvStatus {
    guarded(|| {
        if m.is_null() || out_max_rel_error.is_null() {
            set_error("null argument");
            return HvStatus::NullArgument;
        }
        match verify_isometry(&(*m).map, pairs, seed) {
            Ok(check) => {
                *out_max_rel_error = check.max_rel_error;
                HvStatus::Ok
            }
            Err(e) => {
                set_error(&e.to_string());
                HvStatus::NumericError
            }
        }
    })
}
