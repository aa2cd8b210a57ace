//! Exercises the C ABI through the same unsafe entry points a C caller
//! would use: handle lifecycle, status codes, buffer contracts, and the
//! thread-local error channel.

use std::ffi::{c_char, CStr, CString};

use heisvis_ffi::*;

fn last_error() -> String {
    unsafe { CStr::from_ptr(hv_last_error_message()) }
        .to_string_lossy()
        .into_owned()
}

fn structure_from_matrix(n: usize, diag: &[f64]) -> *mut HvStructure {
    let d = 2 * n + 1;
    assert_eq!(diag.len(), d);
    let mut entries = vec![0.0; d * d];
    for (i, &v) in diag.iter().enumerate() {
        entries[i * d + i] = v;
    }
    let mut out: *mut HvStructure = std::ptr::null_mut();
    let st = unsafe { hv_structure_from_matrix(n, entries.as_ptr(), &mut out) };
    assert_eq!(st, HvStatus::Ok, "{}", last_error());
    assert!(!out.is_null());
    out
}

const DIAG123_JSON: &str = r#"{
  "n": 1,
  "derivation": { "matrix": [[1, 0, 0], [0, 2, 0], [0, 0, 3]] }
}"#;

#[test]
fn structure_roundtrip_from_json() {
    let text = CString::new(DIAG123_JSON).unwrap();
    let mut s: *mut HvStructure = std::ptr::null_mut();
    let st = unsafe { hv_structure_from_json(text.as_ptr(), &mut s) };
    assert_eq!(st, HvStatus::Ok, "{}", last_error());

    unsafe {
        assert_eq!(hv_structure_n(s), 1);
        assert_eq!(hv_structure_k(s), 2);
        assert_eq!(hv_structure_block_count(s), 3);

        let mut ev = [0.0_f64; 3];
        assert_eq!(hv_structure_eigenvalues(s, ev.as_mut_ptr(), 3), HvStatus::Ok);
        assert_eq!(ev, [1.0, 2.0, 3.0]);

        let mut dims = [0_usize; 3];
        assert_eq!(hv_structure_dims(s, dims.as_mut_ptr(), 3), HvStatus::Ok);
        assert_eq!(dims, [1, 1, 1]);

        hv_structure_free(s);
    }
}

#[test]
fn dist_matches_closed_form() {
    // diag(1,2,3): ||(1,1,8)|| = 1 + 1^(1/2) + 8^(1/3) = 4 at unit scale.
    let s = structure_from_matrix(1, &[1.0, 2.0, 3.0]);
    let p = [0.0_f64; 3];
    let q = [1.0_f64, 1.0, 8.0];
    let mut d = f64::NAN;
    unsafe {
        assert_eq!(hv_dist(s, 1.0, p.as_ptr(), q.as_ptr(), 3, &mut d), HvStatus::Ok);
        assert!((d - 4.0).abs() < 1e-12, "d = {d}");

        let mut nq = f64::NAN;
        assert_eq!(hv_norm(s, 1.0, q.as_ptr(), 3, &mut nq), HvStatus::Ok);
        assert!((nq - 4.0).abs() < 1e-12);

        // Doubling the metric scale halves every exponent 1/(s a_i).
        let mut d2 = f64::NAN;
        assert_eq!(hv_dist(s, 2.0, p.as_ptr(), q.as_ptr(), 3, &mut d2), HvStatus::Ok);
        assert!((d2 - (1.0 + 1.0 + 8.0_f64.powf(1.0 / 6.0))).abs() < 1e-12);

        hv_structure_free(s);
    }
}

#[test]
fn classify_reports_lambda() {
    let a = structure_from_matrix(1, &[1.0, 2.0, 3.0]);
    let b = structure_from_matrix(1, &[2.0, 4.0, 6.0]);
    let c = structure_from_matrix(1, &[1.0, 1.0, 2.0]);
    unsafe {
        let mut eq = false;
        let mut lambda = f64::NAN;
        assert_eq!(hv_classify(a, b, &mut eq, &mut lambda), HvStatus::Ok);
        assert!(eq);
        assert_eq!(lambda, 0.5);

        // diag(1,1,2) has block dims (2,1), incompatible with (1,1,1).
        assert_eq!(hv_classify(a, c, &mut eq, &mut lambda), HvStatus::Ok);
        assert!(!eq);
        assert!(lambda.is_nan());

        hv_structure_free(a);
        hv_structure_free(b);
        hv_structure_free(c);
    }
}

#[test]
fn isometry_build_apply_verify() {
    let a = structure_from_matrix(1, &[1.0, 2.0, 3.0]);
    let b = structure_from_matrix(1, &[2.0, 4.0, 6.0]);
    let mut m: *mut HvIsometry = std::ptr::null_mut();
    unsafe {
        assert_eq!(hv_isometry_build(a, b, &mut m), HvStatus::Ok, "{}", last_error());
        assert_eq!(hv_isometry_lambda(m), 0.5);

        // apply must agree with the exported matrix.
        let x = [0.3_f64, -1.2, 0.7];
        let mut y = [0.0_f64; 3];
        assert_eq!(hv_isometry_apply(m, x.as_ptr(), 3, y.as_mut_ptr()), HvStatus::Ok);

        let mut mat = [0.0_f64; 9];
        assert_eq!(hv_isometry_matrix(m, mat.as_mut_ptr(), 9), HvStatus::Ok);
        for i in 0..3 {
            let mi: f64 = (0..3).map(|j| mat[i * 3 + j] * x[j]).sum();
            assert!((mi - y[i]).abs() < 1e-14);
        }

        let mut short = [0.0_f64; 4];
        assert_eq!(
            hv_isometry_matrix(m, short.as_mut_ptr(), 4),
            HvStatus::BufferTooSmall
        );

        let mut err = f64::NAN;
        assert_eq!(hv_isometry_verify(m, 2000, 0, &mut err), HvStatus::Ok);
        assert!(err <= 1e-9, "max relative error {err:.3e}");

        hv_isometry_free(m);
        hv_structure_free(a);
        hv_structure_free(b);
    }
}

#[test]
fn isometry_rejects_inequivalent_pair() {
    let a = structure_from_matrix(1, &[1.0, 2.0, 3.0]);
    let c = structure_from_matrix(1, &[1.0, 1.0, 2.0]);
    let mut m: *mut HvIsometry = std::ptr::null_mut();
    unsafe {
        assert_eq!(hv_isometry_build(a, c, &mut m), HvStatus::NotEquivalent);
        assert!(m.is_null());
        assert!(last_error().contains("not equivalent"), "{}", last_error());
        hv_structure_free(a);
        hv_structure_free(c);
    }
}

#[test]
fn null_and_utf8_arguments() {
    let mut s: *mut HvStructure = std::ptr::null_mut();
    unsafe {
        assert_eq!(
            hv_structure_from_json(std::ptr::null(), &mut s),
            HvStatus::NullArgument
        );
        let text = CString::new(DIAG123_JSON).unwrap();
        assert_eq!(
            hv_structure_from_json(text.as_ptr(), std::ptr::null_mut()),
            HvStatus::NullArgument
        );

        let bad = [0xffu8, 0xfe, 0x00];
        assert_eq!(
            hv_structure_from_json(bad.as_ptr() as *const c_char, &mut s),
            HvStatus::InvalidUtf8
        );
    }
}

#[test]
fn parse_error_names_offending_field() {
    let text = CString::new(r#"{"derivation": {"matrix": [[1]]}}"#).unwrap();
    let mut s: *mut HvStructure = std::ptr::null_mut();
    let st = unsafe { hv_structure_from_json(text.as_ptr(), &mut s) };
    assert_eq!(st, HvStatus::ParseError);
    assert!(last_error().contains("`n`"), "{}", last_error());
}

#[test]
fn rejects_non_derivation_matrix() {
    // diag(1,2,4): Leibniz needs a_center = a_1 + a_2 = 3, not 4.
    let d = 3;
    let mut entries = vec![0.0; d * d];
    for (i, v) in [1.0, 2.0, 4.0].into_iter().enumerate() {
        entries[i * d + i] = v;
    }
    let mut s: *mut HvStructure = std::ptr::null_mut();
    let st = unsafe { hv_structure_from_matrix(1, entries.as_ptr(), &mut s) };
    assert_eq!(st, HvStatus::InvalidInput);
    assert!(last_error().contains("not a derivation"), "{}", last_error());
}

#[test]
fn buffer_and_dimension_checks() {
    let s = structure_from_matrix(1, &[1.0, 2.0, 3.0]);
    unsafe {
        let mut ev = [0.0_f64; 1];
        assert_eq!(
            hv_structure_eigenvalues(s, ev.as_mut_ptr(), 1),
            HvStatus::BufferTooSmall
        );

        // wrong point length is an input error, not a crash
        let p = [0.0_f64; 5];
        let q = [0.0_f64; 5];
        let mut d = f64::NAN;
        assert_eq!(
            hv_dist(s, 1.0, p.as_ptr(), q.as_ptr(), 5, &mut d),
            HvStatus::InvalidInput
        );
        assert!(last_error().contains("2n+1"), "{}", last_error());

        // non-positive scale rejected
        let r = [0.0_f64; 3];
        assert_eq!(
            hv_dist(s, -1.0, r.as_ptr(), r.as_ptr(), 3, &mut d),
            HvStatus::InvalidInput
        );

        hv_structure_free(s);
    }
}

#[test]
fn version_is_exported() {
    let v = unsafe { CStr::from_ptr(hv_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}

#[test]
fn generated_header_covers_api() {
    let header = std::path::Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("include")
        .join("heisvis.h");
    let text = std::fs::read_to_string(&header).expect("header generated at build time");
    for needle in [
        "typedef struct HvStructure HvStructure;",
        "typedef struct HvIsometry HvIsometry;",
        "HV_STATUS_NOT_EQUIVALENT",
        "hv_structure_from_json",
        "hv_dist",
        "hv_isometry_verify",
        "hv_last_error_message",
    ] {
        assert!(text.contains(needle), "header missing `{needle}`");
    }
}
