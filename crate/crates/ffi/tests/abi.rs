use std::ffi::{CStr, CString};
use std::ptr;

use cdwhitney_ffi::*;

fn last_error() -> String {
    let mut buf = vec![0 as std::ffi::c_char; 256];
    unsafe { cdw_last_error(buf.as_mut_ptr(), buf.len()) };
    unsafe { CStr::from_ptr(buf.as_ptr()) }.to_string_lossy().into_owned()
}

fn number(level: u32, c: &[f64]) -> *mut CdwNumber {
    let mut h = ptr::null_mut();
    assert_eq!(unsafe { cdw_number_new(level, c.as_ptr(), c.len(), &mut h) }, CdwStatus::Ok);
    h
}

#[test]
fn quaternion_product_through_handles() {
    let i = number(2, &[0.0, 1.0, 0.0, 0.0]);
    let j = number(2, &[0.0, 0.0, 1.0, 0.0]);
    let mut k = ptr::null_mut();
    unsafe {
        assert_eq!(cdw_number_mul(i, j, &mut k), CdwStatus::Ok);
        assert_eq!(cdw_number_dim(k), 4);
        let mut c = [9.0; 4];
        assert_eq!(cdw_number_coeffs(k, c.as_mut_ptr(), 4), CdwStatus::Ok);
        assert_eq!(c, [0.0, 0.0, 0.0, 1.0]);
        let mut small = [0.0; 2];
        assert_eq!(cdw_number_coeffs(k, small.as_mut_ptr(), 2), CdwStatus::BufferTooSmall);
        let mut x = 0.0;
        assert_eq!(cdw_pi_j(k, 3, &mut x), CdwStatus::Ok);
        assert_eq!(x, 1.0);
        assert_eq!(cdw_number_norm(k, &mut x), CdwStatus::Ok);
        assert_eq!(x, 1.0);
        cdw_number_free(i);
        cdw_number_free(j);
        cdw_number_free(k);
        cdw_number_free(ptr::null_mut());
    }
}

#[test]
fn errors_carry_status_and_message() {
    let mut h = ptr::null_mut();
    let c = [1.0; 3];
    assert_eq!(unsafe { cdw_number_new(2, c.as_ptr(), 3, &mut h) }, CdwStatus::InvalidArgument);
    assert!(h.is_null());
    assert!(last_error().contains("coefficients"), "{}", last_error());
    assert_eq!(unsafe { cdw_number_norm(ptr::null(), ptr::null_mut()) }, CdwStatus::NullPointer);
    let one = number(1, &[1.0, 0.0]);
    let mut x = 0.0;
    assert_eq!(unsafe { cdw_pi_j(one, 0, &mut x) }, CdwStatus::UnsupportedLevel);
    unsafe { cdw_number_free(one) };
    let bad = CString::new("{ not json").unwrap();
    let mut jet = ptr::null_mut();
    assert_eq!(unsafe { cdw_jet_from_json(bad.as_ptr(), &mut jet) }, CdwStatus::Parse);
    assert!(!unsafe { CStr::from_ptr(cdw_version()) }.to_bytes().is_empty());
}

#[test]
fn chosen_kappa_is_positive() {
    let mut k = 0.0;
    assert_eq!(unsafe { cdw_choose_kappa(1e-2, 0.1, 3.0, 2, 1, &mut k) }, CdwStatus::Ok);
    assert!(k > 0.0);
    assert_eq!(unsafe { cdw_choose_kappa(-1.0, 0.1, 3.0, 2, 1, &mut k) }, CdwStatus::InvalidArgument);
}

fn jet_text() -> CString {
    // Constant jet 1 on three points of A_2 (four coordinates, four channels).
    let pts = [[0.0, 0.0, 0.0, 0.0], [1.0, 0.0, 0.0, 0.0], [0.0, 1.0, 0.0, 0.0]];
    let values: Vec<String> = (0..3)
        .map(|p| format!(r#"{{"point":{p},"k":[0,0,0,0],"value":[1.0,0.0,0.0,0.0]}}"#))
        .collect();
    CString::new(format!(
        r#"{{"r":2,"l":1,"m":0,"field":"R","points":{},"values":[{}]}}"#,
        serde_json_points(&pts),
        values.join(",")
    ))
    .unwrap()
}

fn serde_json_points(p: &[[f64; 4]]) -> String {
    let rows: Vec<String> = p
        .iter()
        .map(|r| format!("[{}]", r.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(",")))
        .collect();
    format!("[{}]", rows.join(","))
}

#[test]
fn constant_jet_extends_to_a_constant() {
    let text = jet_text();
    let mut jet = ptr::null_mut();
    unsafe {
        assert_eq!(cdw_jet_from_json(text.as_ptr(), &mut jet), CdwStatus::Ok, "{}", last_error());
        assert_eq!(cdw_jet_dim(jet), 4);
        assert_eq!(cdw_jet_channels(jet), 4);
        let (mut passed, mut ratio) = (0, -1.0);
        assert_eq!(cdw_jet_check(jet, 1e-2, 2.0, &mut passed, &mut ratio), CdwStatus::Ok);
        assert_eq!(passed, 1);
        let kappas = [1e5, 2e5];
        let mut ext = ptr::null_mut();
        let s = cdw_extension_new(jet, 1e-2, 2.0, 0.25, kappas.as_ptr(), 2, 0, &mut ext);
        assert_eq!(s, CdwStatus::Ok, "{}", last_error());
        let mut out = [0.0; 4];
        for z in [[0.0, 0.0, 0.0, 0.0], [0.3, 0.4, -0.2, 0.1], [0.05, 0.0, 0.0, 0.02]] {
            assert_eq!(cdw_extension_eval(ext, z.as_ptr(), 4, out.as_mut_ptr(), 4), CdwStatus::Ok);
            assert!((out[0] - 1.0).abs() < 1e-8, "{z:?}: {out:?}");
            assert!(out[1..].iter().all(|v| v.abs() < 1e-8));
        }
        let far = [50.0, 0.0, 0.0, 0.0];
        assert_eq!(cdw_extension_eval(ext, far.as_ptr(), 4, out.as_mut_ptr(), 4), CdwStatus::NotCovered);
        cdw_extension_free(ext);
        cdw_jet_free(jet);
    }
}
