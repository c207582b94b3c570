use std::f64::consts::PI;
use std::ffi::CStr;
use std::process::Command;

use gslab_ffi::*;

fn last_error() -> String {
    let mut buf = [0 as std::ffi::c_char; 256];
    unsafe { gslab_last_error_message(buf.as_mut_ptr(), buf.len()) };
    unsafe { CStr::from_ptr(buf.as_ptr()) }.to_string_lossy().into_owned()
}

fn small() -> GslabGrids {
    GslabGrids { r_points: 16, s_order: 4, t_points: 9 }
}

#[test]
fn bessel_half_order_closed_form() {
    let (mut v, mut e) = (0.0, 0.0);
    assert_eq!(unsafe { gslab_bessel_j(1, 2.0, &mut v, &mut e) }, GslabStatus::Ok);
    let want = (2.0 / (PI * 2.0)).sqrt() * 2f64.sin();
    assert!((v - want).abs() < 1e-14 && e >= 0.0);
    assert_eq!(unsafe { gslab_bessel_j(1, 2.0, &mut v, std::ptr::null_mut()) }, GslabStatus::Ok);
}

#[test]
fn errors_carry_codes_and_messages() {
    let mut v = 0.0;
    assert_eq!(unsafe { gslab_bessel_j(3, -1.0, &mut v, std::ptr::null_mut()) }, GslabStatus::Domain);
    assert!(last_error().contains("x > 0"), "{}", last_error());
    assert_eq!(unsafe { gslab_bessel_j(3, 1.0, std::ptr::null_mut(), std::ptr::null_mut()) }, GslabStatus::NullPointer);
    let mut h = std::ptr::null_mut();
    let s = unsafe { gslab_operator_build(GslabPiece::T4, 1, 0.5, 2.0, 0.25, small(), &mut h) };
    assert_eq!(s, GslabStatus::Config);
    assert!(h.is_null());
    // a later success clears the message
    assert_eq!(unsafe { gslab_bessel_j(1, 1.0, &mut v, std::ptr::null_mut()) }, GslabStatus::Ok);
    assert_eq!(unsafe { gslab_last_error_message(std::ptr::null_mut(), 0) }, 0);
}

#[test]
fn operator_handle_lifecycle() {
    let mut h = std::ptr::null_mut();
    assert_eq!(unsafe { gslab_operator_build(GslabPiece::Full, 2, 0.5, 4.0, 0.25, small(), &mut h) }, GslabStatus::Ok);
    let (mut rows, mut cols) = (0, 0);
    assert_eq!(unsafe { gslab_operator_dims(h, &mut rows, &mut cols) }, GslabStatus::Ok);
    assert!(rows == 16 && cols > 0);

    let zero = vec![0.0; 2 * cols];
    let mut y = vec![1.0; 2 * rows];
    assert_eq!(unsafe { gslab_operator_apply(h, zero.as_ptr(), cols, y.as_mut_ptr(), rows) }, GslabStatus::Ok);
    assert!(y.iter().all(|v| *v == 0.0));
    assert_eq!(unsafe { gslab_operator_apply(h, zero.as_ptr(), cols + 1, y.as_mut_ptr(), rows) }, GslabStatus::DimensionMismatch);

    let (mut sigma, mut bound) = (0.0, 0.0);
    assert_eq!(unsafe { gslab_operator_norm(h, 1, &mut sigma) }, GslabStatus::Ok);
    assert_eq!(unsafe { gslab_operator_schur_bound(h, &mut bound) }, GslabStatus::Ok);
    assert!(sigma > 0.0 && sigma * sigma <= bound * (1.0 + 1e-12));
    unsafe { gslab_operator_free(h) };
    unsafe { gslab_operator_free(std::ptr::null_mut()) };
    assert_eq!(unsafe { gslab_operator_norm(std::ptr::null(), 1, &mut sigma) }, GslabStatus::NullPointer);
}

#[test]
fn norm_lower_and_maximal_ratio() {
    let mut lb = 0.0;
    let s = unsafe { gslab_norm_lower(GslabPiece::Full, 1, 1.0, 2.0, 0.25, small(), 2, 7, &mut lb) };
    assert_eq!(s, GslabStatus::Ok);
    assert!(lb > 0.0 && lb.is_finite());

    let n = 200;
    let sv: Vec<f64> = (0..n).map(|k| 1.0 + k as f64 / (n - 1) as f64).collect();
    let re = vec![1.0; n];
    let im = vec![0.0; n];
    let t = [0.0, 0.1];
    let mut q = 0.0;
    let s = unsafe { gslab_q_star_ratio(1, sv.as_ptr(), re.as_ptr(), im.as_ptr(), n, t.as_ptr(), t.len(), 32, &mut q) };
    assert_eq!(s, GslabStatus::Ok);
    assert!(q > 0.0 && q.is_finite());
    let s = unsafe { gslab_q_star_ratio(1, sv.as_ptr(), re.as_ptr(), im.as_ptr(), n, t.as_ptr(), 0, 32, &mut q) };
    assert_eq!(s, GslabStatus::Config);
}

#[test]
fn header_compiles_as_c() {
    let header = concat!(env!("CARGO_MANIFEST_DIR"), "/include/gslab.h");
    let Ok(out) = Command::new("cc").args(["-fsyntax-only", "-x", "c", "-std=c99", header]).output() else {
        eprintln!("no C compiler; skipping");
        return;
    };
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}
