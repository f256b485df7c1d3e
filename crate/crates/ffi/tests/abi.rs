use std::ffi::{CStr, CString};
use std::f64::consts::PI;
use std::path::Path;
use std::process::Command;
use std::ptr;

use fchlab_ffi::*;

fn last_error() -> String {
    let p = fch_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn cosine(n: usize, amp: f64) -> *mut FchField {
    let spec = CString::new(format!("cosine:{amp},1")).unwrap();
    let mut h = ptr::null_mut();
    assert_eq!(unsafe { fch_field_from_profile(spec.as_ptr(), 2.0 * PI, n, &mut h) }, FchStatus::Ok);
    assert!(fch_last_error().is_null());
    h
}

#[test]
fn samples_round_trip() {
    let n = 32;
    let data: Vec<f64> = (0..n).map(|j| (j as f64 * 0.3).sin()).collect();
    let mut h = ptr::null_mut();
    assert_eq!(unsafe { fch_field_from_samples(3.0, n, data.as_ptr(), &mut h) }, FchStatus::Ok);
    assert_eq!(unsafe { fch_field_len(h) }, n);
    assert_eq!(unsafe { fch_field_period(h) }, 3.0);
    let mut back = vec![0.0; n];
    assert_eq!(unsafe { fch_field_samples(h, back.as_mut_ptr(), n) }, FchStatus::Ok);
    assert_eq!(back, data);
    let mut small = vec![0.0; 4];
    assert_eq!(
        unsafe { fch_field_samples(h, small.as_mut_ptr(), 4) },
        FchStatus::BufferTooSmall
    );
    unsafe { fch_field_free(h) };
}

#[test]
fn null_and_invalid_inputs() {
    let mut h = ptr::null_mut();
    assert_eq!(
        unsafe { fch_field_from_samples(1.0, 8, ptr::null(), &mut h) },
        FchStatus::NullPointer
    );
    assert!(last_error().contains("samples"));
    let bad = CString::new("wave:1,1").unwrap();
    assert_eq!(
        unsafe { fch_field_from_profile(bad.as_ptr(), 1.0, 8, &mut h) },
        FchStatus::InvalidArgument
    );
    let mut v = 0.0;
    assert_eq!(unsafe { fch_besov_norm(ptr::null(), 1.0, 2.0, 1.0, &mut v) }, FchStatus::NullPointer);
    let u = cosine(32, 0.1);
    assert_eq!(unsafe { fch_besov_norm(u, 1.0, 3.0, 1.0, &mut v) }, FchStatus::InvalidArgument);
    assert_eq!(unsafe { fch_lifespan(u, 0.0, 1.4, &mut v) }, FchStatus::InvalidArgument);
    unsafe { fch_field_free(u) };
    unsafe { fch_field_free(ptr::null_mut()) };
}

#[test]
fn norms_and_lifespan() {
    let u = cosine(64, 0.05);
    let mut norm = 0.0;
    assert_eq!(unsafe { fch_besov_norm(u, 2.5, 2.0, 1.0, &mut norm) }, FchStatus::Ok);
    let expected = 0.05 * 2f64.powf(-2.5) * PI.sqrt();
    assert!((norm - expected).abs() < 1e-12 * expected);
    let mut inf_norm = 0.0;
    assert_eq!(unsafe { fch_besov_norm(u, 2.5, 2.0, f64::INFINITY, &mut inf_norm) }, FchStatus::Ok);
    assert!(inf_norm <= norm * (1.0 + 1e-12));

    let mut t = 0.0;
    assert_eq!(unsafe { fch_lifespan(u, 1.0, 1.4, &mut t) }, FchStatus::Ok);
    assert_eq!(t, 1.0);

    let (mut value, mut k, mut conv) = (0.0, 99usize, false);
    assert_eq!(unsafe { fch_es_norm(u, 0.5, 12, 1.4, &mut value, &mut k, &mut conv) }, FchStatus::Ok);
    assert!(conv && k < 12 && value >= norm);

    let (mut a, mut s, mut r) = (0.0, 0.0, 0.0);
    assert_eq!(unsafe { fch_decay_fit(u, 1e-13, &mut a, &mut s, &mut r) }, FchStatus::NoFit);
    unsafe { fch_field_free(u) };
}

#[test]
fn operators_and_integration() {
    let u = cosine(64, 0.05);
    let mut c = ptr::null_mut();
    assert_eq!(unsafe { fch_commutator(u, u, 1.5, &mut c) }, FchStatus::Ok);
    let mut buf = vec![1.0; 64];
    assert_eq!(unsafe { fch_field_samples(c, buf.as_mut_ptr(), 64) }, FchStatus::Ok);
    assert!(buf.iter().all(|v| v.is_finite()));
    unsafe { fch_field_free(c) };

    let mut r = ptr::null_mut();
    assert_eq!(unsafe { fch_rhs(u, 1.4, FchForm::Nonlocal31, &mut r) }, FchStatus::Ok);
    unsafe { fch_field_free(r) };
    assert_eq!(unsafe { fch_rhs(u, 0.5, FchForm::Direct11, &mut r) }, FchStatus::InvalidArgument);

    let (mut out, mut tf) = (ptr::null_mut(), 0.0);
    assert_eq!(
        unsafe { fch_integrate(u, 1.4, FchForm::Nonlocal31, 1e-3, 0.1, &mut out, &mut tf) },
        FchStatus::Ok
    );
    assert!((tf - 0.1).abs() < 1e-12);
    let mut mass_buf = vec![0.0; 64];
    assert_eq!(unsafe { fch_field_samples(out, mass_buf.as_mut_ptr(), 64) }, FchStatus::Ok);
    assert!(mass_buf.iter().sum::<f64>().abs() < 1e-12);
    unsafe { fch_field_free(out) };
    unsafe { fch_field_free(u) };
}

#[test]
fn snapshot_files() {
    let dir = tempfile::tempdir().unwrap();
    let path = CString::new(dir.path().join("u.bin").to_str().unwrap()).unwrap();
    let u = cosine(16, 0.2);
    assert_eq!(unsafe { fch_field_write_snapshot(u, path.as_ptr(), 0.5, 1.4) }, FchStatus::Ok);
    let (mut back, mut t, mut nu) = (ptr::null_mut(), 0.0, 0.0);
    assert_eq!(unsafe { fch_field_read_snapshot(path.as_ptr(), &mut back, &mut t, &mut nu) }, FchStatus::Ok);
    assert_eq!((t, nu), (0.5, 1.4));
    let (mut a, mut b) = (vec![0.0; 16], vec![0.0; 16]);
    unsafe {
        fch_field_samples(u, a.as_mut_ptr(), 16);
        fch_field_samples(back, b.as_mut_ptr(), 16);
    }
    assert_eq!(a, b);
    let missing = CString::new(dir.path().join("none.bin").to_str().unwrap()).unwrap();
    assert_eq!(
        unsafe { fch_field_read_snapshot(missing.as_ptr(), &mut back, ptr::null_mut(), ptr::null_mut()) },
        FchStatus::Io
    );
    unsafe {
        fch_field_free(u);
        fch_field_free(back);
    }
}

#[test]
fn version_string() {
    let v = unsafe { CStr::from_ptr(fch_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}

#[test]
fn header_declares_the_surface_and_compiles() {
    let header = Path::new(env!("CARGO_MANIFEST_DIR")).join("include/fchlab.h");
    let text = std::fs::read_to_string(&header).unwrap();
    for name in [
        "fch_field_from_samples",
        "fch_field_from_profile",
        "fch_field_free",
        "fch_besov_norm",
        "fch_es_norm",
        "fch_commutator",
        "fch_rhs",
        "fch_lifespan",
        "fch_integrate",
        "fch_last_error",
        "typedef struct FchField FchField",
        "FCH_STATUS_OK = 0",
    ] {
        assert!(text.contains(name), "header lacks {name}");
    }
    if let Ok(out) = Command::new("cc")
        .args(["-fsyntax-only", "-x", "c", "-std=c99"])
        .arg(&header)
        .output()
    {
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
}
