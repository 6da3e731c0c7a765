//! Exercises the C surface through the extern functions directly.

use std::ffi::CString;
use std::ptr;

use curlsob_ffi::*;

#[test]
fn loss_yau_roundtrip_through_c_surface() {
    unsafe {
        let mut field: *mut CsField = ptr::null_mut();
        let st = cs_field_loss_yau(16, 4.0, 0.0, 0.0, 1.0, &mut field);
        assert_eq!(st, CsStatus::Ok);

        let (mut n, mut l) = (0usize, 0.0f64);
        assert_eq!(cs_field_grid(field, &mut n, &mut l), CsStatus::Ok);
        assert_eq!(n, 16);
        assert_eq!(l, 4.0);

        let mut norm = 0.0f64;
        assert_eq!(cs_field_lp_norm(field, 3.0, &mut norm), CsStatus::Ok);
        assert!(norm > 3.0 && norm < 5.0, "norm = {norm}");

        let mut curl: *mut CsField = ptr::null_mut();
        assert_eq!(cs_field_curl(field, &mut curl), CsStatus::Ok);
        let mut curl_norm = 0.0f64;
        assert_eq!(cs_field_lp_norm(curl, 1.5, &mut curl_norm), CsStatus::Ok);
        assert!(curl_norm > 0.0);

        // vf3 roundtrip
        let path = std::env::temp_dir().join(format!("curlsob_ffi_{}.vf3", std::process::id()));
        let cpath = CString::new(path.to_str().unwrap()).unwrap();
        assert_eq!(cs_field_write_vf3(field, cpath.as_ptr()), CsStatus::Ok);
        let mut back: *mut CsField = ptr::null_mut();
        assert_eq!(cs_field_read_vf3(cpath.as_ptr(), &mut back), CsStatus::Ok);
        let mut norm2 = 0.0f64;
        assert_eq!(cs_field_lp_norm(back, 3.0, &mut norm2), CsStatus::Ok);
        assert_eq!(norm, norm2);
        std::fs::remove_file(&path).ok();

        cs_field_free(field);
        cs_field_free(curl);
        cs_field_free(back);
    }
}

#[test]
fn gauge_and_quotient_reports() {
    unsafe {
        let mut field: *mut CsField = ptr::null_mut();
        assert_eq!(
            cs_field_loss_yau(16, 8.0, 0.0, 0.0, 1.0, &mut field),
            CsStatus::Ok
        );
        let mut rep = CsGaugeReport {
            seminorm: 0.0,
            constraint_residual: 0.0,
            iterations: 0,
            converged: 0,
        };
        let mut fixed: *mut CsField = ptr::null_mut();
        assert_eq!(
            cs_gauge_fix(field, 1e-6, 500, &mut rep, &mut fixed),
            CsStatus::Ok
        );
        assert!(rep.seminorm > 0.0);
        assert_eq!(rep.converged, 1);

        let mut q = CsQuotientReport {
            curl_norm: 0.0,
            seminorm: 0.0,
            quotient: 0.0,
            multiplier: 0.0,
            el_residual: 0.0,
        };
        assert_eq!(cs_quotient(field, 1e-6, 500, 1e-8, &mut q), CsStatus::Ok);
        assert!(q.quotient > 0.0 && q.el_residual.is_finite());

        cs_field_free(field);
        cs_field_free(fixed);
    }
}

#[test]
fn zero_mode_report_and_errors() {
    unsafe {
        let mut rep = CsZeroModeReport {
            dirac_residual: 0.0,
            relative_residual: 0.0,
            weighted_relative_residual: 0.0,
            b_norm: 0.0,
            spinor_quotient: 0.0,
        };
        assert_eq!(
            cs_zero_mode_residual(32, 8.0, 1.0, 0.0, 0.0, 0.0, &mut rep),
            CsStatus::Ok
        );
        assert!(rep.weighted_relative_residual < 0.1);
        assert!(rep.b_norm > 0.0);

        // invalid grid reports through the error channel
        let st = cs_zero_mode_residual(7, 8.0, 1.0, 0.0, 0.0, 0.0, &mut rep);
        assert_eq!(st, CsStatus::InvalidArgument);
        let mut buf = vec![0i8; 256];
        let len = cs_last_error_message(buf.as_mut_ptr(), buf.len());
        assert!(len > 0);

        // zero spinor rejected
        let st = cs_zero_mode_residual(16, 4.0, 0.0, 0.0, 0.0, 0.0, &mut rep);
        assert_eq!(st, CsStatus::InvalidArgument);
    }
}

#[test]
fn generated_header_exists_and_declares_surface() {
    let header = std::path::Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("include")
        .join("curlsob.h");
    let text = std::fs::read_to_string(header).expect("cbindgen header");
    for sym in [
        "cs_field_loss_yau",
        "cs_field_free",
        "cs_gauge_fix",
        "cs_quotient",
        "cs_zero_mode_residual",
        "cs_last_error_message",
        "CS_STATUS_OK",
    ] {
        assert!(text.contains(sym), "header missing {sym}");
    }
}
