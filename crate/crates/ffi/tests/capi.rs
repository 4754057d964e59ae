//! Exercise the C ABI surface the way a foreign caller would.

use std::ffi::{CStr, CString};

use nsac_lab_ffi::*;

#[test]
fn params_lifecycle_and_sound_speed() {
    unsafe {
        let p = nsac_params_new();
        assert!(!p.is_null());
        let mut c = 0.0;
        assert_eq!(nsac_sound_speed(p, &mut c), NsacStatus::Ok);
        assert!((c - 1.0).abs() < 1e-14);

        // gamma = 2, a = 1 gives c = sqrt(2).
        let key = CString::new("pressure_amp").unwrap();
        assert_eq!(nsac_params_set(p, key.as_ptr(), 1.0), NsacStatus::Ok);
        assert_eq!(nsac_sound_speed(p, &mut c), NsacStatus::Ok);
        assert!((c - 2.0_f64.sqrt()).abs() < 1e-14);

        // Invalid value surfaces as a status code plus a readable message.
        assert_eq!(nsac_params_set(p, key.as_ptr(), -1.0), NsacStatus::DomainError);
        let mut buf = [0i8; 256];
        let len = nsac_last_error(buf.as_mut_ptr(), buf.len());
        assert!(len > 0);
        let msg = CStr::from_ptr(buf.as_ptr()).to_str().unwrap();
        assert!(msg.contains("amplitude"), "message: {msg}");

        nsac_params_free(p);
        nsac_params_free(std::ptr::null_mut()); // null is ignored
    }
}

#[test]
fn null_pointers_are_reported() {
    unsafe {
        let mut c = 0.0;
        assert_eq!(nsac_sound_speed(std::ptr::null(), &mut c), NsacStatus::NullPointer);
        let p = nsac_params_new();
        assert_eq!(nsac_sound_speed(p, std::ptr::null_mut()), NsacStatus::NullPointer);
        nsac_params_free(p);
    }
}

#[test]
fn pressure_eval_matches_library() {
    unsafe {
        let p = nsac_params_new();
        let (mut pv, mut dp, mut ddp) = (0.0, 0.0, 0.0);
        assert_eq!(nsac_pressure_eval(p, 1.0, &mut pv, &mut dp, &mut ddp), NsacStatus::Ok);
        assert!((pv - 0.5).abs() < 1e-14);
        assert!((dp + 1.0).abs() < 1e-14);
        assert!((ddp - 3.0).abs() < 1e-14);
        assert_eq!(
            nsac_pressure_eval(p, -1.0, &mut pv, &mut dp, &mut ddp),
            NsacStatus::DomainError
        );
        nsac_params_free(p);
    }
}

#[test]
fn green_symbol_identity_at_t_zero() {
    unsafe {
        let p = nsac_params_new();
        let mut out = [0.0; 8];
        for which in [0, 1] {
            assert_eq!(nsac_green_symbol(p, 0.7, 0.0, which, out.as_mut_ptr()), NsacStatus::Ok);
            // Identity matrix: re diag 1, everything else 0.
            assert!((out[0] - 1.0).abs() < 1e-12);
            assert!((out[6] - 1.0).abs() < 1e-12);
            for idx in [1, 2, 3, 4, 5, 7] {
                assert!(out[idx].abs() < 1e-12);
            }
        }
        assert_eq!(nsac_green_symbol(p, 0.7, 1.0, 9, out.as_mut_ptr()), NsacStatus::InvalidArgument);
        nsac_params_free(p);
    }
}

#[test]
fn green_tilde_has_unit_row_sums_under_integration() {
    unsafe {
        let p = nsac_params_new();
        let mut m = [0.0; 4];
        assert_eq!(nsac_green_tilde_physical(p, 0.0, 2.0, m.as_mut_ptr()), NsacStatus::Ok);
        assert!(m[0] > 0.0);
        assert_eq!(
            nsac_green_tilde_physical(p, 0.0, 0.0, m.as_mut_ptr()),
            NsacStatus::DomainError
        );
        nsac_params_free(p);
    }
}

#[test]
fn fit_rate_through_the_boundary() {
    unsafe {
        let times: Vec<f64> = (0..50).map(|i| 1.0 + i as f64).collect();
        let values: Vec<f64> = times.iter().map(|t| (1.0 + t).powf(-0.75)).collect();
        let (mut fitted, mut stderr) = (0.0, 0.0);
        let status = nsac_fit_rate(
            times.as_ptr(),
            values.as_ptr(),
            times.len(),
            0,
            1.0,
            50.0,
            &mut fitted,
            &mut stderr,
        );
        assert_eq!(status, NsacStatus::Ok);
        assert!((fitted + 0.75).abs() < 1e-10);
        // Exponential mode on an exponential series.
        let values: Vec<f64> = times.iter().map(|t| (-2.0 * t).exp()).collect();
        let status = nsac_fit_rate(
            times.as_ptr(),
            values.as_ptr(),
            times.len(),
            1,
            1.0,
            50.0,
            &mut fitted,
            &mut stderr,
        );
        assert_eq!(status, NsacStatus::Ok);
        assert!((fitted - 2.0).abs() < 1e-10);
    }
}

#[test]
fn run_experiment_through_the_boundary() {
    let dir = tempfile::tempdir().unwrap();
    let config = CString::new(
        "experiment=spectrum-certify\npoints=1024\nbox_length=500\nspectrum_samples=500\n",
    )
    .unwrap();
    let out = CString::new(dir.path().to_str().unwrap()).unwrap();
    let mut passed = false;
    let status = unsafe { nsac_run_experiment(config.as_ptr(), out.as_ptr(), &mut passed) };
    assert_eq!(status, NsacStatus::Ok);
    assert!(passed);
    assert!(dir.path().join("manifest.json").exists());
    // Unknown keys surface as InvalidArgument.
    let bad = CString::new("bogus_key=1\n").unwrap();
    let status = unsafe { nsac_run_experiment(bad.as_ptr(), out.as_ptr(), &mut passed) };
    assert_eq!(status, NsacStatus::InvalidArgument);
}
