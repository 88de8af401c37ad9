use std::ffi::{CStr, CString};
use std::process::Command;
use std::ptr;

use breachcast_ffi::*;

fn last_error() -> String {
    let p = bc_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

unsafe fn icold_point_case() -> *mut BcCase {
    let mut case = ptr::null_mut();
    let s = bc_case_new(61.0, 24.0, 3.0, 67.5, 2.85, 61.0, 38_276_344.0, 61.0, 0.82, &mut case);
    assert_eq!(s, BcStatus::Ok);
    case
}

#[test]
fn simulate_and_read_series() {
    unsafe {
        let case = icold_point_case();
        let mut h = ptr::null_mut();
        assert_eq!(bc_simulate(case, (-8.25f64).exp(), 4.17, -0.669, &mut h), BcStatus::Ok);
        let n = bc_hydrograph_len(h);
        assert!(n > 10);
        let mut summary = std::mem::zeroed::<BcHydrographSummary>();
        assert_eq!(bc_hydrograph_summary(h, &mut summary), BcStatus::Ok);
        let mut t = vec![0.0; n];
        let mut q = vec![0.0; n];
        assert_eq!(
            bc_hydrograph_series(h, t.as_mut_ptr(), q.as_mut_ptr(), ptr::null_mut(), ptr::null_mut(), ptr::null_mut(), n),
            BcStatus::Ok
        );
        assert!(t.windows(2).all(|w| w[0] <= w[1]));
        let peak = q.iter().cloned().fold(0.0, f64::max);
        assert_eq!(peak, summary.peak_discharge);
        assert_eq!(
            bc_hydrograph_series(h, t.as_mut_ptr(), ptr::null_mut(), ptr::null_mut(), ptr::null_mut(), ptr::null_mut(), n - 1),
            BcStatus::InvalidArgument
        );
        bc_hydrograph_free(h);
        bc_case_free(case);
    }
}

#[test]
fn errors_are_reported() {
    unsafe {
        let mut case = ptr::null_mut();
        let s = bc_case_new(-1.0, 24.0, 3.0, 60.0, 2.0, 10.0, 1e6, 10.0, 0.5, &mut case);
        assert_eq!(s, BcStatus::InvalidArgument);
        assert!(case.is_null());
        assert!(!last_error().is_empty());

        let mut h = ptr::null_mut();
        assert_eq!(bc_simulate(ptr::null(), 1e-4, 4.0, -0.5, &mut h), BcStatus::NullPointer);
        assert!(last_error().contains("null"));

        let case = icold_point_case();
        assert!(bc_last_error().is_null());
        assert_eq!(bc_simulate(case, 1e-4, -1.0, -0.5, &mut h), BcStatus::InvalidArgument);
        bc_case_free(case);

        let missing = CString::new("/nonexistent/dams.csv").unwrap();
        let mut d = ptr::null_mut();
        assert_eq!(bc_dataset_load(missing.as_ptr(), &mut d), BcStatus::Io);
        bc_case_free(ptr::null_mut());
        assert_eq!(bc_hydrograph_len(ptr::null()), 0);
    }
}

#[test]
fn posterior_is_reproducible() {
    unsafe {
        let mut d = ptr::null_mut();
        assert_eq!(bc_dataset_bundled(&mut d), BcStatus::Ok);
        assert_eq!(bc_dataset_len(d), 15);
        let q = [-8.37, 0.34, 4.12, -0.61, 0.22, 0.139];
        let (mut a, mut b) = (0.0, 0.0);
        let m = BcResidualModel::Gaussian;
        assert_eq!(bc_log_posterior(d, m, q.as_ptr(), 6, 5, 64, 64, &mut a), BcStatus::Ok);
        assert_eq!(bc_log_posterior(d, m, q.as_ptr(), 6, 5, 64, 64, &mut b), BcStatus::Ok);
        assert!(a.is_finite());
        assert_eq!(a, b);
        assert_eq!(bc_log_posterior(d, m, q.as_ptr(), 4, 5, 64, 64, &mut a), BcStatus::Validation);
        let outside = [6.0, 0.34, 4.12, -0.61, 0.22, 0.139];
        assert_eq!(bc_log_posterior(d, m, outside.as_ptr(), 6, 5, 64, 64, &mut a), BcStatus::Ok);
        assert_eq!(a, f64::NEG_INFINITY);
        bc_dataset_free(d);
    }
}

#[test]
fn ensemble_through_handles() {
    let path = CString::new(concat!(env!("CARGO_MANIFEST_DIR"), "/../core/data/icold.json")).unwrap();
    unsafe {
        let mut c = ptr::null_mut();
        assert_eq!(bc_prediction_case_load(path.as_ptr(), &mut c), BcStatus::Ok);
        let mut e = ptr::null_mut();
        assert_eq!(bc_predict(c, 1, 3, &mut e), BcStatus::Validation);
        assert_eq!(bc_predict(c, 64, 3, &mut e), BcStatus::Ok);
        let mut counts = std::mem::zeroed::<BcEnsembleCounts>();
        assert_eq!(bc_ensemble_counts(e, &mut counts), BcStatus::Ok);
        assert_eq!(counts.members, 64);
        assert_eq!(counts.total_failures + counts.partial_failures + counts.failed_runs, 64);
        let mut peaks = vec![0.0; 64];
        assert_eq!(bc_ensemble_peaks(e, peaks.as_mut_ptr(), 64), BcStatus::Ok);
        assert!(peaks.iter().all(|p| p.is_nan() || *p > 0.0));
        let dir = tempfile::tempdir().unwrap();
        let d = CString::new(dir.path().to_str().unwrap()).unwrap();
        assert_eq!(bc_ensemble_write(e, d.as_ptr()), BcStatus::Ok);
        assert!(dir.path().join("members.csv").exists());
        bc_ensemble_free(e);
        bc_prediction_case_free(c);
    }
}

#[test]
fn header_is_valid_c() {
    let header = concat!(env!("CARGO_MANIFEST_DIR"), "/include/breachcast.h");
    let text = std::fs::read_to_string(header).unwrap();
    for name in ["bc_case_new", "bc_simulate", "bc_last_error", "bc_predict", "BC_STATUS_OK"] {
        assert!(text.contains(name), "{name} missing from header");
    }
    let Ok(status) = Command::new("cc").args(["-fsyntax-only", "-std=c99", "-x", "c", header]).status() else {
        eprintln!("no C compiler found; skipping syntax check");
        return;
    };
    assert!(status.success());
}
