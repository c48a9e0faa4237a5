use std::ffi::{CStr, CString};
use std::ptr;

use cloudq_ffi::*;

fn last_error() -> String {
    let p = cloudq_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn preset_report_totals() {
    let name = CString::new("paper-case-1").unwrap();
    let mut report = ptr::null_mut();
    unsafe {
        assert_eq!(
            cloudq_report_from_preset(name.as_ptr(), &mut report),
            CloudqStatus::Ok
        );
        let mut totals = CloudqTotals::default();
        assert_eq!(cloudq_report_totals(report, &mut totals), CloudqStatus::Ok);
        assert!((totals.t_count as f64 / 4.9e14 - 1.0).abs() < 0.15);
        assert_eq!(totals.logical_qubits, 18778);
        let mut json = ptr::null_mut();
        assert_eq!(cloudq_report_to_json(report, &mut json), CloudqStatus::Ok);
        let text = CStr::from_ptr(json).to_str().unwrap().to_owned();
        assert!(text.contains("\"schema_version\": 1"));
        cloudq_string_free(json);
        cloudq_report_free(report);
    }
}

#[test]
fn bad_inputs_report_errors() {
    let mut report = ptr::null_mut();
    unsafe {
        let name = CString::new("paper-case-9").unwrap();
        assert_eq!(
            cloudq_report_from_preset(name.as_ptr(), &mut report),
            CloudqStatus::Config
        );
        assert!(last_error().contains("paper-case-9"));
        assert!(report.is_null());
        assert_eq!(
            cloudq_report_from_preset(ptr::null(), &mut report),
            CloudqStatus::NullPointer
        );
        let case = CString::new(r#"{"N":40}"#).unwrap();
        assert_eq!(
            cloudq_report_from_json(case.as_ptr(), &mut report),
            CloudqStatus::Config
        );
        let mut totals = CloudqTotals::default();
        assert_eq!(
            cloudq_report_totals(ptr::null(), &mut totals),
            CloudqStatus::NullPointer
        );
        cloudq_report_free(ptr::null_mut());
        cloudq_string_free(ptr::null_mut());
    }
}

#[test]
fn arcsine_handle() {
    let mut fit = ptr::null_mut();
    unsafe {
        assert_eq!(cloudq_arcsine_fit(7, 1e-13, 0, &mut fit), CloudqStatus::Ok);
        let (mut pieces, mut err) = (0usize, 0.0);
        assert_eq!(
            cloudq_arcsine_info(fit, &mut pieces, &mut err),
            CloudqStatus::Ok
        );
        assert_eq!(pieces, 7);
        assert!(err < 1e-13);
        let mut y = 0.0;
        assert_eq!(cloudq_arcsine_eval(fit, 0.3, &mut y), CloudqStatus::Ok);
        assert!((y - 0.3f64.asin()).abs() < 1e-13);
        assert_eq!(
            cloudq_arcsine_eval(fit, 0.7, &mut y),
            CloudqStatus::InvalidParameter
        );
        cloudq_arcsine_free(fit);
        assert_eq!(cloudq_arcsine_fit(0, 1e-13, 0, &mut fit), CloudqStatus::Fit);
    }
}

#[test]
fn solver_handle() {
    let mut s = ptr::null_mut();
    unsafe {
        assert_eq!(
            cloudq_solver_new(3, ptr::null(), 0.1, &mut s),
            CloudqStatus::Ok
        );
        assert_eq!(cloudq_solver_advance(s, 2), CloudqStatus::Ok);
        let (mut n1, mut total, mut step) = (0.0, 0.0, 0u64);
        assert_eq!(
            cloudq_solver_expected_count(s, 1, &mut n1),
            CloudqStatus::Ok
        );
        assert_eq!(cloudq_solver_total(s, &mut total), CloudqStatus::Ok);
        assert_eq!(cloudq_solver_step(s, &mut step), CloudqStatus::Ok);
        // Two steps of K dt = 0.1 from (3 0 0): (3 0 0) keeps 0.7^2, (1 1 0) holds
        // 0.7*0.3 + 0.3*0.9 = 0.48 and (0 0 1) the remaining 0.03.
        assert!((n1 - (3.0 * 0.49 + 0.48)).abs() < 1e-12, "{n1}");
        assert!((total - 1.0).abs() < 1e-12);
        assert_eq!(step, 2);
        assert_eq!(
            cloudq_solver_expected_count(s, 4, &mut n1),
            CloudqStatus::InvalidState
        );
        cloudq_solver_free(s);
        let kernel = CString::new("sum:1").unwrap();
        assert_eq!(
            cloudq_solver_new(10, kernel.as_ptr(), 0.5, &mut s),
            CloudqStatus::Ok
        );
        assert_eq!(cloudq_solver_advance(s, 1), CloudqStatus::StepSize);
        assert!(last_error().contains("time step too large"));
        cloudq_solver_free(s);
    }
}

#[test]
fn run_config() {
    let cfg = CString::new(r#"{"command":"simulate","N":3,"M":5,"check_master":true}"#).unwrap();
    let mut out = ptr::null_mut();
    unsafe {
        assert_eq!(cloudq_run(cfg.as_ptr(), false, &mut out), CloudqStatus::Ok);
        let text = CStr::from_ptr(out).to_str().unwrap();
        assert!(text.contains("\"passed\": true"));
        cloudq_string_free(out);
        let cfg = CString::new(r#"{"command":"estimate","preset":"paper-case-2"}"#).unwrap();
        assert_eq!(cloudq_run(cfg.as_ptr(), true, &mut out), CloudqStatus::Ok);
        assert!(CStr::from_ptr(out)
            .to_str()
            .unwrap()
            .starts_with("case,eps_max,"));
        cloudq_string_free(out);
        let cfg = CString::new("").unwrap();
        assert_eq!(
            cloudq_run(cfg.as_ptr(), false, &mut out),
            CloudqStatus::Config
        );
        assert!(last_error().contains("command"));
    }
}

#[test]
fn version_is_static() {
    let v = unsafe { CStr::from_ptr(cloudq_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}
