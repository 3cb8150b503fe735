use std::ffi::{CStr, CString};
use std::ptr;

use ipfem_ffi::*;

fn last_error() -> String {
    unsafe { CStr::from_ptr(ipfem_last_error()) }.to_string_lossy().into_owned()
}

fn new_run(case: &str, method: IpfemMethod, p: u32, nx: u32) -> (IpfemStatus, *mut IpfemRun) {
    let name = CString::new(case).unwrap();
    let mut run = ptr::null_mut();
    let status = unsafe { ipfem_run_new(name.as_ptr(), method, p, nx, f64::NAN, f64::NAN, &mut run) };
    (status, run)
}

#[test]
fn run_lifecycle() {
    let (status, run) = new_run("circle-jump", IpfemMethod::Sip, 1, 8);
    assert_eq!(status, IpfemStatus::Ok, "{}", last_error());
    assert!(!run.is_null());
    unsafe {
        let mut report = std::mem::zeroed::<IpfemErrorReport>();
        assert_eq!(ipfem_run_errors(run, &mut report), IpfemStatus::Ok);
        assert_eq!(report.p, 1);
        assert!(report.l2 > 0.0 && report.l2 < 0.1);
        assert!(report.norm_b >= report.norm_a);
        assert!(report.residual < 1e-10);

        let n = ipfem_run_num_unknowns(run);
        assert_eq!(n, report.dofs);
        let mut buf = vec![0.0; n];
        assert_eq!(ipfem_run_solution(run, buf.as_mut_ptr(), n), IpfemStatus::Ok);
        assert!(buf.iter().any(|v| *v != 0.0));
        assert_eq!(ipfem_run_solution(run, buf.as_mut_ptr(), n - 1), IpfemStatus::InvalidArgument);

        let (mut v, mut g) = (0.0, [0.0; 2]);
        assert_eq!(ipfem_run_evaluate(run, 0.1, 0.2, 0, &mut v, g.as_mut_ptr()), IpfemStatus::Ok);
        let mut exact = 0.0;
        assert_eq!(ipfem_run_exact(run, 0.1, 0.2, 1, &mut exact), IpfemStatus::Ok);
        assert!((v - exact).abs() < 0.05, "{v} vs {exact}");
        assert_eq!(ipfem_run_evaluate(run, 0.1, 0.2, 3, &mut v, ptr::null_mut()), IpfemStatus::InvalidArgument);
        assert_eq!(ipfem_run_evaluate(run, 5.0, 0.2, 0, &mut v, ptr::null_mut()), IpfemStatus::InvalidArgument);
        assert!(!last_error().is_empty());
        // Far inside Ω₁ the second copy has no support.
        assert_eq!(ipfem_run_evaluate(run, 0.0, 0.0, 2, &mut v, ptr::null_mut()), IpfemStatus::InactiveEvaluation);
        ipfem_run_free(run);
    }
}

#[test]
fn errors_map_to_status_codes() {
    let (status, run) = new_run("no-such-case", IpfemMethod::Sip, 1, 8);
    assert_eq!(status, IpfemStatus::UnknownCase);
    assert!(run.is_null());
    assert!(last_error().contains("no-such-case"));
    assert_eq!(new_run("circle-jump", IpfemMethod::Nip, 0, 8).0, IpfemStatus::InvalidArgument);
    unsafe {
        let mut out = ptr::null_mut();
        assert_eq!(ipfem_run_new(ptr::null(), IpfemMethod::Sip, 1, 8, f64::NAN, f64::NAN, &mut out), IpfemStatus::NullPointer);
        let mut report = std::mem::zeroed::<IpfemErrorReport>();
        assert_eq!(ipfem_run_errors(ptr::null(), &mut report), IpfemStatus::NullPointer);
        assert_eq!(ipfem_run_num_unknowns(ptr::null()), 0);
        ipfem_run_free(ptr::null_mut());
    }
}

#[test]
fn catalog_and_version() {
    let n = ipfem_case_count();
    assert!(n >= 3);
    let names: Vec<String> = (0..n).map(|i| unsafe { CStr::from_ptr(ipfem_case_name(i)) }.to_string_lossy().into_owned()).collect();
    assert!(names.contains(&"aligned-edge".to_string()));
    assert!(ipfem_case_name(n).is_null());
    let v = unsafe { CStr::from_ptr(ipfem_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}

#[test]
fn header_declares_the_abi() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/ipfem.h")).unwrap();
    for sym in [
        "ipfem_run_new",
        "ipfem_run_free",
        "ipfem_run_errors",
        "ipfem_run_num_unknowns",
        "ipfem_run_solution",
        "ipfem_run_evaluate",
        "ipfem_run_exact",
        "ipfem_last_error",
        "ipfem_version",
        "ipfem_case_count",
        "ipfem_case_name",
        "typedef struct IpfemRun IpfemRun",
        "IPFEM_STATUS_OK = 0",
        "IPFEM_METHOD_NIP = 1",
    ] {
        assert!(header.contains(sym), "header lacks {sym}");
    }
    // The header must be valid C when a compiler is around.
    if let Ok(out) = std::process::Command::new("cc").args(["-fsyntax-only", "-xc", "-std=c99", "-"]).stdin(std::process::Stdio::piped()).spawn().and_then(|mut c| {
        use std::io::Write;
        c.stdin.take().unwrap().write_all(header.as_bytes())?;
        c.wait_with_output()
    }) {
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
}
