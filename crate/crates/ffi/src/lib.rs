//! C ABI for `ipfem`.
//!
//! A run is an opaque handle created by [`ipfem_run_new`] (mesh, geometry,
//! assembly, solve and error evaluation of one catalog case) and released
//! with [`ipfem_run_free`]. Every entry point returns an [`IpfemStatus`]
//! or a sentinel; the message of the last failure on the calling thread is
//! available from [`ipfem_last_error`]. Panics never cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::OnceLock;

use ipfem::assembly::AssemblyOptions;
use ipfem::study::{build_case, list_cases};
use ipfem::{assemble, compute_errors, solve, Discretization, Error, ErrorReport, Method, PenaltyParams, Problem, Side, SolveOptions, Vec2};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IpfemStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    UnknownCase = 3,
    Geometry = 4,
    SingularMatrix = 5,
    ConvergenceFailure = 6,
    InactiveEvaluation = 7,
    Panic = 8,
    Internal = 9,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IpfemMethod {
    Sip = 0,
    Nip = 1,
}

/// Error norms of a run; `norm_b` is NaN when `gamma0 = 0`.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IpfemErrorReport {
    pub l2: f64,
    pub h1_broken: f64,
    pub norm_a: f64,
    pub norm_b: f64,
    pub j0: f64,
    pub j1: f64,
    pub h: f64,
    pub gamma0: f64,
    pub gamma1: f64,
    pub residual: f64,
    pub dofs: usize,
    pub p: usize,
}

/// Opaque run handle.
pub struct IpfemRun {
    problem: Problem,
    disc: Discretization,
    solution: Vec<f64>,
    errors: ErrorReport,
    residual: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_last_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(err: &Error) -> IpfemStatus {
    match err.root() {
        Error::InvalidArgument(_) | Error::OutOfRange { .. } | Error::InsufficientData(_) | Error::ZeroDiagonal { .. } => {
            IpfemStatus::InvalidArgument
        }
        Error::UnknownCase(_) => IpfemStatus::UnknownCase,
        Error::MultiIntersection { .. }
        | Error::TangencyUnresolved { .. }
        | Error::UnresolvedTopology(_)
        | Error::OnInterface { .. }
        | Error::DegenerateSliver { .. } => IpfemStatus::Geometry,
        Error::SingularMatrix(_) => IpfemStatus::SingularMatrix,
        Error::ConvergenceFailure(_) | Error::EigenStagnation(_) => IpfemStatus::ConvergenceFailure,
        Error::InactiveEvaluation { .. } => IpfemStatus::InactiveEvaluation,
        _ => IpfemStatus::Internal,
    }
}

fn fail(status: IpfemStatus, msg: &str) -> IpfemStatus {
    set_last_error(msg);
    status
}

fn from_error(err: Error) -> IpfemStatus {
    fail(status_of(&err), &err.to_string())
}

fn guard(f: impl FnOnce() -> IpfemStatus) -> IpfemStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(_) => fail(IpfemStatus::Panic, "internal panic"),
    }
}

fn build_run(case: &str, method: Method, p: usize, nx: usize, gamma0: f64, gamma1: f64) -> ipfem::Result<IpfemRun> {
    let problem = build_case(case)?;
    let d = PenaltyParams::defaults(method, &problem);
    let g0 = if gamma0.is_nan() { d.gamma0 } else { gamma0 };
    let g1 = if gamma1.is_nan() { d.gamma1 } else { gamma1 };
    let params = PenaltyParams::new(method, g0, g1)?;
    let disc = Discretization::for_problem(&problem, nx, p, 1e-12)?;
    let opts = AssemblyOptions::default();
    let system = assemble(&disc, &problem, &params, opts)?;
    let report = solve(&system, &SolveOptions::default())?;
    let errors = compute_errors(&disc, &problem, &params, &report.solution, opts.volume_points(p) + 2)?;
    Ok(IpfemRun { problem, disc, solution: report.solution, errors, residual: report.residual })
}

/// Runs catalog case `case_name` with degree `p` on an `nx x nx` mesh.
/// Pass NaN for `gamma0` / `gamma1` to use the method's defaults. On
/// success `*out` receives a handle owned by the caller.
///
/// # Safety
/// `case_name` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ipfem_run_new(
    case_name: *const c_char,
    method: IpfemMethod,
    p: u32,
    nx: u32,
    gamma0: f64,
    gamma1: f64,
    out: *mut *mut IpfemRun,
) -> IpfemStatus {
    guard(|| {
        if case_name.is_null() || out.is_null() {
            return fail(IpfemStatus::NullPointer, "null argument to ipfem_run_new");
        }
        *out = std::ptr::null_mut();
        let Ok(name) = CStr::from_ptr(case_name).to_str() else {
            return fail(IpfemStatus::InvalidArgument, "case name is not valid UTF-8");
        };
        let method = match method {
            IpfemMethod::Sip => Method::Sip,
            IpfemMethod::Nip => Method::Nip,
        };
        match build_run(name, method, p as usize, nx as usize, gamma0, gamma1) {
            Ok(run) => {
                *out = Box::into_raw(Box::new(run));
                IpfemStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// Releases a handle; null is ignored.
///
/// # Safety
/// `run` must come from [`ipfem_run_new`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn ipfem_run_free(run: *mut IpfemRun) {
    if !run.is_null() {
        let _ = catch_unwind(AssertUnwindSafe(|| drop(Box::from_raw(run))));
    }
}

/// # Safety
/// `run` and `report` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn ipfem_run_errors(run: *const IpfemRun, report: *mut IpfemErrorReport) -> IpfemStatus {
    guard(|| {
        let (Some(run), false) = (run.as_ref(), report.is_null()) else {
            return fail(IpfemStatus::NullPointer, "null argument to ipfem_run_errors");
        };
        let e = &run.errors;
        *report = IpfemErrorReport {
            l2: e.l2,
            h1_broken: e.h1_broken,
            norm_a: e.norm_a,
            norm_b: e.norm_b.unwrap_or(f64::NAN),
            j0: e.j0,
            j1: e.j1,
            h: e.h,
            gamma0: e.gamma0,
            gamma1: e.gamma1,
            residual: run.residual,
            dofs: e.dofs,
            p: e.p,
        };
        IpfemStatus::Ok
    })
}

/// Number of unknowns of the run, or 0 for a null handle.
///
/// # Safety
/// `run` must be null or a valid handle.
#[no_mangle]
pub unsafe extern "C" fn ipfem_run_num_unknowns(run: *const IpfemRun) -> usize {
    run.as_ref().map_or(0, |r| r.solution.len())
}

/// Copies the solution coefficients into `buf`, which must hold at least
/// [`ipfem_run_num_unknowns`] values.
///
/// # Safety
/// `buf` must point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn ipfem_run_solution(run: *const IpfemRun, buf: *mut f64, len: usize) -> IpfemStatus {
    guard(|| {
        let (Some(run), false) = (run.as_ref(), buf.is_null()) else {
            return fail(IpfemStatus::NullPointer, "null argument to ipfem_run_solution");
        };
        if len < run.solution.len() {
            return fail(IpfemStatus::InvalidArgument, &format!("buffer holds {len} values, need {}", run.solution.len()));
        }
        std::ptr::copy_nonoverlapping(run.solution.as_ptr(), buf, run.solution.len());
        IpfemStatus::Ok
    })
}

/// Evaluates the discrete solution at `(x, y)` on side 1 or 2, or on the
/// side containing the point when `side = 0`. `grad` receives two values
/// and may be null.
///
/// # Safety
/// `value` must be valid; `grad` null or valid for two doubles.
#[no_mangle]
pub unsafe extern "C" fn ipfem_run_evaluate(
    run: *const IpfemRun,
    x: f64,
    y: f64,
    side: i32,
    value: *mut f64,
    grad: *mut f64,
) -> IpfemStatus {
    guard(|| {
        let (Some(run), false) = (run.as_ref(), value.is_null()) else {
            return fail(IpfemStatus::NullPointer, "null argument to ipfem_run_evaluate");
        };
        let side = match side {
            0 => None,
            1 => Some(Side::One),
            2 => Some(Side::Two),
            s => return fail(IpfemStatus::InvalidArgument, &format!("side must be 0, 1 or 2, got {s}")),
        };
        match run.disc.evaluate(&run.solution, Vec2::new(x, y), side) {
            Ok((v, g)) => {
                *value = v;
                if !grad.is_null() {
                    *grad = g.x;
                    *grad.add(1) = g.y;
                }
                IpfemStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// Exact solution of the run's case at `(x, y)` on side 1 or 2.
///
/// # Safety
/// `value` must be valid.
#[no_mangle]
pub unsafe extern "C" fn ipfem_run_exact(run: *const IpfemRun, x: f64, y: f64, side: i32, value: *mut f64) -> IpfemStatus {
    guard(|| {
        let (Some(run), false) = (run.as_ref(), value.is_null()) else {
            return fail(IpfemStatus::NullPointer, "null argument to ipfem_run_exact");
        };
        let side = match side {
            1 => Side::One,
            2 => Side::Two,
            s => return fail(IpfemStatus::InvalidArgument, &format!("side must be 1 or 2, got {s}")),
        };
        match run.problem.exact() {
            Ok(e) => {
                *value = e.value(side, Vec2::new(x, y));
                IpfemStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// Message of the last failure on this thread; empty if none. Valid until
/// the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn ipfem_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

#[no_mangle]
pub extern "C" fn ipfem_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

fn case_names() -> &'static [CString] {
    static NAMES: OnceLock<Vec<CString>> = OnceLock::new();
    NAMES.get_or_init(|| list_cases().iter().map(|c| CString::new(c.name).expect("case names have no NUL")).collect())
}

#[no_mangle]
pub extern "C" fn ipfem_case_count() -> usize {
    case_names().len()
}

/// Name of catalog case `index`, or null when out of range.
#[no_mangle]
pub extern "C" fn ipfem_case_name(index: usize) -> *const c_char {
    case_names().get(index).map_or(std::ptr::null(), |c| c.as_ptr())
}
