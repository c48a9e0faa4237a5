//! C ABI over `cloudq`.
//!
//! Every entry point returns a [`CloudqStatus`]; on failure the message is
//! available from [`cloudq_last_error_message`] on the same thread. Objects are
//! opaque handles released by their matching `_free` function. Strings handed
//! out by the library are released with [`cloudq_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use cloudq::arcsine::{min_pieces, PiecewisePolynomial, DOMAIN_END};
use cloudq::cli::execute;
use cloudq::config::{Format, RunConfig};
use cloudq::ddouble::DD;
use cloudq::master::{euler_step, expected_count, ProbabilityTable};
use cloudq::presets::preset;
use cloudq::resource::{estimate_case, EstimationCase, ResourceReport};
use cloudq::state_space::{KernelSpec, MassDistribution, TransitionTable};
use cloudq::Error;

/// Result of every call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CloudqStatus {
    Ok = 0,
    /// A check ran but did not pass (`cloudq_run` only).
    CheckFailed = 1,
    Config = 2,
    InvalidParameter = 3,
    ResourceLimit = 4,
    InvalidState = 5,
    StepSize = 6,
    FixedPoint = 7,
    Fit = 8,
    Cost = 9,
    Io = 10,
    NullPointer = 11,
    InvalidUtf8 = 12,
    Overflow = 13,
    Panic = 14,
}

impl From<&Error> for CloudqStatus {
    fn from(e: &Error) -> Self {
        match e.exit_code() {
            2 => CloudqStatus::Config,
            3 => CloudqStatus::InvalidParameter,
            4 => CloudqStatus::ResourceLimit,
            5 => CloudqStatus::InvalidState,
            6 => CloudqStatus::StepSize,
            7 => CloudqStatus::FixedPoint,
            8 => CloudqStatus::Fit,
            9 => CloudqStatus::Cost,
            _ => CloudqStatus::Io,
        }
    }
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let text = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(text).ok());
}

struct Failure(CloudqStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(CloudqStatus::from(&e), e.to_string())
    }
}

type Outcome<T> = Result<T, Failure>;

fn guard(f: impl FnOnce() -> Outcome<()>) -> CloudqStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => CloudqStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            CloudqStatus::Panic
        }
    }
}

fn null(what: &str) -> Failure {
    Failure(CloudqStatus::NullPointer, format!("{what} is null"))
}

unsafe fn read_str<'a>(p: *const c_char, what: &str) -> Outcome<&'a str> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p).to_str().map_err(|_| {
        Failure(
            CloudqStatus::InvalidUtf8,
            format!("{what} is not valid UTF-8"),
        )
    })
}

unsafe fn write<T>(out: *mut T, value: T, what: &str) -> Outcome<()> {
    if out.is_null() {
        return Err(null(what));
    }
    out.write(value);
    Ok(())
}

unsafe fn handle<'a, T>(h: *const T, what: &str) -> Outcome<&'a T> {
    h.as_ref().ok_or_else(|| null(what))
}

fn owned_string(s: String) -> Outcome<*mut c_char> {
    CString::new(s).map(CString::into_raw).map_err(|_| {
        Failure(
            CloudqStatus::InvalidUtf8,
            "output contains a NUL byte".into(),
        )
    })
}

/// Message of the last failed call on this thread, or null. Owned by the
/// library and valid until the next call on this thread.
#[no_mangle]
pub extern "C" fn cloudq_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Releases a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn cloudq_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn cloudq_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Runs a JSON run configuration as the command-line front-end would and
/// returns the rendered output (`as_csv` selects CSV over JSON). Side files
/// named in the configuration are written. Returns `CheckFailed` with the
/// output still set when the run completed but a check did not pass.
///
/// # Safety
/// `config_json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cloudq_run(
    config_json: *const c_char,
    as_csv: bool,
    out: *mut *mut c_char,
) -> CloudqStatus {
    let mut passed = true;
    let status = guard(|| {
        let cfg = RunConfig::from_json(read_str(config_json, "config_json")?)?;
        let outcome = execute(&cfg.resolve()?)?;
        for (path, text) in &outcome.files {
            std::fs::write(path, text).map_err(Error::from)?;
        }
        let text = outcome.render(if as_csv { Format::Csv } else { Format::Json })?;
        passed = outcome.passed;
        write(out, owned_string(text)?, "out")
    });
    if status == CloudqStatus::Ok && !passed {
        set_error("run completed but a check did not pass");
        return CloudqStatus::CheckFailed;
    }
    status
}

/// Resource estimate of one case.
pub struct CloudqReport {
    report: ResourceReport,
}

/// Totals of a report.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct CloudqTotals {
    pub t_count: u64,
    pub t_depth: u64,
    pub logical_qubits: u64,
    pub eps_max: f64,
}

fn boxed_report(case: &EstimationCase, out: *mut *mut CloudqReport) -> Outcome<()> {
    let report = estimate_case(case)?;
    unsafe { write(out, Box::into_raw(Box::new(CloudqReport { report })), "out") }
}

/// Estimates a built-in case (`paper-case-1` .. `paper-case-5`).
///
/// # Safety
/// `name` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cloudq_report_from_preset(
    name: *const c_char,
    out: *mut *mut CloudqReport,
) -> CloudqStatus {
    guard(|| boxed_report(&preset(read_str(name, "name")?)?, out))
}

/// Estimates a case given as a JSON object with the estimation-case fields.
///
/// # Safety
/// `case_json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cloudq_report_from_json(
    case_json: *const c_char,
    out: *mut *mut CloudqReport,
) -> CloudqStatus {
    guard(|| {
        let case: EstimationCase = serde_json::from_str(read_str(case_json, "case_json")?)
            .map_err(|e| Failure(CloudqStatus::Config, format!("case: {e}")))?;
        boxed_report(&case, out)
    })
}

/// Headline totals. Fails with `Overflow` if a count exceeds 64 bits.
///
/// # Safety
/// `report` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cloudq_report_totals(
    report: *const CloudqReport,
    out: *mut CloudqTotals,
) -> CloudqStatus {
    guard(|| {
        let r = &handle(report, "report")?.report;
        let narrow = |v: u128, what: &str| {
            u64::try_from(v).map_err(|_| {
                Failure(
                    CloudqStatus::Overflow,
                    format!("{what} {v} exceeds 64 bits"),
                )
            })
        };
        let totals = CloudqTotals {
            t_count: narrow(r.totals.t_count, "T-count")?,
            t_depth: narrow(r.totals.t_depth, "T-depth")?,
            logical_qubits: r.totals.logical_qubits,
            eps_max: r.error.eps_max,
        };
        write(out, totals, "out")
    })
}

/// Full report as pretty-printed JSON; free with [`cloudq_string_free`].
///
/// # Safety
/// `report` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cloudq_report_to_json(
    report: *const CloudqReport,
    out: *mut *mut c_char,
) -> CloudqStatus {
    guard(|| {
        let r = &handle(report, "report")?.report;
        let text = serde_json::to_string_pretty(r).map_err(Error::from)?;
        write(out, owned_string(text)?, "out")
    })
}

/// # Safety
/// `report` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn cloudq_report_free(report: *mut CloudqReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}

/// Piecewise arcsine approximation on `[0, 0.5]`.
pub struct CloudqArcsine {
    fit: PiecewisePolynomial,
}

/// Fits the fewest degree-`degree` pieces meeting `eps`; `grid` points per
/// piece, 0 for the default.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cloudq_arcsine_fit(
    degree: u32,
    eps: f64,
    grid: usize,
    out: *mut *mut CloudqArcsine,
) -> CloudqStatus {
    guard(|| {
        let grid = if grid == 0 {
            cloudq::arcsine::DEFAULT_GRID
        } else {
            grid
        };
        let fit = min_pieces(degree as usize, eps, grid)?;
        write(out, Box::into_raw(Box::new(CloudqArcsine { fit })), "out")
    })
}

/// # Safety
/// `fit` must be a live handle; outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn cloudq_arcsine_info(
    fit: *const CloudqArcsine,
    pieces: *mut usize,
    max_error: *mut f64,
) -> CloudqStatus {
    guard(|| {
        let f = &handle(fit, "fit")?.fit;
        write(pieces, f.piece_count(), "pieces")?;
        write(max_error, f.max_error, "max_error")
    })
}

/// Evaluates the approximation at `x` in `[0, 0.5]`.
///
/// # Safety
/// `fit` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cloudq_arcsine_eval(
    fit: *const CloudqArcsine,
    x: f64,
    out: *mut f64,
) -> CloudqStatus {
    guard(|| {
        let f = &handle(fit, "fit")?.fit;
        if !(0.0..=DOMAIN_END).contains(&x) {
            return Err(Failure(
                CloudqStatus::InvalidParameter,
                format!("x = {x} outside [0, 0.5]"),
            ));
        }
        write(out, f.eval(DD::new(x)).to_f64(), "out")
    })
}

/// # Safety
/// `fit` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn cloudq_arcsine_free(fit: *mut CloudqArcsine) {
    if !fit.is_null() {
        drop(Box::from_raw(fit));
    }
}

/// Explicit-Euler master-equation solver started from all mass in bin 1.
pub struct CloudqSolver {
    table: TransitionTable,
    p: ProbabilityTable,
}

/// `kernel` is `constant:K0`, `sum:K0` or `product:K0`; null means `constant:1`.
///
/// # Safety
/// `kernel` must be null or a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cloudq_solver_new(
    bins: u32,
    kernel: *const c_char,
    dt: f64,
    out: *mut *mut CloudqSolver,
) -> CloudqStatus {
    guard(|| {
        let kernel: KernelSpec = if kernel.is_null() {
            KernelSpec::Constant { k0: 1.0 }
        } else {
            read_str(kernel, "kernel")?.parse()?
        };
        if bins > cloudq::state_space::DEFAULT_STATE_CAP {
            return Err(Error::ResourceLimit {
                what: format!("N = {bins} exceeds the state cap"),
                limit: cloudq::state_space::DEFAULT_STATE_CAP as u128,
            }
            .into());
        }
        let table = TransitionTable::new(bins, &kernel, dt)?;
        let p = ProbabilityTable::point(MassDistribution::monodisperse(bins));
        write(
            out,
            Box::into_raw(Box::new(CloudqSolver { table, p })),
            "out",
        )
    })
}

/// Advances `steps` time steps. On error the solver keeps its last valid step.
///
/// # Safety
/// `solver` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn cloudq_solver_advance(
    solver: *mut CloudqSolver,
    steps: u64,
) -> CloudqStatus {
    guard(|| {
        let s = solver.as_mut().ok_or_else(|| null("solver"))?;
        for _ in 0..steps {
            s.p = euler_step(&s.p, &s.table)?;
        }
        Ok(())
    })
}

/// Current step index.
///
/// # Safety
/// `solver` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cloudq_solver_step(
    solver: *const CloudqSolver,
    out: *mut u64,
) -> CloudqStatus {
    guard(|| write(out, handle(solver, "solver")?.p.step(), "out"))
}

/// Expected droplet count of `bin` (1-based).
///
/// # Safety
/// `solver` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cloudq_solver_expected_count(
    solver: *const CloudqSolver,
    bin: u32,
    out: *mut f64,
) -> CloudqStatus {
    guard(|| {
        write(
            out,
            expected_count(&handle(solver, "solver")?.p, bin)?,
            "out",
        )
    })
}

/// Total probability, 1 up to rounding.
///
/// # Safety
/// `solver` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cloudq_solver_total(
    solver: *const CloudqSolver,
    out: *mut f64,
) -> CloudqStatus {
    guard(|| write(out, handle(solver, "solver")?.p.total(), "out"))
}

/// # Safety
/// `solver` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn cloudq_solver_free(solver: *mut CloudqSolver) {
    if !solver.is_null() {
        drop(Box::from_raw(solver));
    }
}
