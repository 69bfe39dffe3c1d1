//! C interface to the `dlscp` optimizer.
//!
//! Configs and solutions are opaque handles owned by the caller and released
//! with their `_free` function. Every fallible call returns a [`DlscpStatus`];
//! on failure a description is kept per thread and can be copied out with
//! [`dlscp_last_error`]. Panics never cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use dlscp::artifacts::{RunArtifacts, RunSummary};
use dlscp::config::{ConfigError, RunConfig};
use dlscp::conic::ClarabelSolver;
use dlscp::ptr::{solve, PtrError, SolveReport};
use dlscp::rendezvous::fuel_cost;
use dlscp::verify::{verify, VerifyOptions};

/// Length of a packed state: position, velocity, scalar-last quaternion,
/// body rate.
pub const DLSCP_STATE_DIM: usize = 13;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DlscpStatus {
    Ok = 0,
    /// The solve ran to its iteration cap; the solution handle is still
    /// written and holds the last iterate.
    NotConverged = 1,
    NullPointer = 2,
    InvalidString = 3,
    Config = 4,
    Solver = 5,
    OutOfRange = 6,
    Io = 7,
    Panic = 8,
}

/// A validated run configuration.
pub struct DlscpConfig {
    run: RunConfig,
}

/// Result of a solve together with the config that produced it.
pub struct DlscpSolution {
    run: RunConfig,
    report: SolveReport,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

fn fail(status: DlscpStatus, msg: impl Into<String>) -> DlscpStatus {
    set_error(msg);
    status
}

/// Runs `f`, converting a panic into [`DlscpStatus::Panic`].
fn guard(f: impl FnOnce() -> DlscpStatus) -> DlscpStatus {
    clear_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            fail(DlscpStatus::Panic, format!("panic: {msg}"))
        }
    }
}

unsafe fn read_str<'a>(s: *const c_char, what: &str) -> Result<&'a str, DlscpStatus> {
    if s.is_null() {
        return Err(fail(DlscpStatus::NullPointer, format!("{what} is null")));
    }
    CStr::from_ptr(s)
        .to_str()
        .map_err(|_| fail(DlscpStatus::InvalidString, format!("{what} is not valid UTF-8")))
}

fn config_status(e: ConfigError) -> DlscpStatus {
    let status = match e {
        ConfigError::Io { .. } => DlscpStatus::Io,
        _ => DlscpStatus::Config,
    };
    fail(status, e.to_string())
}

unsafe fn store<T>(out: *mut *mut T, value: T) {
    *out = Box::into_raw(Box::new(value));
}

macro_rules! non_null {
    ($($p:ident),+) => {
        $(if $p.is_null() {
            return fail(DlscpStatus::NullPointer, concat!(stringify!($p), " is null"));
        })+
    };
}

/// Copies the calling thread's last error message into `buf` (NUL
/// terminated, truncated to `len`). Returns the untruncated message length
/// excluding the terminator, or 0 when there is no error.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn dlscp_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let e = e.borrow();
        let Some(msg) = e.as_ref() else {
            if !buf.is_null() && len > 0 {
                *buf = 0;
            }
            return 0;
        };
        let bytes = msg.as_bytes();
        if !buf.is_null() && len > 0 {
            let n = bytes.len().min(len - 1);
            ptr::copy_nonoverlapping(bytes.as_ptr().cast::<c_char>(), buf, n);
            *buf.add(n) = 0;
        }
        bytes.len()
    })
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn dlscp_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Creates the default Apollo rendezvous configuration.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for a handle.
#[no_mangle]
pub unsafe extern "C" fn dlscp_config_default(out: *mut *mut DlscpConfig) -> DlscpStatus {
    guard(|| {
        non_null!(out);
        store(out, DlscpConfig { run: RunConfig::default() });
        DlscpStatus::Ok
    })
}

/// Parses and validates a TOML configuration.
///
/// # Safety
/// `toml` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dlscp_config_from_toml(toml: *const c_char, out: *mut *mut DlscpConfig) -> DlscpStatus {
    guard(|| {
        non_null!(out);
        let text = match read_str(toml, "toml") {
            Ok(t) => t,
            Err(s) => return s,
        };
        match RunConfig::from_toml(text) {
            Ok(run) => {
                store(out, DlscpConfig { run });
                DlscpStatus::Ok
            }
            Err(e) => config_status(e),
        }
    })
}

/// Loads and validates a TOML configuration file.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dlscp_config_load(path: *const c_char, out: *mut *mut DlscpConfig) -> DlscpStatus {
    guard(|| {
        non_null!(out);
        let path = match read_str(path, "path") {
            Ok(p) => p,
            Err(s) => return s,
        };
        match RunConfig::load(Path::new(path)) {
            Ok(run) => {
                store(out, DlscpConfig { run });
                DlscpStatus::Ok
            }
            Err(e) => config_status(e),
        }
    })
}

/// Serializes a configuration to TOML. The returned string is released with
/// [`dlscp_string_free`].
///
/// # Safety
/// `cfg` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dlscp_config_to_toml(cfg: *const DlscpConfig, out: *mut *mut c_char) -> DlscpStatus {
    guard(|| {
        non_null!(cfg, out);
        match CString::new((*cfg).run.to_toml()) {
            Ok(s) => {
                *out = s.into_raw();
                DlscpStatus::Ok
            }
            Err(_) => fail(DlscpStatus::InvalidString, "config text contains NUL"),
        }
    })
}

/// Sets the PTR iteration cap.
///
/// # Safety
/// `cfg` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn dlscp_config_set_max_iters(cfg: *mut DlscpConfig, max_iters: usize) -> DlscpStatus {
    guard(|| {
        non_null!(cfg);
        let mut run = (*cfg).run.clone();
        run.ptr.max_iters = max_iters;
        apply(&mut *cfg, run)
    })
}

/// Sets the homotopy trigger threshold.
///
/// # Safety
/// `cfg` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn dlscp_config_set_beta_trig(cfg: *mut DlscpConfig, beta_trig: f64) -> DlscpStatus {
    guard(|| {
        non_null!(cfg);
        let mut run = (*cfg).run.clone();
        run.homotopy.beta_trig = beta_trig;
        apply(&mut *cfg, run)
    })
}

/// Replaces the config only if the edited copy validates.
fn apply(cfg: &mut DlscpConfig, run: RunConfig) -> DlscpStatus {
    match run.validate() {
        Ok(()) => {
            cfg.run = run;
            DlscpStatus::Ok
        }
        Err(e) => fail(DlscpStatus::Config, e),
    }
}

/// Writes the homotopy sharpness after each update, `updates` values, into
/// `out`. Returns [`DlscpStatus::OutOfRange`] if `len` is too small.
///
/// # Safety
/// `cfg` must be a live handle; `out` must point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn dlscp_config_homotopy_schedule(
    cfg: *const DlscpConfig,
    out: *mut f64,
    len: usize,
) -> DlscpStatus {
    guard(|| {
        non_null!(cfg, out);
        let sched = (*cfg).run.homotopy.schedule();
        if len < sched.len() {
            return fail(DlscpStatus::OutOfRange, format!("need {} values, got room for {len}", sched.len()));
        }
        ptr::copy_nonoverlapping(sched.as_ptr(), out, sched.len());
        DlscpStatus::Ok
    })
}

/// # Safety
/// `cfg` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn dlscp_config_free(cfg: *mut DlscpConfig) {
    if !cfg.is_null() {
        drop(Box::from_raw(cfg));
    }
}

/// Runs the optimizer. On [`DlscpStatus::Ok`] or
/// [`DlscpStatus::NotConverged`] a solution handle is written to `out`.
///
/// # Safety
/// `cfg` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dlscp_solve(cfg: *const DlscpConfig, out: *mut *mut DlscpSolution) -> DlscpStatus {
    guard(|| {
        non_null!(cfg, out);
        *out = ptr::null_mut();
        let run = (*cfg).run.clone();
        let (report, status) = match solve(&run, &ClarabelSolver::default()) {
            Ok(r) => (r, DlscpStatus::Ok),
            Err(PtrError::NotConverged(r)) => {
                set_error(format!("no convergence within {} iterations", r.iterations));
                (*r, DlscpStatus::NotConverged)
            }
            Err(PtrError::Config(msg)) => return fail(DlscpStatus::Config, msg),
            Err(e) => return fail(DlscpStatus::Solver, e.to_string()),
        };
        store(out, DlscpSolution { run, report });
        status
    })
}

/// # Safety
/// `sol` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn dlscp_solution_free(sol: *mut DlscpSolution) {
    if !sol.is_null() {
        drop(Box::from_raw(sol));
    }
}

/// Scalar results of a solve.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct DlscpSummary {
    pub converged: bool,
    pub iterations: usize,
    pub homotopy_updates: usize,
    pub nodes: usize,
    pub thrusters: usize,
    pub final_time: f64,
    /// Normalized fuel cost `Σ Δt / Δt_max`.
    pub fuel_cost: f64,
    /// Total impulse `F·ΣΔt`, N·s.
    pub impulse: f64,
}

/// # Safety
/// `sol` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dlscp_solution_summary(sol: *const DlscpSolution, out: *mut DlscpSummary) -> DlscpStatus {
    guard(|| {
        non_null!(sol, out);
        let DlscpSolution { run, report } = &*sol;
        let s = &report.solution;
        let v = &run.scenario.vehicle;
        *out = DlscpSummary {
            converged: report.converged,
            iterations: report.iterations,
            homotopy_updates: report.updates,
            nodes: s.nodes(),
            thrusters: s.schedule.n_thrusters(),
            final_time: s.t_f,
            fuel_cost: fuel_cost(&s.schedule, v.dt_max),
            impulse: v.thrust * s.schedule.dt.sum(),
        };
        DlscpStatus::Ok
    })
}

/// Copies node state `k` (`0..=nodes`) into `out[0..13]`.
///
/// # Safety
/// `sol` must be a live handle; `out` must point to 13 writable doubles.
#[no_mangle]
pub unsafe extern "C" fn dlscp_solution_state(sol: *const DlscpSolution, k: usize, out: *mut f64) -> DlscpStatus {
    guard(|| {
        non_null!(sol, out);
        let states = &(*sol).report.solution.states;
        let Some(x) = states.get(k) else {
            return fail(DlscpStatus::OutOfRange, format!("node {k} out of 0..={}", states.len() - 1));
        };
        ptr::copy_nonoverlapping(x.to_vector().as_ptr(), out, DLSCP_STATE_DIM);
        DlscpStatus::Ok
    })
}

/// Copies the pulse durations fired at node `k` (`0..nodes`) into `out`.
///
/// # Safety
/// `sol` must be a live handle; `out` must point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn dlscp_solution_pulses(
    sol: *const DlscpSolution,
    k: usize,
    out: *mut f64,
    len: usize,
) -> DlscpStatus {
    guard(|| {
        non_null!(sol, out);
        let sched = &(*sol).report.solution.schedule;
        if k >= sched.nodes() {
            return fail(DlscpStatus::OutOfRange, format!("node {k} out of 0..{}", sched.nodes()));
        }
        let col = sched.column(k);
        if len < col.len() {
            return fail(DlscpStatus::OutOfRange, format!("need {} values, got room for {len}", col.len()));
        }
        ptr::copy_nonoverlapping(col.as_ptr(), out, col.len());
        DlscpStatus::Ok
    })
}

/// Re-propagates the solution and checks it against the exact logic.
/// `passed` receives whether every check held.
///
/// # Safety
/// `sol` must be a live handle; `passed` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dlscp_solution_verify(sol: *const DlscpSolution, passed: *mut bool) -> DlscpStatus {
    guard(|| {
        non_null!(sol, passed);
        let DlscpSolution { run, report } = &*sol;
        match verify(&report.solution, &run.scenario, &run.integrator, &VerifyOptions::default()) {
            Ok(v) => {
                *passed = v.passed;
                if !v.passed {
                    let names: Vec<&str> = v.failures().map(|c| c.name.as_str()).collect();
                    set_error(format!("failed checks: {}", names.join(", ")));
                }
                DlscpStatus::Ok
            }
            Err(e) => fail(DlscpStatus::Solver, e.to_string()),
        }
    })
}

/// Writes the run artifacts (trajectory, schedule, iterate log, summary,
/// verification) into directory `dir`, creating it if needed.
///
/// # Safety
/// `sol` must be a live handle; `dir` must be a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn dlscp_solution_write(sol: *const DlscpSolution, dir: *const c_char) -> DlscpStatus {
    guard(|| {
        non_null!(sol);
        let dir = match read_str(dir, "dir") {
            Ok(d) => d,
            Err(s) => return s,
        };
        let DlscpSolution { run, report } = &*sol;
        let result = (|| -> Result<(), String> {
            let artifacts = RunArtifacts::create(Path::new(dir)).map_err(|e| e.to_string())?;
            let mut summary = RunSummary::new(&report.solution, run, report.converged, report.updates);
            let v = verify(&report.solution, &run.scenario, &run.integrator, &VerifyOptions::default())
                .map_err(|e| e.to_string())?;
            summary.verified = Some(v.passed);
            artifacts.write_verification(&v).map_err(|e| e.to_string())?;
            artifacts
                .write_run(run, &report.solution, &summary, &v.dense)
                .map_err(|e| e.to_string())
        })();
        match result {
            Ok(()) => DlscpStatus::Ok,
            Err(e) => fail(DlscpStatus::Io, e),
        }
    })
}

/// Releases a string returned by this library.
///
/// # Safety
/// `s` must be null or a string from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn dlscp_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
