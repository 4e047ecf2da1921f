//! C ABI over `mems-core`.
//!
//! Every entry point returns a `MemsStatus` code. Handles are opaque and are
//! released with the matching `*_free` function. On failure the message of
//! the most recent error on the calling thread is available from
//! [`mems_last_error`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use mems_core::config::SolverConfig;
use mems_core::error::MemsError;
use mems_core::grid::{build_grid, Field, TrajectoryPath};
use mems_core::oracle::{mol_solve, QuenchEvent};
use mems_core::parabolic::gamma_fixed_point;
use mems_core::steady::{pullin_threshold, steady_membrane, DEFAULT_MAX_NEWTON};
use mems_core::verify::{run_suite, Suite, VerifyConfig};

/// Status codes shared by every function in this library.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MemsStatus {
    Ok = 0,
    /// A solver failed to converge or left its region of validity.
    Solver = 1,
    /// Malformed configuration or argument.
    Config = 2,
    /// A required pointer was null.
    NullPointer = 3,
    /// Index or buffer length out of range.
    OutOfRange = 4,
    Io = 5,
    /// A Rust panic was caught at the boundary.
    Panic = 6,
}

impl From<&MemsError> for MemsStatus {
    fn from(e: &MemsError) -> Self {
        match e {
            MemsError::Config(_) => MemsStatus::Config,
            MemsError::Io(_) | MemsError::Json(_) => MemsStatus::Io,
            _ => MemsStatus::Solver,
        }
    }
}

/// Which field of a solution to read.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MemsField {
    Pressure = 0,
    Velocity = 1,
    Gap = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct MemsQuench {
    pub time: f64,
    pub node_index: usize,
    pub w_value: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct MemsPullin {
    pub estimate: f64,
    pub lo: f64,
    pub hi: f64,
    pub upper_bound: f64,
}

/// Opaque solver configuration.
pub struct MemsConfig {
    inner: SolverConfig,
}

/// Opaque time history of the pressure, velocity and gap.
pub struct MemsSolution {
    times: Vec<f64>,
    u: Vec<Field>,
    v: Vec<Field>,
    w: Vec<Field>,
    quench: Option<QuenchEvent>,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let s = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(s).ok());
}

struct Fail(MemsStatus, String);

impl From<MemsError> for Fail {
    fn from(e: MemsError) -> Self {
        Fail(MemsStatus::from(&e), e.to_string())
    }
}

fn fail(status: MemsStatus, msg: impl Into<String>) -> Fail {
    Fail(status, msg.into())
}

/// Runs `f`, records its error message and converts panics.
fn guard(f: impl FnOnce() -> Result<(), Fail>) -> MemsStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => MemsStatus::Ok,
        Ok(Err(Fail(code, msg))) => {
            set_error(msg);
            code
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("panic: {msg}"));
            MemsStatus::Panic
        }
    }
}

unsafe fn read_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(fail(MemsStatus::NullPointer, format!("{what} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| fail(MemsStatus::Config, format!("{what} is not valid UTF-8")))
}

unsafe fn out_ref<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Fail> {
    p.as_mut()
        .ok_or_else(|| fail(MemsStatus::NullPointer, format!("{what} is null")))
}

unsafe fn handle<'a, T>(p: *const T, what: &str) -> Result<&'a T, Fail> {
    p.as_ref()
        .ok_or_else(|| fail(MemsStatus::NullPointer, format!("{what} is null")))
}

fn levels(p: &TrajectoryPath<Field>) -> Vec<Field> {
    p.entries().to_vec()
}

/// Message of the last error raised on this thread, or null. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn mems_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(std::ptr::null(), |s| s.as_ptr()))
}

/// Release a string returned by this library.
///
/// # Safety
/// `s` must be null or come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn mems_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Default configuration.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn mems_config_default(out: *mut *mut MemsConfig) -> MemsStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        *out = Box::into_raw(Box::new(MemsConfig {
            inner: SolverConfig::default(),
        }));
        Ok(())
    })
}

/// Parse `key = value` configuration text.
///
/// # Safety
/// `text` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn mems_config_parse(
    text: *const c_char,
    out: *mut *mut MemsConfig,
) -> MemsStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        let inner = SolverConfig::parse(read_str(text, "text")?)?;
        inner.validate()?;
        *out = Box::into_raw(Box::new(MemsConfig { inner }));
        Ok(())
    })
}

/// Load a configuration file.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn mems_config_load(
    path: *const c_char,
    out: *mut *mut MemsConfig,
) -> MemsStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        let inner = SolverConfig::load(Path::new(read_str(path, "path")?))?;
        *out = Box::into_raw(Box::new(MemsConfig { inner }));
        Ok(())
    })
}

/// Canonical text form of a configuration. Free with [`mems_string_free`].
///
/// # Safety
/// `cfg` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn mems_config_emit(
    cfg: *const MemsConfig,
    out: *mut *mut c_char,
) -> MemsStatus {
    guard(|| {
        let cfg = handle(cfg, "cfg")?;
        let out = out_ref(out, "out")?;
        let s = CString::new(cfg.inner.emit())
            .map_err(|_| fail(MemsStatus::Config, "configuration contains NUL"))?;
        *out = s.into_raw();
        Ok(())
    })
}

/// Replace one `key = value` entry.
///
/// # Safety
/// `cfg` must be a live handle; `key` and `value` NUL-terminated strings.
#[no_mangle]
pub unsafe extern "C" fn mems_config_set(
    cfg: *mut MemsConfig,
    key: *const c_char,
    value: *const c_char,
) -> MemsStatus {
    guard(|| {
        let cfg = cfg
            .as_mut()
            .ok_or_else(|| fail(MemsStatus::NullPointer, "cfg is null"))?;
        let key = read_str(key, "key")?.trim();
        let value = read_str(value, "value")?.trim();
        let mut found = false;
        let text: String = cfg
            .inner
            .emit()
            .lines()
            .map(|line| match line.split_once('=') {
                Some((k, _)) if k.trim() == key => {
                    found = true;
                    format!("{key} = {value}\n")
                }
                _ => format!("{line}\n"),
            })
            .collect();
        let text = if found { text } else { format!("{text}{key} = {value}\n") };
        let next = SolverConfig::parse(&text)?;
        next.validate()?;
        cfg.inner = next;
        Ok(())
    })
}

/// # Safety
/// `cfg` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn mems_config_free(cfg: *mut MemsConfig) {
    if !cfg.is_null() {
        drop(Box::from_raw(cfg));
    }
}

/// Run the coupled fixed-point solver over the configured horizon.
///
/// # Safety
/// `cfg` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn mems_simulate(
    cfg: *const MemsConfig,
    out: *mut *mut MemsSolution,
) -> MemsStatus {
    guard(|| {
        let cfg = handle(cfg, "cfg")?;
        let out = out_ref(out, "out")?;
        let sol = gamma_fixed_point(&cfg.inner.coupled_problem()?)?;
        let times = (0..=sol.u_path.n_steps()).map(|j| sol.u_path.time(j)).collect();
        *out = Box::into_raw(Box::new(MemsSolution {
            times,
            u: levels(&sol.u_path),
            v: levels(&sol.v_path),
            w: levels(&sol.w_path),
            quench: None,
        }));
        Ok(())
    })
}

/// Run the method-of-lines reference integrator. A touchdown is not an
/// error: the history stops at the last completed output level and the
/// event is available from [`mems_solution_quench`].
///
/// # Safety
/// `cfg` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn mems_simulate_reference(
    cfg: *const MemsConfig,
    out: *mut *mut MemsSolution,
) -> MemsStatus {
    guard(|| {
        let cfg = handle(cfg, "cfg")?;
        let out = out_ref(out, "out")?;
        let mol = mol_solve(&cfg.inner.mol_problem()?)?;
        let times = (0..mol.levels.len()).map(|j| j as f64 * mol.dt_out).collect();
        let (mut u, mut v, mut w) = (Vec::new(), Vec::new(), Vec::new());
        for (a, b, c) in &mol.levels {
            u.push(a.clone());
            v.push(b.clone());
            w.push(c.clone());
        }
        *out = Box::into_raw(Box::new(MemsSolution {
            times,
            u,
            v,
            w,
            quench: mol.quench,
        }));
        Ok(())
    })
}

/// Number of stored time levels, or 0 for a null handle.
///
/// # Safety
/// `sol` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn mems_solution_n_times(sol: *const MemsSolution) -> usize {
    sol.as_ref().map_or(0, |s| s.times.len())
}

/// Number of interior nodes, or 0 for a null handle.
///
/// # Safety
/// `sol` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn mems_solution_n_nodes(sol: *const MemsSolution) -> usize {
    sol.as_ref()
        .and_then(|s| s.u.first())
        .map_or(0, |f| f.len())
}

/// # Safety
/// `sol` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn mems_solution_time(
    sol: *const MemsSolution,
    index: usize,
    out: *mut f64,
) -> MemsStatus {
    guard(|| {
        let sol = handle(sol, "sol")?;
        let out = out_ref(out, "out")?;
        *out = *sol.times.get(index).ok_or_else(|| {
            fail(
                MemsStatus::OutOfRange,
                format!("time index {index} >= {}", sol.times.len()),
            )
        })?;
        Ok(())
    })
}

/// Copy one field at time level `index` into `buf`, which must hold at
/// least `mems_solution_n_nodes` values.
///
/// # Safety
/// `sol` must be a live handle and `buf` valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn mems_solution_field(
    sol: *const MemsSolution,
    field: MemsField,
    index: usize,
    buf: *mut f64,
    len: usize,
) -> MemsStatus {
    guard(|| {
        let sol = handle(sol, "sol")?;
        if buf.is_null() {
            return Err(fail(MemsStatus::NullPointer, "buf is null"));
        }
        let levels = match field {
            MemsField::Pressure => &sol.u,
            MemsField::Velocity => &sol.v,
            MemsField::Gap => &sol.w,
        };
        let f = levels.get(index).ok_or_else(|| {
            fail(
                MemsStatus::OutOfRange,
                format!("time index {index} >= {}", levels.len()),
            )
        })?;
        if len < f.len() {
            return Err(fail(
                MemsStatus::OutOfRange,
                format!("buffer holds {len} values, need {}", f.len()),
            ));
        }
        std::slice::from_raw_parts_mut(buf, f.len()).copy_from_slice(&f.values);
        Ok(())
    })
}

/// Writes the touchdown event and returns 1 if one occurred, else 0.
/// Returns -1 for null arguments.
///
/// # Safety
/// `sol` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn mems_solution_quench(
    sol: *const MemsSolution,
    out: *mut MemsQuench,
) -> i32 {
    let (Some(sol), Some(out)) = (sol.as_ref(), out.as_mut()) else {
        set_error("sol or out is null");
        return -1;
    };
    match sol.quench {
        Some(q) => {
            *out = MemsQuench {
                time: q.time,
                node_index: q.node_index,
                w_value: q.w_value,
            };
            1
        }
        None => 0,
    }
}

/// # Safety
/// `sol` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn mems_solution_free(sol: *mut MemsSolution) {
    if !sol.is_null() {
        drop(Box::from_raw(sol));
    }
}

/// Steady deflection at load `beta_f` on `n_nodes` interior nodes. When no
/// solution exists `*solvable` is 0 and `w` is left untouched.
///
/// # Safety
/// `w` must be valid for `n_nodes` writes and `solvable` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn mems_steady(
    beta_f: f64,
    length: f64,
    n_nodes: usize,
    tol: f64,
    w: *mut f64,
    solvable: *mut i32,
) -> MemsStatus {
    guard(|| {
        let solvable = out_ref(solvable, "solvable")?;
        if w.is_null() {
            return Err(fail(MemsStatus::NullPointer, "w is null"));
        }
        if !(beta_f.is_finite() && beta_f >= 0.0) {
            return Err(fail(MemsStatus::Config, format!("beta_f must be >= 0, got {beta_f}")));
        }
        let grid = build_grid(length, n_nodes)?;
        let r = steady_membrane(beta_f, &grid, tol, DEFAULT_MAX_NEWTON)?;
        match r.solution() {
            Some(f) => {
                std::slice::from_raw_parts_mut(w, n_nodes).copy_from_slice(&f.values);
                *solvable = 1;
            }
            None => *solvable = 0,
        }
        Ok(())
    })
}

/// Bisect for the largest solvable load.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn mems_pullin(
    length: f64,
    n_nodes: usize,
    bracket_tol: f64,
    out: *mut MemsPullin,
) -> MemsStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        let r = pullin_threshold(&build_grid(length, n_nodes)?, bracket_tol)?;
        *out = MemsPullin {
            estimate: r.estimate,
            lo: r.lo,
            hi: r.hi,
            upper_bound: r.upper_bound,
        };
        Ok(())
    })
}

/// Run a verification suite by name and report the number of failed
/// checks. A suite with failures still returns `Ok`.
///
/// # Safety
/// `suite` must be a NUL-terminated string and `failures` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn mems_verify(
    suite: *const c_char,
    seed: u64,
    failures: *mut usize,
) -> MemsStatus {
    guard(|| {
        let failures = out_ref(failures, "failures")?;
        let suite: Suite = read_str(suite, "suite")?.parse()?;
        let cfg = VerifyConfig {
            seed,
            ..VerifyConfig::default()
        };
        *failures = run_suite(suite, &cfg)?.failures();
        Ok(())
    })
}
