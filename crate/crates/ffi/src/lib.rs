//! C interface to the `chvi` solver.
//!
//! Every fallible function returns a [`ChviStatus`]; on failure the message
//! is available from [`chvi_last_error`] on the same thread. Simulations are
//! opaque handles created by `chvi_simulation_*` constructors and released
//! with [`chvi_simulation_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use chvi::dynamics::{prepare_initial_data, DynamicsError, SimState, Simulation};
use chvi::io::{parse_config, resume, write_checkpoint, IoError};
use chvi::potential::{PotentialKind, PotentialSpec};

/// Result codes. 2, 3 and 4 match the exit codes of the command line tool.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChviStatus {
    Ok = 0,
    InvalidArgument = 1,
    ConfigError = 2,
    NumericalFailure = 3,
    IoError = 4,
    NullPointer = 5,
    Panic = 6,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChviPotentialKind {
    Logarithmic = 0,
    Obstacle = 1,
    /// `u^4` with unit coefficient.
    DoubleWell = 2,
    /// `beta == 0`.
    None = 3,
}

/// One evaluation of the Yosida family at a point.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ChviYosida {
    pub resolvent: f64,
    pub yosida: f64,
    pub moreau: f64,
    pub residual: f64,
}

/// Energy ledger of the current state.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ChviEnergy {
    pub kinetic: f64,
    pub dirichlet: f64,
    pub potential: f64,
    pub concave: f64,
    pub total: f64,
    /// Against the previous step; zero before the first step.
    pub inequality_residual: f64,
    pub dissipation_integral: f64,
}

/// Summary of the most recent step.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ChviStepInfo {
    pub step: u64,
    pub t: f64,
    pub newton_iters: u64,
    pub max_abs_u: f64,
    pub energy_defect: f64,
}

/// Opaque simulation handle.
pub struct ChviSimulation {
    inner: Simulation,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let s = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(s).ok());
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

fn io_status(e: &IoError) -> ChviStatus {
    match e.exit_code() {
        2 => ChviStatus::ConfigError,
        3 => ChviStatus::NumericalFailure,
        _ => ChviStatus::IoError,
    }
}

fn dyn_status(e: &DynamicsError) -> ChviStatus {
    match e {
        DynamicsError::StepFailure { .. } => ChviStatus::NumericalFailure,
        _ => ChviStatus::ConfigError,
    }
}

/// Runs `f`, converting errors and panics into status codes.
fn guard(f: impl FnOnce() -> Result<(), (ChviStatus, String)>) -> ChviStatus {
    clear_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => ChviStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            ChviStatus::Panic
        }
    }
}

fn null(what: &str) -> (ChviStatus, String) {
    (ChviStatus::NullPointer, format!("{what} is NULL"))
}

/// # Safety
/// `p` must be NULL or point to a NUL-terminated string.
unsafe fn to_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, (ChviStatus, String)> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| (ChviStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

/// Message describing the last failure on this thread, or NULL.
///
/// The pointer stays valid until the next call into this library on the
/// same thread.
#[no_mangle]
pub extern "C" fn chvi_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(std::ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn chvi_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

fn kind_of(kind: ChviPotentialKind) -> PotentialKind {
    match kind {
        ChviPotentialKind::Logarithmic => PotentialKind::Logarithmic,
        ChviPotentialKind::Obstacle => PotentialKind::Obstacle,
        ChviPotentialKind::DoubleWell => PotentialKind::DoubleWellSmooth { coefficient: 1.0 },
        ChviPotentialKind::None => PotentialKind::DoubleWellSmooth { coefficient: 0.0 },
    }
}

/// Evaluates resolvent, Yosida approximation and Moreau envelope at `r`.
///
/// # Safety
/// `out` must be NULL or point to writable memory for one `ChviYosida`.
#[no_mangle]
pub unsafe extern "C" fn chvi_resolvent(kind: ChviPotentialKind, r: f64, eps: f64, out: *mut ChviYosida) -> ChviStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let spec = PotentialSpec::new(kind_of(kind), 0.0).map_err(|e| (ChviStatus::InvalidArgument, e.to_string()))?;
        let y = spec
            .resolvent(r, eps)
            .map_err(|e| (ChviStatus::InvalidArgument, e.to_string()))?;
        *out = ChviYosida {
            resolvent: y.resolvent,
            yosida: y.yosida,
            moreau: y.moreau,
            residual: y.residual,
        };
        Ok(())
    })
}

unsafe fn build(
    config: *const c_char,
    checkpoint: Option<*const c_char>,
    out: *mut *mut ChviSimulation,
) -> ChviStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = std::ptr::null_mut();
        let text = to_str(config, "config")?;
        let cfg = parse_config(text, None).map_err(|e| (io_status(&e), e.to_string()))?;
        let state = match checkpoint {
            Some(p) => {
                let path = to_str(p, "checkpoint path")?;
                resume(Path::new(path), &cfg.sim.grid, cfg.sim.eps).map_err(|e| (io_status(&e), e.to_string()))?
            }
            None => {
                let (u0, u1) = cfg.initial_data().map_err(|e| (io_status(&e), e.to_string()))?;
                let prep = prepare_initial_data(&u0, &u1, &cfg.sim).map_err(|e| (dyn_status(&e), e.to_string()))?;
                SimState::initial(prep.u0, prep.u1).map_err(|e| (dyn_status(&e), e.to_string()))?
            }
        };
        let inner = Simulation::new(cfg.sim, state).map_err(|e| (dyn_status(&e), e.to_string()))?;
        *out = Box::into_raw(Box::new(ChviSimulation { inner }));
        Ok(())
    })
}

/// Creates a simulation from configuration text (`key=value` lines).
///
/// # Safety
/// `config` must be a NUL-terminated string; `out` must point to writable
/// storage for one pointer. On failure `*out` is set to NULL.
#[no_mangle]
pub unsafe extern "C" fn chvi_simulation_new(config: *const c_char, out: *mut *mut ChviSimulation) -> ChviStatus {
    build(config, None, out)
}

/// Creates a simulation that continues from a checkpoint file.
///
/// # Safety
/// As [`chvi_simulation_new`]; `checkpoint_path` must be a NUL-terminated
/// string.
#[no_mangle]
pub unsafe extern "C" fn chvi_simulation_resume(
    config: *const c_char,
    checkpoint_path: *const c_char,
    out: *mut *mut ChviSimulation,
) -> ChviStatus {
    build(config, Some(checkpoint_path), out)
}

/// Releases a handle. NULL is ignored.
///
/// # Safety
/// `sim` must be NULL or a handle from this library that was not yet freed.
#[no_mangle]
pub unsafe extern "C" fn chvi_simulation_free(sim: *mut ChviSimulation) {
    if !sim.is_null() {
        drop(Box::from_raw(sim));
    }
}

/// Advances one time step. `info` may be NULL.
///
/// # Safety
/// `sim` must be a live handle; `info` NULL or writable.
#[no_mangle]
pub unsafe extern "C" fn chvi_simulation_step(sim: *mut ChviSimulation, info: *mut ChviStepInfo) -> ChviStatus {
    guard(|| {
        let s = sim.as_mut().ok_or_else(|| null("sim"))?;
        let rec = s.inner.advance().map_err(|e| (dyn_status(&e), e.to_string()))?;
        if let Some(i) = info.as_mut() {
            *i = ChviStepInfo {
                step: rec.step,
                t: rec.t,
                newton_iters: rec.newton_iters as u64,
                max_abs_u: rec.max_abs_u,
                energy_defect: rec.energy_defect,
            };
        }
        Ok(())
    })
}

/// Advances until the final time. Returns the number of steps taken in
/// `steps_taken` (may be NULL).
///
/// # Safety
/// `sim` must be a live handle; `steps_taken` NULL or writable.
#[no_mangle]
pub unsafe extern "C" fn chvi_simulation_run(sim: *mut ChviSimulation, steps_taken: *mut u64) -> ChviStatus {
    guard(|| {
        let s = sim.as_mut().ok_or_else(|| null("sim"))?;
        let mut n = 0u64;
        let res = loop {
            if s.inner.is_finished() {
                break Ok(());
            }
            match s.inner.advance() {
                Ok(_) => n += 1,
                Err(e) => break Err((dyn_status(&e), e.to_string())),
            }
        };
        if let Some(out) = steps_taken.as_mut() {
            *out = n;
        }
        res
    })
}

/// Nonzero once the final time has been reached.
///
/// # Safety
/// `sim` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn chvi_simulation_finished(sim: *const ChviSimulation) -> i32 {
    sim.as_ref().map_or(0, |s| i32::from(s.inner.is_finished()))
}

/// Energy ledger of the current state.
///
/// # Safety
/// `sim` must be a live handle; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn chvi_simulation_energy(sim: *const ChviSimulation, out: *mut ChviEnergy) -> ChviStatus {
    guard(|| {
        let s = sim.as_ref().ok_or_else(|| null("sim"))?;
        let o = out.as_mut().ok_or_else(|| null("out"))?;
        let rec = s.inner.record();
        let l = rec.ledger;
        *o = ChviEnergy {
            kinetic: l.kinetic,
            dirichlet: l.dirichlet,
            potential: l.potential,
            concave: l.concave,
            total: l.total,
            inequality_residual: l.inequality_residual,
            dissipation_integral: rec.dissipation_integral,
        };
        Ok(())
    })
}

/// Number of spectral coefficients per field (`n^dim`).
///
/// # Safety
/// `sim` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn chvi_simulation_modes(sim: *const ChviSimulation) -> usize {
    sim.as_ref().map_or(0, |s| s.inner.config().grid.modes())
}

/// Current time and step.
///
/// # Safety
/// `sim` must be a live handle; `t` and `step` NULL or writable.
#[no_mangle]
pub unsafe extern "C" fn chvi_simulation_time(sim: *const ChviSimulation, t: *mut f64, step: *mut u64) -> ChviStatus {
    guard(|| {
        let s = sim.as_ref().ok_or_else(|| null("sim"))?;
        if let Some(t) = t.as_mut() {
            *t = s.inner.state().t;
        }
        if let Some(k) = step.as_mut() {
            *k = s.inner.state().step;
        }
        Ok(())
    })
}

/// Copies the coefficients of `u` and `u_t` into caller buffers of length
/// `len`, which must equal [`chvi_simulation_modes`]. Either buffer may be
/// NULL.
///
/// # Safety
/// Non-NULL buffers must hold `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn chvi_simulation_state(
    sim: *const ChviSimulation,
    u: *mut f64,
    v: *mut f64,
    len: usize,
) -> ChviStatus {
    guard(|| {
        let s = sim.as_ref().ok_or_else(|| null("sim"))?;
        let st = s.inner.state();
        let m = st.u.coeffs().len();
        if len != m {
            return Err((ChviStatus::InvalidArgument, format!("buffer length {len}, expected {m}")));
        }
        for (dst, src) in [(u, st.u.coeffs()), (v, st.v.coeffs())] {
            if !dst.is_null() {
                std::ptr::copy_nonoverlapping(src.as_ptr(), dst, m);
            }
        }
        Ok(())
    })
}

/// Writes the current state as a CHVI1 checkpoint.
///
/// # Safety
/// `sim` must be a live handle; `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn chvi_simulation_write_checkpoint(sim: *const ChviSimulation, path: *const c_char) -> ChviStatus {
    guard(|| {
        let s = sim.as_ref().ok_or_else(|| null("sim"))?;
        let p = to_str(path, "path")?;
        write_checkpoint(Path::new(p), s.inner.state(), s.inner.config().eps).map_err(|e| (io_status(&e), e.to_string()))
    })
}
