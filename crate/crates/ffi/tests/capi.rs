use std::ffi::{CStr, CString};
use std::ptr;

use chvi_ffi::*;

const CONFIG: &str = "\
dim=1
n=15
alpha=1
delta=1
lambda=1
eps=0.05
T=0.05
dt=0.01
potential.kind=logarithmic
init.kind=mode1
init.amplitude=0.5
";

fn new_sim(text: &str) -> (ChviStatus, *mut ChviSimulation) {
    let c = CString::new(text).unwrap();
    let mut sim = ptr::null_mut();
    let st = unsafe { chvi_simulation_new(c.as_ptr(), &mut sim) };
    (st, sim)
}

fn last_error() -> String {
    let p = chvi_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn version_is_package_version() {
    let v = unsafe { CStr::from_ptr(chvi_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn resolvent_matches_inclusion() {
    let mut y = ChviYosida::default();
    let st = unsafe { chvi_resolvent(ChviPotentialKind::Obstacle, 2.0, 0.1, &mut y) };
    assert_eq!(st, ChviStatus::Ok);
    assert_eq!(y.resolvent, 1.0);
    assert!((y.yosida - 10.0).abs() < 1e-12);

    let st = unsafe { chvi_resolvent(ChviPotentialKind::Logarithmic, 0.3, 0.01, &mut y) };
    assert_eq!(st, ChviStatus::Ok);
    assert!(y.residual < 1e-10);

    let st = unsafe { chvi_resolvent(ChviPotentialKind::Logarithmic, 0.3, -1.0, &mut y) };
    assert_eq!(st, ChviStatus::InvalidArgument);
    assert!(!last_error().is_empty());

    let st = unsafe { chvi_resolvent(ChviPotentialKind::Logarithmic, 0.3, 0.1, ptr::null_mut()) };
    assert_eq!(st, ChviStatus::NullPointer);
}

#[test]
fn run_to_end_dissipates_energy() {
    let (st, sim) = new_sim(CONFIG);
    assert_eq!(st, ChviStatus::Ok, "{}", last_error());
    let mut e0 = ChviEnergy::default();
    assert_eq!(unsafe { chvi_simulation_energy(sim, &mut e0) }, ChviStatus::Ok);

    let mut info = ChviStepInfo::default();
    assert_eq!(unsafe { chvi_simulation_step(sim, &mut info) }, ChviStatus::Ok);
    assert_eq!(info.step, 1);

    let mut taken = 0u64;
    assert_eq!(unsafe { chvi_simulation_run(sim, &mut taken) }, ChviStatus::Ok);
    assert_eq!(taken, 4);
    assert_eq!(unsafe { chvi_simulation_finished(sim) }, 1);

    let mut e1 = ChviEnergy::default();
    unsafe { chvi_simulation_energy(sim, &mut e1) };
    assert!(e1.total <= e0.total);
    assert!(e1.dissipation_integral > 0.0);

    let m = unsafe { chvi_simulation_modes(sim) };
    assert_eq!(m, 15);
    let mut u = vec![0.0; m];
    let mut v = vec![0.0; m];
    assert_eq!(unsafe { chvi_simulation_state(sim, u.as_mut_ptr(), v.as_mut_ptr(), m) }, ChviStatus::Ok);
    assert!(u[0] > 0.0);
    assert_eq!(
        unsafe { chvi_simulation_state(sim, u.as_mut_ptr(), ptr::null_mut(), m - 1) },
        ChviStatus::InvalidArgument
    );
    unsafe { chvi_simulation_free(sim) };
}

#[test]
fn checkpoint_resume_continues_bit_identically() {
    let dir = tempfile::tempdir().unwrap();
    let ck = CString::new(dir.path().join("mid.chvi").to_str().unwrap()).unwrap();

    let (_, a) = new_sim(CONFIG);
    let (_, b) = new_sim(CONFIG);
    unsafe {
        for _ in 0..2 {
            chvi_simulation_step(a, ptr::null_mut());
        }
        assert_eq!(chvi_simulation_write_checkpoint(a, ck.as_ptr()), ChviStatus::Ok);
        chvi_simulation_run(a, ptr::null_mut());
    }

    let cfg = CString::new(CONFIG).unwrap();
    let mut c = ptr::null_mut();
    assert_eq!(unsafe { chvi_simulation_resume(cfg.as_ptr(), ck.as_ptr(), &mut c) }, ChviStatus::Ok);
    let (mut t, mut step) = (0.0, 0u64);
    unsafe { chvi_simulation_time(c, &mut t, &mut step) };
    assert_eq!(step, 2);
    unsafe {
        chvi_simulation_run(c, ptr::null_mut());
        chvi_simulation_run(b, ptr::null_mut());
    }

    let m = unsafe { chvi_simulation_modes(a) };
    let mut ua = vec![0.0; m];
    let mut ub = vec![0.0; m];
    let mut uc = vec![0.0; m];
    unsafe {
        chvi_simulation_state(a, ua.as_mut_ptr(), ptr::null_mut(), m);
        chvi_simulation_state(b, ub.as_mut_ptr(), ptr::null_mut(), m);
        chvi_simulation_state(c, uc.as_mut_ptr(), ptr::null_mut(), m);
    }
    assert_eq!(ua, ub);
    assert_eq!(ua, uc);
    unsafe {
        chvi_simulation_free(a);
        chvi_simulation_free(b);
        chvi_simulation_free(c);
    }
}

#[test]
fn bad_inputs_report_status() {
    let (st, sim) = new_sim("eps=0.1\n");
    assert_eq!(st, ChviStatus::ConfigError);
    assert!(sim.is_null());
    assert!(last_error().contains("missing"));

    let cfg = CString::new(CONFIG).unwrap();
    let missing = CString::new("/nonexistent/ck.chvi").unwrap();
    let mut s = ptr::null_mut();
    assert_eq!(
        unsafe { chvi_simulation_resume(cfg.as_ptr(), missing.as_ptr(), &mut s) },
        ChviStatus::IoError
    );
    assert_eq!(unsafe { chvi_simulation_new(ptr::null(), &mut s) }, ChviStatus::NullPointer);
    assert_eq!(unsafe { chvi_simulation_step(ptr::null_mut(), ptr::null_mut()) }, ChviStatus::NullPointer);
    unsafe { chvi_simulation_free(ptr::null_mut()) };
}

#[test]
fn header_declares_the_api() {
    let h = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/chvi.h")).unwrap();
    for sym in [
        "typedef struct ChviSimulation ChviSimulation",
        "CHVI_STATUS_NUMERICAL_FAILURE = 3",
        "chvi_simulation_new(",
        "chvi_simulation_resume(",
        "chvi_simulation_step(",
        "chvi_simulation_write_checkpoint(",
        "chvi_simulation_free(",
        "chvi_resolvent(",
        "chvi_last_error(",
    ] {
        assert!(h.contains(sym), "header lacks {sym}");
    }
}

#[test]
fn header_compiles_as_c() {
    let Ok(out) = std::process::Command::new("cc")
        .args(["-fsyntax-only", "-std=c99", "-Wall", "-Werror", "-x", "c"])
        .arg(concat!(env!("CARGO_MANIFEST_DIR"), "/include/chvi.h"))
        .output()
    else {
        eprintln!("no C compiler, skipping");
        return;
    };
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}
