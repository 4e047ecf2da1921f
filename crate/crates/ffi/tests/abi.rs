use std::ffi::{CStr, CString};
use std::path::Path;
use std::process::Command;
use std::ptr;

use mems_ffi::*;

fn last_error() -> String {
    let p = mems_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn default_config_round_trips_through_text() {
    unsafe {
        let mut cfg = ptr::null_mut();
        assert_eq!(mems_config_default(&mut cfg), MemsStatus::Ok);
        let mut text = ptr::null_mut();
        assert_eq!(mems_config_emit(cfg, &mut text), MemsStatus::Ok);
        let mut again = ptr::null_mut();
        assert_eq!(mems_config_parse(text, &mut again), MemsStatus::Ok);
        let mut text2 = ptr::null_mut();
        assert_eq!(mems_config_emit(again, &mut text2), MemsStatus::Ok);
        assert_eq!(CStr::from_ptr(text), CStr::from_ptr(text2));
        mems_string_free(text);
        mems_string_free(text2);
        mems_config_free(cfg);
        mems_config_free(again);
    }
}

#[test]
fn bad_input_maps_to_status_codes() {
    unsafe {
        let mut cfg = ptr::null_mut();
        let text = CString::new("physics.bogus = 1\n").unwrap();
        assert_eq!(mems_config_parse(text.as_ptr(), &mut cfg), MemsStatus::Config);
        assert!(cfg.is_null());
        assert!(last_error().contains("bogus"));

        assert_eq!(mems_config_parse(ptr::null(), &mut cfg), MemsStatus::NullPointer);
        assert_eq!(mems_config_emit(ptr::null(), ptr::null_mut()), MemsStatus::NullPointer);

        let path = CString::new("/nonexistent/run.cfg").unwrap();
        assert_eq!(mems_config_load(path.as_ptr(), &mut cfg), MemsStatus::Config);

        assert_eq!(mems_config_default(&mut cfg), MemsStatus::Ok);
        let key = CString::new("physics.beta_p").unwrap();
        let value = CString::new("-1").unwrap();
        assert_eq!(mems_config_set(cfg, key.as_ptr(), value.as_ptr()), MemsStatus::Config);
        mems_config_free(cfg);

        let mut pull = MemsPullin::default();
        assert_eq!(mems_pullin(1.0, 31, 0.0, &mut pull), MemsStatus::Config);

        let mut failures = 0usize;
        let suite = CString::new("nope").unwrap();
        assert_eq!(mems_verify(suite.as_ptr(), 1, &mut failures), MemsStatus::Config);
    }
}

#[test]
fn equilibrium_simulation_stays_at_rest() {
    unsafe {
        let mut cfg = ptr::null_mut();
        assert_eq!(mems_config_default(&mut cfg), MemsStatus::Ok);
        for (k, v) in [("grid.n_modes", "16"), ("grid.n_nodes", "31"), ("time.n_steps", "8")] {
            let (k, v) = (CString::new(k).unwrap(), CString::new(v).unwrap());
            assert_eq!(mems_config_set(cfg, k.as_ptr(), v.as_ptr()), MemsStatus::Ok, "{}", last_error());
        }
        let mut sol = ptr::null_mut();
        assert_eq!(mems_simulate(cfg, &mut sol), MemsStatus::Ok, "{}", last_error());
        assert_eq!(mems_solution_n_times(sol), 9);
        let n = mems_solution_n_nodes(sol);
        assert_eq!(n, 31);
        let mut buf = vec![0.0; n];
        assert_eq!(
            mems_solution_field(sol, MemsField::Pressure, 8, buf.as_mut_ptr(), n),
            MemsStatus::Ok
        );
        assert!(buf.iter().all(|u| (u - 1.5).abs() < 1e-9));
        assert_eq!(
            mems_solution_field(sol, MemsField::Gap, 9, buf.as_mut_ptr(), n),
            MemsStatus::OutOfRange
        );
        assert_eq!(
            mems_solution_field(sol, MemsField::Gap, 0, buf.as_mut_ptr(), n - 1),
            MemsStatus::OutOfRange
        );
        let mut t = 0.0;
        assert_eq!(mems_solution_time(sol, 8, &mut t), MemsStatus::Ok);
        assert!((t - 0.05).abs() < 1e-14);
        let mut q = MemsQuench::default();
        assert_eq!(mems_solution_quench(sol, &mut q), 0);
        mems_solution_free(sol);
        mems_config_free(cfg);
    }
}

#[test]
fn reference_integrator_reports_touchdown() {
    let text = "physics.beta_F = 5\nphysics.beta_p = 1\nphysics.theta1 = 1\nphysics.theta2 = 1\n\
                grid.n_nodes = 63\ntime.T = 1\ntime.n_steps = 200\n";
    unsafe {
        let text = CString::new(text).unwrap();
        let mut cfg = ptr::null_mut();
        assert_eq!(mems_config_parse(text.as_ptr(), &mut cfg), MemsStatus::Ok, "{}", last_error());
        let mut sol = ptr::null_mut();
        assert_eq!(mems_simulate_reference(cfg, &mut sol), MemsStatus::Ok);
        let mut q = MemsQuench::default();
        assert_eq!(mems_solution_quench(sol, &mut q), 1);
        assert!((q.time - 0.4993).abs() < 0.01, "{}", q.time);
        assert_eq!(q.node_index, 31);
        assert!(mems_solution_n_times(sol) < 201);
        mems_solution_free(sol);
        mems_config_free(cfg);
    }
}

#[test]
fn steady_and_pullin() {
    unsafe {
        let n = 63;
        let mut w = vec![0.0; n];
        let mut ok = -1;
        assert_eq!(mems_steady(0.5, 1.0, n, 1e-9, w.as_mut_ptr(), &mut ok), MemsStatus::Ok);
        assert_eq!(ok, 1);
        assert!(w.iter().all(|&x| x > 0.0 && x < 1.0));
        assert_eq!(mems_steady(2.0, 1.0, n, 1e-9, w.as_mut_ptr(), &mut ok), MemsStatus::Ok);
        assert_eq!(ok, 0);

        let mut p = MemsPullin::default();
        assert_eq!(mems_pullin(1.0, 63, 1e-3, &mut p), MemsStatus::Ok);
        assert!(p.lo <= p.estimate && p.estimate <= p.hi && p.hi - p.lo <= 1e-3);
        assert!(p.estimate > 1.3 && p.estimate < p.upper_bound);
    }
}

#[test]
fn verify_suite_through_abi() {
    let suite = CString::new("semigroup").unwrap();
    let mut failures = usize::MAX;
    let status = unsafe { mems_verify(suite.as_ptr(), 20240101, &mut failures) };
    assert_eq!(status, MemsStatus::Ok);
    assert_eq!(failures, 0);
}

#[test]
fn header_is_valid_c() {
    let header = Path::new(env!("CARGO_MANIFEST_DIR")).join("include/mems.h");
    let text = std::fs::read_to_string(&header).expect("generated header");
    for name in [
        "mems_config_parse",
        "mems_simulate",
        "mems_solution_field",
        "mems_solution_free",
        "mems_pullin",
        "MEMS_STATUS_PANIC",
    ] {
        assert!(text.contains(name), "header lacks {name}");
    }
    let Ok(status) = Command::new("cc")
        .args(["-fsyntax-only", "-Wall", "-Werror", "-x", "c"])
        .arg(&header)
        .status()
    else {
        eprintln!("no C compiler found; syntax check skipped");
        return;
    };
    assert!(status.success());
}
