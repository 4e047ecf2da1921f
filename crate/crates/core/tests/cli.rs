use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn mems(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mems"))
        .args(args)
        .env_remove("MEMS_OUT_DIR")
        .output()
        .expect("run mems")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn write_config(dir: &Path, body: &str) -> String {
    let path = dir.join("run.cfg");
    std::fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_owned()
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

const SMALL: &str = "grid.n_nodes = 31\ngrid.n_modes = 16\ntime.n_steps = 8\n";

#[test]
fn equilibrium_simulation_writes_complete_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let out = dir.path().join("out");
    let o = mems(&["simulate", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));

    let manifest = read_json(&out.join("manifest.json"));
    let artifacts = manifest["artifacts"].as_array().unwrap();
    for name in ["config.cfg", "diagnostics.json", "manifest.json", "primary/u.csv", "oracle/w.csv"] {
        assert!(artifacts.iter().any(|a| a == name), "manifest lacks {name}");
    }
    for a in artifacts {
        assert!(out.join(a.as_str().unwrap()).is_file(), "missing {a}");
    }
    assert_eq!(manifest["config_hash"].as_str().unwrap().len(), 64);

    let diag = read_json(&out.join("diagnostics.json"));
    assert!(diag["max_abs_u_minus_theta1"].as_f64().unwrap() <= 1e-9);
    assert!(diag["quench"].is_null());
    let diff = &diag["solver_oracle_abs_linf"];
    for k in ["u", "v", "w"] {
        assert!(diff[k].as_f64().unwrap() <= 1e-9, "{k}: {}", diff[k]);
    }

    let csv = std::fs::read_to_string(out.join("primary/u.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 9);
}

#[test]
fn touchdown_is_reported_and_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "physics.beta_F = 5\nphysics.beta_p = 1\nphysics.theta1 = 1\nphysics.theta2 = 1\n\
         grid.n_nodes = 63\ntime.T = 1\ntime.n_steps = 200\n",
    );
    let out = dir.path().join("out");
    let o = mems(&["simulate", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("quench at t ="));
    let diag = read_json(&out.join("diagnostics.json"));
    let t = diag["quench"]["time"].as_f64().unwrap();
    assert!((t - 0.4993).abs() < 0.01, "{t}");
}

#[test]
fn steady_sweep_rows_and_flags() {
    let o = mems(&["steady", "--sweep", "0:2:15", "--n-nodes", "63"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("beta_F,w_min,solvable"));
    let rows: Vec<(f64, f64, bool)> = lines
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            (f[0].parse().unwrap(), f[1].parse().unwrap_or(f64::NAN), f[2] == "true")
        })
        .collect();
    assert_eq!(rows.len(), 15);
    // solvable up to the fold, unsolvable after it
    let first_bad = rows.iter().position(|r| !r.2).expect("an unsolvable load");
    assert!(rows[first_bad..].iter().all(|r| !r.2));
    assert!(rows[..first_bad].windows(2).all(|w| w[1].1 < w[0].1));
    assert!(rows[first_bad - 1].0 < 1.41 && rows[first_bad].0 > 1.39);
}

fn bracket(tol: &str) -> (f64, f64) {
    let o = mems(&["pullin", "--tol", tol, "--n-nodes", "63"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let line = text.lines().find(|l| l.starts_with("bracket:")).unwrap();
    let inner = line.trim_start_matches("bracket: [").trim_end_matches(']');
    let (a, b) = inner.split_once(", ").unwrap();
    (a.parse().unwrap(), b.parse().unwrap())
}

#[test]
fn pullin_brackets_nest_as_tolerance_shrinks() {
    let (lo1, hi1) = bracket("1e-2");
    let (lo2, hi2) = bracket("1e-4");
    assert!(lo1 <= lo2 && hi2 <= hi1);
    assert!(hi2 - lo2 <= 1e-4 && hi1 - lo1 <= 1e-2);
}

#[test]
fn verify_semigroup_passes_and_writes_reports() {
    let dir = tempfile::tempdir().unwrap();
    let o = mems(&["verify", "--suite", "semigroup", "--json", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let report: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(report["checks"].as_array().unwrap().iter().all(|c| c["passed"] == true));
    assert!(dir.path().join("verify/semigroup.json").is_file());
}

#[test]
fn exit_codes() {
    assert_eq!(mems(&[]).status.code(), Some(2));
    assert_eq!(mems(&["--help"]).status.code(), Some(0));
    assert_eq!(mems(&["simulate", "--config", "/nonexistent/run.cfg"]).status.code(), Some(2));
    assert_eq!(mems(&["steady", "--sweep", "2:1:5"]).status.code(), Some(2));
    assert_eq!(mems(&["verify", "--suite", "bogus"]).status.code(), Some(2));

    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let out = out.to_str().unwrap();
    let cfg = write_config(dir.path(), "physics.beta_p = -1\n");
    assert_eq!(mems(&["simulate", "--config", &cfg, "--out", out]).status.code(), Some(2));
    let cfg = write_config(dir.path(), "grid.n_nodes = 31\ngrid.n_nodes = 63\n");
    assert_eq!(mems(&["simulate", "--config", &cfg, "--out", out]).status.code(), Some(2));
}
