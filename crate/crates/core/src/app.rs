//! Command-line front end: argument parsing, run orchestration and output
//! persistence. Exit status: 0 success (a quench is a result), 1 solver
//! failure, 2 configuration error.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{ArgGroup, Args, Parser, Subcommand};
use serde_json::json;

use crate::config::{resolve_out_dir, unix_now, RunManifest, SolverConfig};
use crate::error::{MemsError, Result};
use crate::grid::{build_grid, Field, Grid1D, TrajectoryPath};
use crate::oracle::{mol_solve, MolSolution};
use crate::parabolic::{gamma_fixed_point, CoupledSolution};
use crate::steady::{
    pullin_threshold, steady_membrane, steady_sweep, sweep_to_csv, SweepPoint, DEFAULT_MAX_NEWTON,
    DEFAULT_NEWTON_TOL,
};
use crate::verify::{relative_linf, run_suite, Suite, VerifyConfig};

#[derive(Debug, Parser)]
#[command(name = "mems", version, about = "Coupled squeeze-film MEMS simulator")]
pub struct Cli {
    /// Worker threads for parallel sections (default: all cores).
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// Seed for randomized verification probes.
    #[arg(long, global = true, default_value_t = VerifyConfig::default().seed)]
    pub seed: u64,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the coupled solver and the finite-difference oracle.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Steady membrane for one load or a sweep of loads.
    Steady(SteadyArgs),
    /// Bisect for the pull-in load.
    Pullin {
        #[arg(long, default_value_t = 1e-4)]
        tol: f64,
        #[arg(long, default_value_t = 1.0)]
        length: f64,
        #[arg(long, default_value_t = 127)]
        n_nodes: usize,
    },
    /// Run a named verification suite.
    Verify {
        #[arg(long)]
        suite: String,
        /// Print the JSON report instead of the table.
        #[arg(long)]
        json: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
#[group(skip)]
#[command(group(ArgGroup::new("load").required(true).args(["beta_f", "sweep"])))]
pub struct SteadyArgs {
    #[arg(long = "beta-f", allow_hyphen_values = true)]
    pub beta_f: Option<f64>,
    /// `LO:HI:N`
    #[arg(long)]
    pub sweep: Option<String>,
    #[arg(long, default_value_t = 1.0)]
    pub length: f64,
    #[arg(long, default_value_t = 127)]
    pub n_nodes: usize,
}

/// Parses and runs; returns the process exit status.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn run(cli: &Cli) -> Result<i32> {
    if let Some(n) = cli.workers {
        if n == 0 {
            return Err(MemsError::Config("--workers must be positive".into()));
        }
        // a second call within one process keeps the first pool
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    match &cli.command {
        Command::Simulate { config, out } => simulate(config, out.as_deref()),
        Command::Steady(args) => steady(args),
        Command::Pullin {
            tol,
            length,
            n_nodes,
        } => pullin(*tol, *length, *n_nodes),
        Command::Verify { suite, json, out } => verify(suite, *json, out.as_deref(), cli.seed),
    }
}

/// Collects files written under one output root, each once.
struct Artifacts {
    root: PathBuf,
    files: Vec<String>,
}

impl Artifacts {
    fn new(root: &Path) -> Result<Self> {
        std::fs::create_dir_all(root)?;
        Ok(Self {
            root: root.to_path_buf(),
            files: Vec::new(),
        })
    }

    fn write(&mut self, rel: &str, contents: &str) -> Result<()> {
        let path = self.root.join(rel);
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir)?;
        }
        std::fs::write(&path, contents)?;
        if !self.files.iter().any(|f| f == rel) {
            self.files.push(rel.to_string());
        }
        Ok(())
    }

    fn write_paths(&mut self, dir: &str, grid: &Grid1D, paths: [&TrajectoryPath<Field>; 3]) -> Result<()> {
        for (name, p) in ["u", "v", "w"].iter().zip(paths) {
            self.write(&format!("{dir}/{name}.csv"), &p.to_csv(grid))?;
        }
        Ok(())
    }
}

fn oracle_summary(mol: &MolSolution) -> serde_json::Value {
    json!({
        "completed": mol.completed(),
        "quench": mol.quench,
        "substeps": mol.substeps,
        "min_dt": mol.min_dt,
        "min_u": mol.min_u,
        "levels": mol.levels.len(),
    })
}

pub fn simulate(config_path: &Path, out: Option<&Path>) -> Result<i32> {
    let started = unix_now();
    let cfg = SolverConfig::load(config_path)?;
    let problem = cfg.coupled_problem()?;
    let mol_problem = cfg.mol_problem()?;
    let grid = cfg.grid()?;
    let root = resolve_out_dir(out, Some(&cfg));
    let mut art = Artifacts::new(&root)?;
    art.write("config.cfg", &cfg.emit())?;

    let mol = mol_solve(&mol_problem)?;
    let primary: Result<CoupledSolution> = gamma_fixed_point(&problem);

    if mol.levels.len() >= 2 {
        art.write_paths("oracle", &grid, [&mol.u_path()?, &mol.v_path()?, &mol.w_path()?])?;
    }
    let mut diagnostics = json!({
        "oracle": oracle_summary(&mol),
        "quench": mol.quench,
    });
    let mut status = 0;
    match &primary {
        Ok(sol) => {
            art.write_paths("primary", &grid, [&sol.u_path, &sol.v_path, &sol.w_path])?;
            let eq_dev = sol.u_path.map(|f| f.offset(-cfg.theta1)).max_abs();
            diagnostics["primary"] = serde_json::to_value(&sol.diagnostics)?;
            diagnostics["max_abs_u_minus_theta1"] = json!(eq_dev);
            if mol.completed() {
                let diff = json!({
                    "u": relative_linf(&sol.u_path, &mol.u_path()?),
                    "v": relative_linf(&sol.v_path, &mol.v_path()?),
                    "w": relative_linf(&sol.w_path, &mol.w_path()?),
                });
                diagnostics["solver_oracle_relative_linf"] = diff;
                // absolute form, meaningful when a field is identically zero
                diagnostics["solver_oracle_abs_linf"] = json!({
                    "u": sol.u_path.max_abs_diff(&mol.u_path()?),
                    "v": sol.v_path.max_abs_diff(&mol.v_path()?),
                    "w": sol.w_path.max_abs_diff(&mol.w_path()?),
                });
            }
        }
        Err(e) => {
            diagnostics["primary_error"] = json!(e.to_string());
            // a touchdown seen by the oracle explains the primary failure
            if mol.quench.is_none() {
                status = e.exit_code();
            }
        }
    }
    art.write("diagnostics.json", &serde_json::to_string_pretty(&diagnostics)?)?;

    art.files.push("manifest.json".into());
    let manifest = RunManifest {
        config_hash: cfg.hash(),
        started,
        finished: unix_now(),
        artifacts: art.files.clone(),
        summary: json!({
            "status": status,
            "quench": mol.quench,
            "primary_converged": primary.is_ok(),
        }),
    };
    std::fs::write(root.join("manifest.json"), serde_json::to_string_pretty(&manifest)?)?;

    match (&primary, &mol.quench) {
        (_, Some(q)) => println!(
            "quench at t = {:.6e}, node {} (w = {:.3e}); outputs in {}",
            q.time,
            q.node_index,
            q.w_value,
            root.display()
        ),
        (Ok(sol), None) => println!(
            "converged in {} outer iterations; outputs in {}",
            sol.diagnostics.iterations,
            root.display()
        ),
        (Err(e), None) => eprintln!("error: {e}"),
    }
    Ok(status)
}

/// Parses `LO:HI:N`.
pub fn parse_sweep(arg: &str) -> Result<(f64, f64, usize)> {
    let bad = || MemsError::Config(format!("--sweep: expected LO:HI:N, got '{arg}'"));
    let parts: Vec<&str> = arg.split(':').collect();
    if parts.len() != 3 {
        return Err(bad());
    }
    let lo: f64 = parts[0].trim().parse().map_err(|_| bad())?;
    let hi: f64 = parts[1].trim().parse().map_err(|_| bad())?;
    let n: usize = parts[2].trim().parse().map_err(|_| bad())?;
    if !(lo.is_finite() && hi.is_finite()) || lo < 0.0 || hi < lo || n == 0 {
        return Err(MemsError::Config(format!(
            "--sweep: need 0 <= LO <= HI and N >= 1, got '{arg}'"
        )));
    }
    Ok((lo, hi, n))
}

fn steady(args: &SteadyArgs) -> Result<i32> {
    let grid = build_grid(args.length, args.n_nodes)
        .map_err(|e| MemsError::Config(format!("steady grid: {e}")))?;
    let points = match (&args.beta_f, &args.sweep) {
        (Some(b), None) => {
            if !(b.is_finite() && *b >= 0.0) {
                return Err(MemsError::Config(format!("--beta-f must be >= 0, got {b}")));
            }
            let r = steady_membrane(*b, &grid, DEFAULT_NEWTON_TOL, DEFAULT_MAX_NEWTON)?;
            vec![SweepPoint {
                beta_f: *b,
                w_min: r.min_w,
                solvable: r.is_solvable(),
            }]
        }
        (None, Some(arg)) => {
            let (lo, hi, n) = parse_sweep(arg)?;
            steady_sweep(lo, hi, n, &grid)?
        }
        _ => return Err(MemsError::Config("give exactly one of --beta-f or --sweep".into())),
    };
    print!("{}", sweep_to_csv(&points));
    Ok(0)
}

fn pullin(tol: f64, length: f64, n_nodes: usize) -> Result<i32> {
    if !(tol.is_finite() && tol > 0.0) {
        return Err(MemsError::Config(format!("--tol must be positive, got {tol}")));
    }
    let grid = build_grid(length, n_nodes).map_err(|e| MemsError::Config(format!("pullin grid: {e}")))?;
    let r = pullin_threshold(&grid, tol)?;
    println!("beta_F* estimate: {:.8}", r.estimate);
    println!("bracket: [{:.8}, {:.8}]", r.lo, r.hi);
    println!("upper bound 4*mu0/27: {:.8}", r.upper_bound);
    for w in &r.warnings {
        eprintln!("warning: {w}");
    }
    Ok(0)
}

fn verify(suite: &str, as_json: bool, out: Option<&Path>, seed: u64) -> Result<i32> {
    let suite: Suite = suite.parse()?;
    let cfg = VerifyConfig {
        seed,
        ..VerifyConfig::default()
    };
    let report = run_suite(suite, &cfg)?;
    if as_json {
        println!("{}", report.to_json()?);
    } else {
        print!("{}", report.to_table());
    }
    if let Some(dir) = out {
        let mut art = Artifacts::new(dir)?;
        art.write(&format!("verify/{}.json", suite.name()), &report.to_json()?)?;
        art.write(&format!("verify/{}.txt", suite.name()), &report.to_table())?;
    }
    Ok(if report.all_passed() { 0 } else { 1 })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sweep_spec_parsing() {
        assert_eq!(parse_sweep("0:1.4:15").unwrap(), (0.0, 1.4, 15));
        for bad in ["0:1", "a:1:2", "1:0:3", "0:1:0", "-1:1:3"] {
            assert!(matches!(parse_sweep(bad), Err(MemsError::Config(_))), "{bad}");
        }
    }

    #[test]
    fn argument_errors_exit_two() {
        assert_eq!(main_with_args(["mems", "steady"]), 2);
        assert_eq!(main_with_args(["mems", "steady", "--beta-f", "1", "--sweep", "0:1:2"]), 2);
        assert_eq!(main_with_args(["mems", "steady", "--beta-f", "-1"]), 2);
        assert_eq!(main_with_args(["mems", "verify", "--suite", "bogus"]), 2);
        assert_eq!(main_with_args(["mems", "pullin", "--tol", "0"]), 2);
        assert_eq!(main_with_args(["mems", "simulate", "--config", "/nonexistent/x.cfg"]), 2);
    }
}
