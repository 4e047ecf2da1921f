//! Acceptance run: one PASS/FAIL line per criterion, non-zero exit on any
//! failure. Built with `harness = false` so the lines always reach stdout.

use std::f64::consts::PI;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use mems_core::error::Result;
use mems_core::fixtures::{self, balanced_constants, HyperbolicCase};
use mems_core::grid::{
    build_grid, least_squares_line, random_band_limited, EigenBasis, Field, TrajectoryPath,
};
use mems_core::hyperbolic::WaveSolver;
use mems_core::oracle::{flux_balance_residual, mol_solve, MolProblem, MolSolution, DEFAULT_SAFETY};
use mems_core::parabolic::{
    coupled_horizons, garding_constants, gamma_fixed_point, pressure_holder_fit, sector_check,
};
use mems_core::steady::{pullin_threshold, steady_membrane, DEFAULT_MAX_NEWTON};
use mems_core::verify::{lipschitz_w_scan, relative_linf};
use mems_core::wave::{apply_semigroup, duhamel, WaveState};

const SEED: u64 = 20240101;

/// `(label, min gap, κ)` for every accepted run, checked by criterion 4.
type Gaps = Vec<(String, f64, f64)>;

struct Verdict {
    passed: bool,
    detail: String,
}

fn verdict(passed: bool, detail: impl Into<String>) -> Result<Verdict> {
    Ok(Verdict {
        passed,
        detail: detail.into(),
    })
}

fn secs(d: Duration) -> f64 {
    d.as_secs_f64()
}

fn c1_semigroup() -> Result<Verdict> {
    let start = Instant::now();
    let b = EigenBasis::new(&build_grid(1.0, 511)?, 256)?;
    let mut rng = fixtures::rng(SEED);
    let times = [0.1, 1.0, 10.0];
    let (mut iso, mut group): (f64, f64) = (0.0, 0.0);
    for _ in 0..100 {
        let s = WaveState::new(random_band_limited(&b, 256, &mut rng), random_band_limited(&b, 256, &mut rng))?;
        let n0 = s.energy_norm(&b);
        for t1 in times {
            let a = apply_semigroup(t1, &s, &b)?;
            iso = iso.max((a.energy_norm(&b) - n0).abs() / n0);
            for t2 in times {
                let two = apply_semigroup(t2, &a, &b)?;
                let one = apply_semigroup(t1 + t2, &s, &b)?;
                group = group.max(two.sub(&one).energy_norm(&b) / n0);
            }
        }
    }
    let el = secs(start.elapsed());
    verdict(
        iso <= 1e-10 && group <= 1e-10 && el < 5.0,
        format!("isometry {iso:.2e}, group law {group:.2e} (<= 1e-10), {el:.2} s (< 5 s)"),
    )
}

fn c2_wave_anchor() -> Result<Verdict> {
    let start = Instant::now();
    let n = 1025;
    let g = build_grid(1.0, n)?;
    let b = EigenBasis::new(&g, 1024)?;
    let forcing = TrajectoryPath::from_fn(0.25, 512, |_| Field::constant(n, 1.0))?;
    let path = duhamel(&WaveState::zeros(n), &forcing, &b)?;
    let mid = n / 2;
    let w = path.entry(512).w_tilde.values[mid];
    let el = secs(start.elapsed());
    verdict(
        (g.node(mid) - 0.5).abs() < 1e-15 && (w - 0.03125).abs() <= 1e-3 && el < 10.0,
        format!("w(0.5, 0.25) = {w:.8} (0.03125 +- 1e-3), {el:.2} s (< 10 s)"),
    )
}

fn c3_picard(gaps: &mut Gaps) -> Result<Verdict> {
    let mut worst_ratio: f64 = 0.0;
    let mut worst_iter = 0;
    for s in [11, 23, 37] {
        let case = HyperbolicCase::seeded(63, 32, SEED ^ s)?;
        let t = 0.5 * case.t0()?.t0;
        let mut settings = case.settings;
        settings.tol = 1e-10;
        let u = case.pressure_path(t, 32, &Field::zeros(case.n_nodes()), |_| 0.0)?;
        let sol = WaveSolver::new(&case.basis, t, 32, case.constants, settings)?.solve(&u, &case.init)?;
        worst_ratio = worst_ratio.max(sol.final_ratio);
        worst_iter = worst_iter.max(sol.iterations);
        gaps.push((format!("hyperbolic seed {s}"), sol.min_gap, case.init.kappa));
    }
    verdict(
        worst_ratio <= 0.55 && worst_iter <= 30,
        format!("worst ratio {worst_ratio:.3e} (<= 0.55), worst iterations {worst_iter} (<= 30, tol 1e-10)"),
    )
}

fn c4_gap(gaps: &Gaps) -> Result<Verdict> {
    let worst = gaps
        .iter()
        .map(|(_, gap, kappa)| 0.5 * kappa - gap)
        .fold(f64::NEG_INFINITY, f64::max);
    verdict(
        !gaps.is_empty() && worst <= 1e-12,
        format!("{} accepted runs, max of kappa/2 - min w = {worst:.3e} (<= 1e-12)", gaps.len()),
    )
}

fn c5_lipschitz() -> Result<Verdict> {
    let case = HyperbolicCase::seeded(63, 32, SEED ^ 11)?;
    let (ratio, bound) = lipschitz_w_scan(&case, 50, SEED)?;
    verdict(
        ratio <= bound,
        format!("measured {ratio:.4e}, L_W {bound:.4e}, margin {:.3e}", ratio / bound),
    )
}

fn c6_frechet() -> Result<Verdict> {
    let window = 0.25;
    let n_steps = 32;
    let mut case = HyperbolicCase::seeded(63, 32, SEED ^ 11)?;
    case.settings.tol = 1e-14;
    case.settings.max_iter = 200;
    let solver = WaveSolver::new(&case.basis, window, n_steps, case.constants, case.settings)?;
    let q0 = case.unit_direction(&mut fixtures::rng(SEED));
    let q = TrajectoryPath::from_fn(window, n_steps, |t| q0.scale(t / window))?;
    let base = solver.solve(&case.pressure_path(window, n_steps, &q0, |_| 0.0)?, &case.init)?;
    let d = solver.frechet(&q, &base)?;
    let at_zero = d.v.entry(0).max_abs().max(d.w.entry(0).max_abs());
    let mut points = Vec::new();
    let mut h = 1e-2;
    while h >= 1e-4 * (1.0 - 1e-9) {
        let shifted = solver.solve(&case.pressure_path(window, n_steps, &q0, |s| h * s)?, &case.init)?;
        let err = (0..=n_steps)
            .map(|j| {
                let (a, b) = (shifted.path.entry(j), base.path.entry(j));
                WaveState {
                    v: a.v.sub(&b.v).scale(1.0 / h).sub(d.v.entry(j)),
                    w_tilde: a.w_tilde.sub(&b.w_tilde).scale(1.0 / h).sub(d.w.entry(j)),
                }
                .energy_norm(&case.basis)
            })
            .fold(0.0, f64::max);
        points.push((h.ln(), err.ln()));
        h *= 0.5;
    }
    let (order, _) = least_squares_line(&points);
    verdict(
        (order - 1.0).abs() <= 0.2 && at_zero <= 1e-12,
        format!(
            "fitted order {order:.4} (1.0 +- 0.2) over {} halvings, |W'(u)q(0)| = {at_zero:.1e} (<= 1e-12)",
            points.len() - 1
        ),
    )
}

fn c7_garding() -> Result<Verdict> {
    let mut worst_violation: f64 = 0.0;
    let mut min_k = f64::INFINITY;
    for s in 0..5u64 {
        let p = fixtures::small_data_problem(63, 32, SEED ^ (100 + s), 0.05, 0.01, 32)?;
        let op = p.linearization()?;
        let full = EigenBasis::full(p.grid());
        let mut rng = fixtures::rng(SEED ^ (200 + s));
        let probes: Vec<Field> = (0..100).map(|_| random_band_limited(&full, 16, &mut rng)).collect();
        let r = garding_constants(&op, &p.u0, &p.w0, p.constants.theta1, p.constants.theta2, &probes)?;
        min_k = min_k.min(r.k);
        worst_violation = worst_violation.max(r.max_violation);
    }
    // constant coefficients: u0 = 2, w0 = 1 gives K = eps1 kappa^2 = 2
    let n = 63;
    let grid = build_grid(1.0, n)?;
    let (u0, w0) = (Field::constant(n, 2.0), Field::constant(n, 1.0));
    let op = mems_core::parabolic::assemble_linearization(&u0, &Field::zeros(n), &w0, 2.0, 1.0, &grid)?;
    let full = EigenBasis::full(&grid);
    let mut rng = fixtures::rng(SEED ^ 300);
    let probes: Vec<Field> = (0..100).map(|_| random_band_limited(&full, 16, &mut rng)).collect();
    let r = garding_constants(&op, &u0, &w0, 2.0, 1.0, &probes)?;
    let k_err = (r.k - r.epsilon1 * r.kappa * r.kappa).abs();
    let form_err = probes
        .iter()
        .map(|q| {
            let (form, grad, _) = mems_core::parabolic::garding_form(q, &u0, &w0, 2.0, 1.0, &grid);
            (form.abs() - 2.0 * grad).abs() / grad
        })
        .fold(0.0, f64::max);
    verdict(
        min_k > 0.0 && worst_violation <= 1e-8 && k_err <= 1e-12 && form_err <= 1e-12,
        format!(
            "min K {min_k:.4e} (> 0), worst violation {worst_violation:.2e} (<= 1e-8); \
             constant case K = {:.12} vs eps1 kappa^2 = 2, |form|/|q'|^2 off by {form_err:.1e}",
            r.k
        ),
    )
}

fn c8_sector() -> Result<Verdict> {
    let mut reports = Vec::new();
    for n in [31, 63] {
        let p = fixtures::small_data_problem(n, (n / 2).max(4), SEED ^ 5, 0.01, 0.01, 32)?;
        reports.push(sector_check(&p.linearization()?));
    }
    let bounded = reports.iter().all(|r| r.omega.is_finite() && r.m_fit.is_finite());
    let drift = (reports[1].m_fit / reports[0].m_fit - 1.0).abs();
    verdict(
        bounded && drift <= 0.2,
        format!(
            "omega {:.3e}/{:.3e}, M {:.4}/{:.4}, drift {drift:.2e} (<= 0.2)",
            reports[0].omega, reports[1].omega, reports[0].m_fit, reports[1].m_fit
        ),
    )
}

fn c9_coupled(gaps: &mut Gaps) -> Result<Verdict> {
    let start = Instant::now();
    let p = fixtures::small_data_problem(127, 64, SEED ^ 71, 0.01, 1.0, 32)?;
    let h = coupled_horizons(&p, 8, &mut fixtures::rng(SEED ^ 71))?;
    let sol = gamma_fixed_point(&p.with_horizon(0.5 * h.t1))?;
    let d = &sol.diagnostics;
    gaps.push(("coupled T1/2".into(), d.min_gap, d.kappa));
    let fit = pressure_holder_fit(&sol, &EigenBasis::full(p.grid()))?;
    let alpha_est = fit.alpha.unwrap_or(1.0);
    let el = secs(start.elapsed());
    verdict(
        d.final_ratio <= 0.55
            && d.iterations <= 30
            && d.final_distance <= p.tol
            && alpha_est >= p.alpha - 0.1
            && el < 120.0,
        format!(
            "T1 {:.3e}, ratio {:.3e} (<= 0.55), {} iterations (<= 30, tol 1e-8), alpha_est {alpha_est:.3} (>= {:.1}), {el:.1} s (< 120 s)",
            h.t1, d.final_ratio, d.iterations, p.alpha - 0.1
        ),
    )
}

/// Oracle runs on compatible data at `n = 31, 63, 127, 255`, with output
/// steps shrinking like `h²`.
fn refinement_runs() -> Result<Vec<(MolProblem, MolSolution)>> {
    let c = balanced_constants();
    let f = |x: f64| 0.1 * (PI * x).sin().powi(3) + 0.05 * (2.0 * PI * x).sin().powi(3);
    [31usize, 63, 127, 255]
        .iter()
        .enumerate()
        .map(|(lvl, &n)| {
            let grid = build_grid(1.0, n)?;
            let p = MolProblem {
                constants: c,
                u0: grid.sample(|x| c.theta1 + f(x)),
                v0: Field::zeros(n),
                w0: grid.sample(|x| c.theta2 - f(x)),
                grid,
                horizon: 0.05,
                n_steps: 32 << (2 * lvl),
                quench_threshold: 1e-2,
                safety: DEFAULT_SAFETY,
            };
            let s = mol_solve(&p)?;
            Ok((p, s))
        })
        .collect()
}

fn c10_oracle(runs: &[(MolProblem, MolSolution)], gaps: &mut Gaps) -> Result<Verdict> {
    let mut worst: f64 = 0.0;
    for seed in 0..3u64 {
        let p = fixtures::small_data_problem(127, 64, seed, 0.01, 0.05, 32)?;
        let sol = gamma_fixed_point(&p)?;
        gaps.push((format!("coupled seed {seed}"), sol.diagnostics.min_gap, sol.diagnostics.kappa));
        let mol = mol_solve(&MolProblem::from_coupled(&p, 1e-2 * p.constants.theta2))?;
        worst = worst
            .max(relative_linf(&sol.u_path, &mol.u_path()?))
            .max(relative_linf(&sol.v_path, &mol.v_path()?))
            .max(relative_linf(&sol.w_path, &mol.w_path()?));
    }
    let (fine_p, fine) = runs.last().expect("refinement levels");
    let fine_last = fine.levels.last().expect("fine levels");
    let mut points = Vec::new();
    for (p, s) in &runs[..runs.len() - 1] {
        let last = s.levels.last().expect("levels");
        let stride = (fine_p.grid.n_nodes() + 1) / (p.grid.n_nodes() + 1);
        let mut err: f64 = 0.0;
        for i in 0..p.grid.n_nodes() {
            let j = (i + 1) * stride - 1;
            err = err
                .max((last.0.values[i] - fine_last.0.values[j]).abs())
                .max((last.1.values[i] - fine_last.1.values[j]).abs())
                .max((last.2.values[i] - fine_last.2.values[j]).abs());
        }
        points.push((p.grid.spacing().ln(), err.ln()));
    }
    let (order, _) = least_squares_line(&points);
    verdict(
        worst <= 2e-3 && (order - 2.0).abs() <= 0.3,
        format!("max relative Linf {worst:.3e} (<= 2e-3) on 3 seeds; oracle order {order:.3} (2.0 +- 0.3)"),
    )
}

fn c11_steady() -> Result<Verdict> {
    let start = Instant::now();
    let g = build_grid(1.0, 127)?;
    let flat = steady_membrane(0.0, &g, 1e-10, DEFAULT_MAX_NEWTON)?;
    let flat_dev = flat
        .solution()
        .map_or(f64::INFINITY, |w| w.offset(-1.0).max_abs());
    let none = !steady_membrane(2.0, &g, 1e-10, DEFAULT_MAX_NEWTON)?.is_solvable();
    let coarse = pullin_threshold(&build_grid(1.0, 63)?, 1e-4)?;
    let fine = pullin_threshold(&g, 1e-4)?;
    let upper = 4.0 * PI * PI / 27.0;
    let inside = [&coarse, &fine].iter().all(|r| r.estimate > 0.0 && r.estimate < upper);
    let three = |x: f64| format!("{x:.2e}");
    let stable = three(coarse.estimate) == three(fine.estimate);
    let el = secs(start.elapsed());
    verdict(
        flat_dev <= 1e-12 && none && inside && stable && el < 30.0,
        format!(
            "beta_F=0 dev {flat_dev:.1e} (<= 1e-12), beta_F=2 unsolvable {none}, \
             beta_F* {:.6}/{:.6} in (0, {upper:.4}), {el:.1} s (< 30 s)",
            coarse.estimate, fine.estimate
        ),
    )
}

fn c12_flux(runs: &[(MolProblem, MolSolution)]) -> Result<Verdict> {
    let c = balanced_constants();
    let n = 63;
    let grid = build_grid(1.0, n)?;
    let eq = MolProblem {
        constants: c,
        u0: Field::constant(n, c.theta1),
        v0: Field::zeros(n),
        w0: Field::constant(n, c.theta2),
        grid: grid.clone(),
        horizon: 0.05,
        n_steps: 32,
        quench_threshold: 1e-2,
        safety: DEFAULT_SAFETY,
    };
    let s = mol_solve(&eq)?;
    let at_rest = flux_balance_residual(&s.u_path()?, &s.w_path()?, &c, &grid)?
        .into_iter()
        .fold(0.0, f64::max);
    let mut points = Vec::new();
    for (p, s) in runs {
        let r = flux_balance_residual(&s.u_path()?, &s.w_path()?, &c, &p.grid)?
            .into_iter()
            .fold(0.0, f64::max);
        points.push((p.grid.spacing().ln(), r.ln()));
    }
    let (order, _) = least_squares_line(&points);
    verdict(
        at_rest <= 1e-10 && (order - 2.0).abs() <= 0.3,
        format!("equilibrium residual {at_rest:.1e} (<= 1e-10), refinement order {order:.3} (2.0 +- 0.3)"),
    )
}

const QUENCH_TIME: f64 = 0.4993281678175015;

fn c13_quench() -> Result<Verdict> {
    let p = fixtures::quench_problem(63)?;
    let s = mol_solve(&p)?;
    let dt = p.horizon / p.n_steps as f64;
    match s.quench {
        Some(q) => verdict(
            (q.time - QUENCH_TIME).abs() <= 2.0 * dt && q.node_index == 31,
            format!(
                "touchdown at t = {:.6} (pinned {QUENCH_TIME:.6} +- {:.3}), node {}, w = {:.3e}",
                q.time,
                2.0 * dt,
                q.node_index,
                q.w_value
            ),
        ),
        None => verdict(false, "no touchdown before the horizon"),
    }
}

fn run(id: usize, title: &str, f: impl FnOnce() -> Result<Verdict>) -> bool {
    let start = Instant::now();
    let (passed, detail) = match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(v)) => (v.passed, v.detail),
        Ok(Err(e)) => (false, format!("error: {e}")),
        Err(_) => (false, "panicked".into()),
    };
    println!(
        "{} criterion {id:2} {title}: {detail} [{:.2} s]",
        if passed { "PASS" } else { "FAIL" },
        secs(start.elapsed())
    );
    passed
}

fn main() -> ExitCode {
    let mut gaps = Gaps::new();
    let mut ok = true;
    ok &= run(1, "semigroup isometry and group law", c1_semigroup);
    ok &= run(2, "wave response to constant forcing", c2_wave_anchor);
    ok &= run(3, "hyperbolic Picard contraction", || c3_picard(&mut gaps));
    ok &= run(5, "wave solution operator Lipschitz bound", c5_lipschitz);
    ok &= run(6, "Frechet derivative consistency", c6_frechet);
    ok &= run(7, "Garding certificate", c7_garding);
    ok &= run(8, "sectoriality proxy", c8_sector);
    ok &= run(9, "coupled contraction and regularity", || c9_coupled(&mut gaps));
    let runs = refinement_runs();
    ok &= run(10, "solver and oracle agreement", || c10_oracle(runs.as_ref().map_err(clone_err)?, &mut gaps));
    ok &= run(4, "gap lower bound on accepted runs", || c4_gap(&gaps));
    ok &= run(11, "steady states and pull-in", c11_steady);
    ok &= run(12, "conservation-form residual", || c12_flux(runs.as_ref().map_err(clone_err)?));
    ok &= run(13, "quench regression", c13_quench);
    if ok {
        println!("acceptance: all criteria pass");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: FAILURES present");
        ExitCode::FAILURE
    }
}

fn clone_err(e: &mems_core::error::MemsError) -> mems_core::error::MemsError {
    mems_core::error::MemsError::Numeric(format!("refinement runs failed: {e}"))
}
