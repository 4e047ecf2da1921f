//! Steady membrane deflection `w″ = β_F / w²`, `w = 1` on the boundary, and
//! the pull-in threshold beyond which no solution exists.
//!
//! Only the upper (maximal) branch is tracked: every solve is reached by
//! natural-parameter continuation from `β_F = 0`, where `w ≡ 1`.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{MemsError, Result};
use crate::grid::{Field, Grid1D};

/// Initial continuation step in `β_F`.
const CONTINUATION_STEP: f64 = 0.1;
/// Continuation gives up once the step has been halved below this.
const MIN_STEP: f64 = 1e-6;
const MAX_BACKTRACK: usize = 30;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum SteadyOutcome {
    Converged(Field),
    NoSolution,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SteadyResult {
    pub beta_f: f64,
    pub outcome: SteadyOutcome,
    /// Newton iterations summed over all continuation stages.
    pub newton_iters: usize,
    pub residual: f64,
    pub min_w: f64,
}

impl SteadyResult {
    pub fn is_solvable(&self) -> bool {
        matches!(self.outcome, SteadyOutcome::Converged(_))
    }

    pub fn solution(&self) -> Option<&Field> {
        match &self.outcome {
            SteadyOutcome::Converged(f) => Some(f),
            SteadyOutcome::NoSolution => None,
        }
    }
}

/// `max_i |δ²w_i − β_F / w_i²|` with the unit boundary values.
pub fn steady_residual(w: &[f64], beta_f: f64, h: f64) -> f64 {
    let n = w.len();
    let h2 = h * h;
    (0..n)
        .map(|i| {
            let l = if i == 0 { 1.0 } else { w[i - 1] };
            let r = if i + 1 == n { 1.0 } else { w[i + 1] };
            ((l - 2.0 * w[i] + r) / h2 - beta_f / (w[i] * w[i])).abs()
        })
        .fold(0.0, f64::max)
}

fn residual_vec(w: &[f64], beta_f: f64, h: f64) -> Vec<f64> {
    let n = w.len();
    let h2 = h * h;
    (0..n)
        .map(|i| {
            let l = if i == 0 { 1.0 } else { w[i - 1] };
            let r = if i + 1 == n { 1.0 } else { w[i + 1] };
            (l - 2.0 * w[i] + r) / h2 - beta_f / (w[i] * w[i])
        })
        .collect()
}

/// Solves a tridiagonal system with constant off-diagonal `off` in place.
fn thomas(diag: &[f64], off: f64, rhs: &mut [f64]) -> Option<()> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut b = diag[0];
    if b == 0.0 {
        return None;
    }
    rhs[0] /= b;
    for i in 1..n {
        c[i - 1] = off / b;
        b = diag[i] - off * c[i - 1];
        if b == 0.0 || !b.is_finite() {
            return None;
        }
        rhs[i] = (rhs[i] - off * rhs[i - 1]) / b;
    }
    for i in (0..n - 1).rev() {
        rhs[i] -= c[i] * rhs[i + 1];
    }
    Some(())
}

/// Damped Newton from `start`. Returns the solution and iteration count.
fn newton(
    start: &[f64],
    beta_f: f64,
    h: f64,
    tol: f64,
    max_newton: usize,
) -> Option<(Vec<f64>, usize)> {
    let target = tol * (1.0 + beta_f);
    let h2 = h * h;
    let off = 1.0 / h2;
    let mut w = start.to_vec();
    let mut res = residual_vec(&w, beta_f, h);
    let mut norm = res.iter().fold(0.0f64, |m, r| m.max(r.abs()));
    for it in 0..=max_newton {
        if norm <= target {
            return Some((w, it));
        }
        if it == max_newton {
            break;
        }
        let diag: Vec<f64> = w.iter().map(|&x| -2.0 / h2 + 2.0 * beta_f / x.powi(3)).collect();
        let mut step: Vec<f64> = res.iter().map(|r| -r).collect();
        thomas(&diag, off, &mut step)?;
        let mut lambda = 1.0;
        let mut accepted = false;
        for _ in 0..MAX_BACKTRACK {
            let trial: Vec<f64> = w.iter().zip(&step).map(|(a, d)| a + lambda * d).collect();
            if trial.iter().all(|&x| x > 0.0) {
                let r = residual_vec(&trial, beta_f, h);
                let n2 = r.iter().fold(0.0f64, |m, v| m.max(v.abs()));
                if n2 < norm || n2 <= target {
                    w = trial;
                    res = r;
                    norm = n2;
                    accepted = true;
                    break;
                }
            }
            lambda *= 0.5;
        }
        if !accepted {
            return None;
        }
    }
    None
}

/// Continuation from `(beta_start, start)` up to `beta_f`, halving the step
/// after each failed stage.
fn continue_to(
    beta_start: f64,
    start: Vec<f64>,
    beta_f: f64,
    h: f64,
    tol: f64,
    max_newton: usize,
) -> (Option<Vec<f64>>, usize, f64) {
    let mut beta = beta_start;
    let mut w = start;
    let mut step = CONTINUATION_STEP.min(beta_f - beta_start).max(0.0);
    let mut iters = 0;
    if beta_f <= beta_start {
        return match newton(&w, beta_f, h, tol, max_newton) {
            Some((sol, it)) => (Some(sol), it, beta_f),
            None => (None, max_newton, beta),
        };
    }
    while beta < beta_f {
        let next = (beta + step).min(beta_f);
        match newton(&w, next, h, tol, max_newton) {
            Some((sol, it)) => {
                iters += it;
                w = sol;
                beta = next;
                step = (2.0 * step).min(CONTINUATION_STEP);
            }
            None => {
                iters += max_newton;
                step *= 0.5;
                if step < MIN_STEP {
                    return (None, iters, beta);
                }
            }
        }
    }
    (Some(w), iters, beta)
}

fn validate(beta_f: f64, tol: f64, max_newton: usize) -> Result<()> {
    if !(beta_f.is_finite() && beta_f >= 0.0) {
        return Err(MemsError::config(format!("beta_F must be nonnegative, got {beta_f}")));
    }
    if !(tol > 0.0) || max_newton == 0 {
        return Err(MemsError::config("Newton tolerance and iteration cap must be positive"));
    }
    Ok(())
}

fn make_result(beta_f: f64, sol: Option<Vec<f64>>, iters: usize, h: f64) -> SteadyResult {
    match sol {
        Some(w) => {
            let residual = steady_residual(&w, beta_f, h);
            let min_w = w.iter().copied().fold(1.0, f64::min);
            SteadyResult {
                beta_f,
                outcome: SteadyOutcome::Converged(Field::from_values(w)),
                newton_iters: iters,
                residual,
                min_w,
            }
        }
        None => SteadyResult {
            beta_f,
            outcome: SteadyOutcome::NoSolution,
            newton_iters: iters,
            residual: f64::NAN,
            min_w: f64::NAN,
        },
    }
}

pub fn steady_membrane(
    beta_f: f64,
    grid: &Grid1D,
    tol: f64,
    max_newton: usize,
) -> Result<SteadyResult> {
    validate(beta_f, tol, max_newton)?;
    let h = grid.spacing();
    let start = vec![1.0; grid.n_nodes()];
    let (sol, iters, _) = continue_to(0.0, start, beta_f, h, tol, max_newton);
    Ok(make_result(beta_f, sol, iters, h))
}

/// Solve at `beta_f` by continuation from a known solution at `from_beta`.
pub fn steady_membrane_from(
    beta_f: f64,
    from_beta: f64,
    from: &Field,
    grid: &Grid1D,
    tol: f64,
    max_newton: usize,
) -> Result<SteadyResult> {
    validate(beta_f, tol, max_newton)?;
    if from.len() != grid.n_nodes() {
        return Err(MemsError::config("warm start does not match the grid"));
    }
    let h = grid.spacing();
    let (sol, iters, _) = continue_to(from_beta, from.values.clone(), beta_f, h, tol, max_newton);
    Ok(make_result(beta_f, sol, iters, h))
}

/// `4μ₀/27` with `μ₀ = (π/L)²`, an upper bound for the pull-in value.
pub fn pullin_upper_bound(length: f64) -> f64 {
    4.0 * (PI / length).powi(2) / 27.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PullinResult {
    pub estimate: f64,
    pub lo: f64,
    pub hi: f64,
    pub upper_bound: f64,
    pub bisections: usize,
    pub warnings: Vec<String>,
}

impl PullinResult {
    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }
}

pub const DEFAULT_NEWTON_TOL: f64 = 1e-9;
pub const DEFAULT_MAX_NEWTON: usize = 50;

pub fn pullin_threshold(grid: &Grid1D, bracket_tol: f64) -> Result<PullinResult> {
    if !(bracket_tol > 0.0) {
        return Err(MemsError::config(format!(
            "bracket tolerance must be positive, got {bracket_tol}"
        )));
    }
    let h = grid.spacing();
    let upper = pullin_upper_bound(grid.length());
    let (tol, max_newton) = (DEFAULT_NEWTON_TOL, DEFAULT_MAX_NEWTON);
    let mut warnings = Vec::new();
    let mut lo = 0.0;
    let mut lo_sol = vec![1.0; grid.n_nodes()];
    let mut hi = upper;
    let (top, _, _) = continue_to(lo, lo_sol.clone(), hi, h, tol, max_newton);
    if top.is_some() {
        warnings.push(format!("solution found at the upper bound {upper:.6}"));
        lo_sol = top.unwrap_or_default();
        lo = hi;
    }
    let mut bisections = 0;
    while hi - lo > bracket_tol {
        let mid = 0.5 * (lo + hi);
        let (sol, _, reached) = continue_to(lo, lo_sol.clone(), mid, h, tol, max_newton);
        bisections += 1;
        match sol {
            Some(w) => {
                lo = mid;
                lo_sol = w;
            }
            None => {
                if reached > lo {
                    warnings.push(format!(
                        "continuation reached beta_F = {reached:.8} before failing at {mid:.8}"
                    ));
                }
                hi = mid;
            }
        }
    }
    Ok(PullinResult {
        estimate: 0.5 * (lo + hi),
        lo,
        hi,
        upper_bound: upper,
        bisections,
        warnings,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub beta_f: f64,
    pub w_min: f64,
    pub solvable: bool,
}

/// Independent solves at `n` evenly spaced values in `[lo, hi]`.
pub fn steady_sweep(lo: f64, hi: f64, n: usize, grid: &Grid1D) -> Result<Vec<SweepPoint>> {
    if n == 0 || !(lo >= 0.0 && hi >= lo && hi.is_finite()) {
        return Err(MemsError::config(format!("malformed sweep {lo}:{hi}:{n}")));
    }
    let betas: Vec<f64> = (0..n)
        .map(|i| {
            if n == 1 {
                lo
            } else {
                lo + (hi - lo) * i as f64 / (n - 1) as f64
            }
        })
        .collect();
    betas
        .par_iter()
        .map(|&b| {
            let r = steady_membrane(b, grid, DEFAULT_NEWTON_TOL, DEFAULT_MAX_NEWTON)?;
            Ok(SweepPoint {
                beta_f: b,
                w_min: r.min_w,
                solvable: r.is_solvable(),
            })
        })
        .collect()
}

pub fn sweep_to_csv(points: &[SweepPoint]) -> String {
    let mut out = String::from("beta_F,w_min,solvable\n");
    for p in points {
        out.push_str(&format!("{},{},{}\n", p.beta_f, p.w_min, p.solvable));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::build_grid;
    use proptest::prelude::*;

    fn solve(beta: f64, n: usize) -> SteadyResult {
        steady_membrane(beta, &build_grid(1.0, n).unwrap(), 1e-9, 50).unwrap()
    }

    #[test]
    fn zero_load_is_flat() {
        let r = solve(0.0, 63);
        let w = r.solution().unwrap();
        assert!(w.values.iter().all(|&x| (x - 1.0).abs() <= 1e-12));
        assert_eq!(r.newton_iters, 0);
    }

    #[test]
    fn small_load_matches_perturbation() {
        let r = solve(0.08, 255);
        let w = r.solution().unwrap();
        assert!((w.values[127] - 0.99).abs() < 2e-4, "{}", w.values[127]);
    }

    #[test]
    fn supercritical_load_has_no_solution() {
        let r = solve(2.0, 63);
        assert_eq!(r.outcome, SteadyOutcome::NoSolution);
        assert!(!r.is_solvable());
    }

    #[test]
    fn negative_load_is_rejected() {
        let g = build_grid(1.0, 15).unwrap();
        assert!(matches!(steady_membrane(-1.0, &g, 1e-9, 50), Err(MemsError::Config(_))));
    }

    #[test]
    fn converged_solutions_are_symmetric_and_accurate() {
        for beta in [0.3, 0.9, 1.3] {
            let r = solve(beta, 127);
            let w = &r.solution().unwrap().values;
            let n = w.len();
            for i in 0..n / 2 {
                assert!((w[i] - w[n - 1 - i]).abs() <= 1e-10);
            }
            assert!(r.residual <= 1e-9 * (1.0 + beta));
            assert!(r.min_w > 0.0);
        }
    }

    #[test]
    fn pullin_inside_bound_and_bisection_arithmetic() {
        let g = build_grid(1.0, 63).unwrap();
        let a = pullin_threshold(&g, 1e-3).unwrap();
        assert!(a.estimate > 0.0 && a.estimate < 4.0 * PI * PI / 27.0);
        assert!((a.estimate - 1.40).abs() < 5e-3, "{a:?}");
        let b = pullin_threshold(&g, 5e-4).unwrap();
        assert!((b.width() - 0.5 * a.width()).abs() < 1e-12);
        assert!(b.lo >= a.lo && b.hi <= a.hi);
    }

    #[test]
    fn bound_rescales_with_length() {
        assert!((pullin_upper_bound(1.0) - 1.46216).abs() < 1e-5);
        assert!((pullin_upper_bound(2.0) - pullin_upper_bound(1.0) / 4.0).abs() < 1e-15);
    }

    #[test]
    fn sweep_flags_are_monotone() {
        let g = build_grid(1.0, 31).unwrap();
        let pts = steady_sweep(0.0, 1.4, 15, &g).unwrap();
        assert_eq!(pts.len(), 15);
        let first_false = pts.iter().position(|p| !p.solvable).unwrap_or(pts.len());
        assert!(pts[first_false..].iter().all(|p| !p.solvable));
        assert!(pts[0].solvable && (pts[0].w_min - 1.0).abs() < 1e-12);
        assert!(sweep_to_csv(&pts).starts_with("beta_F,w_min,solvable\n0,1,true\n"));
        assert!(steady_sweep(1.0, 0.5, 3, &g).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn solutions_decrease_with_load(a in 0.0f64..1.35, b in 0.0f64..1.35) {
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            let wl = solve(lo, 31);
            let wh = solve(hi, 31);
            let (wl, wh) = (wl.solution().unwrap(), wh.solution().unwrap());
            for (x, y) in wl.values.iter().zip(&wh.values) {
                prop_assert!(x + 1e-12 >= *y);
            }
        }
    }
}
