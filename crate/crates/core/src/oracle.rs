//! Method-of-lines reference solver for the coupled system, with quench
//! detection and a conservation diagnostic.
//!
//! Space is discretized by second-order finite differences on the interior
//! nodes. Each substep is a velocity half-kick, a gap drift, a linearized
//! backward-Euler pressure update with the diffusivity `w³u` frozen, and a
//! second half-kick. The reaction `−(v/w)u` is implicit only where `v > 0`,
//! which keeps every pressure update an M-matrix solve and `u` positive.

use serde::{Deserialize, Serialize};

use crate::error::{MemsError, Result};
use crate::grid::{Field, Grid1D, TrajectoryPath};
use crate::hyperbolic::PhysicalConstants;
use crate::parabolic::CoupledProblem;

/// Substep counts beyond this per output interval raise a stiffness error.
pub const MAX_SUBSTEPS: usize = 10_000_000;
pub const DEFAULT_SAFETY: f64 = 0.9;

/// Default quench threshold as a fraction of `θ₂`.
pub const DEFAULT_QUENCH_FRACTION: f64 = 1e-2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuenchEvent {
    pub time: f64,
    pub node_index: usize,
    pub w_value: f64,
}

#[derive(Debug, Clone)]
pub struct MolProblem {
    pub constants: PhysicalConstants,
    pub grid: Grid1D,
    pub u0: Field,
    pub v0: Field,
    pub w0: Field,
    pub horizon: f64,
    pub n_steps: usize,
    pub quench_threshold: f64,
    pub safety: f64,
}

impl MolProblem {
    pub fn from_coupled(p: &CoupledProblem, quench_threshold: f64) -> Self {
        Self {
            constants: p.constants,
            grid: p.grid().clone(),
            u0: p.u0.clone(),
            v0: p.v0.clone(),
            w0: p.w0.clone(),
            horizon: p.horizon,
            n_steps: p.n_steps,
            quench_threshold,
            safety: DEFAULT_SAFETY,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.constants.validate()?;
        let n = self.grid.n_nodes();
        if self.u0.len() != n || self.v0.len() != n || self.w0.len() != n {
            return Err(MemsError::config("initial fields do not match the grid"));
        }
        if self.u0.min() <= 0.0 || self.w0.min() <= 0.0 {
            return Err(MemsError::config("initial pressure and gap must be positive"));
        }
        if !(self.horizon > 0.0) || self.n_steps == 0 {
            return Err(MemsError::config("horizon and step count must be positive"));
        }
        let min_w0 = self.w0.min().min(self.constants.theta2);
        if !(self.quench_threshold > 0.0 && self.quench_threshold < min_w0) {
            return Err(MemsError::config(format!(
                "quench threshold must lie in (0, {min_w0}), got {}",
                self.quench_threshold
            )));
        }
        if !(self.safety > 0.0 && self.safety <= 1.0) {
            return Err(MemsError::config("safety factor must lie in (0, 1]"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct MolSolution {
    /// Output interval `T / n_steps`.
    pub dt_out: f64,
    /// Full `(u, v, w)` at each completed output level.
    pub levels: Vec<(Field, Field, Field)>,
    pub quench: Option<QuenchEvent>,
    pub substeps: usize,
    pub min_dt: f64,
    pub min_u: f64,
    /// `min_x w` after every substep, for touchdown diagnostics.
    pub min_w_history: Vec<f64>,
}

impl MolSolution {
    fn pick(&self, which: usize) -> Result<TrajectoryPath<Field>> {
        let horizon = self.dt_out * (self.levels.len() as f64 - 1.0);
        TrajectoryPath::new(
            horizon,
            self.levels
                .iter()
                .map(|l| match which {
                    0 => l.0.clone(),
                    1 => l.1.clone(),
                    _ => l.2.clone(),
                })
                .collect(),
        )
    }

    pub fn u_path(&self) -> Result<TrajectoryPath<Field>> {
        self.pick(0)
    }

    pub fn v_path(&self) -> Result<TrajectoryPath<Field>> {
        self.pick(1)
    }

    pub fn w_path(&self) -> Result<TrajectoryPath<Field>> {
        self.pick(2)
    }

    pub fn completed(&self) -> bool {
        self.quench.is_none()
    }
}

/// `δ²w − β_F/w² + β_p(u − 1)` at the nodes.
fn acceleration(w: &[f64], u: &[f64], c: &PhysicalConstants, h2: f64) -> Vec<f64> {
    let n = w.len();
    (0..n)
        .map(|i| {
            let l = if i == 0 { c.theta2 } else { w[i - 1] };
            let r = if i + 1 == n { c.theta2 } else { w[i + 1] };
            (l - 2.0 * w[i] + r) / h2 - c.beta_f / (w[i] * w[i]) + c.beta_p * (u[i] - 1.0)
        })
        .collect()
}

/// Linearized backward-Euler pressure update.
fn pressure_step(u: &[f64], v: &[f64], w: &[f64], c: &PhysicalConstants, h2: f64, dt: f64) -> Vec<f64> {
    let n = u.len();
    let coef = |i: isize| -> f64 {
        if i < 0 || i as usize >= n {
            c.theta2.powi(3) * c.theta1
        } else {
            let k = i as usize;
            w[k].powi(3) * u[k]
        }
    };
    let mut sub = vec![0.0; n];
    let mut diag = vec![0.0; n];
    let mut sup = vec![0.0; n];
    let mut rhs = vec![0.0; n];
    for i in 0..n {
        let ii = i as isize;
        let ap = 0.5 * (coef(ii) + coef(ii + 1));
        let am = 0.5 * (coef(ii - 1) + coef(ii));
        let s = dt / (w[i] * h2);
        let react = dt * v[i] / w[i];
        diag[i] = 1.0 + s * (ap + am) + react.max(0.0);
        rhs[i] = u[i] * (1.0 - react.min(0.0));
        if i > 0 {
            sub[i] = -s * am;
        } else {
            rhs[i] += s * am * c.theta1;
        }
        if i + 1 < n {
            sup[i] = -s * ap;
        } else {
            rhs[i] += s * ap * c.theta1;
        }
    }
    // Thomas algorithm; the matrix is diagonally dominant
    for i in 1..n {
        let m = sub[i] / diag[i - 1];
        diag[i] -= m * sup[i - 1];
        rhs[i] -= m * rhs[i - 1];
    }
    let mut out = vec![0.0; n];
    out[n - 1] = rhs[n - 1] / diag[n - 1];
    for i in (0..n - 1).rev() {
        out[i] = (rhs[i] - sup[i] * out[i + 1]) / diag[i];
    }
    out
}

fn stable_dt(u: &[f64], w: &[f64], c: &PhysicalConstants, h: f64, safety: f64) -> f64 {
    let amax = u
        .iter()
        .zip(w)
        .map(|(u, w)| w.powi(3) * u)
        .fold(c.theta2.powi(3) * c.theta1, f64::max);
    safety * h.min(h * h / (2.0 * amax))
}

pub fn mol_solve(problem: &MolProblem) -> Result<MolSolution> {
    problem.validate()?;
    let c = problem.constants;
    let h = problem.grid.spacing();
    let h2 = h * h;
    let dt_out = problem.horizon / problem.n_steps as f64;
    let mut u = problem.u0.values.clone();
    let mut v = problem.v0.values.clone();
    let mut w = problem.w0.values.clone();
    let mut levels = vec![(problem.u0.clone(), problem.v0.clone(), problem.w0.clone())];
    let mut substeps = 0;
    let mut min_dt = f64::INFINITY;
    let mut min_u = u.iter().copied().fold(f64::INFINITY, f64::min);
    let mut min_w_history = Vec::new();
    let mut t = 0.0;
    for _ in 0..problem.n_steps {
        let nominal = stable_dt(&u, &w, &c, h, problem.safety);
        let m = (dt_out / nominal).ceil() as usize;
        if m > MAX_SUBSTEPS {
            return Err(MemsError::Stiffness { time: t });
        }
        let m = m.max(1);
        let dt = dt_out / m as f64;
        min_dt = min_dt.min(dt);
        for _ in 0..m {
            let acc = acceleration(&w, &u, &c, h2);
            let v_half: Vec<f64> = v.iter().zip(&acc).map(|(v, a)| v + 0.5 * dt * a).collect();
            let w_new: Vec<f64> = w.iter().zip(&v_half).map(|(w, v)| w + dt * v).collect();
            substeps += 1;
            let (node, wmin) = w_new
                .iter()
                .copied()
                .enumerate()
                .fold((0, f64::INFINITY), |a, (i, x)| if x < a.1 { (i, x) } else { a });
            min_w_history.push(wmin.min(c.theta2));
            if wmin <= problem.quench_threshold {
                let w_old = w[node];
                let frac = if w_old > wmin {
                    ((w_old - problem.quench_threshold) / (w_old - wmin)).clamp(0.0, 1.0)
                } else {
                    1.0
                };
                return Ok(MolSolution {
                    dt_out,
                    levels,
                    quench: Some(QuenchEvent {
                        time: t + frac * dt,
                        node_index: node,
                        w_value: wmin,
                    }),
                    substeps,
                    min_dt,
                    min_u,
                    min_w_history,
                });
            }
            let u_new = pressure_step(&u, &v_half, &w_new, &c, h2, dt);
            let acc = acceleration(&w_new, &u_new, &c, h2);
            v = v_half.iter().zip(&acc).map(|(v, a)| v + 0.5 * dt * a).collect();
            w = w_new;
            u = u_new;
            t += dt;
            let um = u.iter().copied().fold(f64::INFINITY, f64::min);
            if !(um > 0.0) {
                return Err(MemsError::Numeric(format!(
                    "oracle pressure lost positivity at t = {t:.6e}"
                )));
            }
            min_u = min_u.min(um);
        }
        levels.push((
            Field::from_values(u.clone()),
            Field::from_values(v.clone()),
            Field::from_values(w.clone()),
        ));
    }
    Ok(MolSolution {
        dt_out,
        levels,
        quench: None,
        substeps,
        min_dt,
        min_u,
        min_w_history,
    })
}

/// Wave pair `(v, w)` driven by a prescribed full pressure path, linearly
/// interpolated between its time levels.
pub fn mol_wave(
    v0: &Field,
    w0: &Field,
    u_path: &TrajectoryPath<Field>,
    c: &PhysicalConstants,
    grid: &Grid1D,
    substeps_per_step: usize,
) -> Result<(TrajectoryPath<Field>, TrajectoryPath<Field>)> {
    let h2 = grid.spacing().powi(2);
    let m = substeps_per_step.max(1);
    let dt_out = u_path.dt();
    if dt_out / m as f64 > grid.spacing() {
        return Err(MemsError::config("wave substep violates the CFL bound dt <= h"));
    }
    let dt = dt_out / m as f64;
    let mut v = v0.values.clone();
    let mut w = w0.values.clone();
    let mut vs = vec![v0.clone()];
    let mut ws = vec![w0.clone()];
    let lerp = |j: usize, s: f64| -> Vec<f64> {
        let a = &u_path.entry(j).values;
        let b = &u_path.entry((j + 1).min(u_path.n_steps())).values;
        a.iter().zip(b).map(|(x, y)| x + s * (y - x)).collect()
    };
    for j in 0..u_path.n_steps() {
        for k in 0..m {
            let s0 = k as f64 / m as f64;
            let s1 = (k + 1) as f64 / m as f64;
            let acc = acceleration(&w, &lerp(j, s0), c, h2);
            let v_half: Vec<f64> = v.iter().zip(&acc).map(|(v, a)| v + 0.5 * dt * a).collect();
            w = w.iter().zip(&v_half).map(|(w, v)| w + dt * v).collect();
            if let Some((node, &gap)) = w.iter().enumerate().find(|(_, &g)| !(g > 0.0)) {
                return Err(MemsError::QuenchImminent {
                    node,
                    gap,
                    time: (j as f64 + s1) * dt_out,
                });
            }
            let acc = acceleration(&w, &lerp(j, s1), c, h2);
            v = v_half.iter().zip(&acc).map(|(v, a)| v + 0.5 * dt * a).collect();
        }
        vs.push(Field::from_values(v.clone()));
        ws.push(Field::from_values(w.clone()));
    }
    Ok((
        TrajectoryPath::new(u_path.horizon(), vs)?,
        TrajectoryPath::new(u_path.horizon(), ws)?,
    ))
}

/// First downward crossing of `threshold`, linearly interpolated in time at
/// the node that crosses first.
pub fn quench_scan(w_path: &TrajectoryPath<Field>, threshold: f64) -> Option<QuenchEvent> {
    let e = w_path.entries();
    for j in 1..e.len() {
        let mut best: Option<(f64, usize, f64)> = None;
        for (i, (&a, &b)) in e[j - 1].values.iter().zip(&e[j].values).enumerate() {
            if a > threshold && b <= threshold {
                let frac = (a - threshold) / (a - b);
                if best.is_none_or(|(f, _, _)| frac < f) {
                    best = Some((frac, i, b));
                }
            } else if a <= threshold && j == 1 && best.is_none() {
                return Some(QuenchEvent {
                    time: 0.0,
                    node_index: i,
                    w_value: a,
                });
            }
        }
        if let Some((frac, i, b)) = best {
            return Some(QuenchEvent {
                time: w_path.time(j - 1) + frac * w_path.dt(),
                node_index: i,
                w_value: b.min(threshold),
            });
        }
    }
    None
}

/// `|d/dt ∫wu dx − [w³u u_x]_0^L|` at every time level, with second-order
/// differences in time and one-sided second-order boundary derivatives.
pub fn flux_balance_residual(
    u_path: &TrajectoryPath<Field>,
    w_path: &TrajectoryPath<Field>,
    c: &PhysicalConstants,
    grid: &Grid1D,
) -> Result<Vec<f64>> {
    if u_path.n_steps() != w_path.n_steps() || u_path.n_steps() < 2 {
        return Err(MemsError::config("flux balance needs aligned paths with at least 2 steps"));
    }
    let h = grid.spacing();
    let mass: Vec<f64> = u_path
        .entries()
        .iter()
        .zip(w_path.entries())
        .map(|(u, w)| {
            let prod: Vec<f64> = u.values.iter().zip(&w.values).map(|(a, b)| a * b).collect();
            let edge = c.theta1 * c.theta2;
            h * (prod.iter().sum::<f64>() + edge)
        })
        .collect();
    let flux: Vec<f64> = u_path
        .entries()
        .iter()
        .map(|u| {
            let n = u.len();
            let ux0 = (-3.0 * c.theta1 + 4.0 * u.values[0] - u.values[1]) / (2.0 * h);
            let uxl = (3.0 * c.theta1 - 4.0 * u.values[n - 1] + u.values[n - 2]) / (2.0 * h);
            // w = θ₂ and u = θ₁ on the boundary
            c.theta2.powi(3) * c.theta1 * (uxl - ux0)
        })
        .collect();
    let dt = u_path.dt();
    let m = mass.len();
    Ok((0..m)
        .map(|j| {
            let dm = if j == 0 {
                (-3.0 * mass[0] + 4.0 * mass[1] - mass[2]) / (2.0 * dt)
            } else if j == m - 1 {
                (3.0 * mass[m - 1] - 4.0 * mass[m - 2] + mass[m - 3]) / (2.0 * dt)
            } else {
                (mass[j + 1] - mass[j - 1]) / (2.0 * dt)
            };
            (dm - flux[j]).abs()
        })
        .collect())
}
