//! The wave subsystem solution operator `u ↦ W(u) = (v(u), w(u))`.
//!
//! Mild solutions are computed by Picard iteration on the Duhamel formula
//! `Φ = T(t)Φ₀ + ∫ T(t−s)(G(w̃(s)) + β_p ũ(s), 0) ds`, and the derivative
//! `W′(u)q` by Picard iteration on the linear Volterra equation obtained by
//! differentiating that fixed point.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{MemsError, Result};
use crate::grid::{random_band_limited, EigenBasis, Field, SobolevOrder, TrajectoryPath};
use crate::wave::{DuhamelOperator, ModalWave, WaveState};

/// Relative size below which successive-iterate distances are treated as
/// round-off and left out of the contraction-ratio history.
const RATIO_NOISE_FLOOR: f64 = 1e-13;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalConstants {
    pub beta_f: f64,
    pub beta_p: f64,
    pub theta1: f64,
    pub theta2: f64,
}

impl PhysicalConstants {
    pub fn new(beta_f: f64, beta_p: f64, theta1: f64, theta2: f64) -> Result<Self> {
        let c = Self {
            beta_f,
            beta_p,
            theta1,
            theta2,
        };
        c.validate()?;
        Ok(c)
    }

    /// Boundary values must be positive. The couplings may vanish, which
    /// reduces the system to the free wave and heat problems.
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("beta_F", self.beta_f), ("beta_p", self.beta_p)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(MemsError::config(format!("{name} must be nonnegative, got {v}")));
            }
        }
        for (name, v) in [("theta1", self.theta1), ("theta2", self.theta2)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(MemsError::config(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }

    /// `β_F` that makes the constant state `(θ₁, θ₂)` stationary.
    pub fn equilibrium_beta_f(beta_p: f64, theta1: f64, theta2: f64) -> f64 {
        beta_p * (theta1 - 1.0) * theta2 * theta2
    }

    /// Value of `G` on the boundary, where the gap equals `θ₂`.
    pub fn boundary_forcing(&self) -> f64 {
        -self.beta_f / (self.theta2 * self.theta2) + self.beta_p * (self.theta1 - 1.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HyperbolicInit {
    pub v0: Field,
    /// Full gap values at the interior nodes; the boundary trace is `θ₂`.
    pub w0: Field,
    pub theta2: f64,
    pub kappa: f64,
}

impl HyperbolicInit {
    pub fn new(v0: Field, w0: Field, theta2: f64) -> Result<Self> {
        if v0.len() != w0.len() {
            return Err(MemsError::config("v0 and w0 must share one grid"));
        }
        if let Some((i, &g)) = w0.values.iter().enumerate().find(|(_, &g)| !(g > 0.0)) {
            return Err(MemsError::config(format!(
                "initial gap must be positive, got {g} at node {i}"
            )));
        }
        let kappa = w0.min().min(theta2);
        Ok(Self {
            v0,
            w0,
            theta2,
            kappa,
        })
    }

    pub fn w_tilde0(&self) -> Field {
        self.w0.offset(-self.theta2)
    }

    pub fn state(&self) -> WaveState {
        WaveState {
            v: self.v0.clone(),
            w_tilde: self.w_tilde0(),
        }
    }

    pub fn w0_h1(&self, basis: &EigenBasis) -> f64 {
        basis.norm_with_trace(&self.w_tilde0(), self.theta2, SobolevOrder::H1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PicardSettings {
    pub radius: f64,
    pub tol: f64,
    pub max_iter: usize,
}

impl PicardSettings {
    pub const DEFAULT_TOL: f64 = 1e-10;
    pub const DEFAULT_MAX_ITER: usize = 60;

    /// Radius at `fraction` of the admissible bound `κ/(2C)`.
    pub fn for_init(init: &HyperbolicInit, c_emb: f64, fraction: f64) -> Self {
        Self {
            radius: fraction * init.kappa / (2.0 * c_emb),
            tol: Self::DEFAULT_TOL,
            max_iter: Self::DEFAULT_MAX_ITER,
        }
    }

    pub fn validate(&self, kappa: f64, c_emb: f64) -> Result<()> {
        let bound = kappa / (2.0 * c_emb);
        if !(self.radius > 0.0 && self.radius < bound) {
            return Err(MemsError::config(format!(
                "ball radius {} must lie in (0, {bound:.6e})",
                self.radius
            )));
        }
        if !(self.tol > 0.0) || self.max_iter == 0 {
            return Err(MemsError::config("Picard tolerance and iteration cap must be positive"));
        }
        Ok(())
    }
}

pub fn g_reaction(w_tilde: &Field, c: &PhysicalConstants) -> Result<Field> {
    g_reaction_at(w_tilde, c, 0.0)
}

/// `G(w̃) = −β_F/(w̃+θ₂)² + β_p(θ₁−1)`, tagging quench errors with `time`.
pub fn g_reaction_at(w_tilde: &Field, c: &PhysicalConstants, time: f64) -> Result<Field> {
    let shift = c.beta_p * (c.theta1 - 1.0);
    let mut out = Vec::with_capacity(w_tilde.len());
    for (node, &wt) in w_tilde.values.iter().enumerate() {
        let gap = wt + c.theta2;
        if !(gap > 0.0) {
            return Err(MemsError::QuenchImminent { node, gap, time });
        }
        out.push(-c.beta_f / (gap * gap) + shift);
    }
    Ok(Field::from_values(out))
}

/// Constants of the reciprocal-gap estimates and the resulting Lipschitz
/// constant `L_G = β_F C₂` of `G` on the `H¹` ball.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LgEstimate {
    pub c_emb: f64,
    pub c_tilde: f64,
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub l_g: f64,
}

pub fn estimate_l_g(
    init: &HyperbolicInit,
    c: &PhysicalConstants,
    basis: &EigenBasis,
) -> LgEstimate {
    lg_from_parts(c.beta_f, init.kappa, init.w0_h1(basis), basis.embedding_constant())
}

pub fn lg_from_parts(beta_f: f64, kappa: f64, w0_h1: f64, c_emb: f64) -> LgEstimate {
    let c_tilde = kappa / (2.0 * c_emb) + w0_h1;
    let c1 = (4.0 * c_emb / kappa.powi(2) + 16.0 * c_tilde.powi(2) / kappa.powi(4)).sqrt();
    let c2 = 2.0 * c1.powi(3);
    let c3 = 3.0 * c1.powi(4);
    LgEstimate {
        c_emb,
        c_tilde,
        c1,
        c2,
        c3,
        l_g: beta_f * c2,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum T0Term {
    StrongContinuity,
    Lipschitz,
    Forcing,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct T0Report {
    pub t0: f64,
    pub delta_o: f64,
    pub lipschitz_term: f64,
    pub forcing_term: f64,
    pub active: T0Term,
}

/// `T₀ = min{δ_o, 1/(2M₀L_G), κ/(2M₀[(L_G+1)κ + 2C‖G₀‖_{H¹}])}`.
pub fn horizon_t0(
    m0: f64,
    l_g: f64,
    delta_o: f64,
    kappa: f64,
    c_emb: f64,
    g0_h1: f64,
) -> T0Report {
    let lipschitz_term = if l_g > 0.0 {
        1.0 / (2.0 * m0 * l_g)
    } else {
        f64::INFINITY
    };
    let forcing_term = kappa / (2.0 * m0 * ((l_g + 1.0) * kappa + 2.0 * c_emb * g0_h1));
    let mut report = T0Report {
        t0: delta_o,
        delta_o,
        lipschitz_term,
        forcing_term,
        active: T0Term::StrongContinuity,
    };
    if lipschitz_term < report.t0 {
        report.t0 = lipschitz_term;
        report.active = T0Term::Lipschitz;
    }
    if forcing_term < report.t0 {
        report.t0 = forcing_term;
        report.active = T0Term::Forcing;
    }
    report
}

/// `‖G(w̃₀) + β_p ũ₀‖_{H¹}` including the constant boundary trace of `G`.
pub fn initial_forcing_h1(
    init: &HyperbolicInit,
    u_tilde0: &Field,
    c: &PhysicalConstants,
    basis: &EigenBasis,
) -> Result<f64> {
    let g = g_reaction(&init.w_tilde0(), c)?;
    let g0 = g.zip_map(u_tilde0, |a, b| a + c.beta_p * b);
    let trace = c.boundary_forcing();
    Ok(basis.norm_with_trace(&g0.offset(-trace), trace, SobolevOrder::H1))
}

/// Largest dyadic time `t` with `sup_{s ≤ t} ‖T(s)Φ₀ − Φ₀‖ ≤ r/2`.
pub fn strong_continuity_time(state: &WaveState, radius: f64, basis: &EigenBasis) -> f64 {
    let m = state.to_modal(basis);
    let half_l = 0.5 * basis.grid().length();
    let energies: Vec<(f64, f64)> = (0..basis.n_modes())
        .map(|k| {
            let l = basis.eigenvalue(k);
            (l.sqrt(), half_l * (m.v[k].powi(2) + l * m.w[k].powi(2)))
        })
        .collect();
    let total: f64 = energies.iter().map(|e| e.1).sum();
    if 2.0 * total.sqrt() <= 0.5 * radius {
        return f64::INFINITY;
    }
    // ‖T(s)Φ₀ − Φ₀‖² = Σ 2(1 − cos ω s) E_k
    let drift = |s: f64| {
        energies
            .iter()
            .map(|&(om, e)| 2.0 * (1.0 - (om * s).cos()) * e)
            .sum::<f64>()
            .sqrt()
    };
    let sup_drift = |t: f64| (0..=256).map(|i| drift(t * i as f64 / 256.0)).fold(0.0, f64::max);
    let mut t = 16.0;
    while t > 1e-15 {
        if sup_drift(t) <= 0.5 * radius {
            return t;
        }
        t *= 0.5;
    }
    t
}

/// A converged wave solve on one time grid.
#[derive(Debug, Clone)]
pub struct WaveSolution {
    pub path: TrajectoryPath<WaveState>,
    pub modal: Vec<ModalWave>,
    pub iterations: usize,
    /// Largest successive-iterate ratio above the round-off floor.
    pub final_ratio: f64,
    pub ratios: Vec<f64>,
    pub min_gap: f64,
}

impl WaveSolution {
    pub fn w_path(&self, theta2: f64) -> TrajectoryPath<Field> {
        self.path.map(|s| s.w_tilde.offset(theta2))
    }

    pub fn v_path(&self) -> TrajectoryPath<Field> {
        self.path.map(|s| s.v.clone())
    }
}

#[derive(Debug, Clone)]
pub struct FrechetResult {
    pub v: TrajectoryPath<Field>,
    pub w: TrajectoryPath<Field>,
    pub iterations: usize,
}

/// Solver for the wave subsystem on a fixed basis and time grid.
#[derive(Debug, Clone)]
pub struct WaveSolver {
    op: DuhamelOperator,
    constants: PhysicalConstants,
    settings: PicardSettings,
}

impl WaveSolver {
    pub fn new(
        basis: &EigenBasis,
        horizon: f64,
        n_steps: usize,
        constants: PhysicalConstants,
        settings: PicardSettings,
    ) -> Result<Self> {
        constants.validate()?;
        Ok(Self {
            op: DuhamelOperator::new(basis, horizon, n_steps)?,
            constants,
            settings,
        })
    }

    pub fn basis(&self) -> &EigenBasis {
        self.op.basis()
    }

    pub fn operator(&self) -> &DuhamelOperator {
        &self.op
    }

    pub fn constants(&self) -> &PhysicalConstants {
        &self.constants
    }

    pub fn settings(&self) -> &PicardSettings {
        &self.settings
    }

    fn check_path(&self, path: &TrajectoryPath<Field>) -> Result<()> {
        if path.n_steps() != self.op.n_steps()
            || (path.horizon() - self.op.horizon()).abs() > 1e-12 * self.op.horizon()
        {
            return Err(MemsError::config(format!(
                "path grid (T = {}, {} steps) does not match solver grid (T = {}, {} steps)",
                path.horizon(),
                path.n_steps(),
                self.op.horizon(),
                self.op.n_steps()
            )));
        }
        let n = self.basis().grid().n_nodes();
        if path.entries().iter().any(|f| f.len() != n) {
            return Err(MemsError::config("path fields do not match the grid"));
        }
        Ok(())
    }

    /// Nodal gap deviations of every iterate entry.
    fn nodal_w(&self, modal: &[ModalWave]) -> Vec<Field> {
        let b = self.basis();
        modal.iter().map(|m| Field::from_values(b.from_modes(&m.w))).collect()
    }

    fn sup_distance(&self, a: &[ModalWave], b: &[ModalWave]) -> f64 {
        a.iter()
            .zip(b)
            .map(|(x, y)| x.energy_distance(y, self.basis()))
            .fold(0.0, f64::max)
    }

    /// Mild solution for the pressure deviation path `ũ = u − θ₁`.
    pub fn solve(&self, u_tilde: &TrajectoryPath<Field>, init: &HyperbolicInit) -> Result<WaveSolution> {
        self.solve_from(u_tilde, init, None)
    }

    /// As [`WaveSolver::solve`], starting the iteration from `guess` when given.
    pub fn solve_from(
        &self,
        u_tilde: &TrajectoryPath<Field>,
        init: &HyperbolicInit,
        guess: Option<&[ModalWave]>,
    ) -> Result<WaveSolution> {
        self.check_path(u_tilde)?;
        let basis = self.basis();
        let c = &self.constants;
        let phi0 = init.state().to_modal(basis);
        let n = self.op.n_steps();
        let dt = self.op.dt();
        let bound = 0.5 * init.kappa;

        let mut current: Vec<ModalWave> = match guess {
            Some(g) if g.len() == n + 1 => g.to_vec(),
            _ => (0..=n).map(|j| phi0.rotate(j as f64 * dt, basis)).collect(),
        };
        let mut ratios = Vec::new();
        let mut prev_dist = f64::NAN;
        for iter in 1..=self.settings.max_iter {
            let w_nodal = self.nodal_w(&current);
            let min_gap = check_gap(&w_nodal, c.theta2, bound, dt)?;
            let forcing: Vec<Vec<f64>> = w_nodal
                .iter()
                .zip(u_tilde.entries())
                .enumerate()
                .map(|(j, (w, u))| {
                    let g = g_reaction_at(w, c, j as f64 * dt)?;
                    let f = g.zip_map(u, |a, b| a + c.beta_p * b);
                    Ok(basis.to_modes(&f.values))
                })
                .collect::<Result<_>>()?;
            let next = self.op.solve_modal(&phi0, &forcing);
            let dist = self.sup_distance(&next, &current);
            let scale = next.iter().map(|m| m.energy_norm(basis)).fold(1.0, f64::max);
            if prev_dist.is_finite() && prev_dist > RATIO_NOISE_FLOOR * scale {
                ratios.push(dist / prev_dist);
            }
            prev_dist = dist;
            current = next;
            if dist < self.settings.tol {
                let w_nodal = self.nodal_w(&current);
                let min_gap = check_gap(&w_nodal, c.theta2, bound, dt)?.min(min_gap);
                let path = TrajectoryPath::new(
                    self.op.horizon(),
                    current.iter().map(|m| m.to_state(basis)).collect(),
                )?;
                let final_ratio = ratios.iter().copied().fold(0.0, f64::max);
                return Ok(WaveSolution {
                    path,
                    modal: current,
                    iterations: iter,
                    final_ratio,
                    ratios,
                    min_gap,
                });
            }
        }
        Err(MemsError::NotConverged {
            solver: "wave Picard",
            iterations: self.settings.max_iter,
            ratios,
        })
    }

    /// `(v′(u)q, w′(u)q)` from the Volterra equation
    /// `x(t) = ∫₀ᵗ T(t−s)(β_p q(s) + 2β_F [w′q](s)/w(s)³, 0) ds`.
    pub fn frechet(
        &self,
        q: &TrajectoryPath<Field>,
        solved: &WaveSolution,
    ) -> Result<FrechetResult> {
        self.check_path(q)?;
        let basis = self.basis();
        let c = &self.constants;
        let n = self.op.n_steps();
        let nm = basis.n_modes();
        let sensitivity: Vec<Vec<f64>> = solved
            .path
            .entries()
            .iter()
            .map(|s| {
                s.w_tilde
                    .values
                    .iter()
                    .map(|wt| 2.0 * c.beta_f / (wt + c.theta2).powi(3))
                    .collect()
            })
            .collect();
        let zero = ModalWave::zeros(nm);
        let mut current: Vec<ModalWave> = vec![zero.clone(); n + 1];
        let scale_q = q.max_abs().max(f64::MIN_POSITIVE);
        for iter in 1..=self.settings.max_iter {
            let forcing: Vec<Vec<f64>> = (0..=n)
                .map(|j| {
                    let w = basis.from_modes(&current[j].w);
                    let f: Vec<f64> = q.entry(j)
                        .values
                        .iter()
                        .zip(&w)
                        .zip(&sensitivity[j])
                        .map(|((qv, wv), s)| c.beta_p * qv + s * wv)
                        .collect();
                    basis.to_modes(&f)
                })
                .collect();
            let next = self.op.solve_modal(&zero, &forcing);
            let dist = self.sup_distance(&next, &current);
            current = next;
            if dist < self.settings.tol * scale_q.max(1.0) {
                let to_path = |pick: fn(&ModalWave) -> &Vec<f64>| {
                    TrajectoryPath::new(
                        self.op.horizon(),
                        current
                            .iter()
                            .map(|m| Field::from_values(basis.from_modes(pick(m))))
                            .collect(),
                    )
                };
                return Ok(FrechetResult {
                    v: to_path(|m| &m.v)?,
                    w: to_path(|m| &m.w)?,
                    iterations: iter,
                });
            }
        }
        Err(MemsError::NotConverged {
            solver: "Frechet Volterra",
            iterations: self.settings.max_iter,
            ratios: Vec::new(),
        })
    }
}

fn check_gap(w_tilde: &[Field], theta2: f64, bound: f64, dt: f64) -> Result<f64> {
    let mut min_gap = f64::INFINITY;
    for (j, w) in w_tilde.iter().enumerate() {
        let (node, m) = w.argmin();
        let gap = m + theta2;
        if !(gap > 0.0) {
            return Err(MemsError::QuenchImminent {
                node,
                gap,
                time: j as f64 * dt,
            });
        }
        if gap < bound {
            return Err(MemsError::HorizonTooLarge {
                min_gap: gap,
                bound,
                time: j as f64 * dt,
            });
        }
        min_gap = min_gap.min(gap);
    }
    Ok(min_gap.min(theta2))
}

/// Convenience wrapper building a [`WaveSolver`] on the grid of `u_tilde`.
pub fn solve_wave_picard(
    u_tilde: &TrajectoryPath<Field>,
    init: &HyperbolicInit,
    c: &PhysicalConstants,
    s: &PicardSettings,
    basis: &EigenBasis,
) -> Result<WaveSolution> {
    WaveSolver::new(basis, u_tilde.horizon(), u_tilde.n_steps(), *c, *s)?.solve(u_tilde, init)
}

pub fn frechet_w(
    q: &TrajectoryPath<Field>,
    solved: &WaveSolution,
    c: &PhysicalConstants,
    s: &PicardSettings,
    basis: &EigenBasis,
) -> Result<FrechetResult> {
    WaveSolver::new(basis, q.horizon(), q.n_steps(), *c, *s)?.frechet(q, solved)
}

/// `L_W = T₀ M₀ β_p e^{M₀ L_G T₀}`.
pub fn lipschitz_bound_w(t0: f64, m0: f64, beta_p: f64, l_g: f64) -> f64 {
    t0 * m0 * beta_p * (m0 * l_g * t0).exp()
}

/// Largest observed `‖G(w₁)−G(w₂)‖_{H¹}/‖w₁−w₂‖_{H¹}` over random pairs in
/// the `H¹` ball of radius `r` about `w̃₀`, using band-limited perturbations.
pub fn lipschitz_scan_g<R: Rng + ?Sized>(
    init: &HyperbolicInit,
    radius: f64,
    c: &PhysicalConstants,
    basis: &EigenBasis,
    samples: usize,
    rng: &mut R,
) -> Result<f64> {
    let w0 = init.w_tilde0();
    let max_mode = (basis.n_modes() / 4).max(1);
    let draw = |rng: &mut R| {
        let p = random_band_limited(basis, max_mode, rng);
        let n = basis.norm(&p, SobolevOrder::H1);
        let target = radius * rng.gen_range(0.0..1.0);
        w0.add(&p.scale(if n > 0.0 { target / n } else { 0.0 }))
    };
    let mut best: f64 = 0.0;
    for _ in 0..samples {
        let a = draw(rng);
        let b = draw(rng);
        let den = basis.norm(&a.sub(&b), SobolevOrder::H1);
        if den == 0.0 {
            continue;
        }
        let ga = g_reaction(&a, c)?;
        let gb = g_reaction(&b, c)?;
        best = best.max(basis.norm(&ga.sub(&gb), SobolevOrder::H1) / den);
    }
    Ok(best)
}
