//! The Reynolds pressure equation and the coupled fixed-point solver.
//!
//! Pressure deviations `ũ = u − θ₁` live on interior nodes with zero trace.
//! The nonlinearity is discretized in conservative form
//!
//! ```text
//! F(ũ)_i = [A_{i+½}(u_{i+1}−u_i) − A_{i−½}(u_i−u_{i−1})] / (w_i h²) − v_i u_i / w_i,
//! A_{i+½} = ½[(w³u)_i + (w³u)_{i+1}],
//! ```
//!
//! and the linearization `𝒫*` is the exact Jacobian of this map at
//! `(ũ₀, v₀, w₀)`, so that `F(ũ) − 𝒫*ũ` is quadratically small near `ũ₀`.
//! The coupled solution is the fixed point of
//! `Γũ(t) = e^{t𝒫*}ũ₀ + ∫₀ᵗ e^{(t−s)𝒫*}[F(ũ) − 𝒫*ũ](s) ds`,
//! with `(v, w)` refreshed from the wave solver once per sweep.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{MemsError, Result};
use crate::grid::{
    holder_fit_with, random_band_limited, EigenBasis, Field, Grid1D, HolderFit, SobolevOrder,
    TrajectoryPath,
};
use crate::hyperbolic::{
    estimate_l_g, horizon_t0, initial_forcing_h1, strong_continuity_time, HyperbolicInit,
    LgEstimate, PhysicalConstants, PicardSettings, T0Report, WaveSolution, WaveSolver,
};
use crate::wave::ModalWave;

/// A dense operator on interior nodal values.
#[derive(Debug, Clone)]
pub struct LinearOperator1D {
    pub matrix: DMatrix<f64>,
    pub grid: Grid1D,
    pub description: String,
}

impl LinearOperator1D {
    pub fn apply(&self, f: &Field) -> Field {
        let x = DVector::from_column_slice(&f.values);
        Field::from_values((&self.matrix * x).as_slice().to_vec())
    }

    pub fn n(&self) -> usize {
        self.matrix.nrows()
    }
}

/// Node values padded with the boundary trace on both ends.
fn padded(values: &[f64], trace: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(values.len() + 2);
    out.push(trace);
    out.extend_from_slice(values);
    out.push(trace);
    out
}

fn check_positive(name: &str, f: &Field) -> Result<()> {
    if let Some((i, &x)) = f.values.iter().enumerate().find(|(_, &x)| !(x > 0.0)) {
        return Err(MemsError::config(format!(
            "{name} must be positive, got {x} at node {i}"
        )));
    }
    Ok(())
}

/// Assembles `𝒫*ψ = (1/w₀)∂x{w₀³u₀ψ′ + w₀³u₀′ψ} − (v₀/w₀)ψ` with Dirichlet
/// rows. `u0` and `w0` are full values with traces `theta1`, `theta2`.
pub fn assemble_linearization(
    u0: &Field,
    v0: &Field,
    w0: &Field,
    theta1: f64,
    theta2: f64,
    grid: &Grid1D,
) -> Result<LinearOperator1D> {
    let n = grid.n_nodes();
    if u0.len() != n || v0.len() != n || w0.len() != n {
        return Err(MemsError::config("initial fields do not match the grid"));
    }
    check_positive("u0", u0)?;
    check_positive("w0", w0)?;
    let h2 = grid.spacing().powi(2);
    let u = padded(&u0.values, theta1);
    let w = padded(&w0.values, theta2);
    let c: Vec<f64> = w.iter().map(|x| x.powi(3)).collect();
    let mut m = DMatrix::<f64>::zeros(n, n);
    for i in 1..=n {
        let row = i - 1;
        let ap = 0.5 * (c[i] * u[i] + c[i + 1] * u[i + 1]);
        let am = 0.5 * (c[i - 1] * u[i - 1] + c[i] * u[i]);
        let dup = u[i + 1] - u[i];
        let dum = u[i] - u[i - 1];
        let s = 1.0 / (w[i] * h2);
        // ∂/∂q_i, ∂/∂q_{i+1}, ∂/∂q_{i−1}
        let diag = s * (-ap - am + 0.5 * c[i] * dup - 0.5 * c[i] * dum) - v0.values[row] / w[i];
        m[(row, row)] = diag;
        if i < n {
            m[(row, row + 1)] = s * (ap + 0.5 * c[i + 1] * dup);
        }
        if i > 1 {
            m[(row, row - 1)] = s * (am - 0.5 * c[i - 1] * dum);
        }
    }
    Ok(LinearOperator1D {
        matrix: m,
        grid: grid.clone(),
        description: "linearized Reynolds operator (conservative FD Jacobian)".into(),
    })
}

/// `F(ũ)` at the nodes. `w` is the full gap, `v` the velocity.
pub fn reynolds_rhs(
    u_tilde: &Field,
    v: &Field,
    w: &Field,
    c: &PhysicalConstants,
    grid: &Grid1D,
) -> Result<Field> {
    reynolds_rhs_with_floor(u_tilde, v, w, c, grid, 0.0, 0.0)
}

/// As [`reynolds_rhs`], raising a quench error when the gap is at or below
/// `gap_floor`. `time` tags the error.
pub fn reynolds_rhs_with_floor(
    u_tilde: &Field,
    v: &Field,
    w: &Field,
    c: &PhysicalConstants,
    grid: &Grid1D,
    gap_floor: f64,
    time: f64,
) -> Result<Field> {
    let n = grid.n_nodes();
    for (node, &g) in w.values.iter().enumerate() {
        if !(g > gap_floor) {
            return Err(MemsError::QuenchImminent { node, gap: g, time });
        }
    }
    let h2 = grid.spacing().powi(2);
    let u: Vec<f64> = padded(&u_tilde.values, 0.0).iter().map(|x| x + c.theta1).collect();
    let wp = padded(&w.values, c.theta2);
    let a: Vec<f64> = wp.iter().zip(&u).map(|(w, u)| w.powi(3) * u).collect();
    let out = (1..=n)
        .map(|i| {
            let ap = 0.5 * (a[i] + a[i + 1]);
            let am = 0.5 * (a[i - 1] + a[i]);
            let div = ap * (u[i + 1] - u[i]) - am * (u[i] - u[i - 1]);
            div / (wp[i] * h2) - v.values[i - 1] * u[i] / wp[i]
        })
        .collect();
    Ok(Field::from_values(out))
}

/// Directional derivative of the discrete `F` in all three arguments:
/// `∂_u F·q + ∂_v F·dv + ∂_w F·dw`.
#[allow(clippy::too_many_arguments)]
pub fn reynolds_rhs_derivative(
    u_tilde: &Field,
    v: &Field,
    w: &Field,
    q: &Field,
    dv: &Field,
    dw: &Field,
    c: &PhysicalConstants,
    grid: &Grid1D,
) -> Field {
    let n = grid.n_nodes();
    let h2 = grid.spacing().powi(2);
    let u: Vec<f64> = padded(&u_tilde.values, 0.0).iter().map(|x| x + c.theta1).collect();
    let wp = padded(&w.values, c.theta2);
    let qp = padded(&q.values, 0.0);
    let dwp = padded(&dw.values, 0.0);
    let a: Vec<f64> = wp.iter().zip(&u).map(|(w, u)| w.powi(3) * u).collect();
    let da: Vec<f64> = (0..n + 2)
        .map(|i| 3.0 * wp[i].powi(2) * u[i] * dwp[i] + wp[i].powi(3) * qp[i])
        .collect();
    let out = (1..=n)
        .map(|i| {
            let ap = 0.5 * (a[i] + a[i + 1]);
            let am = 0.5 * (a[i - 1] + a[i]);
            let dap = 0.5 * (da[i] + da[i + 1]);
            let dam = 0.5 * (da[i - 1] + da[i]);
            let div = ap * (u[i + 1] - u[i]) - am * (u[i] - u[i - 1]);
            let ddiv = dap * (u[i + 1] - u[i]) - dam * (u[i] - u[i - 1])
                + ap * (qp[i + 1] - qp[i])
                - am * (qp[i] - qp[i - 1]);
            let wi = wp[i];
            let vi = v.values[i - 1];
            ddiv / (wi * h2) - div * dwp[i] / (wi * wi * h2) - dv.values[i - 1] * u[i] / wi
                + vi * u[i] * dwp[i] / (wi * wi)
                - vi * qp[i] / wi
        })
        .collect();
    Field::from_values(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GardingReport {
    pub k: f64,
    pub k_o: f64,
    /// Smallest `(|form| + K_o‖q‖²)/‖q′‖²` over the probes.
    pub min_form_ratio: f64,
    pub epsilon1: f64,
    pub kappa: f64,
    /// Smallest discrete coercivity coefficient `A_{i+½}·avg(1/w)`.
    pub coercivity: f64,
    /// Coefficient of the lower-order cross term, `max |A δ(1/w)|`.
    pub k2: f64,
    /// `C ‖u₀‖_{H¹} ‖w₀‖²_{H²}` for comparison with `k2`.
    pub k2_formula: f64,
    pub probes: usize,
    pub max_violation: f64,
    pub valid: bool,
}

/// Discrete `∫(q/w₀)[w₀³u₀q′]′`, `‖q′‖²` and `‖q‖²`.
pub fn garding_form(
    q: &Field,
    u0: &Field,
    w0: &Field,
    theta1: f64,
    theta2: f64,
    grid: &Grid1D,
) -> (f64, f64, f64) {
    let h = grid.spacing();
    let n = grid.n_nodes();
    let u = padded(&u0.values, theta1);
    let w = padded(&w0.values, theta2);
    let qp = padded(&q.values, 0.0);
    let a: Vec<f64> = (0..n + 1)
        .map(|i| 0.5 * (w[i].powi(3) * u[i] + w[i + 1].powi(3) * u[i + 1]))
        .collect();
    let mut form = 0.0;
    for i in 1..=n {
        let div = a[i] * (qp[i + 1] - qp[i]) - a[i - 1] * (qp[i] - qp[i - 1]);
        form += qp[i] / w[i] * div / h;
    }
    let grad = (0..n + 1).map(|i| (qp[i + 1] - qp[i]).powi(2)).sum::<f64>() / h;
    let l2 = h * q.values.iter().map(|x| x * x).sum::<f64>();
    (form, grad, l2)
}

/// Gårding constants `K`, `K_o` with `|form| ≥ K‖q′‖² − K_o‖q‖²`, checked
/// on the supplied probes.
pub fn garding_constants(
    p: &LinearOperator1D,
    u0: &Field,
    w0: &Field,
    theta1: f64,
    theta2: f64,
    probes: &[Field],
) -> Result<GardingReport> {
    let grid = &p.grid;
    let n = grid.n_nodes();
    if u0.len() != n || w0.len() != n {
        return Err(MemsError::config("Garding data do not match the operator grid"));
    }
    let h = grid.spacing();
    let u = padded(&u0.values, theta1);
    let w = padded(&w0.values, theta2);
    let mut coercivity = f64::INFINITY;
    let mut k2: f64 = 0.0;
    for i in 0..=n {
        let a = 0.5 * (w[i].powi(3) * u[i] + w[i + 1].powi(3) * u[i + 1]);
        coercivity = coercivity.min(a * 0.5 * (1.0 / w[i] + 1.0 / w[i + 1]));
        k2 = k2.max((a * (1.0 / w[i + 1] - 1.0 / w[i]) / h).abs());
    }
    let epsilon1 = u.iter().copied().fold(f64::INFINITY, f64::min);
    let kappa = w.iter().copied().fold(f64::INFINITY, f64::min);
    let (k, k_o) = if k2 == 0.0 {
        (coercivity, 0.0)
    } else {
        (0.5 * coercivity, k2 * k2 / (2.0 * coercivity))
    };
    let full = EigenBasis::full(grid);
    let c_emb = full.embedding_constant();
    let u_h1 = full.norm_with_trace(&u0.offset(-theta1), theta1, SobolevOrder::H1);
    let w_h2 = full.norm_with_trace(&w0.offset(-theta2), theta2, SobolevOrder::H2);
    let k2_formula = c_emb * u_h1 * w_h2 * w_h2;

    let mut min_ratio = f64::INFINITY;
    let mut max_violation: f64 = 0.0;
    for q in probes {
        let (form, grad, l2) = garding_form(q, u0, w0, theta1, theta2, grid);
        if grad == 0.0 {
            continue;
        }
        let ratio = (form.abs() + k_o * l2) / grad;
        min_ratio = min_ratio.min(ratio);
        max_violation = max_violation.max((k - ratio) / k);
    }
    Ok(GardingReport {
        k,
        k_o,
        min_form_ratio: min_ratio,
        epsilon1,
        kappa,
        coercivity,
        k2,
        k2_formula,
        probes: probes.len(),
        max_violation,
        valid: k > 0.0 && max_violation <= 1e-8,
    })
}

/// `e^{t𝒫*} f` by scaling-and-squaring.
pub fn analytic_step(p: &LinearOperator1D, t: f64, f: &Field) -> Result<Field> {
    if t == 0.0 {
        return Ok(f.clone());
    }
    if !(t.is_finite() && t > 0.0) {
        return Err(MemsError::config(format!("step length must be nonnegative, got {t}")));
    }
    let e = (&p.matrix * t).exp();
    if e.iter().any(|x| !x.is_finite()) {
        return Err(MemsError::Numeric("matrix exponential overflowed".into()));
    }
    let x = DVector::from_column_slice(&f.values);
    Ok(Field::from_values((e * x).as_slice().to_vec()))
}

/// Spectral norm of `e^{t𝒫*}` in the nodal L² geometry.
pub fn semigroup_norm(p: &LinearOperator1D, t: f64) -> f64 {
    let e = (&p.matrix * t).exp();
    e.singular_values().max()
}

/// Second-order exponential integrator for `ũ′ = 𝒫*ũ + f(t)` with `f`
/// interpolated linearly between time levels.
#[derive(Debug, Clone)]
pub struct ExpIntegrator {
    dt: f64,
    e: DMatrix<f64>,
    phi1: DMatrix<f64>,
    phi2: DMatrix<f64>,
}

impl ExpIntegrator {
    pub fn new(p: &LinearOperator1D, dt: f64) -> Result<Self> {
        let n = p.n();
        let mut aug = DMatrix::<f64>::zeros(3 * n, 3 * n);
        aug.view_mut((0, 0), (n, n)).copy_from(&(&p.matrix * dt));
        for i in 0..n {
            aug[(i, n + i)] = 1.0;
            aug[(n + i, 2 * n + i)] = 1.0;
        }
        let ex = aug.exp();
        if ex.iter().any(|x| !x.is_finite()) {
            return Err(MemsError::Numeric("phi-function exponential overflowed".into()));
        }
        Ok(Self {
            dt,
            e: ex.view((0, 0), (n, n)).into_owned(),
            phi1: ex.view((0, n), (n, n)).into_owned(),
            phi2: ex.view((0, 2 * n), (n, n)).into_owned(),
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Time levels of the forced problem from `u0` with forcing samples `f[j]`.
    pub fn integrate(&self, u0: &[f64], f: &[Vec<f64>]) -> Vec<Vec<f64>> {
        let mut out = Vec::with_capacity(f.len());
        let mut u = DVector::from_column_slice(u0);
        out.push(u0.to_vec());
        for j in 0..f.len().saturating_sub(1) {
            let f0 = DVector::from_column_slice(&f[j]);
            let f1 = DVector::from_column_slice(&f[j + 1]);
            let df = &f1 - &f0;
            u = &self.e * &u + (&self.phi1 * f0 + &self.phi2 * df) * self.dt;
            out.push(u.as_slice().to_vec());
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SectorReport {
    pub omega: f64,
    pub m_fit: f64,
    pub min_real: f64,
    pub ray: Vec<(f64, f64)>,
}

/// Spectral abscissa `ω` and the resolvent constant
/// `M = max_λ |λ−ω|·‖(λ−𝒫*)⁻¹‖` on the real ray `λ = ω + s`, `s ∈ [1, 10⁴]`.
pub fn sector_check(p: &LinearOperator1D) -> SectorReport {
    let eig = p.matrix.complex_eigenvalues();
    let omega = eig.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max);
    let min_real = eig.iter().map(|z| z.re).fold(f64::INFINITY, f64::min);
    let n = p.n();
    let ray: Vec<(f64, f64)> = (0..60)
        .map(|i| {
            let s = 10f64.powf(4.0 * i as f64 / 59.0);
            let mut r = -p.matrix.clone();
            for d in 0..n {
                r[(d, d)] += omega + s;
            }
            let smin = r.singular_values().min();
            (s, s / smin)
        })
        .collect();
    let m_fit = ray.iter().map(|r| r.1).fold(0.0, f64::max);
    SectorReport {
        omega,
        m_fit,
        min_real,
        ray,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GraphNormReport {
    pub gamma0: f64,
    pub min_ratio: f64,
    pub max_ratio: f64,
}

/// Two-sided constant between `‖g‖ + ‖𝒫*g‖` and `‖g‖_{H²}` on probes.
pub fn graph_norm_constant(p: &LinearOperator1D, probes: &[Field]) -> GraphNormReport {
    let full = EigenBasis::full(&p.grid);
    let mut lo = f64::INFINITY;
    let mut hi: f64 = 0.0;
    for g in probes {
        let h2 = full.norm(g, SobolevOrder::H2);
        if h2 == 0.0 {
            continue;
        }
        let lhs = p.grid.trapezoid_l2(&g.values) + p.grid.trapezoid_l2(&p.apply(g).values);
        let r = lhs / h2;
        lo = lo.min(r);
        hi = hi.max(r);
    }
    GraphNormReport {
        gamma0: hi.max(1.0 / lo),
        min_ratio: lo,
        max_ratio: hi,
    }
}

/// `‖𝒫*‖_{B(H², L²)}` over the full discrete basis.
pub fn operator_norm_h2_l2(p: &LinearOperator1D) -> f64 {
    let full = EigenBasis::full(&p.grid);
    let n = p.n();
    let half_l = 0.5 * p.grid.length();
    let mut s = DMatrix::<f64>::zeros(n, n);
    for k in 0..n {
        let scale = 1.0 / (half_l * SobolevOrder::H2.weight(full.eigenvalue(k))).sqrt();
        for (i, phi) in full.mode_shape(k).iter().enumerate() {
            s[(i, k)] = phi * scale;
        }
    }
    let m = (&p.matrix * s) * p.grid.spacing().sqrt();
    m.singular_values().max()
}

/// Everything the coupled solver needs.
#[derive(Debug, Clone)]
pub struct CoupledProblem {
    pub constants: PhysicalConstants,
    /// Spectral basis for the wave subsystem.
    pub basis: EigenBasis,
    /// Full initial pressure, gap and velocity at the interior nodes.
    pub u0: Field,
    pub v0: Field,
    pub w0: Field,
    pub horizon: f64,
    pub n_steps: usize,
    pub alpha: f64,
    pub tol: f64,
    pub max_iter: usize,
    pub wave: PicardSettings,
}

impl CoupledProblem {
    pub const DEFAULT_TOL: f64 = 1e-8;
    pub const DEFAULT_MAX_ITER: usize = 30;

    pub fn validate(&self) -> Result<()> {
        self.constants.validate()?;
        let n = self.basis.grid().n_nodes();
        for (name, f) in [("u0", &self.u0), ("v0", &self.v0), ("w0", &self.w0)] {
            if f.len() != n {
                return Err(MemsError::config(format!("{name} does not match the grid")));
            }
        }
        check_positive("u0", &self.u0)?;
        check_positive("w0", &self.w0)?;
        if !(self.horizon.is_finite() && self.horizon > 0.0) {
            return Err(MemsError::config("horizon must be positive"));
        }
        if self.n_steps < 8 {
            return Err(MemsError::config("need at least 8 time steps"));
        }
        if !(self.alpha > 0.0 && self.alpha < 0.25) {
            return Err(MemsError::config(format!(
                "alpha must lie in (0, 1/4), got {}",
                self.alpha
            )));
        }
        if !(self.tol > 0.0) || self.max_iter == 0 {
            return Err(MemsError::config("tolerance and iteration cap must be positive"));
        }
        let init = self.hyperbolic_init()?;
        self.wave.validate(init.kappa, self.basis.embedding_constant())
    }

    pub fn grid(&self) -> &Grid1D {
        self.basis.grid()
    }

    pub fn u_tilde0(&self) -> Field {
        self.u0.offset(-self.constants.theta1)
    }

    pub fn hyperbolic_init(&self) -> Result<HyperbolicInit> {
        HyperbolicInit::new(self.v0.clone(), self.w0.clone(), self.constants.theta2)
    }

    pub fn linearization(&self) -> Result<LinearOperator1D> {
        assemble_linearization(
            &self.u0,
            &self.v0,
            &self.w0,
            self.constants.theta1,
            self.constants.theta2,
            self.grid(),
        )
    }

    pub fn with_horizon(&self, horizon: f64) -> Self {
        Self {
            horizon,
            ..self.clone()
        }
    }
}

/// One application of `Γ` on a fixed time grid.
#[derive(Debug, Clone)]
pub struct GammaMap {
    problem: CoupledProblem,
    p: LinearOperator1D,
    integrator: ExpIntegrator,
    wave: WaveSolver,
    init: HyperbolicInit,
    full: EigenBasis,
}

impl GammaMap {
    pub fn new(problem: &CoupledProblem) -> Result<Self> {
        problem.validate()?;
        let p = problem.linearization()?;
        let dt = problem.horizon / problem.n_steps as f64;
        Ok(Self {
            integrator: ExpIntegrator::new(&p, dt)?,
            wave: WaveSolver::new(
                &problem.basis,
                problem.horizon,
                problem.n_steps,
                problem.constants,
                problem.wave,
            )?,
            init: problem.hyperbolic_init()?,
            full: EigenBasis::full(problem.grid()),
            p,
            problem: problem.clone(),
        })
    }

    pub fn operator(&self) -> &LinearOperator1D {
        &self.p
    }

    pub fn full_basis(&self) -> &EigenBasis {
        &self.full
    }

    pub fn wave_solver(&self) -> &WaveSolver {
        &self.wave
    }

    pub fn problem(&self) -> &CoupledProblem {
        &self.problem
    }

    pub fn path(&self, entries: Vec<Field>) -> Result<TrajectoryPath<Field>> {
        TrajectoryPath::new(self.problem.horizon, entries)
    }

    pub fn constant_path(&self) -> TrajectoryPath<Field> {
        let u = self.problem.u_tilde0();
        TrajectoryPath::from_fn(self.problem.horizon, self.problem.n_steps, |_| u.clone())
            .expect("validated horizon")
    }

    /// `(v, w) = W(ũ)` and `F(ũ)` along the path.
    pub fn nonlinearity(
        &self,
        u_tilde: &TrajectoryPath<Field>,
        guess: Option<&[ModalWave]>,
    ) -> Result<(WaveSolution, Vec<Field>)> {
        let sol = self.wave.solve_from(u_tilde, &self.init, guess)?;
        let c = &self.problem.constants;
        let floor = 0.5 * self.init.kappa;
        let dt = u_tilde.dt();
        let f = u_tilde
            .entries()
            .iter()
            .zip(sol.path.entries())
            .enumerate()
            .map(|(j, (u, s))| {
                let w = s.w_tilde.offset(c.theta2);
                // tolerate the round-off allowance on the κ/2 floor
                reynolds_rhs_with_floor(u, &s.v, &w, c, self.problem.grid(), floor - 1e-12, j as f64 * dt)
            })
            .collect::<Result<_>>()?;
        Ok((sol, f))
    }

    /// `Γũ` along with the wave solution used to build it.
    pub fn apply(
        &self,
        u_tilde: &TrajectoryPath<Field>,
        guess: Option<&[ModalWave]>,
    ) -> Result<(TrajectoryPath<Field>, WaveSolution)> {
        let (sol, f) = self.nonlinearity(u_tilde, guess)?;
        let forcing: Vec<Vec<f64>> = f
            .iter()
            .zip(u_tilde.entries())
            .map(|(fj, uj)| fj.sub(&self.p.apply(uj)).values)
            .collect();
        let levels = self.integrator.integrate(&self.problem.u_tilde0().values, &forcing);
        let path = self.path(levels.into_iter().map(Field::from_values).collect())?;
        Ok((path, sol))
    }

    pub fn h2_distance(&self, a: &TrajectoryPath<Field>, b: &TrajectoryPath<Field>) -> f64 {
        a.sup_distance(b, |x, y| self.full.norm(&x.sub(y), SobolevOrder::H2))
    }

    /// `‖x‖_{C^α([0,T]; H²)} = sup‖x‖ + sup_{s<t} ‖x(t)−x(s)‖/(t−s)^α`.
    pub fn holder_norm_h2(&self, x: &TrajectoryPath<Field>, alpha: f64) -> f64 {
        holder_norm(x, alpha, |f| self.full.norm(f, SobolevOrder::H2))
    }
}

/// `C^α` norm of a path in the norm `norm`, over all pairs of time levels.
pub fn holder_norm(x: &TrajectoryPath<Field>, alpha: f64, norm: impl Fn(&Field) -> f64) -> f64 {
    let e = x.entries();
    let sup = e.iter().map(&norm).fold(0.0, f64::max);
    let dt = x.dt();
    let mut semi: f64 = 0.0;
    for i in 0..e.len() {
        for j in i + 1..e.len() {
            let d = norm(&e[j].sub(&e[i]));
            semi = semi.max(d / ((j - i) as f64 * dt).powf(alpha));
        }
    }
    sup + semi
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoupledDiagnostics {
    pub iterations: usize,
    pub ratios: Vec<f64>,
    pub final_ratio: f64,
    pub final_distance: f64,
    pub min_gap: f64,
    pub min_u: f64,
    pub kappa: f64,
    pub wave_iterations: usize,
    pub wave_final_ratio: f64,
    pub horizon: f64,
    pub horizons: Option<Horizons>,
}

#[derive(Debug, Clone)]
pub struct CoupledSolution {
    /// Full pressure `u = ũ + θ₁`.
    pub u_path: TrajectoryPath<Field>,
    pub v_path: TrajectoryPath<Field>,
    /// Full gap `w = w̃ + θ₂`.
    pub w_path: TrajectoryPath<Field>,
    pub u_tilde: TrajectoryPath<Field>,
    pub wave: WaveSolution,
    pub diagnostics: CoupledDiagnostics,
}

/// Relative floor below which outer distances are excluded from the ratio
/// history.
const OUTER_NOISE_FLOOR: f64 = 1e-12;

pub fn gamma_fixed_point(problem: &CoupledProblem) -> Result<CoupledSolution> {
    let map = GammaMap::new(problem)?;
    gamma_fixed_point_with(&map)
}

pub fn gamma_fixed_point_with(map: &GammaMap) -> Result<CoupledSolution> {
    let problem = map.problem();
    let c = problem.constants;
    let mut current = map.constant_path();
    let mut guess: Option<Vec<ModalWave>> = None;
    let mut ratios = Vec::new();
    let mut prev = f64::NAN;
    for iter in 1..=problem.max_iter {
        let (next, sol) = map.apply(&current, guess.as_deref())?;
        let dist = map.h2_distance(&next, &current);
        let scale = next
            .entries()
            .iter()
            .map(|f| map.full_basis().norm(f, SobolevOrder::H2))
            .fold(1.0, f64::max);
        if prev.is_finite() && prev > OUTER_NOISE_FLOOR * scale {
            ratios.push(dist / prev);
        }
        prev = dist;
        guess = Some(sol.modal.clone());
        current = next;
        if dist < problem.tol {
            // refresh (v, w) on the accepted pressure path
            let (sol, _) = map.nonlinearity(&current, guess.as_deref())?;
            let u_path = current.map(|f| f.offset(c.theta1));
            let min_u = u_path.min_value().min(c.theta1);
            if !(min_u > 0.0) {
                return Err(MemsError::Numeric(format!(
                    "pressure lost positivity (min u = {min_u:.6e})"
                )));
            }
            let final_ratio = ratios.iter().copied().fold(0.0, f64::max);
            let diagnostics = CoupledDiagnostics {
                iterations: iter,
                ratios,
                final_ratio,
                final_distance: dist,
                min_gap: sol.min_gap,
                min_u,
                kappa: map.init.kappa,
                wave_iterations: sol.iterations,
                wave_final_ratio: sol.final_ratio,
                horizon: problem.horizon,
                horizons: None,
            };
            return Ok(CoupledSolution {
                u_path,
                v_path: sol.v_path(),
                w_path: sol.w_path(c.theta2),
                u_tilde: current,
                wave: sol,
                diagnostics,
            });
        }
    }
    Err(MemsError::NotConverged {
        solver: "coupled Gamma",
        iterations: problem.max_iter,
        ratios,
    })
}

/// Empirical constants entering the coupled horizon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HorizonConstants {
    pub l_e: f64,
    pub l_b: f64,
    pub gamma0: f64,
    pub i_t0: f64,
    pub p_norm: f64,
    pub u0_h2: f64,
    pub c_emb: f64,
    pub kappa: f64,
    pub alpha: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Horizons {
    pub t0: T0Report,
    pub l_g: LgEstimate,
    pub t0_star: f64,
    pub delta_star: f64,
    pub t1: f64,
    pub constants: HorizonConstants,
}

/// `T₀* = [2γ₀ I(T₀)(L_e + ‖𝒫*‖ + 2L_B(1 + ‖u₀‖_{H²} + κ/(2C)))]^{−1/α}`.
pub fn horizon_t0_star(k: &HorizonConstants) -> f64 {
    let bracket = 2.0
        * k.gamma0
        * k.i_t0
        * (k.l_e + k.p_norm + 2.0 * k.l_b * (1.0 + k.u0_h2 + k.kappa / (2.0 * k.c_emb)));
    bracket.powf(-1.0 / k.alpha)
}

/// Hyperbolic horizon `T₀` for the wave part of `problem`.
pub fn wave_horizon(problem: &CoupledProblem) -> Result<(T0Report, LgEstimate)> {
    let init = problem.hyperbolic_init()?;
    let basis = &problem.basis;
    let lg = estimate_l_g(&init, &problem.constants, basis);
    let g0 = initial_forcing_h1(&init, &problem.u_tilde0(), &problem.constants, basis)?;
    let delta_o = strong_continuity_time(&init.state(), problem.wave.radius, basis);
    Ok((
        horizon_t0(1.0, lg.l_g, delta_o, init.kappa, lg.c_emb, g0),
        lg,
    ))
}

/// Estimates `T₀`, `T₀*`, `δ*` and `T₁ = min{T₀, T₀*, δ*}`.
///
/// `L_e`, `L_B` and `I(T₀)` have no closed form; they are measured on seeded
/// probes over the horizon `T₀`, so the result is a heuristic certificate.
pub fn coupled_horizons<R: Rng + ?Sized>(
    problem: &CoupledProblem,
    probes: usize,
    rng: &mut R,
) -> Result<Horizons> {
    problem.validate()?;
    let (t0, lg) = wave_horizon(problem)?;
    let grid = problem.grid();
    let full = EigenBasis::full(grid);
    let p = problem.linearization()?;
    let c_emb = problem.basis.embedding_constant();
    let init = problem.hyperbolic_init()?;
    let radius = problem.wave.radius;
    let alpha = problem.alpha;
    let max_mode = (full.n_modes() / 4).max(1);

    let band: Vec<Field> = (0..probes.max(4))
        .map(|_| random_band_limited(&full, max_mode, rng))
        .collect();
    let gamma0 = graph_norm_constant(&p, &band).gamma0;
    let p_norm = operator_norm_h2_l2(&p);
    let u0_h2 = full.norm_with_trace(&problem.u_tilde0(), problem.constants.theta1, SobolevOrder::H2);

    let probe_horizon = t0.t0.min(problem.horizon.max(t0.t0 * 1e-3));
    let map = GammaMap::new(&problem.with_horizon(probe_horizon))?;

    // L_e: F-Lipschitz constant over constant-in-time perturbations in the ball
    let u_base = problem.u_tilde0();
    let scaled = |rng: &mut R| {
        let q = random_band_limited(&full, max_mode, rng);
        let n = full.norm(&q, SobolevOrder::H2);
        q.scale(radius * rng.gen_range(0.1..1.0) / n.max(f64::MIN_POSITIVE))
    };
    let mut l_e: f64 = 0.0;
    for _ in 0..probes.clamp(2, 8) {
        let a = u_base.add(&scaled(rng));
        let b = u_base.add(&scaled(rng));
        let pa = TrajectoryPath::from_fn(probe_horizon, problem.n_steps, |_| a.clone())?;
        let pb = TrajectoryPath::from_fn(probe_horizon, problem.n_steps, |_| b.clone())?;
        let (_, fa) = map.nonlinearity(&pa, None)?;
        let (_, fb) = map.nonlinearity(&pb, None)?;
        let num = fa
            .iter()
            .zip(&fb)
            .map(|(x, y)| grid.trapezoid_l2(&x.sub(y).values))
            .fold(0.0, f64::max);
        let den = full.norm(&a.sub(&b), SobolevOrder::H2);
        if den > 0.0 {
            l_e = l_e.max(num / den);
        }
    }

    // L_B: Hölder constant of t ↦ F(ũ)(t) − 𝒫*ũ(t) on the first iterate
    let base = map.constant_path();
    let (_, f) = map.nonlinearity(&base, None)?;
    let resid: Vec<Field> = f
        .iter()
        .zip(base.entries())
        .map(|(fj, uj)| fj.sub(&p.apply(uj)))
        .collect();
    let dt = base.dt();
    let mut l_b: f64 = 0.0;
    for i in 0..resid.len() {
        for j in i + 1..resid.len() {
            let d = grid.trapezoid_l2(&resid[j].sub(&resid[i]).values);
            l_b = l_b.max(d / ((j - i) as f64 * dt).powf(alpha));
        }
    }

    // I(T₀): maximal-regularity ratio on probe forcings f(t) = (t/T)^α g
    let integrator = ExpIntegrator::new(&p, dt)?;
    let mut i_t0: f64 = 0.0;
    for g in band.iter().take(4) {
        let forcing: Vec<Vec<f64>> = (0..=problem.n_steps)
            .map(|j| g.scale((j as f64 / problem.n_steps as f64).powf(alpha)).values)
            .collect();
        let sol = integrator.integrate(&vec![0.0; grid.n_nodes()], &forcing);
        let upath = TrajectoryPath::new(probe_horizon, sol.into_iter().map(Field::from_values).collect())?;
        let fpath = TrajectoryPath::new(probe_horizon, forcing.into_iter().map(Field::from_values).collect())?;
        let num = holder_norm(&upath, alpha, |x| full.norm(x, SobolevOrder::H2));
        let den = holder_norm(&fpath, alpha, |x| grid.trapezoid_l2(&x.values));
        if den > 0.0 {
            i_t0 = i_t0.max(num / den);
        }
    }

    let constants = HorizonConstants {
        l_e,
        l_b,
        gamma0,
        i_t0,
        p_norm,
        u0_h2,
        c_emb,
        kappa: init.kappa,
        alpha,
    };
    let t0_star = horizon_t0_star(&constants);
    let delta_star = delta_star(problem, t0.t0.min(t0_star.max(f64::MIN_POSITIVE) * 1e6).min(1.0))?;
    let t1 = t0.t0.min(t0_star).min(delta_star);
    Ok(Horizons {
        t0,
        l_g: lg,
        t0_star,
        delta_star,
        t1,
        constants,
    })
}

/// Largest dyadic `t ≤ start` with `‖Γũ₀ − ũ₀‖_{C^α([0,t]; H²)} ≤ r/2`.
pub fn delta_star(problem: &CoupledProblem, start: f64) -> Result<f64> {
    let half_r = 0.5 * problem.wave.radius;
    let mut t = start;
    for _ in 0..80 {
        let map = GammaMap::new(&problem.with_horizon(t))?;
        let base = map.constant_path();
        let ok = match map.apply(&base, None) {
            Ok((g, _)) => {
                let diff = g.map(|x| x.clone());
                let diff = TrajectoryPath::new(
                    t,
                    diff.entries().iter().zip(base.entries()).map(|(a, b)| a.sub(b)).collect(),
                )?;
                map.holder_norm_h2(&diff, problem.alpha) <= half_r
            }
            Err(MemsError::HorizonTooLarge { .. }) | Err(MemsError::NotConverged { .. }) => false,
            Err(e) => return Err(e),
        };
        if ok {
            return Ok(t);
        }
        t *= 0.5;
    }
    Ok(t)
}

/// Hölder fit of the accepted pressure path in `H²`.
pub fn pressure_holder_fit(sol: &CoupledSolution, full: &EigenBasis) -> Result<HolderFit> {
    holder_fit_with(&sol.u_tilde, |a, b| full.norm(&a.sub(b), SobolevOrder::H2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::build_grid;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn grid(n: usize) -> Grid1D {
        build_grid(1.0, n).unwrap()
    }

    #[test]
    fn constant_coefficients_give_scaled_laplacian() {
        let g = grid(31);
        let p = assemble_linearization(
            &Field::constant(31, 2.0),
            &Field::zeros(31),
            &Field::constant(31, 1.5),
            2.0,
            1.5,
            &g,
        )
        .unwrap();
        let h2 = g.spacing().powi(2);
        let s = 1.5 * 1.5 * 2.0 / h2;
        for i in 0..31 {
            assert!((p.matrix[(i, i)] + 2.0 * s).abs() < 1e-9 * s);
            if i + 1 < 31 {
                assert!((p.matrix[(i, i + 1)] - s).abs() < 1e-9 * s);
                assert!((p.matrix[(i + 1, i)] - s).abs() < 1e-9 * s);
            }
        }
    }

    #[test]
    fn heat_mode_decay() {
        let g = grid(127);
        let p = assemble_linearization(
            &Field::constant(127, 1.0),
            &Field::zeros(127),
            &Field::constant(127, 1.0),
            1.0,
            1.0,
            &g,
        )
        .unwrap();
        let f = g.sample(|x| (PI * x).sin());
        let out = analytic_step(&p, 0.1, &f).unwrap();
        let factor = (-PI * PI * 0.1f64).exp();
        assert!((factor - 0.37268).abs() < 1e-4);
        assert!(out.sub(&f.scale(factor)).max_abs() < 1e-4);
        assert_eq!(analytic_step(&p, 0.0, &f).unwrap(), f);
        let a = analytic_step(&p, 0.03, &analytic_step(&p, 0.05, &f).unwrap()).unwrap();
        let b = analytic_step(&p, 0.08, &f).unwrap();
        assert!(a.sub(&b).max_abs() <= 1e-9 * b.max_abs());
    }

    #[test]
    fn rejects_nonpositive_data() {
        let g = grid(15);
        let mut w = Field::constant(15, 1.0);
        w.values[3] = 0.0;
        let r = assemble_linearization(&Field::constant(15, 1.0), &Field::zeros(15), &w, 1.0, 1.0, &g);
        assert!(matches!(r, Err(MemsError::Config(_))));
    }

    #[test]
    fn reynolds_rhs_examples() {
        let g = grid(127);
        let c = PhysicalConstants::new(1.0, 1.0, 1.0, 1.0).unwrap();
        let z = Field::zeros(127);
        let one = Field::constant(127, 1.0);
        assert_eq!(reynolds_rhs(&z, &z, &one, &c, &g).unwrap().max_abs(), 0.0);
        let u = g.sample(|x| (PI * x).sin());
        let f = reynolds_rhs(&u, &z, &one, &c, &g).unwrap();
        // node 63 is x = 0.5
        assert!((f.values[63] + 2.0 * PI * PI).abs() < 1e-2 * 2.0 * PI * PI);
        let mut w = one.clone();
        w.values[5] = 0.0;
        assert!(matches!(reynolds_rhs(&u, &z, &w, &c, &g), Err(MemsError::QuenchImminent { node: 5, .. })));
    }

    fn generic_data(g: &Grid1D) -> (Field, Field, Field) {
        (
            g.sample(|x| 1.3 + 0.2 * (PI * x).sin() + 0.05 * (3.0 * PI * x).sin()),
            g.sample(|x| 0.1 * (2.0 * PI * x).sin()),
            g.sample(|x| 1.0 - 0.1 * (PI * x).sin() + 0.02 * (2.0 * PI * x).sin()),
        )
    }

    #[test]
    fn linearization_is_the_jacobian_of_f() {
        let g = grid(63);
        let c = PhysicalConstants::new(1.0, 1.0, 1.3, 1.0).unwrap();
        let (u0, v0, w0) = generic_data(&g);
        let p = assemble_linearization(&u0, &v0, &w0, 1.3, 1.0, &g).unwrap();
        let ut = u0.offset(-1.3);
        let q = g.sample(|x| (2.0 * PI * x).sin() + 0.3 * x * (1.0 - x));
        let f0 = reynolds_rhs(&ut, &v0, &w0, &c, &g).unwrap();
        let pq = p.apply(&q);
        let mut errs = Vec::new();
        for h in [1e-3, 5e-4] {
            let f1 = reynolds_rhs(&ut.add(&q.scale(h)), &v0, &w0, &c, &g).unwrap();
            let fd = f1.sub(&f0).scale(1.0 / h);
            errs.push(g.trapezoid_l2(&fd.sub(&pq).values));
        }
        assert!(errs[1] < 0.6 * errs[0], "{errs:?}");
        let d = reynolds_rhs_derivative(&ut, &v0, &w0, &q, &Field::zeros(63), &Field::zeros(63), &c, &g);
        assert!(d.sub(&pq).max_abs() <= 1e-9 * pq.max_abs());
    }

    #[test]
    fn full_derivative_matches_difference_quotient() {
        let g = grid(31);
        let c = PhysicalConstants::new(1.0, 1.0, 1.3, 1.0).unwrap();
        let (u0, v0, w0) = generic_data(&g);
        let ut = u0.offset(-1.3);
        let q = g.sample(|x| (PI * x).sin());
        let dv = g.sample(|x| x * (1.0 - x));
        let dw = g.sample(|x| (3.0 * PI * x).sin());
        let d = reynolds_rhs_derivative(&ut, &v0, &w0, &q, &dv, &dw, &c, &g);
        let h = 1e-6;
        let fp = reynolds_rhs(&ut.add(&q.scale(h)), &v0.add(&dv.scale(h)), &w0.add(&dw.scale(h)), &c, &g).unwrap();
        let fm = reynolds_rhs(&ut.sub(&q.scale(h)), &v0.sub(&dv.scale(h)), &w0.sub(&dw.scale(h)), &c, &g).unwrap();
        let fd = fp.sub(&fm).scale(0.5 / h);
        assert!(fd.sub(&d).max_abs() <= 1e-5 * d.max_abs());
    }

    fn probes(g: &Grid1D, n: usize, seed: u64) -> Vec<Field> {
        let b = EigenBasis::full(g);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| random_band_limited(&b, g.n_nodes() / 4, &mut rng)).collect()
    }

    #[test]
    fn garding_constant_case_is_exact() {
        let g = grid(31);
        let u0 = Field::constant(31, 2.0);
        let w0 = Field::constant(31, 1.0);
        let p = assemble_linearization(&u0, &Field::zeros(31), &w0, 2.0, 1.0, &g).unwrap();
        let pr = probes(&g, 100, 1);
        let r = garding_constants(&p, &u0, &w0, 2.0, 1.0, &pr).unwrap();
        assert_eq!((r.k, r.k_o), (2.0, 0.0));
        for q in &pr {
            let (form, grad, _) = garding_form(q, &u0, &w0, 2.0, 1.0, &g);
            assert!((form.abs() - 2.0 * grad).abs() <= 1e-12 * grad);
        }
        assert!(r.valid);
        let doubled = garding_form(&pr[0], &u0.scale(2.0), &w0, 4.0, 1.0, &g).0;
        let single = garding_form(&pr[0], &u0, &w0, 2.0, 1.0, &g).0;
        assert!((doubled - 2.0 * single).abs() <= 1e-12 * doubled.abs());
    }

    #[test]
    fn garding_generic_data() {
        let g = grid(63);
        let (u0, v0, w0) = generic_data(&g);
        let p = assemble_linearization(&u0, &v0, &w0, 1.3, 1.0, &g).unwrap();
        let r = garding_constants(&p, &u0, &w0, 1.3, 1.0, &probes(&g, 100, 2)).unwrap();
        assert!(r.valid && r.k > 0.0, "{r:?}");
        assert!(r.k2 <= r.k2_formula);
    }

    #[test]
    fn sector_and_graph_norm() {
        let g = grid(31);
        let (u0, v0, w0) = generic_data(&g);
        let p = assemble_linearization(&u0, &v0, &w0, 1.3, 1.0, &g).unwrap();
        let s = sector_check(&p);
        assert!(s.omega < 0.0 && s.m_fit.is_finite() && s.m_fit >= 1.0 - 1e-9);
        let gn = graph_norm_constant(&p, &probes(&g, 50, 3));
        assert!(gn.gamma0 >= 1.0 && gn.gamma0.is_finite());
        assert!(operator_norm_h2_l2(&p) > 0.0);
    }

    #[test]
    fn exp_integrator_is_exact_for_linear_forcing() {
        let g = grid(15);
        let (u0, v0, w0) = generic_data(&g);
        let p = assemble_linearization(&u0, &v0, &w0, 1.3, 1.0, &g).unwrap();
        let b = g.sample(|x| x * (1.0 - x));
        let integ = ExpIntegrator::new(&p, 0.01).unwrap();
        let f: Vec<Vec<f64>> = (0..=4).map(|j| b.scale(j as f64 * 0.01).values).collect();
        let x0 = g.sample(|x| (PI * x).sin());
        let out = integ.integrate(&x0.values, &f);
        let fine = ExpIntegrator::new(&p, 0.0025).unwrap();
        let ff: Vec<Vec<f64>> = (0..=16).map(|j| b.scale(j as f64 * 0.0025).values).collect();
        let out2 = fine.integrate(&x0.values, &ff);
        for (a, c) in out[4].iter().zip(&out2[16]) {
            assert!((a - c).abs() < 1e-12);
        }
    }

    fn problem(n: usize, eq: bool) -> CoupledProblem {
        let g = grid(n);
        let basis = EigenBasis::new(&g, n / 2).unwrap();
        let (theta1, theta2, beta_p) = (1.5, 1.0, 1.0);
        let beta_f = PhysicalConstants::equilibrium_beta_f(beta_p, theta1, theta2);
        let c = PhysicalConstants::new(beta_f, beta_p, theta1, theta2).unwrap();
        let (u0, w0) = if eq {
            (Field::constant(n, theta1), Field::constant(n, theta2))
        } else {
            (
                g.sample(|x| theta1 + 0.01 * (PI * x).sin()),
                g.sample(|x| theta2 - 0.01 * (PI * x).sin()),
            )
        };
        let init = HyperbolicInit::new(Field::zeros(n), w0.clone(), theta2).unwrap();
        CoupledProblem {
            constants: c,
            wave: PicardSettings::for_init(&init, basis.embedding_constant(), 0.9),
            basis,
            u0,
            v0: Field::zeros(n),
            w0,
            horizon: 0.02,
            n_steps: 16,
            alpha: 0.2,
            tol: 1e-8,
            max_iter: 30,
        }
    }

    #[test]
    fn equilibrium_is_stationary() {
        let sol = gamma_fixed_point(&problem(31, true)).unwrap();
        for (u, w) in sol.u_path.entries().iter().zip(sol.w_path.entries()) {
            assert!(u.offset(-1.5).max_abs() < 1e-12);
            assert!(w.offset(-1.0).max_abs() < 1e-12);
        }
    }

    #[test]
    fn small_data_converges_with_contraction() {
        let sol = gamma_fixed_point(&problem(31, false)).unwrap();
        let d = &sol.diagnostics;
        assert!(d.final_ratio <= 0.55, "{d:?}");
        assert!(d.min_gap >= 0.5 * d.kappa - 1e-12);
        assert!(d.min_u > 0.0);
    }

    #[test]
    fn t0_star_monotone_in_l_b() {
        let mut k = HorizonConstants {
            l_e: 1.0,
            l_b: 1.0,
            gamma0: 1.5,
            i_t0: 1.0,
            p_norm: 1.0,
            u0_h2: 1.0,
            c_emb: 0.48,
            kappa: 1.0,
            alpha: 0.2,
        };
        let a = horizon_t0_star(&k);
        k.l_b = 2.0;
        assert!(horizon_t0_star(&k) < a);
        k.alpha = 1e-3;
        assert!(horizon_t0_star(&k) < 1e-300 || horizon_t0_star(&k) == 0.0);
    }

    #[test]
    fn horizons_are_positive() {
        let p = problem(31, false);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let h = coupled_horizons(&p, 8, &mut rng).unwrap();
        assert!(h.t1 > 0.0 && h.t1 <= h.t0.t0 && h.t1 <= h.t0_star);
        eprintln!("{h:?}");
    }
}
