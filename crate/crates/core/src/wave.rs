//! Exact modal action of the wave group on `L² × H¹₀` and Duhamel integration
//! of forced wave dynamics.
//!
//! A state `(v, w̃)` is rotated mode by mode with `ω_k = kπ/L`. The state space
//! carries the energy norm `‖v‖² + ‖w̃′‖²`, under which the group is unitary.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{MemsError, Result};
use crate::grid::{EigenBasis, Field, TrajectoryPath};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaveState {
    pub v: Field,
    pub w_tilde: Field,
}

impl WaveState {
    pub fn new(v: Field, w_tilde: Field) -> Result<Self> {
        if v.len() != w_tilde.len() {
            return Err(MemsError::config(format!(
                "velocity has {} nodes but gap has {}",
                v.len(),
                w_tilde.len()
            )));
        }
        Ok(Self { v, w_tilde })
    }

    pub fn zeros(n: usize) -> Self {
        Self {
            v: Field::zeros(n),
            w_tilde: Field::zeros(n),
        }
    }

    pub fn to_modal(&self, basis: &EigenBasis) -> ModalWave {
        ModalWave {
            v: self.v.modes(basis),
            w: self.w_tilde.modes(basis),
        }
    }

    pub fn sub(&self, other: &WaveState) -> WaveState {
        WaveState {
            v: self.v.sub(&other.v),
            w_tilde: self.w_tilde.sub(&other.w_tilde),
        }
    }

    /// Energy norm `(‖v‖²_{L²} + ‖w̃′‖²_{L²})^{1/2}`.
    pub fn energy_norm(&self, basis: &EigenBasis) -> f64 {
        self.to_modal(basis).energy_norm(basis)
    }
}

/// Sine coefficients of a wave state.
#[derive(Debug, Clone, PartialEq)]
pub struct ModalWave {
    pub v: Vec<f64>,
    pub w: Vec<f64>,
}

impl ModalWave {
    pub fn zeros(n_modes: usize) -> Self {
        Self {
            v: vec![0.0; n_modes],
            w: vec![0.0; n_modes],
        }
    }

    pub fn energy_norm_sq(&self, basis: &EigenBasis) -> f64 {
        let half_l = 0.5 * basis.grid().length();
        half_l
            * self
                .v
                .iter()
                .zip(&self.w)
                .zip(basis.eigenvalues())
                .map(|((v, w), l)| v * v + l * w * w)
                .sum::<f64>()
    }

    pub fn energy_norm(&self, basis: &EigenBasis) -> f64 {
        self.energy_norm_sq(basis).sqrt()
    }

    pub fn energy_distance(&self, other: &ModalWave, basis: &EigenBasis) -> f64 {
        let half_l = 0.5 * basis.grid().length();
        let mut s = 0.0;
        for k in 0..self.v.len() {
            let dv = self.v[k] - other.v[k];
            let dw = self.w[k] - other.w[k];
            s += dv * dv + basis.eigenvalue(k) * dw * dw;
        }
        (half_l * s).sqrt()
    }

    pub fn to_state(&self, basis: &EigenBasis) -> WaveState {
        WaveState {
            v: Field::from_values(basis.from_modes(&self.v)),
            w_tilde: Field::from_values(basis.from_modes(&self.w)),
        }
    }

    /// Group action `T(t)` on the coefficients.
    pub fn rotate(&self, t: f64, basis: &EigenBasis) -> ModalWave {
        let mut out = ModalWave::zeros(self.v.len());
        for k in 0..self.v.len() {
            let om = basis.eigenvalue(k).sqrt();
            let (s, c) = (om * t).sin_cos();
            out.w[k] = self.w[k] * c + self.v[k] * s / om;
            out.v[k] = -self.w[k] * om * s + self.v[k] * c;
        }
        out
    }
}

fn check_basis(n: usize, basis: &EigenBasis) -> Result<()> {
    if n != basis.grid().n_nodes() {
        return Err(MemsError::config(format!(
            "field has {n} nodes but the basis grid has {}",
            basis.grid().n_nodes()
        )));
    }
    Ok(())
}

pub fn apply_semigroup(t: f64, s: &WaveState, basis: &EigenBasis) -> Result<WaveState> {
    check_basis(s.v.len(), basis)?;
    check_basis(s.w_tilde.len(), basis)?;
    if t == 0.0 {
        return Ok(s.clone());
    }
    Ok(s.to_modal(basis).rotate(t, basis).to_state(basis))
}

/// Quadrature weights for `∫₀^{t_j} h(s) ds` on the uniform grid.
///
/// Composite Simpson when `j` is even, Simpson plus a closing 3/8 panel when
/// `j ≥ 3` is odd, and for `j = 1` the third-order rule that also uses `h(t_2)`.
/// Returned as `(i, weight / dt)` pairs.
fn quadrature_weights(j: usize) -> Vec<(usize, f64)> {
    match j {
        0 => Vec::new(),
        1 => vec![(0, 5.0 / 12.0), (1, 8.0 / 12.0), (2, -1.0 / 12.0)],
        _ => {
            let mut w = vec![0.0; j + 1];
            let simpson_end = if j.is_multiple_of(2) { j } else { j - 3 };
            for p in (0..simpson_end).step_by(2) {
                w[p] += 1.0 / 3.0;
                w[p + 1] += 4.0 / 3.0;
                w[p + 2] += 1.0 / 3.0;
            }
            if j % 2 == 1 {
                let b = j - 3;
                w[b] += 3.0 / 8.0;
                w[b + 1] += 9.0 / 8.0;
                w[b + 2] += 9.0 / 8.0;
                w[b + 3] += 3.0 / 8.0;
            }
            w.into_iter().enumerate().collect()
        }
    }
}

/// Precomputed modal Duhamel convolution for a fixed basis and time grid.
///
/// Evaluates, for every time level `t_j` and mode `k`,
/// `∫₀^{t_j} (sin(ω(t_j−s))/ω, cos(ω(t_j−s))) g_k(s) ds`.
#[derive(Debug, Clone)]
pub struct DuhamelOperator {
    basis: EigenBasis,
    horizon: f64,
    n_steps: usize,
    weights: Vec<Vec<(usize, f64)>>,
    // per mode, kernels at lags m = -1..=n_steps, stored at index m + 1
    sin_table: Vec<Vec<f64>>,
    cos_table: Vec<Vec<f64>>,
}

impl DuhamelOperator {
    pub fn new(basis: &EigenBasis, horizon: f64, n_steps: usize) -> Result<Self> {
        if n_steps < 2 {
            return Err(MemsError::config("Duhamel integration needs at least 2 steps"));
        }
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(MemsError::config("Duhamel horizon must be positive"));
        }
        let dt = horizon / n_steps as f64;
        let (sin_table, cos_table) = (0..basis.n_modes())
            .map(|k| {
                let om = basis.eigenvalue(k).sqrt();
                (-1..=n_steps as i64)
                    .map(|m| {
                        let (s, c) = (om * m as f64 * dt).sin_cos();
                        (s / om, c)
                    })
                    .unzip()
            })
            .unzip();
        Ok(Self {
            basis: basis.clone(),
            horizon,
            n_steps,
            weights: (0..=n_steps).map(quadrature_weights).collect(),
            sin_table,
            cos_table,
        })
    }

    pub fn basis(&self) -> &EigenBasis {
        &self.basis
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    pub fn dt(&self) -> f64 {
        self.horizon / self.n_steps as f64
    }

    /// Convolution of mode-major forcing `g[k][i]` with the wave kernels.
    /// Returns time-major `(w, v)` contributions, each `[j][k]`.
    pub fn convolve(&self, g: &[Vec<f64>]) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
        let n = self.n_steps;
        let dt = self.dt();
        let cols: Vec<(Vec<f64>, Vec<f64>)> = g
            .par_iter()
            .enumerate()
            .map(|(k, gk)| {
                let st = &self.sin_table[k];
                let ct = &self.cos_table[k];
                let mut w = vec![0.0; n + 1];
                let mut v = vec![0.0; n + 1];
                for j in 1..=n {
                    let (mut sw, mut sv) = (0.0, 0.0);
                    for &(i, q) in &self.weights[j] {
                        // lag j - i ≥ -1; table offset by one
                        let m = (j + 1) - i;
                        let x = q * gk[i];
                        sw += x * st[m];
                        sv += x * ct[m];
                    }
                    w[j] = dt * sw;
                    v[j] = dt * sv;
                }
                (w, v)
            })
            .collect();
        let nm = g.len();
        let mut w = vec![vec![0.0; nm]; n + 1];
        let mut v = vec![vec![0.0; nm]; n + 1];
        for (k, (wc, vc)) in cols.into_iter().enumerate() {
            for j in 0..=n {
                w[j][k] = wc[j];
                v[j][k] = vc[j];
            }
        }
        (w, v)
    }

    /// Mild solution `T(t_j)Φ₀ + ∫₀^{t_j} T(t_j−s)(g(s), 0) ds` in modal form.
    /// `g` is time-major sine coefficients `[j][k]`.
    pub fn solve_modal(&self, init: &ModalWave, g: &[Vec<f64>]) -> Vec<ModalWave> {
        let nm = self.basis.n_modes();
        let mode_major: Vec<Vec<f64>> = (0..nm)
            .map(|k| g.iter().map(|row| row[k]).collect())
            .collect();
        let (cw, cv) = self.convolve(&mode_major);
        (0..=self.n_steps)
            .map(|j| {
                let mut s = ModalWave::zeros(nm);
                for k in 0..nm {
                    let c = self.cos_table[k][j + 1];
                    let sn = self.sin_table[k][j + 1];
                    let om2 = self.basis.eigenvalue(k);
                    s.w[k] = init.w[k] * c + init.v[k] * sn + cw[j][k];
                    s.v[k] = -init.w[k] * om2 * sn + init.v[k] * c + cv[j][k];
                }
                s
            })
            .collect()
    }
}

pub fn duhamel(
    init: &WaveState,
    forcing: &TrajectoryPath<Field>,
    basis: &EigenBasis,
) -> Result<TrajectoryPath<WaveState>> {
    check_basis(init.v.len(), basis)?;
    for f in forcing.entries() {
        check_basis(f.len(), basis)?;
    }
    let op = DuhamelOperator::new(basis, forcing.horizon(), forcing.n_steps())?;
    let g: Vec<Vec<f64>> = forcing.entries().iter().map(|f| f.modes(basis)).collect();
    let modal = op.solve_modal(&init.to_modal(basis), &g);
    TrajectoryPath::new(
        forcing.horizon(),
        modal.iter().map(|m| m.to_state(basis)).collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::build_grid;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn unit(n: usize, m: usize) -> EigenBasis {
        EigenBasis::new(&build_grid(1.0, n).unwrap(), m).unwrap()
    }

    fn close(a: &Field, b: &Field, tol: f64) -> bool {
        a.sub(b).max_abs() <= tol
    }

    #[test]
    fn identity_at_zero() {
        let b = unit(15, 15);
        let g = b.grid().clone();
        let s = WaveState::new(g.sample(|x| x * (1.0 - x)), g.sample(|x| (3.0 * x).sin())).unwrap();
        assert_eq!(apply_semigroup(0.0, &s, &b).unwrap(), s);
    }

    #[test]
    fn half_and_full_periods() {
        let b = unit(31, 31);
        let g = b.grid().clone();
        let phi = g.sample(|x| (PI * x).sin());
        let s = WaveState::new(Field::zeros(31), phi.clone()).unwrap();
        let r = apply_semigroup(1.0, &s, &b).unwrap();
        assert!(close(&r.w_tilde, &phi.scale(-1.0), 1e-13));
        assert!(r.v.max_abs() < 1e-13);
        let r2 = apply_semigroup(2.0, &s, &b).unwrap();
        assert!(close(&r2.w_tilde, &phi, 1e-13));
    }

    #[test]
    fn quarter_period_rotation() {
        let b = unit(31, 31);
        let g = b.grid().clone();
        let phi2 = g.sample(|x| (2.0 * PI * x).sin());
        let s = WaveState::new(phi2.clone(), Field::zeros(31)).unwrap();
        let r = apply_semigroup(0.25, &s, &b).unwrap();
        assert!(r.v.max_abs() < 1e-13);
        assert!(close(&r.w_tilde, &phi2.scale(1.0 / (2.0 * PI)), 1e-13));
    }

    #[test]
    fn grid_mismatch_is_a_config_error() {
        let b = unit(15, 15);
        let s = WaveState::zeros(7);
        assert!(matches!(apply_semigroup(1.0, &s, &b), Err(MemsError::Config(_))));
    }

    #[test]
    fn quadrature_weights_integrate_cubics_exactly() {
        for j in 1..12 {
            let w = quadrature_weights(j);
            let degree = if j == 1 { 3 } else { 4 };
            for p in 0..degree {
                let approx: f64 = w.iter().map(|&(i, q)| q * (i as f64).powi(p)).sum();
                let exact = (j as f64).powi(p + 1) / (p + 1) as f64;
                assert!((approx - exact).abs() < 1e-12 * exact.max(1.0), "j={j} p={p}");
            }
        }
    }

    #[test]
    fn unforced_duhamel_is_the_group_orbit() {
        let b = unit(31, 31);
        let g = b.grid().clone();
        let s = WaveState::new(g.sample(|x| x * (1.0 - x)), g.sample(|x| (PI * x).sin() * 0.3)).unwrap();
        let forcing = TrajectoryPath::from_fn(1.3, 40, |_| Field::zeros(31)).unwrap();
        let path = duhamel(&s, &forcing, &b).unwrap();
        for j in [0, 7, 40] {
            let direct = apply_semigroup(path.time(j), &s, &b).unwrap();
            assert!(close(&path.entry(j).w_tilde, &direct.w_tilde, 1e-12));
            assert!(close(&path.entry(j).v, &direct.v, 1e-12));
        }
    }

    fn resonant_check(k: usize, forcing_freq: f64) -> f64 {
        // w'' + ω² w = sin(ν t), w(0) = w'(0) = 0
        let b = unit(31, 31);
        let g = b.grid().clone();
        let om = k as f64 * PI;
        let phi = g.sample(|x| (om * x).sin());
        let t_end = 1.0;
        let forcing = TrajectoryPath::from_fn(t_end, 512, |t| phi.scale((forcing_freq * t).sin())).unwrap();
        let path = duhamel(&WaveState::zeros(31), &forcing, &b).unwrap();
        let exact = |t: f64| -> (f64, f64) {
            let nu = forcing_freq;
            if (nu - om).abs() < 1e-12 {
                let w = ((om * t).sin() - om * t * (om * t).cos()) / (2.0 * om * om);
                let v = 0.5 * t * (om * t).sin();
                (w, v)
            } else {
                let d = om * om - nu * nu;
                let w = ((nu * t).sin() - nu / om * (om * t).sin()) / d;
                let v = nu * ((nu * t).cos() - (om * t).cos()) / d;
                (w, v)
            }
        };
        let mut err: f64 = 0.0;
        for j in 0..=512 {
            let (we, ve) = exact(path.time(j));
            err = err.max(path.entry(j).w_tilde.sub(&phi.scale(we)).max_abs());
            err = err.max(path.entry(j).v.sub(&phi.scale(ve)).max_abs());
        }
        err
    }

    #[test]
    fn single_mode_forcing_matches_closed_form() {
        assert!(resonant_check(1, PI) < 1e-8);
        assert!(resonant_check(2, 2.0 * PI) < 1e-8);
        assert!(resonant_check(3, 1.7) < 1e-8);
    }

    proptest! {
        #[test]
        fn isometry_group_law_and_inverse(
            v in proptest::collection::vec(-1.0f64..1.0, 8),
            w in proptest::collection::vec(-1.0f64..1.0, 8),
            t1 in -10.0f64..10.0,
            t2 in -10.0f64..10.0,
        ) {
            let b = unit(31, 31);
            let mut cv = vec![0.0; 31];
            let mut cw = vec![0.0; 31];
            cv[..8].copy_from_slice(&v);
            cw[..8].copy_from_slice(&w);
            let s = WaveState::new(Field::from_modes(&b, cv), Field::from_modes(&b, cw)).unwrap();
            let n0 = s.energy_norm(&b);
            let a = apply_semigroup(t1, &s, &b).unwrap();
            prop_assert!((a.energy_norm(&b) - n0).abs() <= 1e-10 * n0.max(1e-300));
            let ab = apply_semigroup(t2, &a, &b).unwrap();
            let direct = apply_semigroup(t1 + t2, &s, &b).unwrap();
            prop_assert!(ab.sub(&direct).energy_norm(&b) <= 1e-10 * n0.max(1e-300));
            let back = apply_semigroup(-t1, &a, &b).unwrap();
            prop_assert!(back.sub(&s).energy_norm(&b) <= 1e-10 * n0.max(1e-300));
        }
    }
}
