//! Uniform interior meshes on `(0, L)`, the Dirichlet sine eigenbasis, discrete
//! Sobolev norms and the dyadic Hölder-exponent estimator.
//!
//! Every evolved quantity is stored at the `n` interior nodes
//! `x_i = (i + 1) h`, `h = L / (n + 1)`. Boundary values are constants owned by
//! the caller (the gap trace, the pressure trace, or zero).
//!
//! The sine transform is the DST-I pair
//!
//! ```text
//! c_k = (2 / (n + 1)) Σ_i f_i sin(k π x_i / L)
//! f_i = Σ_k c_k sin(k π x_i / L)
//! ```
//!
//! which is exact for every field that is a combination of the first `n` modes.

use std::f64::consts::PI;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{MemsError, Result};

/// Smallest mesh accepted by [`build_grid`].
pub const MIN_NODES: usize = 3;

/// Increments at or below this absolute size count as zero in [`holder_fit`].
pub const HOLDER_NOISE_FLOOR: f64 = 1e-13;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid1D {
    length: f64,
    n_nodes: usize,
    spacing: f64,
}

impl Grid1D {
    pub fn new(length: f64, n_nodes: usize) -> Result<Self> {
        if !(length.is_finite() && length > 0.0) {
            return Err(MemsError::config(format!(
                "domain length must be positive, got {length}"
            )));
        }
        if n_nodes < MIN_NODES {
            return Err(MemsError::config(format!(
                "need at least {MIN_NODES} interior nodes, got {n_nodes}"
            )));
        }
        Ok(Self {
            length,
            n_nodes,
            spacing: length / (n_nodes + 1) as f64,
        })
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    /// Coordinate of interior node `i` (0-based).
    pub fn node(&self, i: usize) -> f64 {
        (i + 1) as f64 * self.spacing
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n_nodes).map(|i| self.node(i)).collect()
    }

    pub fn sample(&self, f: impl Fn(f64) -> f64) -> Field {
        Field::from_values(self.nodes().into_iter().map(f).collect())
    }

    /// Trapezoid integral of `trace + f` over `[0, L]`.
    pub fn integrate(&self, values: &[f64], trace: f64) -> f64 {
        self.spacing * (values.iter().map(|v| v + trace).sum::<f64>() + trace)
    }

    /// Nodal trapezoid L² norm of a field with zero boundary trace.
    pub fn trapezoid_l2(&self, values: &[f64]) -> f64 {
        (self.spacing * values.iter().map(|v| v * v).sum::<f64>()).sqrt()
    }
}

pub fn build_grid(length: f64, n_nodes: usize) -> Result<Grid1D> {
    Grid1D::new(length, n_nodes)
}

/// A scalar function on the interior nodes, optionally carrying its sine
/// coefficients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Field {
    pub values: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub modal: Option<Vec<f64>>,
}

impl Field {
    pub fn from_values(values: Vec<f64>) -> Self {
        Self {
            values,
            modal: None,
        }
    }

    pub fn zeros(n: usize) -> Self {
        Self::from_values(vec![0.0; n])
    }

    pub fn constant(n: usize, value: f64) -> Self {
        Self::from_values(vec![value; n])
    }

    /// Field synthesized from sine coefficients; both representations are set.
    pub fn from_modes(basis: &EigenBasis, coeffs: Vec<f64>) -> Self {
        let values = basis.from_modes(&coeffs);
        Self {
            values,
            modal: Some(coeffs),
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Populates the modal representation from the nodal values.
    pub fn with_modes(mut self, basis: &EigenBasis) -> Self {
        self.modal = Some(basis.to_modes(&self.values));
        self
    }

    /// Sine coefficients, reusing the cached ones when their count matches.
    pub fn modes(&self, basis: &EigenBasis) -> Vec<f64> {
        match &self.modal {
            Some(m) if m.len() == basis.n_modes() => m.clone(),
            _ => basis.to_modes(&self.values),
        }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Field {
        Field::from_values(self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn zip_map(&self, other: &Field, f: impl Fn(f64, f64) -> f64) -> Field {
        debug_assert_eq!(self.len(), other.len());
        Field::from_values(
            self.values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        )
    }

    pub fn sub(&self, other: &Field) -> Field {
        self.zip_map(other, |a, b| a - b)
    }

    pub fn add(&self, other: &Field) -> Field {
        self.zip_map(other, |a, b| a + b)
    }

    pub fn scale(&self, s: f64) -> Field {
        self.map(|v| s * v)
    }

    pub fn offset(&self, c: f64) -> Field {
        self.map(|v| v + c)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// `(index, value)` of the smallest nodal value.
    pub fn argmin(&self) -> (usize, f64) {
        self.values
            .iter()
            .copied()
            .enumerate()
            .fold((0, f64::INFINITY), |acc, (i, v)| if v < acc.1 { (i, v) } else { acc })
    }

    /// CSV rows `x,value` with a header line.
    pub fn to_csv(&self, grid: &Grid1D) -> String {
        let mut out = String::from("x,value\n");
        for (i, v) in self.values.iter().enumerate() {
            let _ = writeln!(out, "{},{}", grid.node(i), v);
        }
        out
    }

    /// JSON array of the sine coefficients in `basis`.
    pub fn to_json_modes(&self, basis: &EigenBasis) -> Result<String> {
        Ok(serde_json::to_string(&self.modes(basis))?)
    }

    pub fn from_json_modes(basis: &EigenBasis, json: &str) -> Result<Self> {
        let coeffs: Vec<f64> = serde_json::from_str(json)?;
        if coeffs.len() != basis.n_modes() {
            return Err(MemsError::config(format!(
                "expected {} coefficients, got {}",
                basis.n_modes(),
                coeffs.len()
            )));
        }
        Ok(Field::from_modes(basis, coeffs))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SobolevOrder {
    L2,
    H1,
    H2,
}

impl SobolevOrder {
    /// Modal weight `1`, `1 + λ` or `1 + λ + λ²`.
    pub fn weight(self, lambda: f64) -> f64 {
        match self {
            SobolevOrder::L2 => 1.0,
            SobolevOrder::H1 => 1.0 + lambda,
            SobolevOrder::H2 => 1.0 + lambda + lambda * lambda,
        }
    }
}

/// Dirichlet Laplacian eigensystem sampled on a grid.
#[derive(Debug, Clone)]
pub struct EigenBasis {
    grid: Grid1D,
    n_modes: usize,
    eigenvalues: Vec<f64>,
    // row-major n_modes × n_nodes table of sin(kπx_i/L)
    shapes: Vec<f64>,
}

impl EigenBasis {
    pub fn new(grid: &Grid1D, n_modes: usize) -> Result<Self> {
        if n_modes == 0 {
            return Err(MemsError::config("n_modes must be positive"));
        }
        if n_modes > grid.n_nodes() {
            return Err(MemsError::config(format!(
                "n_modes = {n_modes} exceeds n_nodes = {} (aliasing)",
                grid.n_nodes()
            )));
        }
        let n = grid.n_nodes();
        let big_n = (n + 1) as f64;
        let mut shapes = Vec::with_capacity(n_modes * n);
        for k in 1..=n_modes {
            for i in 1..=n {
                // exact reduction of k*i modulo 2(n+1) keeps the table accurate
                let m = (k * i) % (2 * (n + 1));
                shapes.push((PI * m as f64 / big_n).sin());
            }
        }
        let eigenvalues = (1..=n_modes)
            .map(|k| (k as f64 * PI / grid.length()).powi(2))
            .collect();
        Ok(Self {
            grid: grid.clone(),
            n_modes,
            eigenvalues,
            shapes,
        })
    }

    /// Basis with one mode per interior node; the transform is then invertible.
    pub fn full(grid: &Grid1D) -> Self {
        Self::new(grid, grid.n_nodes()).expect("full basis is always valid")
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// λ of the 0-based mode index `k` (mode number `k + 1`).
    pub fn eigenvalue(&self, k: usize) -> f64 {
        self.eigenvalues[k]
    }

    pub fn frequencies(&self) -> Vec<f64> {
        self.eigenvalues.iter().map(|l| l.sqrt()).collect()
    }

    pub fn mode_shape(&self, k: usize) -> &[f64] {
        let n = self.grid.n_nodes();
        &self.shapes[k * n..(k + 1) * n]
    }

    pub fn to_modes(&self, values: &[f64]) -> Vec<f64> {
        let n = self.grid.n_nodes();
        assert_eq!(values.len(), n, "field length does not match grid");
        let scale = 2.0 / (n + 1) as f64;
        (0..self.n_modes)
            .map(|k| {
                let row = self.mode_shape(k);
                scale * row.iter().zip(values).map(|(s, v)| s * v).sum::<f64>()
            })
            .collect()
    }

    pub fn from_modes(&self, coeffs: &[f64]) -> Vec<f64> {
        let n = self.grid.n_nodes();
        assert_eq!(coeffs.len(), self.n_modes, "coefficient count mismatch");
        let mut out = vec![0.0; n];
        for (k, &c) in coeffs.iter().enumerate() {
            if c == 0.0 {
                continue;
            }
            for (o, s) in out.iter_mut().zip(self.mode_shape(k)) {
                *o += c * s;
            }
        }
        out
    }

    /// `‖f‖²` from sine coefficients: `(L/2) Σ w_k(order) c_k²`.
    pub fn modal_norm_sq(&self, coeffs: &[f64], order: SobolevOrder) -> f64 {
        0.5 * self.grid.length()
            * coeffs
                .iter()
                .zip(&self.eigenvalues)
                .map(|(c, &l)| order.weight(l) * c * c)
                .sum::<f64>()
    }

    pub fn norm(&self, f: &Field, order: SobolevOrder) -> f64 {
        self.modal_norm_sq(&f.modes(self), order).sqrt()
    }

    /// `∫ φ_k dx` for each mode.
    pub fn mode_integrals(&self) -> Vec<f64> {
        let l = self.grid.length();
        (1..=self.n_modes)
            .map(|k| {
                if k % 2 == 1 {
                    2.0 * l / (k as f64 * PI)
                } else {
                    0.0
                }
            })
            .collect()
    }

    /// Norm of `trace + f` where `f` has zero boundary trace and `trace` is a
    /// constant. Derivative energies are unaffected by the constant.
    pub fn norm_with_trace(&self, f: &Field, trace: f64, order: SobolevOrder) -> f64 {
        let coeffs = f.modes(self);
        let mean: f64 = coeffs
            .iter()
            .zip(self.mode_integrals())
            .map(|(c, i)| c * i)
            .sum();
        let sq = self.modal_norm_sq(&coeffs, order)
            + trace * trace * self.grid.length()
            + 2.0 * trace * mean;
        sq.max(0.0).sqrt()
    }

    /// Sharp constant in `‖f‖_∞ ≤ C ‖f‖_{H¹}` over the span of this basis,
    /// evaluated at the grid nodes through the Riesz representer.
    pub fn embedding_constant(&self) -> f64 {
        let half_l = 0.5 * self.grid.length();
        let n = self.grid.n_nodes();
        let mut best: f64 = 0.0;
        for i in 0..n {
            let mut s = 0.0;
            for k in 0..self.n_modes {
                let phi = self.shapes[k * n + i];
                s += phi * phi / (half_l * (1.0 + self.eigenvalues[k]));
            }
            best = best.max(s);
        }
        best.sqrt()
    }
}

pub fn sine_eigenbasis(grid: &Grid1D, n_modes: usize) -> Result<EigenBasis> {
    EigenBasis::new(grid, n_modes)
}

pub fn sobolev_norm(f: &Field, basis: &EigenBasis, order: SobolevOrder) -> f64 {
    basis.norm(f, order)
}

/// Seeded random field in the span of modes `1..=max_mode`, with coefficients
/// uniform in `[-1, 1]` damped by `k⁻²` so that H² norms stay moderate.
pub fn random_band_limited<R: rand::Rng + ?Sized>(
    basis: &EigenBasis,
    max_mode: usize,
    rng: &mut R,
) -> Field {
    let top = max_mode.clamp(1, basis.n_modes());
    let mut coeffs = vec![0.0; basis.n_modes()];
    for (k, c) in coeffs.iter_mut().enumerate().take(top) {
        *c = rng.gen_range(-1.0..=1.0) / ((k + 1) as f64).powi(2);
    }
    Field::from_modes(basis, coeffs)
}

/// Time-indexed sequence on the uniform grid `t_j = j T / n_steps`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryPath<T> {
    horizon: f64,
    entries: Vec<T>,
}

impl<T> TrajectoryPath<T> {
    pub fn new(horizon: f64, entries: Vec<T>) -> Result<Self> {
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(MemsError::config(format!(
                "horizon must be positive, got {horizon}"
            )));
        }
        if entries.len() < 2 {
            return Err(MemsError::config("a path needs at least one time step"));
        }
        Ok(Self { horizon, entries })
    }

    pub fn from_fn(horizon: f64, n_steps: usize, f: impl FnMut(f64) -> T) -> Result<Self> {
        let dt = horizon / n_steps.max(1) as f64;
        let entries = (0..=n_steps).map(|j| j as f64 * dt).map(f).collect();
        Self::new(horizon, entries)
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn n_steps(&self) -> usize {
        self.entries.len() - 1
    }

    pub fn dt(&self) -> f64 {
        self.horizon / self.n_steps() as f64
    }

    pub fn time(&self, j: usize) -> f64 {
        j as f64 * self.dt()
    }

    pub fn entries(&self) -> &[T] {
        &self.entries
    }

    pub fn entry(&self, j: usize) -> &T {
        &self.entries[j]
    }

    pub fn last(&self) -> &T {
        self.entries.last().expect("paths are never empty")
    }

    pub fn into_entries(self) -> Vec<T> {
        self.entries
    }

    pub fn map<U>(&self, f: impl FnMut(&T) -> U) -> TrajectoryPath<U> {
        TrajectoryPath {
            horizon: self.horizon,
            entries: self.entries.iter().map(f).collect(),
        }
    }

    /// Largest pointwise-in-time distance between two aligned paths.
    pub fn sup_distance(&self, other: &Self, dist: impl Fn(&T, &T) -> f64) -> f64 {
        self.entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| dist(a, b))
            .fold(0.0, f64::max)
    }
}

impl TrajectoryPath<Field> {
    /// CSV with header `t,x_1,…,x_n` and one row per time level.
    pub fn to_csv(&self, grid: &Grid1D) -> String {
        let mut out = String::from("t");
        for x in grid.nodes() {
            let _ = write!(out, ",{x}");
        }
        out.push('\n');
        for (j, f) in self.entries.iter().enumerate() {
            let _ = write!(out, "{}", self.time(j));
            for v in &f.values {
                let _ = write!(out, ",{v}");
            }
            out.push('\n');
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines
            .next()
            .ok_or_else(|| MemsError::config("empty trajectory CSV"))?;
        let width = header.split(',').count();
        let mut times = Vec::new();
        let mut entries = Vec::new();
        for line in lines {
            let row: Vec<f64> = line
                .split(',')
                .map(|s| s.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| MemsError::config(format!("bad CSV value: {e}")))?;
            if row.len() != width {
                return Err(MemsError::config("ragged trajectory CSV"));
            }
            times.push(row[0]);
            entries.push(Field::from_values(row[1..].to_vec()));
        }
        let horizon = *times
            .last()
            .ok_or_else(|| MemsError::config("trajectory CSV has no rows"))?;
        Self::new(horizon, entries)
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.sup_distance(other, |a, b| a.sub(b).max_abs())
    }

    pub fn max_abs(&self) -> f64 {
        self.entries.iter().map(Field::max_abs).fold(0.0, f64::max)
    }

    pub fn min_value(&self) -> f64 {
        self.entries.iter().map(Field::min).fold(f64::INFINITY, f64::min)
    }
}

/// Result of a dyadic-lag Hölder regression.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HolderFit {
    /// Fitted exponent; `None` when every increment is below the noise floor.
    pub alpha: Option<f64>,
    pub prefactor: f64,
    pub lags: Vec<f64>,
    pub increments: Vec<f64>,
}

pub fn holder_fit(
    path: &TrajectoryPath<Field>,
    basis: &EigenBasis,
    order: SobolevOrder,
) -> Result<HolderFit> {
    holder_fit_with(path, |a, b| basis.norm(&a.sub(b), order))
}

/// Fits `log sup_t ‖x(t+h) − x(t)‖ ≈ log L + α log h` over `h = dt·2^m ≤ T/4`,
/// dropping the largest octave when at least three lags are available.
pub fn holder_fit_with<T>(
    path: &TrajectoryPath<T>,
    dist: impl Fn(&T, &T) -> f64,
) -> Result<HolderFit> {
    let n = path.n_steps();
    if n < 8 {
        return Err(MemsError::config(format!(
            "holder fit needs at least 8 steps, got {n}"
        )));
    }
    let mut lag_steps = Vec::new();
    let mut m = 1usize;
    while 4 * m <= n {
        lag_steps.push(m);
        m *= 2;
    }
    if lag_steps.len() >= 3 {
        lag_steps.pop();
    }
    let entries = path.entries();
    let mut lags = Vec::new();
    let mut increments = Vec::new();
    for &s in &lag_steps {
        let d = (0..=n - s)
            .map(|j| dist(&entries[j + s], &entries[j]))
            .fold(0.0, f64::max);
        lags.push(s as f64 * path.dt());
        increments.push(d);
    }
    let usable: Vec<(f64, f64)> = lags
        .iter()
        .zip(&increments)
        .filter(|(_, &d)| d > HOLDER_NOISE_FLOOR)
        .map(|(&h, &d)| (h.ln(), d.ln()))
        .collect();
    if usable.len() < 2 {
        let prefactor = if usable.is_empty() {
            0.0
        } else {
            increments.iter().copied().fold(0.0, f64::max)
        };
        return Ok(HolderFit {
            alpha: None,
            prefactor,
            lags,
            increments,
        });
    }
    let (slope, intercept) = least_squares_line(&usable);
    Ok(HolderFit {
        alpha: Some(slope),
        prefactor: intercept.exp(),
        lags,
        increments,
    })
}

/// Ordinary least squares `y ≈ a x + b`; returns `(a, b)`.
pub fn least_squares_line(points: &[(f64, f64)]) -> (f64, f64) {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    (slope, my - slope * mx)
}
