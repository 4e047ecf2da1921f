//! Seeded configurations shared by the verification suites, the CLI and the
//! integration tests.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::grid::{build_grid, random_band_limited, EigenBasis, Field, SobolevOrder, TrajectoryPath};
use crate::hyperbolic::{
    estimate_l_g, horizon_t0, initial_forcing_h1, strong_continuity_time, HyperbolicInit,
    LgEstimate, PhysicalConstants, PicardSettings, T0Report,
};
use crate::parabolic::CoupledProblem;

/// Fraction of `κ/(2C)` used for the Picard ball radius.
pub const RADIUS_FRACTION: f64 = 0.9;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Stable 64-bit FNV-1a hash, used to derive per-check seeds from names.
pub fn name_seed(base: u64, name: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in name.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h ^ base
}

/// Equilibrium constants `β_p = 1, θ₁ = 1.5, θ₂ = 1` with the balancing `β_F`.
pub fn balanced_constants() -> PhysicalConstants {
    let (t1, t2, bp) = (1.5, 1.0, 1.0);
    PhysicalConstants::new(PhysicalConstants::equilibrium_beta_f(bp, t1, t2), bp, t1, t2)
        .expect("positive constants")
}

/// Coupled problem with seeded perturbations of size `amplitude` in modes
/// 1 to 3 of the pressure and the gap about the balanced equilibrium.
pub fn small_data_problem(
    n_nodes: usize,
    n_modes: usize,
    seed: u64,
    amplitude: f64,
    horizon: f64,
    n_steps: usize,
) -> Result<CoupledProblem> {
    let grid = build_grid(1.0, n_nodes)?;
    let basis = EigenBasis::new(&grid, n_modes)?;
    let low = EigenBasis::new(&grid, 3.min(n_nodes))?;
    let c = balanced_constants();
    let mut rng = rng(seed);
    let du = random_band_limited(&low, 3, &mut rng).scale(amplitude);
    let dw = random_band_limited(&low, 3, &mut rng).scale(amplitude);
    let w0 = dw.offset(c.theta2);
    let init = HyperbolicInit::new(Field::zeros(n_nodes), w0.clone(), c.theta2)?;
    Ok(CoupledProblem {
        constants: c,
        wave: PicardSettings::for_init(&init, basis.embedding_constant(), RADIUS_FRACTION),
        basis,
        u0: du.offset(c.theta1),
        v0: Field::zeros(n_nodes),
        w0,
        horizon,
        n_steps,
        alpha: 0.2,
        tol: CoupledProblem::DEFAULT_TOL,
        max_iter: CoupledProblem::DEFAULT_MAX_ITER,
    })
}

/// A seeded wave-subsystem configuration driven by a prescribed pressure.
#[derive(Debug, Clone)]
pub struct HyperbolicCase {
    pub basis: EigenBasis,
    pub constants: PhysicalConstants,
    pub init: HyperbolicInit,
    pub settings: PicardSettings,
    /// Shifted initial pressure `ũ₀`.
    pub u_tilde0: Field,
}

impl HyperbolicCase {
    pub fn seeded(n_nodes: usize, n_modes: usize, seed: u64) -> Result<Self> {
        let grid = build_grid(1.0, n_nodes)?;
        let basis = EigenBasis::new(&grid, n_modes)?;
        let low = EigenBasis::new(&grid, 4.min(n_nodes))?;
        let mut rng = rng(seed);
        let constants = PhysicalConstants::new(rng.gen_range(0.5..1.5), 1.0, 1.5, 1.0)?;
        let w0 = random_band_limited(&low, 4, &mut rng).scale(0.02).offset(1.0);
        let v0 = random_band_limited(&low, 4, &mut rng).scale(0.01);
        let u_tilde0 = random_band_limited(&low, 4, &mut rng).scale(0.02);
        let init = HyperbolicInit::new(v0, w0, constants.theta2)?;
        let settings = PicardSettings::for_init(&init, basis.embedding_constant(), RADIUS_FRACTION);
        Ok(Self {
            basis,
            constants,
            init,
            settings,
            u_tilde0,
        })
    }

    pub fn n_nodes(&self) -> usize {
        self.basis.grid().n_nodes()
    }

    pub fn l_g(&self) -> LgEstimate {
        estimate_l_g(&self.init, &self.constants, &self.basis)
    }

    pub fn t0(&self) -> Result<T0Report> {
        let lg = self.l_g();
        let g0 = initial_forcing_h1(&self.init, &self.u_tilde0, &self.constants, &self.basis)?;
        let delta_o = strong_continuity_time(&self.init.state(), self.settings.radius, &self.basis);
        Ok(horizon_t0(1.0, lg.l_g, delta_o, self.init.kappa, lg.c_emb, g0))
    }

    /// `ũ(t) = ũ₀ + profile(t/T)·q`.
    pub fn pressure_path(
        &self,
        horizon: f64,
        n_steps: usize,
        q: &Field,
        profile: impl Fn(f64) -> f64,
    ) -> Result<TrajectoryPath<Field>> {
        TrajectoryPath::from_fn(horizon, n_steps, |t| {
            self.u_tilde0.add(&q.scale(profile(t / horizon)))
        })
    }

    /// Direction of unit `H²` norm in modes 1 to 4, so that draws with one
    /// seed describe the same function on every mesh.
    pub fn unit_direction<R: Rng + ?Sized>(&self, rng: &mut R) -> Field {
        let q = random_band_limited(&self.basis, 4, rng);
        let n = self.basis.norm(&q, SobolevOrder::H2);
        q.scale(1.0 / n.max(f64::MIN_POSITIVE))
    }
}

/// Initial data for the quench regression: a flat membrane under a strong
/// electrostatic load.
pub fn quench_problem(n_nodes: usize) -> Result<crate::oracle::MolProblem> {
    let grid = build_grid(1.0, n_nodes)?;
    Ok(crate::oracle::MolProblem {
        constants: PhysicalConstants::new(5.0, 1.0, 1.0, 1.0)?,
        u0: Field::constant(n_nodes, 1.0),
        v0: Field::zeros(n_nodes),
        w0: Field::constant(n_nodes, 1.0),
        grid,
        horizon: 1.0,
        n_steps: 200,
        quench_threshold: 1e-2,
        safety: crate::oracle::DEFAULT_SAFETY,
    })
}
