//! Flat `section.key = value` run configuration, initial-data profiles and
//! the run manifest.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{MemsError, Result};
use crate::grid::{build_grid, EigenBasis, Field, Grid1D};
use crate::hyperbolic::{HyperbolicInit, PhysicalConstants, PicardSettings};
use crate::oracle::{MolProblem, DEFAULT_QUENCH_FRACTION, DEFAULT_SAFETY};
use crate::parabolic::CoupledProblem;

/// Environment variable naming the default output root.
pub const OUT_DIR_ENV: &str = "MEMS_OUT_DIR";
pub const DEFAULT_OUT_DIR: &str = "out";

/// Fraction of the admissible radius `κ/(2C)` used for the wave Picard ball.
pub const RADIUS_FRACTION: f64 = crate::fixtures::RADIUS_FRACTION;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum InitProfile {
    Equilibrium,
    /// `u = θ₁(1 + b/20)`, `w = θ₂(1 − b/20)` with `b(s) = 16s²(1−s)²`, `s = x/L`.
    Bump,
    /// `u = θ₁(1 + a sin(kπx/L))`, `w = θ₂(1 − a sin(kπx/L))`.
    Mode { k: usize, amplitude: f64 },
    /// CSV with columns `x,u0,v0,w0` at the interior nodes.
    File(PathBuf),
}

impl fmt::Display for InitProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InitProfile::Equilibrium => f.write_str("equilibrium"),
            InitProfile::Bump => f.write_str("bump"),
            InitProfile::Mode { k, amplitude } => write!(f, "mode:{k}:{amplitude}"),
            InitProfile::File(p) => write!(f, "{}", p.display()),
        }
    }
}

impl FromStr for InitProfile {
    type Err = MemsError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "equilibrium" => Ok(InitProfile::Equilibrium),
            "bump" => Ok(InitProfile::Bump),
            _ if s.starts_with("mode:") => {
                let parts: Vec<&str> = s.split(':').collect();
                let bad = || MemsError::config(format!("init.profile: expected mode:k:amplitude, got '{s}'"));
                if parts.len() != 3 {
                    return Err(bad());
                }
                let k: usize = parts[1].parse().map_err(|_| bad())?;
                let amplitude: f64 = parts[2].parse().map_err(|_| bad())?;
                if k == 0 || !amplitude.is_finite() || amplitude.abs() >= 1.0 {
                    return Err(MemsError::config(format!(
                        "init.profile: need k >= 1 and |amplitude| < 1, got '{s}'"
                    )));
                }
                Ok(InitProfile::Mode { k, amplitude })
            }
            "" => Err(MemsError::config("init.profile must not be empty")),
            _ => Ok(InitProfile::File(PathBuf::from(s))),
        }
    }
}

/// Initial fields at the interior nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct InitialData {
    pub u0: Field,
    pub v0: Field,
    pub w0: Field,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub beta_f: f64,
    pub beta_p: f64,
    pub theta1: f64,
    pub theta2: f64,
    pub profile: InitProfile,
    pub length: f64,
    pub n_nodes: usize,
    pub n_modes: usize,
    pub horizon: f64,
    pub n_steps: usize,
    pub alpha: f64,
    pub picard_tol: f64,
    pub newton_tol: f64,
    pub quench_threshold: f64,
    pub output_dir: Option<PathBuf>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            beta_f: PhysicalConstants::equilibrium_beta_f(1.0, 1.5, 1.0),
            beta_p: 1.0,
            theta1: 1.5,
            theta2: 1.0,
            profile: InitProfile::Equilibrium,
            length: 1.0,
            n_nodes: 63,
            n_modes: 32,
            horizon: 0.05,
            n_steps: 32,
            alpha: 0.2,
            picard_tol: CoupledProblem::DEFAULT_TOL,
            newton_tol: crate::steady::DEFAULT_NEWTON_TOL,
            quench_threshold: DEFAULT_QUENCH_FRACTION,
            output_dir: None,
        }
    }
}

const KEYS: [&str; 15] = [
    "physics.beta_F",
    "physics.beta_p",
    "physics.theta1",
    "physics.theta2",
    "init.profile",
    "grid.L",
    "grid.n_nodes",
    "grid.n_modes",
    "time.T",
    "time.n_steps",
    "time.alpha",
    "tol.picard",
    "tol.newton",
    "tol.quench_threshold",
    "output.dir",
];

fn parse_num<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| MemsError::config(format!("{key}: cannot parse '{value}'")))
}

impl SolverConfig {
    /// Parses `key = value` lines. Blank lines and `#` comments are ignored;
    /// absent keys keep their defaults, except that a missing
    /// `tol.quench_threshold` defaults to `1e-2·θ₂`.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = SolverConfig::default();
        let mut seen = std::collections::HashSet::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                MemsError::config(format!("line {}: expected key = value, got '{line}'", lineno + 1))
            })?;
            let (key, value) = (key.trim(), value.trim());
            if !seen.insert(key.to_string()) {
                return Err(MemsError::config(format!("{key}: given twice")));
            }
            match key {
                "physics.beta_F" => cfg.beta_f = parse_num(key, value)?,
                "physics.beta_p" => cfg.beta_p = parse_num(key, value)?,
                "physics.theta1" => cfg.theta1 = parse_num(key, value)?,
                "physics.theta2" => cfg.theta2 = parse_num(key, value)?,
                "init.profile" => cfg.profile = value.parse()?,
                "grid.L" => cfg.length = parse_num(key, value)?,
                "grid.n_nodes" => cfg.n_nodes = parse_num(key, value)?,
                "grid.n_modes" => cfg.n_modes = parse_num(key, value)?,
                "time.T" => cfg.horizon = parse_num(key, value)?,
                "time.n_steps" => cfg.n_steps = parse_num(key, value)?,
                "time.alpha" => cfg.alpha = parse_num(key, value)?,
                "tol.picard" => cfg.picard_tol = parse_num(key, value)?,
                "tol.newton" => cfg.newton_tol = parse_num(key, value)?,
                "tol.quench_threshold" => cfg.quench_threshold = parse_num(key, value)?,
                "output.dir" => cfg.output_dir = Some(PathBuf::from(value)),
                _ => {
                    return Err(MemsError::config(format!(
                        "unknown key '{key}' (known keys: {})",
                        KEYS.join(", ")
                    )))
                }
            }
        }
        if !seen.contains("tol.quench_threshold") {
            cfg.quench_threshold = DEFAULT_QUENCH_FRACTION * cfg.theta2;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            MemsError::config(format!("cannot read config {}: {e}", path.display()))
        })?;
        let mut cfg = Self::parse(&text)?;
        // relative profile paths resolve against the config's directory
        if let InitProfile::File(p) = &cfg.profile {
            if p.is_relative() {
                if let Some(dir) = path.parent() {
                    cfg.profile = InitProfile::File(dir.join(p));
                }
            }
        }
        Ok(cfg)
    }

    /// Serializes every key; `parse(emit(c)) == c`.
    pub fn emit(&self) -> String {
        let mut out = String::new();
        let mut kv = |k: &str, v: String| out.push_str(&format!("{k} = {v}\n"));
        kv("physics.beta_F", format!("{:?}", self.beta_f));
        kv("physics.beta_p", format!("{:?}", self.beta_p));
        kv("physics.theta1", format!("{:?}", self.theta1));
        kv("physics.theta2", format!("{:?}", self.theta2));
        kv("init.profile", self.profile.to_string());
        kv("grid.L", format!("{:?}", self.length));
        kv("grid.n_nodes", self.n_nodes.to_string());
        kv("grid.n_modes", self.n_modes.to_string());
        kv("time.T", format!("{:?}", self.horizon));
        kv("time.n_steps", self.n_steps.to_string());
        kv("time.alpha", format!("{:?}", self.alpha));
        kv("tol.picard", format!("{:?}", self.picard_tol));
        kv("tol.newton", format!("{:?}", self.newton_tol));
        kv("tol.quench_threshold", format!("{:?}", self.quench_threshold));
        if let Some(d) = &self.output_dir {
            kv("output.dir", d.display().to_string());
        }
        out
    }

    /// SHA-256 of the emitted form, hex encoded.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.emit().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Field-level checks that do not need the initial data.
    pub fn validate(&self) -> Result<()> {
        self.constants()?;
        let positive = |key: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(MemsError::config(format!("{key} must be positive, got {v}")))
            }
        };
        positive("grid.L", self.length)?;
        positive("time.T", self.horizon)?;
        positive("tol.picard", self.picard_tol)?;
        positive("tol.newton", self.newton_tol)?;
        positive("tol.quench_threshold", self.quench_threshold)?;
        if self.n_nodes < crate::grid::MIN_NODES {
            return Err(MemsError::config(format!(
                "grid.n_nodes must be at least {}, got {}",
                crate::grid::MIN_NODES,
                self.n_nodes
            )));
        }
        if self.n_modes == 0 || self.n_modes > self.n_nodes {
            return Err(MemsError::config(format!(
                "grid.n_modes must lie in 1..={}, got {}",
                self.n_nodes, self.n_modes
            )));
        }
        if self.n_steps < 8 {
            return Err(MemsError::config(format!(
                "time.n_steps must be at least 8, got {}",
                self.n_steps
            )));
        }
        if !(self.alpha > 0.0 && self.alpha < 0.25) {
            return Err(MemsError::config(format!(
                "time.alpha must lie in (0, 1/4), got {}",
                self.alpha
            )));
        }
        if self.quench_threshold >= self.theta2 {
            return Err(MemsError::config(format!(
                "tol.quench_threshold must be below theta2 = {}, got {}",
                self.theta2, self.quench_threshold
            )));
        }
        Ok(())
    }

    pub fn constants(&self) -> Result<PhysicalConstants> {
        PhysicalConstants::new(self.beta_f, self.beta_p, self.theta1, self.theta2)
            .map_err(|e| MemsError::config(format!("physics: {e}")))
    }

    pub fn grid(&self) -> Result<Grid1D> {
        build_grid(self.length, self.n_nodes)
    }

    pub fn initial_data(&self) -> Result<InitialData> {
        let g = self.grid()?;
        let n = self.n_nodes;
        let (t1, t2, len) = (self.theta1, self.theta2, self.length);
        let data = match &self.profile {
            InitProfile::Equilibrium => InitialData {
                u0: Field::constant(n, t1),
                v0: Field::zeros(n),
                w0: Field::constant(n, t2),
            },
            InitProfile::Bump => {
                let b = |x: f64| {
                    let s = x / len;
                    16.0 * s * s * (1.0 - s) * (1.0 - s)
                };
                InitialData {
                    u0: g.sample(|x| t1 * (1.0 + 0.05 * b(x))),
                    v0: Field::zeros(n),
                    w0: g.sample(|x| t2 * (1.0 - 0.05 * b(x))),
                }
            }
            InitProfile::Mode { k, amplitude } => {
                let s = |x: f64| (*k as f64 * std::f64::consts::PI * x / len).sin();
                InitialData {
                    u0: g.sample(|x| t1 * (1.0 + amplitude * s(x))),
                    v0: Field::zeros(n),
                    w0: g.sample(|x| t2 * (1.0 - amplitude * s(x))),
                }
            }
            InitProfile::File(p) => read_profile_csv(p, &g)?,
        };
        if data.u0.min() <= 0.0 || data.w0.min() <= 0.0 {
            return Err(MemsError::config("init.profile: u0 and w0 must be positive"));
        }
        Ok(data)
    }

    /// The coupled problem; also enforces `r < κ/(2C_emb)` for the wave ball.
    pub fn coupled_problem(&self) -> Result<CoupledProblem> {
        let data = self.initial_data()?;
        let basis = EigenBasis::new(&self.grid()?, self.n_modes)?;
        let c = self.constants()?;
        let init = HyperbolicInit::new(data.v0.clone(), data.w0.clone(), c.theta2)?;
        let mut wave = PicardSettings::for_init(&init, basis.embedding_constant(), RADIUS_FRACTION);
        wave.tol = wave.tol.min(1e-2 * self.picard_tol);
        let p = CoupledProblem {
            constants: c,
            basis,
            u0: data.u0,
            v0: data.v0,
            w0: data.w0,
            horizon: self.horizon,
            n_steps: self.n_steps,
            alpha: self.alpha,
            tol: self.picard_tol,
            max_iter: CoupledProblem::DEFAULT_MAX_ITER,
            wave,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn mol_problem(&self) -> Result<MolProblem> {
        let data = self.initial_data()?;
        let p = MolProblem {
            constants: self.constants()?,
            grid: self.grid()?,
            u0: data.u0,
            v0: data.v0,
            w0: data.w0,
            horizon: self.horizon,
            n_steps: self.n_steps,
            quench_threshold: self.quench_threshold,
            safety: DEFAULT_SAFETY,
        };
        p.validate()?;
        Ok(p)
    }
}

fn read_profile_csv(path: &Path, grid: &Grid1D) -> Result<InitialData> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        MemsError::config(format!("init.profile: cannot read {}: {e}", path.display()))
    })?;
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines.next().unwrap_or("").replace(' ', "");
    if header != "x,u0,v0,w0" {
        return Err(MemsError::config(format!(
            "init.profile: {} must start with header x,u0,v0,w0",
            path.display()
        )));
    }
    let (mut u, mut v, mut w) = (Vec::new(), Vec::new(), Vec::new());
    for (i, line) in lines.enumerate() {
        let cols: Vec<f64> = line
            .split(',')
            .map(|c| c.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| MemsError::config(format!("init.profile: bad row {}", i + 2)))?;
        if cols.len() != 4 {
            return Err(MemsError::config(format!("init.profile: row {} needs 4 columns", i + 2)));
        }
        if i >= grid.n_nodes() || (cols[0] - grid.node(i)).abs() > 1e-9 * grid.length() {
            return Err(MemsError::config(format!(
                "init.profile: row {} does not match interior node {}",
                i + 2,
                i + 1
            )));
        }
        u.push(cols[1]);
        v.push(cols[2]);
        w.push(cols[3]);
    }
    if u.len() != grid.n_nodes() {
        return Err(MemsError::config(format!(
            "init.profile: expected {} rows, found {}",
            grid.n_nodes(),
            u.len()
        )));
    }
    Ok(InitialData {
        u0: Field::from_values(u),
        v0: Field::from_values(v),
        w0: Field::from_values(w),
    })
}

/// Output root: explicit flag, then the config, then `MEMS_OUT_DIR`, then `out`.
pub fn resolve_out_dir(flag: Option<&Path>, cfg: Option<&SolverConfig>) -> PathBuf {
    if let Some(p) = flag {
        return p.to_path_buf();
    }
    if let Some(p) = cfg.and_then(|c| c.output_dir.clone()) {
        return p;
    }
    std::env::var_os(OUT_DIR_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub config_hash: String,
    /// Seconds since the Unix epoch.
    pub started: f64,
    pub finished: f64,
    /// Paths relative to the output directory, each listed once.
    pub artifacts: Vec<String>,
    pub summary: serde_json::Value,
}

pub fn unix_now() -> f64 {
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs_f64())
        .unwrap_or(0.0)
}
