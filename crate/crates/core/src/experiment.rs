//! Experiment configuration, presets and the table runner.
//!
//! A configuration is a plain-text file of `key = value` lines (`#` starts a
//! comment). Keys are lowercase snake case; unknown keys are rejected.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Write;
use std::path::PathBuf;
use std::sync::Arc;
use std::time::Instant;

use crate::decomp::Decomposition;
use crate::error::{Error, Result};
use crate::fem::{assemble, Aabb, BoundaryCondition, Coefficients, EdgeSpace, Material, SystemBundle};
use crate::krylov::{gmres, InitialGuess, KrylovConfig, KrylovReport, Side, Weight, DEFAULT_SEED};
use crate::linalg::SparseComplexMatrix;
use crate::mesh::Mesh;
use crate::precond::{
    impedance_factors, minor_factors, CoarseSolver, CorrectionMatrix, Family, LocalSolver, PreconditionerSpec, Schwarz,
    DEFAULT_DENSE_CAP,
};

/// `coef · k^power`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct XiRule {
    pub coef: f64,
    pub power: i32,
}

impl XiRule {
    pub const ZERO: XiRule = XiRule { coef: 0.0, power: 0 };
    pub const K: XiRule = XiRule { coef: 1.0, power: 1 };
    pub const K2: XiRule = XiRule { coef: 1.0, power: 2 };

    pub fn eval(&self, k: f64) -> f64 {
        self.coef * k.powi(self.power)
    }

    /// Accepts `zero`, `k`, `k2`, a number, or `c*k` / `c*k2`.
    pub fn parse(s: &str) -> Result<Self> {
        let s = s.trim();
        let (coef, var) = match s.split_once('*') {
            Some((c, v)) => (parse_f64("xi coefficient", c)?, v.trim()),
            None => (1.0, s),
        };
        let power = match var {
            "zero" => return Ok(Self::ZERO),
            "k" => 1,
            "k2" => 2,
            other if s.split_once('*').is_none() => return Ok(Self { coef: parse_f64("xi", other)?, power: 0 }),
            other => return Err(Error::Config(format!("bad xi rule `{other}`"))),
        };
        Ok(Self { coef, power })
    }

    fn render(&self) -> String {
        match (self.coef, self.power) {
            (c, _) if c == 0.0 => "zero".into(),
            (c, 0) => format!("{c}"),
            (c, p) if c == 1.0 => format!("k{}", if p == 1 { "".into() } else { p.to_string() }),
            (c, p) => format!("{c}*k{}", if p == 1 { "".into() } else { p.to_string() }),
        }
    }
}

/// Target fine resolution, before rounding to an admissible value.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum FineRule {
    /// `n = m·k`.
    PerK(f64),
    /// Grid points per wavelength, `n = ⌈g k / 2π⌉`.
    PointsPerWavelength(f64),
    /// `n = ⌈c k^{3/2}⌉`.
    ThreeHalves(f64),
    Fixed(usize),
}

/// Cells per axis of the subdomain grid or the coarse mesh.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ScaleRule {
    /// `round(c·k^α)`, at least 1.
    Alpha { alpha: f64, coef: f64 },
    Fixed(usize),
}

impl ScaleRule {
    pub fn eval(&self, k: f64) -> usize {
        match *self {
            ScaleRule::Alpha { alpha, coef } => ((coef * k.powf(alpha)).round() as usize).max(1),
            ScaleRule::Fixed(n) => n,
        }
    }

    fn parse(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.trim().split(':').collect();
        match parts.as_slice() {
            ["perk", m] => Ok(ScaleRule::Alpha { alpha: 1.0, coef: parse_f64("perk", m)? }),
            ["alpha", a, c] => Ok(ScaleRule::Alpha { alpha: parse_f64("alpha", a)?, coef: parse_f64("alpha coefficient", c)? }),
            ["fixed", n] => Ok(ScaleRule::Fixed(parse_usize("fixed", n)?)),
            _ => Err(Error::Config(format!("bad scale rule `{s}` (perk:M | alpha:A:C | fixed:N)"))),
        }
    }

    fn render(&self) -> String {
        match *self {
            ScaleRule::Alpha { alpha, coef } if alpha == 1.0 => format!("perk:{coef}"),
            ScaleRule::Alpha { alpha, coef } => format!("alpha:{alpha}:{coef}"),
            ScaleRule::Fixed(n) => format!("fixed:{n}"),
        }
    }
}

impl FineRule {
    pub fn eval(&self, k: f64) -> usize {
        let n = match *self {
            FineRule::PerK(m) => (m * k).round(),
            FineRule::PointsPerWavelength(g) => (g * k / (2.0 * std::f64::consts::PI)).ceil(),
            FineRule::ThreeHalves(c) => (c * k.powf(1.5)).ceil(),
            FineRule::Fixed(n) => n as f64,
        };
        (n as usize).max(1)
    }

    fn parse(s: &str) -> Result<Self> {
        match s.trim().split_once(':') {
            Some(("perk", v)) => Ok(FineRule::PerK(parse_f64("fine", v)?)),
            Some(("g", v)) => Ok(FineRule::PointsPerWavelength(parse_f64("fine", v)?)),
            Some(("h32", v)) => Ok(FineRule::ThreeHalves(parse_f64("fine", v)?)),
            Some(("n", v)) => Ok(FineRule::Fixed(parse_usize("fine", v)?)),
            _ => Err(Error::Config(format!("bad fine rule `{s}` (perk:M | g:G | h32:C | n:N)"))),
        }
    }

    fn render(&self) -> String {
        match *self {
            FineRule::PerK(m) => format!("perk:{m}"),
            FineRule::PointsPerWavelength(g) => format!("g:{g}"),
            FineRule::ThreeHalves(c) => format!("h32:{c}"),
            FineRule::Fixed(n) => format!("n:{n}"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Layers {
    Fixed(usize),
    /// Subdomain width in cells, `n / p`.
    Generous,
}

/// Material layout of one run.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MaterialCase {
    /// `ε = μ = 1`, `σ̂ = 0`.
    Homogeneous,
    /// `σ̂ = background_sigma·k` everywhere.
    Liquid,
    /// Conductive inclusion with a permittivity contrast.
    Head,
    /// Non-conductive inclusion (`σ̂ = 0`).
    Cylinder,
}

impl MaterialCase {
    pub fn name(self) -> &'static str {
        match self {
            MaterialCase::Homogeneous => "homogeneous",
            MaterialCase::Liquid => "liquid",
            MaterialCase::Head => "head",
            MaterialCase::Cylinder => "cylinder",
        }
    }

    fn parse(s: &str) -> Result<Self> {
        match s.trim() {
            "homogeneous" => Ok(MaterialCase::Homogeneous),
            "liquid" => Ok(MaterialCase::Liquid),
            "head" => Ok(MaterialCase::Head),
            "cylinder" => Ok(MaterialCase::Cylinder),
            other => Err(Error::Config(format!("unknown material case `{other}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub name: String,
    pub k_list: Vec<f64>,
    pub xi_prob: XiRule,
    pub xi_prec: XiRule,
    pub bc: BoundaryCondition,
    pub fine: FineRule,
    /// `None` for one-level-only runs.
    pub coarse: Option<ScaleRule>,
    pub subdomains: ScaleRule,
    pub layers: Layers,
    pub preconditioners: Vec<String>,
    pub correction_matrix: CorrectionMatrix,
    pub tol: f64,
    pub maxit: usize,
    pub weighted: bool,
    pub side: Side,
    pub zero_initial_guess: bool,
    pub seed: u64,
    pub materials: Vec<MaterialCase>,
    pub inclusion: Aabb,
    pub background_sigma: f64,
    pub head_eps: f64,
    pub head_sigma: f64,
    pub dense_cap: usize,
    pub memory_cap_mb: usize,
    pub timings: bool,
    pub output: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            name: "custom".into(),
            k_list: vec![3.0, 4.0, 5.0, 6.0],
            xi_prob: XiRule::K2,
            xi_prec: XiRule::K2,
            bc: BoundaryCondition::Pec,
            fine: FineRule::PerK(2.0),
            coarse: Some(ScaleRule::Alpha { alpha: 1.0, coef: 1.0 }),
            subdomains: ScaleRule::Alpha { alpha: 1.0, coef: 1.0 },
            layers: Layers::Generous,
            preconditioners: vec!["as2".into(), "as1".into()],
            correction_matrix: CorrectionMatrix::Problem,
            tol: 1e-6,
            maxit: 200,
            weighted: false,
            side: Side::Right,
            zero_initial_guess: false,
            seed: DEFAULT_SEED,
            materials: vec![MaterialCase::Homogeneous],
            inclusion: Aabb { lo: [0.25; 3], hi: [0.75; 3] },
            background_sigma: 1.0,
            head_eps: 2.0,
            head_sigma: 2.0,
            dense_cap: DEFAULT_DENSE_CAP,
            memory_cap_mb: 3072,
            timings: false,
            output: None,
        }
    }
}

fn parse_f64(key: &str, v: &str) -> Result<f64> {
    v.trim().parse().map_err(|_| Error::Config(format!("{key}: `{v}` is not a number")))
}

fn parse_usize(key: &str, v: &str) -> Result<usize> {
    v.trim().parse().map_err(|_| Error::Config(format!("{key}: `{v}` is not a nonnegative integer")))
}

fn parse_bool(key: &str, v: &str) -> Result<bool> {
    match v.trim() {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(Error::Config(format!("{key}: `{v}` is not a boolean"))),
    }
}

fn parse_point(key: &str, v: &str) -> Result<[f64; 3]> {
    let xs: Vec<f64> = v.split(',').map(|x| parse_f64(key, x)).collect::<Result<_>>()?;
    xs.try_into().map_err(|_| Error::Config(format!("{key}: expected three comma-separated numbers")))
}

fn join<T: std::fmt::Display>(v: &[T]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

pub const PRESETS: [&str; 7] = ["table1", "table2", "table3", "table4", "table6", "medimax-cube", "abs-error"];

impl ExperimentConfig {
    pub fn preset(name: &str) -> Result<Self> {
        let base = Self { name: name.into(), ..Self::default() };
        Ok(match name {
            "table1" => base,
            "table2" => Self { layers: Layers::Fixed(1), ..base },
            "table3" => Self { xi_prob: XiRule::K, xi_prec: XiRule::K, ..base },
            "table4" => Self { weighted: true, side: Side::Left, ..base },
            "table6" => Self {
                k_list: vec![3.0, 4.0, 5.0],
                preconditioners: ["as2", "ras2", "hras", "adef1-ras"].map(String::from).to_vec(),
                ..base
            },
            "medimax-cube" => Self {
                k_list: vec![6.0],
                xi_prob: XiRule::ZERO,
                xi_prec: XiRule::ZERO,
                bc: BoundaryCondition::Impedance,
                layers: Layers::Fixed(1),
                background_sigma: 8.0,
                preconditioners: vec!["imphras".into(), "impras1".into()],
                zero_initial_guess: true,
                materials: vec![MaterialCase::Liquid, MaterialCase::Head, MaterialCase::Cylinder],
                ..base
            },
            "abs-error" => Self {
                k_list: vec![5.0, 8.0],
                bc: BoundaryCondition::Impedance,
                fine: FineRule::Fixed(6),
                coarse: None,
                preconditioners: Vec::new(),
                ..base
            },
            other => {
                return Err(Error::Config(format!("unknown preset `{other}` (one of {})", PRESETS.join(", "))))
            }
        })
    }

    /// Applies `key = value` lines on top of `self`.
    pub fn apply_text(mut self, text: &str) -> Result<Self> {
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected `key = value`", lineno + 1)))?;
            self.set(key.trim(), value.trim())?;
        }
        Ok(self)
    }

    /// Parses a full configuration; a `preset` key (if any) must come first.
    pub fn parse(text: &str) -> Result<Self> {
        let first = text
            .lines()
            .map(|l| l.split('#').next().unwrap_or("").trim())
            .find(|l| !l.is_empty());
        let base = match first.and_then(|l| l.split_once('=')) {
            Some((k, v)) if k.trim() == "preset" => Self::preset(v.trim())?,
            _ => Self::default(),
        };
        base.apply_text(text)
    }

    pub fn set(&mut self, key: &str, v: &str) -> Result<()> {
        match key {
            "preset" => {
                if self.name != v {
                    *self = Self::preset(v)?;
                }
            }
            "name" => self.name = v.to_string(),
            "k_list" => self.k_list = v.split(',').map(|x| parse_f64(key, x)).collect::<Result<_>>()?,
            "xi_prob" => self.xi_prob = XiRule::parse(v)?,
            "xi_prec" => self.xi_prec = XiRule::parse(v)?,
            "bc" => {
                self.bc = match v {
                    "pec" => BoundaryCondition::Pec,
                    "impedance" => BoundaryCondition::Impedance,
                    _ => return Err(Error::Config(format!("bc: `{v}` (pec | impedance)"))),
                }
            }
            "fine" => self.fine = FineRule::parse(v)?,
            "coarse" => self.coarse = if v == "none" { None } else { Some(ScaleRule::parse(v)?) },
            "subdomains" => self.subdomains = ScaleRule::parse(v)?,
            "layers" => self.layers = if v == "generous" { Layers::Generous } else { Layers::Fixed(parse_usize(key, v)?) },
            "preconditioners" => {
                self.preconditioners = v.split(',').map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect();
                for id in &self.preconditioners {
                    PreconditionerSpec::parse_id(id, 0.0)?;
                }
            }
            "correction_matrix" => {
                self.correction_matrix = match v {
                    "problem" => CorrectionMatrix::Problem,
                    "preconditioner" => CorrectionMatrix::Preconditioner,
                    _ => return Err(Error::Config(format!("correction_matrix: `{v}` (problem | preconditioner)"))),
                }
            }
            "tol" => self.tol = parse_f64(key, v)?,
            "maxit" => self.maxit = parse_usize(key, v)?,
            "weighted" => self.weighted = parse_bool(key, v)?,
            "side" => {
                self.side = match v {
                    "left" => Side::Left,
                    "right" => Side::Right,
                    _ => return Err(Error::Config(format!("side: `{v}` (left | right)"))),
                }
            }
            "initial_guess" => {
                self.zero_initial_guess = match v {
                    "zero" => true,
                    "random" => false,
                    _ => return Err(Error::Config(format!("initial_guess: `{v}` (zero | random)"))),
                }
            }
            "seed" => self.seed = v.parse().map_err(|_| Error::Config(format!("seed: `{v}`")))?,
            "materials" => self.materials = v.split(',').map(MaterialCase::parse).collect::<Result<_>>()?,
            "inclusion_lo" => self.inclusion.lo = parse_point(key, v)?,
            "inclusion_hi" => self.inclusion.hi = parse_point(key, v)?,
            "background_sigma" => self.background_sigma = parse_f64(key, v)?,
            "head_eps" => self.head_eps = parse_f64(key, v)?,
            "head_sigma" => self.head_sigma = parse_f64(key, v)?,
            "dense_cap" => self.dense_cap = parse_usize(key, v)?,
            "memory_cap_mb" => self.memory_cap_mb = parse_usize(key, v)?,
            "timings" => self.timings = parse_bool(key, v)?,
            "output" => self.output = Some(PathBuf::from(v)),
            other => return Err(Error::Config(format!("unknown key `{other}`"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if self.k_list.is_empty() || self.k_list.iter().any(|&k| !(k > 0.0)) {
            return Err(Error::Config("k_list must hold positive wavenumbers".into()));
        }
        if !(self.tol > 0.0) || self.maxit == 0 {
            return Err(Error::Config("need tol > 0 and maxit ≥ 1".into()));
        }
        for id in &self.preconditioners {
            let spec = PreconditionerSpec::parse_id(id, 0.0)?;
            if spec.coarse.is_some() && self.coarse.is_none() {
                return Err(Error::Config(format!("`{id}` needs a coarse rule")));
            }
        }
        Ok(())
    }

    /// The effective configuration as `key = value` text; parsing it back
    /// reproduces `self`.
    pub fn render(&self) -> String {
        let mut kv: Vec<(&str, String)> = vec![
            ("name", self.name.clone()),
            ("k_list", join(&self.k_list)),
            ("xi_prob", self.xi_prob.render()),
            ("xi_prec", self.xi_prec.render()),
            ("bc", if self.bc == BoundaryCondition::Pec { "pec" } else { "impedance" }.into()),
            ("fine", self.fine.render()),
            ("coarse", self.coarse.map_or("none".into(), |c| c.render())),
            ("subdomains", self.subdomains.render()),
            ("layers", match self.layers {
                Layers::Fixed(l) => l.to_string(),
                Layers::Generous => "generous".into(),
            }),
            ("preconditioners", self.preconditioners.join(",")),
            ("correction_matrix", match self.correction_matrix {
                CorrectionMatrix::Problem => "problem".into(),
                CorrectionMatrix::Preconditioner => "preconditioner".into(),
            }),
            ("tol", self.tol.to_string()),
            ("maxit", self.maxit.to_string()),
            ("weighted", self.weighted.to_string()),
            ("side", if self.side == Side::Left { "left" } else { "right" }.into()),
            ("initial_guess", if self.zero_initial_guess { "zero" } else { "random" }.into()),
            ("seed", self.seed.to_string()),
            ("materials", self.materials.iter().map(|m| m.name()).collect::<Vec<_>>().join(",")),
            ("inclusion_lo", join(&self.inclusion.lo)),
            ("inclusion_hi", join(&self.inclusion.hi)),
            ("background_sigma", self.background_sigma.to_string()),
            ("head_eps", self.head_eps.to_string()),
            ("head_sigma", self.head_sigma.to_string()),
            ("dense_cap", self.dense_cap.to_string()),
            ("memory_cap_mb", self.memory_cap_mb.to_string()),
            ("timings", self.timings.to_string()),
        ];
        if let Some(out) = &self.output {
            kv.push(("output", out.display().to_string()));
        }
        let mut s = String::new();
        for (k, v) in kv {
            let _ = writeln!(s, "{k} = {v}");
        }
        s
    }

    pub fn krylov(&self, dk: &Arc<crate::linalg::CsrMatrix<f64>>) -> KrylovConfig {
        KrylovConfig {
            tol: self.tol,
            maxit: self.maxit,
            weight: if self.weighted { Weight::Matrix(dk.clone()) } else { Weight::Identity },
            side: self.side,
            initial_guess: if self.zero_initial_guess { InitialGuess::Zero } else { InitialGuess::Random { seed: self.seed } },
            check_orthogonality: false,
        }
    }

    /// Per-tetrahedron coefficients of one material case.
    pub fn coefficients(&self, mesh: &Mesh, k: f64, xi: f64, case: MaterialCase) -> Coefficients {
        let bg = Material { eps: 1.0, mu: 1.0, sigma: self.background_sigma * k };
        match case {
            MaterialCase::Homogeneous => Coefficients::homogeneous(mesh.num_tets(), k, xi),
            MaterialCase::Liquid => Coefficients::with_inclusion(mesh, k, xi, self.inclusion, bg, bg),
            MaterialCase::Head => {
                let inside = Material { eps: self.head_eps, mu: 1.0, sigma: self.head_sigma * k };
                Coefficients::with_inclusion(mesh, k, xi, self.inclusion, inside, bg)
            }
            MaterialCase::Cylinder => {
                let inside = Material { eps: 1.0, mu: 1.0, sigma: 0.0 };
                Coefficients::with_inclusion(mesh, k, xi, self.inclusion, inside, bg)
            }
        }
    }
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Resolutions actually used for one wavenumber.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Resolution {
    pub n: usize,
    pub p_axis: usize,
    pub n_coarse: Option<usize>,
    pub layers: usize,
}

impl Resolution {
    /// Rounds the target `n` to the nearest positive multiple of
    /// `lcm(p_axis, n_coarse)`.
    pub fn resolve(cfg: &ExperimentConfig, k: f64) -> Self {
        let target = cfg.fine.eval(k);
        let p_axis = cfg.subdomains.eval(k);
        let n_coarse = cfg.coarse.map(|c| c.eval(k));
        let step = n_coarse.map_or(p_axis, |c| p_axis / gcd(p_axis, c) * c);
        let n = step * ((target as f64 / step as f64).round() as usize).max(1);
        let layers = match cfg.layers {
            Layers::Fixed(l) => l,
            Layers::Generous => n / p_axis,
        };
        Self { n, p_axis, n_coarse, layers }
    }
}

/// One CSV row.
#[derive(Clone, Debug, PartialEq)]
pub struct RunRecord {
    pub k: f64,
    pub n: usize,
    pub n_sub: usize,
    pub n_cs: usize,
    pub xi_prob: f64,
    pub xi_prec: f64,
    pub preconditioner: String,
    pub iterations: usize,
    pub converged: bool,
    pub setup_time_s: Option<f64>,
    pub gmres_time_s: Option<f64>,
    pub final_relative_residual: f64,
    pub seed: Option<u64>,
    pub h: f64,
    pub coarse_h: f64,
    pub h_sub: f64,
    pub layers: usize,
    pub material: String,
}

pub const CSV_HEADER: &str =
    "k,n,n_sub,n_cs,xi_prob,xi_prec,preconditioner,iterations,converged,setup_time_s,gmres_time_s,final_relative_residual,seed,h,H,H_sub,layers,material";

impl RunRecord {
    pub fn csv_line(&self) -> String {
        let t = |x: Option<f64>| x.map_or(String::new(), |v| format!("{v:.3}"));
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{:.6e},{},{:.6},{:.6},{:.6},{},{}",
            self.k,
            self.n,
            self.n_sub,
            self.n_cs,
            self.xi_prob,
            self.xi_prec,
            self.preconditioner,
            self.iterations,
            self.converged,
            t(self.setup_time_s),
            t(self.gmres_time_s),
            self.final_relative_residual,
            self.seed.map_or(String::new(), |s| s.to_string()),
            self.h,
            self.coarse_h,
            self.h_sub,
            self.layers,
            self.material
        )
    }
}

pub fn write_csv<W: Write>(mut w: W, records: &[RunRecord]) -> Result<()> {
    writeln!(w, "{CSV_HEADER}")?;
    for r in records {
        writeln!(w, "{}", r.csv_line())?;
    }
    Ok(())
}

/// Everything built once per `(k, material)` and shared by the preconditioners.
pub struct Cell {
    pub k: f64,
    pub material: MaterialCase,
    pub resolution: Resolution,
    pub system: SystemBundle,
    pub a: Arc<SparseComplexMatrix>,
    pub dk: Arc<crate::linalg::CsrMatrix<f64>>,
    pub decomposition: Decomposition,
    pub xi_prec: f64,
    a_prec: Option<Arc<SparseComplexMatrix>>,
    minors: Option<Arc<Vec<LocalSolver>>>,
    impedance: Option<Arc<Vec<LocalSolver>>>,
    coarse: Option<Arc<CoarseSolver>>,
}

impl Cell {
    pub fn new(cfg: &ExperimentConfig, k: f64, material: MaterialCase) -> Result<Self> {
        let res = Resolution::resolve(cfg, k);
        let space = EdgeSpace::new(Arc::new(Mesh::cube(res.n)?), cfg.bc);
        let xi_prob = cfg.xi_prob.eval(k);
        let coeffs = cfg.coefficients(space.mesh(), k, xi_prob, material);
        let system = assemble(&space, &coeffs)?;
        let mut decomposition = Decomposition::boxes(&space, res.p_axis, res.layers)?;
        if let Some(nc) = res.n_coarse {
            decomposition = decomposition.with_coarse(&space, nc)?;
        }
        Ok(Self {
            k,
            material,
            resolution: res,
            a: Arc::new(system.a.clone()),
            dk: Arc::new(system.dk.clone()),
            system,
            decomposition,
            xi_prec: cfg.xi_prec.eval(k),
            a_prec: None,
            minors: None,
            impedance: None,
            coarse: None,
        })
    }

    /// Largest dense local block and total dense storage in MiB, for a family.
    pub fn sizing(&self, family: Family) -> (usize, f64) {
        let sizes: Vec<usize> = match family {
            Family::As | Family::Ras => self.decomposition.subdomain_dofs.iter().map(Vec::len).collect(),
            Family::ImpRas => self
                .decomposition
                .subdomain_elements
                .iter()
                .map(|set| crate::decomp::subdomain_edge_dofs(&self.system.space, set).len())
                .collect(),
        };
        let mut all = sizes.clone();
        if let Some(link) = &self.decomposition.coarse {
            all.push(link.ndofs());
        }
        let bytes: f64 = all.iter().map(|&s| (s * s * 16) as f64).sum();
        (all.into_iter().max().unwrap_or(0), bytes / (1024.0 * 1024.0))
    }

    fn a_prec(&mut self) -> Result<Arc<SparseComplexMatrix>> {
        if self.a_prec.is_none() {
            let coeffs = self.system.coefficients.with_xi(self.xi_prec);
            self.a_prec = Some(Arc::new(assemble(&self.system.space, &coeffs)?.a));
        }
        Ok(self.a_prec.clone().expect("just built"))
    }

    /// Builds (or reuses) the factors behind `spec`.
    pub fn preconditioner(&mut self, spec: &PreconditionerSpec) -> Result<Schwarz> {
        let a_prec = self.a_prec()?;
        let locals = match spec.family {
            Family::As | Family::Ras => {
                if self.minors.is_none() {
                    self.minors = Some(Arc::new(minor_factors(&a_prec, &self.decomposition, spec.dense_cap)?));
                }
                self.minors.clone()
            }
            Family::ImpRas => {
                if self.impedance.is_none() {
                    let coeffs = self.system.coefficients.with_xi(self.xi_prec);
                    self.impedance = Some(Arc::new(impedance_factors(
                        &self.system.space,
                        &coeffs,
                        &self.decomposition,
                        spec.dense_cap,
                    )?));
                }
                self.impedance.clone()
            }
        }
        .expect("just built");
        let coarse = match spec.coarse {
            None => None,
            Some(_) => {
                if self.coarse.is_none() {
                    let link = self
                        .decomposition
                        .coarse
                        .as_ref()
                        .ok_or_else(|| Error::InvalidArgument("two-level method without a coarse space".into()))?;
                    self.coarse = Some(Arc::new(CoarseSolver::new(&a_prec, link, spec.dense_cap)?));
                }
                self.coarse.clone()
            }
        };
        let correction = match spec.correction_matrix {
            CorrectionMatrix::Problem => self.a.clone(),
            CorrectionMatrix::Preconditioner => a_prec,
        };
        Schwarz::from_parts(spec.clone(), &self.decomposition, locals, coarse, correction)
    }

    /// Sets up `id` and runs GMRES on the cell's system.
    pub fn solve(&mut self, cfg: &ExperimentConfig, id: &str) -> Result<(RunRecord, KrylovReport)> {
        let mut spec = PreconditionerSpec::parse_id(id, self.xi_prec)?;
        spec.side = cfg.side;
        spec.correction_matrix = cfg.correction_matrix;
        spec.dense_cap = cfg.dense_cap;
        let (largest, mib) = self.sizing(spec.family);
        if largest > cfg.dense_cap || mib > cfg.memory_cap_mb as f64 {
            return Err(Error::SizeCap {
                what: format!(
                    "k={} n={} {}: largest dense block {largest} rows, {mib:.0} MiB of dense factors (memory cap {} MiB)",
                    self.k, self.resolution.n, id, cfg.memory_cap_mb
                ),
                size: largest,
                cap: cfg.dense_cap,
            });
        }
        let t0 = Instant::now();
        let prec = self.preconditioner(&spec)?;
        let setup = t0.elapsed().as_secs_f64();
        let kc = cfg.krylov(&self.dk);
        let report = gmres(self.a.as_ref(), &self.system.rhs, Some(&prec), &kc)?;
        let res = self.resolution;
        let record = RunRecord {
            k: self.k,
            n: self.system.ndofs(),
            n_sub: self.decomposition.num_subdomains(),
            n_cs: self.decomposition.coarse.as_ref().map_or(0, |c| c.ndofs()),
            xi_prob: self.system.xi(),
            xi_prec: self.xi_prec,
            preconditioner: id.to_string(),
            iterations: report.iterations,
            converged: report.converged,
            setup_time_s: cfg.timings.then_some(setup),
            gmres_time_s: cfg.timings.then_some(report.elapsed.as_secs_f64()),
            final_relative_residual: report.final_relative_residual,
            seed: report.seed,
            h: 3f64.sqrt() / res.n as f64,
            coarse_h: res.n_coarse.map_or(0.0, |c| 3f64.sqrt() / c as f64),
            h_sub: self.decomposition.h_sub,
            layers: res.layers,
            material: self.material.name().to_string(),
        };
        Ok((record, report))
    }
}

/// Dense `B⁻¹A` built column by column through the preconditioner.
pub fn preconditioned_dense(a: &SparseComplexMatrix, prec: &Schwarz) -> Result<crate::linalg::DenseMatrix<crate::linalg::C64>> {
    let n = a.nrows();
    let at = a.transpose();
    let mut cols = Vec::with_capacity(n);
    for j in 0..n {
        let (idx, vals) = at.row(j);
        let mut col = vec![crate::linalg::C64::new(0.0, 0.0); n];
        for (&i, &v) in idx.iter().zip(vals) {
            col[i] = v;
        }
        cols.push(prec.apply(&col)?);
    }
    crate::linalg::DenseMatrix::from_columns(n, &cols)
}

/// Runs every `(material, k, preconditioner)` cell in configuration order.
/// `progress` receives each record as soon as it is available.
pub fn run_table(cfg: &ExperimentConfig, mut progress: impl FnMut(&RunRecord)) -> Result<Vec<RunRecord>> {
    cfg.validate()?;
    let mut records = Vec::new();
    for &material in &cfg.materials {
        for &k in &cfg.k_list {
            let mut cell = Cell::new(cfg, k, material)?;
            for id in &cfg.preconditioners {
                let (rec, _) = cell.solve(cfg, id)?;
                progress(&rec);
                records.push(rec);
            }
        }
    }
    Ok(records)
}

/// `(k, ξ, ratio)` rows of the absorption error sweep `ξ ∈ {k/8, k/4, k/2}`.
pub fn abs_error_table(cfg: &ExperimentConfig) -> Result<Vec<(f64, f64, f64)>> {
    let mut rows = Vec::new();
    for &k in &cfg.k_list {
        let n = cfg.fine.eval(k);
        let xis = [k / 8.0, k / 4.0, k / 2.0];
        for (xi, ratio) in crate::analysis::relative_error_sweep(k, &xis, n, cfg.dense_cap)? {
            rows.push((k, xi, ratio));
        }
    }
    Ok(rows)
}

/// Human-readable summary: one line per record, grouped like the CSV.
pub fn summary(records: &[RunRecord]) -> String {
    let mut by: BTreeMap<(String, String), Vec<&RunRecord>> = BTreeMap::new();
    for r in records {
        by.entry((r.material.clone(), r.preconditioner.clone())).or_default().push(r);
    }
    let mut s = String::new();
    for ((mat, id), rows) in by {
        let cells: Vec<String> = rows
            .iter()
            .map(|r| format!("k={} #{}{}", r.k, r.iterations, if r.converged { "" } else { "*" }))
            .collect();
        let _ = writeln!(s, "{mat:>12} {id:>13}: {}", cells.join("  "));
    }
    s
}
