//! Experiment configuration: one JSON document.
//!
//! Every numeric field accepts either a JSON number or a decimal string
//! (`"0.5"`), so configs written by tools that quote numbers parse the same.
//! Unknown fields are rejected.
//!
//! ```json
//! {
//!   "cocycle": { "kind": "constant", "matrix": [[2, 0], [0, "0.5"]] },
//!   "base": { "kind": "circle_rotation", "alpha": 0.41421356237309503 },
//!   "theta_grid": { "min": -0.3, "max": 0.3, "step": 0.05 },
//!   "orbit_length": 10000,
//!   "samples": 64,
//!   "seed": 7,
//!   "output_dir": "out"
//! }
//! ```

use crate::base::{BaseSystem, Point};
use crate::cocycle::CocycleSpec;
use crate::error::{CocycleError, Result};
use crate::heisenberg::{self, HeisenbergModel};
use crate::mat2::Mat2;
use crate::triangular::TriangularCocycle;
use serde::de::{self, Deserializer};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::path::{Path, PathBuf};

/// A real number given as a JSON number or a decimal string.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(transparent)]
pub struct Num(pub f64);

impl<'de> Deserialize<'de> for Num {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            F(f64),
            S(String),
        }
        match Repr::deserialize(d)? {
            Repr::F(v) => Ok(Num(v)),
            Repr::S(s) => s
                .trim()
                .parse::<f64>()
                .map(Num)
                .map_err(|_| de::Error::custom(format!("not a decimal number: {s:?}"))),
        }
    }
}

/// A non-negative integer given as a JSON number or a decimal string.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
#[serde(transparent)]
pub struct Count(pub u64);

impl<'de> Deserialize<'de> for Count {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            U(u64),
            S(String),
        }
        match Repr::deserialize(d)? {
            Repr::U(v) => Ok(Count(v)),
            Repr::S(s) => s
                .trim()
                .parse::<u64>()
                .map(Count)
                .map_err(|_| de::Error::custom(format!("not a non-negative integer: {s:?}"))),
        }
    }
}

/// `f(x) = constant + sum coef cos(2 pi (kx x1 + ky x2) + phase)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum EntryFn {
    Constant(Num),
    Fourier(FourierSeries),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FourierSeries {
    #[serde(default = "zero")]
    pub constant: Num,
    #[serde(default)]
    pub terms: Vec<FourierTerm>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FourierTerm {
    pub coef: Num,
    #[serde(default)]
    pub kx: i64,
    #[serde(default)]
    pub ky: i64,
    #[serde(default = "zero")]
    pub phase: Num,
}

fn zero() -> Num {
    Num(0.0)
}

impl EntryFn {
    pub fn eval(&self, x: &Point) -> f64 {
        match self {
            EntryFn::Constant(c) => c.0,
            EntryFn::Fourier(FourierSeries { constant, terms }) => {
                let p = x.coords();
                terms.iter().fold(constant.0, |acc, t| {
                    let arg = 2.0 * PI * (t.kx as f64 * p[0] + t.ky as f64 * p[1]) + t.phase.0;
                    acc + t.coef.0 * arg.cos()
                })
            }
        }
    }

    fn is_finite(&self) -> bool {
        match self {
            EntryFn::Constant(c) => c.0.is_finite(),
            EntryFn::Fourier(FourierSeries { constant, terms }) => {
                constant.0.is_finite() && terms.iter().all(|t| t.coef.0.is_finite() && t.phase.0.is_finite())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CocycleConfig {
    Constant { matrix: [[Num; 2]; 2] },
    Heisenberg,
    Triangular { lambda: EntryFn, sigma: EntryFn, eta: EntryFn },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum BaseConfig {
    CircleRotation { alpha: Num },
    TorusAutomorphism { matrix: [[i64; 2]; 2] },
    PeriodicOrbit { points: Vec<Num> },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub min: Num,
    pub max: Num,
    pub step: Num,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig {
            min: Num(-0.3),
            max: Num(0.3),
            step: Num(0.05),
        }
    }
}

impl GridConfig {
    /// `min + i step` for `i = 0, 1, ...` up to `max` (with a relative slack of 1e-9 steps).
    pub fn points(&self) -> Vec<f64> {
        let (lo, hi, h) = (self.min.0, self.max.0, self.step.0);
        let count = ((hi - lo) / h + 1e-9).floor() as usize + 1;
        (0..count).map(|i| lo + i as f64 * h).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Graph-transform residual for the strong and weak sections.
    pub section: Num,
    /// Residual for the rotated slope section.
    pub u_theta: Num,
    /// Largest accepted formula-vs-direct gap.
    pub mismatch: Num,
    /// Singular-gap growth rate below which domination is refuted.
    pub gap_floor: Num,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            section: Num(1e-12),
            u_theta: Num(1e-10),
            mismatch: Num(1e-3),
            gap_floor: Num(0.02),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub cocycle: CocycleConfig,
    /// Required except for `heisenberg`, which fixes its own base.
    #[serde(default)]
    pub base: Option<BaseConfig>,
    #[serde(default)]
    pub theta_grid: GridConfig,
    #[serde(default = "default_orbit_length")]
    pub orbit_length: Count,
    #[serde(default = "default_samples")]
    pub samples: Count,
    #[serde(default)]
    pub seed: Count,
    #[serde(default)]
    pub tolerances: Tolerances,
    /// Series truncation; picked from the domination ratio when absent.
    #[serde(default)]
    pub truncation: Option<Count>,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
}

fn default_orbit_length() -> Count {
    Count(10_000)
}

fn default_samples() -> Count {
    Count(64)
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("cocycle-lab-out")
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(text)
            .map_err(|e| CocycleError::config(format!("line {} column {}", e.line(), e.column()), e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CocycleError::Io(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<()> {
        let g = &self.theta_grid;
        if !(g.step.0 > 0.0 && g.step.0.is_finite()) {
            return Err(CocycleError::config(
                "theta_grid.step",
                format!("must be > 0, got {}", g.step.0),
            ));
        }
        if !(g.min.0.is_finite() && g.max.0.is_finite() && g.min.0 <= g.max.0) {
            return Err(CocycleError::config("theta_grid", "need finite min <= max"));
        }
        if (g.max.0 - g.min.0) / g.step.0 > 1e6 {
            return Err(CocycleError::config("theta_grid", "more than 10^6 grid points"));
        }
        if self.orbit_length.0 < 1 {
            return Err(CocycleError::config("orbit_length", "must be >= 1"));
        }
        if self.samples.0 < 1 {
            return Err(CocycleError::config("samples", "must be >= 1"));
        }
        let t = &self.tolerances;
        for (name, v) in [
            ("tolerances.section", t.section.0),
            ("tolerances.u_theta", t.u_theta.0),
            ("tolerances.mismatch", t.mismatch.0),
            ("tolerances.gap_floor", t.gap_floor.0),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(CocycleError::config(name, format!("must be positive, got {v}")));
            }
        }
        match (&self.cocycle, &self.base) {
            (CocycleConfig::Heisenberg, Some(BaseConfig::TorusAutomorphism { matrix }))
                if *matrix == heisenberg::AUTOMORPHISM => {}
            (CocycleConfig::Heisenberg, None) => {}
            (CocycleConfig::Heisenberg, Some(_)) => {
                return Err(CocycleError::config(
                    "base",
                    "the heisenberg cocycle lives over the [[2,1],[1,1]] torus automorphism",
                ))
            }
            (_, None) => return Err(CocycleError::config("base", "missing")),
            _ => {}
        }
        if let CocycleConfig::Constant { matrix } = &self.cocycle {
            if matrix.iter().flatten().any(|v| !v.0.is_finite()) {
                return Err(CocycleError::config("cocycle.matrix", "non-finite entry"));
            }
        }
        if let CocycleConfig::Triangular { lambda, sigma, eta } = &self.cocycle {
            for (name, f) in [("cocycle.lambda", lambda), ("cocycle.sigma", sigma), ("cocycle.eta", eta)] {
                if !f.is_finite() {
                    return Err(CocycleError::config(name, "non-finite coefficient"));
                }
            }
        }
        self.build_base().map(|_| ())
    }

    pub fn build_base(&self) -> Result<BaseSystem> {
        let field = |e: CocycleError| CocycleError::config("base", e.to_string());
        match &self.base {
            None => Ok(HeisenbergModel::new().base),
            Some(BaseConfig::CircleRotation { alpha }) => BaseSystem::circle_rotation(alpha.0).map_err(field),
            Some(BaseConfig::TorusAutomorphism { matrix }) => BaseSystem::torus_automorphism(*matrix).map_err(field),
            Some(BaseConfig::PeriodicOrbit { points }) => {
                BaseSystem::periodic_orbit(points.iter().map(|p| p.0).collect()).map_err(field)
            }
        }
    }

    /// The cocycle `A`, when the config names one (not for native triangular entries).
    pub fn build_cocycle(&self) -> Option<CocycleSpec> {
        match &self.cocycle {
            CocycleConfig::Constant { matrix } => {
                let m = Mat2::new(matrix[0][0].0, matrix[0][1].0, matrix[1][0].0, matrix[1][1].0);
                let mut c = CocycleSpec::constant(m);
                c.orientation_preserving = m.det() > 0.0;
                Some(c)
            }
            CocycleConfig::Heisenberg => Some(heisenberg::ecu_cocycle(&HeisenbergModel::new())),
            CocycleConfig::Triangular { .. } => None,
        }
    }

    pub fn is_heisenberg(&self) -> bool {
        matches!(self.cocycle, CocycleConfig::Heisenberg)
    }
}

/// Base, triangular cocycle and the cocycle used for direct estimates.
pub struct Experiment {
    pub config: ExperimentConfig,
    pub base: BaseSystem,
    pub tri: TriangularCocycle,
    pub direct: CocycleSpec,
}

impl Experiment {
    pub fn new(config: ExperimentConfig) -> Result<Self> {
        config.validate()?;
        let base = config.build_base()?;
        let section = crate::domination::SectionOptions {
            tol: config.tolerances.section.0,
            ..Default::default()
        };
        let tri = match (&config.cocycle, config.build_cocycle()) {
            (CocycleConfig::Triangular { lambda, sigma, eta }, _) => {
                let (l, s, e) = (lambda.clone(), sigma.clone(), eta.clone());
                TriangularCocycle::from_entries(move |x| l.eval(x), move |x| s.eval(x), move |x| e.eval(x), &base)
                    .map_err(|err| CocycleError::config("cocycle", err.to_string()))?
            }
            (_, Some(a)) => TriangularCocycle::build(&a, &base, section)?,
            (_, None) => unreachable!("non-triangular configs name a cocycle"),
        };
        let direct = tri.direct_cocycle();
        Ok(Experiment {
            config,
            base,
            tri,
            direct,
        })
    }
}
