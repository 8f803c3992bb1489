//! Center-unstable derivative cocycle of the Heisenberg nilmanifold automorphism
//! covering the cat map `B = [[2, 1], [1, 1]]`.
//!
//! In the orthonormal frame `{(v_u, 0), (0, 1)}` of `E^cu` the derivative at `x`
//! is `[[L, 0], [L (x . v_u), 1]]` with `L` the unstable eigenvalue of `B`. The
//! second axis is the center direction, so the exponents at `theta = 0` are
//! `log L` and 0. `x` is read in the fundamental domain `[0, 1)^2`.

use crate::base::{BaseSystem, Point};
use crate::cocycle::{rotate_family, CocycleSpec};
use crate::domination::{SectionOptions, Verdict};
use crate::error::Result;
use crate::mat2::Mat2;
use crate::theta::{hyperbolicity_interval, IntervalOptions};
use crate::triangular::TriangularCocycle;
use serde::Serialize;

pub const AUTOMORPHISM: [[i64; 2]; 2] = [[2, 1], [1, 1]];
/// Sample points keep this distance from the edges of the fundamental domain.
pub const SAMPLE_MARGIN: f64 = 1e-9;

#[derive(Debug, Clone)]
pub struct HeisenbergModel {
    pub b: [[i64; 2]; 2],
    pub lam_u: f64,
    pub lam_s: f64,
    /// Unit unstable eigenvector with positive entries.
    pub v_u: [f64; 2],
    pub base: BaseSystem,
}

impl HeisenbergModel {
    pub fn new() -> Self {
        let s5 = 5f64.sqrt();
        let lam_u = (3.0 + s5) / 2.0;
        let lam_s = (3.0 - s5) / 2.0;
        // (B - L) q = 0 gives q2 = (L - 2) q1
        let (q1, q2) = (1.0f64, lam_u - 2.0);
        let r = q1.hypot(q2);
        HeisenbergModel {
            b: AUTOMORPHISM,
            lam_u,
            lam_s,
            v_u: [q1 / r, q2 / r],
            base: BaseSystem::torus_automorphism(AUTOMORPHISM).expect("unimodular"),
        }
    }

    pub fn log_lam_u(&self) -> f64 {
        self.lam_u.ln()
    }

    /// Lower-left entry `L (x . v_u)`.
    pub fn sigma(&self, x: &Point) -> f64 {
        let c = x.coords();
        self.lam_u * (c[0] * self.v_u[0] + c[1] * self.v_u[1])
    }
}

impl Default for HeisenbergModel {
    fn default() -> Self {
        Self::new()
    }
}

pub fn ecu_cocycle(model: &HeisenbergModel) -> CocycleSpec {
    let m = model.clone();
    CocycleSpec::new(move |x| Mat2::lower(m.lam_u, m.sigma(x), 1.0), true)
}

pub fn family_theta(model: &HeisenbergModel, theta: f64) -> CocycleSpec {
    rotate_family(&ecu_cocycle(model), theta)
}

pub fn triangularized(model: &HeisenbergModel, section: SectionOptions) -> Result<TriangularCocycle> {
    TriangularCocycle::build(&ecu_cocycle(model), &model.base, section)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HeisenbergRow {
    pub theta: f64,
    pub verdict: Verdict,
    pub lambda_plus: Option<f64>,
    pub lambda_minus: Option<f64>,
    /// Exponent along the stable bundle, independent of `theta`.
    pub lambda_s: f64,
    pub in_interval: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HeisenbergReport {
    pub lam_u: f64,
    pub log_lam_u: f64,
    pub lambda_s: f64,
    pub lambda_plus0: f64,
    pub lambda_minus0: f64,
    pub dlambda0: f64,
    pub ddlambda0: f64,
    /// Parameters where the center exponent is lifted off 0 and the unstable one drops.
    pub interval: Option<(f64, f64)>,
    pub rows: Vec<HeisenbergRow>,
    pub diagnostics: Vec<String>,
}

/// Options with the boundary margin applied to the certificate samples.
pub fn default_interval_options() -> IntervalOptions {
    let mut opts = IntervalOptions {
        strict_margin: 1e-4,
        ..IntervalOptions::default()
    };
    opts.sweep.domination.sample_margin = SAMPLE_MARGIN;
    opts
}

/// Exponents of the rotated family and the parameter interval on which it is
/// nonuniformly hyperbolic.
pub fn corollary_main_report(model: &HeisenbergModel, theta_grid: &[f64], opts: &IntervalOptions) -> Result<HeisenbergReport> {
    let tri = triangularized(model, opts.sweep.domination.section)?;
    let interval = hyperbolicity_interval(&tri, &model.base, theta_grid, opts)?;
    let derivs = crate::theta::derivatives(&tri, &model.base, &opts.series)?;
    let log_l = model.log_lam_u();
    let lambda_s = model.lam_s.ln();
    let inside = |t: f64| interval.witnesses.iter().any(|w| w.theta == t);
    let mut rows: Vec<HeisenbergRow> = interval
        .rows
        .iter()
        .map(|r| HeisenbergRow {
            theta: r.theta,
            verdict: r.verdict,
            lambda_plus: r.lambda_plus_formula,
            lambda_minus: r.lambda_plus_formula.map(|l| log_l - l),
            lambda_s,
            in_interval: inside(r.theta),
        })
        .collect();
    rows.push(HeisenbergRow {
        theta: 0.0,
        verdict: Verdict::Dominated,
        lambda_plus: Some(interval.lambda_plus0),
        lambda_minus: Some(log_l - interval.lambda_plus0),
        lambda_s,
        in_interval: interval.interval.is_some(),
    });
    rows.sort_by(|a, b| a.theta.total_cmp(&b.theta));
    let mut diagnostics = interval.diagnostics.clone();
    if let Some(a) = &derivs.anomaly {
        diagnostics.push(a.clone());
    }
    Ok(HeisenbergReport {
        lam_u: model.lam_u,
        log_lam_u: log_l,
        lambda_s,
        lambda_plus0: interval.lambda_plus0,
        lambda_minus0: log_l - interval.lambda_plus0,
        dlambda0: derivs.dlambda0,
        ddlambda0: derivs.ddlambda0,
        interval: interval.interval,
        rows,
        diagnostics,
    })
}
