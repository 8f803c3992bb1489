//! Closed-form checks of the whole pipeline.
//!
//! The report is a pure function of the build: fixed seeds, no timings.

use crate::base::{BaseSystem, Point};
use crate::cocycle::{compose_n, lyap_plus_direct, rotate_family, CocycleSpec};
use crate::domination::{certify, weak_section, DominationOptions, SectionOptions, Verdict};
use crate::error::Result;
use crate::heisenberg::{ecu_cocycle, HeisenbergModel};
use crate::mat2::{Mat2, Rotation};
use crate::theta::{derivatives, lyap_plus_theta, uddot0, udot0, SeriesOptions, ThetaOptions};
use crate::triangular::TriangularCocycle;
use serde::Serialize;
use std::f64::consts::PI;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub got: String,
    pub expected: String,
    /// Absolute tolerance after scaling; `None` for exact checks.
    pub tol: Option<f64>,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SelftestReport {
    pub checks: Vec<Check>,
}

impl SelftestReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn failures(&self) -> usize {
        self.checks.iter().filter(|c| !c.pass).count()
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        for c in &self.checks {
            let status = if c.pass { "PASS" } else { "FAIL" };
            match c.tol {
                Some(t) => s.push_str(&format!(
                    "{status} {}: got {} expected {} (tol {t:e})\n",
                    c.name, c.got, c.expected
                )),
                None => s.push_str(&format!("{status} {}: got {} expected {}\n", c.name, c.got, c.expected)),
            }
        }
        s.push_str(&format!("{} checks, {} failed\n", self.checks.len(), self.failures()));
        s
    }
}

struct Checker {
    scale: f64,
    checks: Vec<Check>,
}

impl Checker {
    fn close(&mut self, name: &'static str, got: Result<f64>, expected: f64, tol: f64) {
        let tol = tol * self.scale;
        let (got_s, pass) = match got {
            Ok(v) => (format!("{v:.12}"), (v - expected).abs() < tol),
            Err(e) => (format!("error: {e}"), false),
        };
        self.checks.push(Check {
            name,
            got: got_s,
            expected: format!("{expected:.12}"),
            tol: Some(tol),
            pass,
        });
    }

    fn exact(&mut self, name: &'static str, got: Result<String>, expected: &str) {
        let (got_s, pass) = match got {
            Ok(v) => {
                let p = v == expected;
                (v, p)
            }
            Err(e) => (format!("error: {e}"), false),
        };
        self.checks.push(Check {
            name,
            got: got_s,
            expected: expected.to_string(),
            tol: None,
            pass,
        });
    }
}

/// Runs every check. `tolerance_scale` multiplies each tolerance; 0 makes every
/// tolerance check fail.
pub fn selftest(tolerance_scale: f64) -> SelftestReport {
    let mut ck = Checker {
        scale: tolerance_scale,
        checks: Vec::new(),
    };
    let circle = BaseSystem::circle_rotation(2f64.sqrt() - 1.0).expect("valid rotation");
    let x = Point::Circle(0.25);
    let tri0 = TriangularCocycle::constant(0.5, 0.0, 2.0, &circle);
    let tri1 = TriangularCocycle::constant(0.5, 1.0, 2.0, &circle);
    let series = SeriesOptions {
        n: 1000,
        samples: 4,
        seed: 0,
        k: Some(40),
    };

    let quarter = CocycleSpec::constant(Rotation::new(PI / 4.0).matrix());
    ck.close(
        "rotation_power",
        compose_n(&quarter, &circle, &x, 4).map(|m| m.max_abs_diff(&-Mat2::IDENTITY)),
        0.0,
        1e-12,
    );

    let weak = CocycleSpec::constant(Mat2::new(0.5, 0.0, 1.0, 2.0));
    ck.close(
        "weak_section_eigenvector",
        weak_section(&weak, &circle, &x, &SectionOptions::default()).map(|s| s.slope.value().unwrap_or(f64::INFINITY)),
        -1.5,
        1e-12,
    );

    let diag = CocycleSpec::constant(Mat2::diag(2.0, 0.5));
    ck.close(
        "certificate_margin_diag",
        certify(&diag, &circle, &DominationOptions::default()).map(|c| if c.l == Some(1) { c.margin } else { f64::NAN }),
        0.25,
        1e-12,
    );

    let elliptic = rotate_family(&diag, PI / 2.0);
    ck.exact(
        "elliptic_not_dominated",
        certify(&elliptic, &circle, &DominationOptions::default()).map(|c| c.verdict.as_str().to_string()),
        Verdict::NotDominated.as_str(),
    );

    ck.close(
        "udot0_geometric",
        tri0.clone().and_then(|t| udot0(&t, &circle, &x, 40)).map(|v| v.value),
        -1.0 / 3.0,
        1e-10,
    );
    ck.close(
        "uddot0_geometric",
        tri1.clone().and_then(|t| uddot0(&t, &circle, &x, 40)).map(|v| v.value),
        -16.0 / 27.0,
        1e-10,
    );

    let d0 = tri0.clone().and_then(|t| derivatives(&t, &circle, &series));
    let d1 = tri1.clone().and_then(|t| derivatives(&t, &circle, &series));
    ck.close("dlambda0_sigma1", d1.clone().map(|d| d.dlambda0), -2.0 / 3.0, 1e-6);
    ck.close("ddlambda0_sigma0", d0.map(|d| d.ddlambda0), -5.0 / 3.0, 1e-6);
    ck.close("ddlambda0_sigma1", d1.map(|d| d.ddlambda0), -65.0 / 27.0, 1e-6);

    let theta_opts = ThetaOptions {
        n: 1000,
        samples: 4,
        ..ThetaOptions::default()
    };
    ck.close(
        "lyap_theta_pi_over_6",
        tri0.clone()
            .and_then(|t| lyap_plus_theta(&t, &circle, PI / 6.0, &theta_opts))
            .map(|e| e.lambda_plus),
        (1.25 * (PI / 6.0).cos()).acosh(),
        1e-6,
    );
    let theta = 0.05;
    let direct = tri1
        .clone()
        .and_then(|t| lyap_plus_direct(&rotate_family(&t.direct_cocycle(), theta), &circle, 10_000, 4, 0));
    let formula = tri1
        .and_then(|t| lyap_plus_theta(&t, &circle, theta, &theta_opts))
        .map(|e| e.lambda_plus);
    let oracle = ((2.5 * theta.cos() - theta.sin()) / 2.0).acosh();
    ck.close("lyap_theta_sigma1_formula", formula, oracle, 1e-6);
    ck.close("lyap_theta_sigma1_direct", direct, oracle, 1e-6);

    let model = HeisenbergModel::new();
    ck.close(
        "heisenberg_lambda_plus",
        lyap_plus_direct(&ecu_cocycle(&model), &model.base, 100_000, 4, 0),
        model.log_lam_u(),
        1e-3,
    );

    SelftestReport { checks: ck.checks }
}
