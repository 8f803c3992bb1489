mod common;

use cocycle_core::heisenberg::{corollary_main_report, default_interval_options, HeisenbergModel};
use cocycle_core::theta::{
    chebyshev_max_error, derivatives, lyap_plus_theta, sweep, truncation_k, u_theta, uddot0, udot0, SeriesOptions, SweepOptions,
    ThetaOptions,
};
use cocycle_core::TriangularCocycle;
use common::{circle, rng, TriParams};

fn quick() -> ThetaOptions {
    ThetaOptions {
        n: 4000,
        samples: 8,
        ..ThetaOptions::default()
    }
}

#[test]
fn second_derivative_matches_central_difference() {
    let base = circle();
    let tri = TriangularCocycle::constant(0.5, 1.0, 2.0, &base).unwrap();
    let at = |t| lyap_plus_theta(&tri, &base, t, &quick()).unwrap().lambda_plus;
    let h = 1e-2;
    let fd = (at(h) - 2.0 * at(0.0) + at(-h)) / (h * h);
    assert!((fd + 65.0 / 27.0).abs() < 5e-3, "{fd}");
}

#[test]
fn random_derivatives_match_differences() {
    let mut r = rng(21);
    let series = SeriesOptions {
        n: 4000,
        samples: 8,
        ..SeriesOptions::default()
    };
    for _ in 0..8 {
        let p = TriParams::random(&mut r);
        let base = p.base();
        let tri = p.build(&base);
        let d = derivatives(&tri, &base, &series).unwrap();
        let at = |t| lyap_plus_theta(&tri, &base, t, &quick()).unwrap().lambda_plus;
        let (l0, h1, h2) = (at(0.0), 1e-3, 1e-2);
        let d1 = (at(h1) - l0) / h1;
        let d2 = (at(h2) - 2.0 * l0 + at(-h2)) / (h2 * h2);
        assert!(
            (d1 - d.dlambda0).abs() < 2e-3 * (1.0 + d.ddlambda0.abs()),
            "{p:?}: {d1} vs {}",
            d.dlambda0
        );
        assert!(
            (d2 - d.ddlambda0).abs() < 5e-3 * (1.0 + d.ddlambda0.abs()),
            "{p:?}: {d2} vs {}",
            d.ddlambda0
        );
    }
}

// Central differences at h = 1e-3, refined once with h/2 (Richardson) so that the
// O(h^2) error of the difference itself stays below the tolerance when the slope
// has large higher derivatives (strong shear).
fn slope_differences(u: impl Fn(f64) -> f64, h: f64) -> (f64, f64) {
    let u0 = u(0.0);
    let d = |h: f64| {
        let (p, m) = (u(h), u(-h));
        ((p - m) / (2.0 * h), (p - 2.0 * u0 + m) / (h * h))
    };
    let (a1, a2) = d(h);
    let (b1, b2) = d(h / 2.0);
    ((4.0 * b1 - a1) / 3.0, (4.0 * b2 - a2) / 3.0)
}

#[test]
fn slope_derivatives_match_differences() {
    let base = circle();
    let x = base.sample_measure(1, 0)[0];
    let tri = TriangularCocycle::constant(0.5, 1.0, 2.0, &base).unwrap();
    let u = |t| u_theta(&tri, &base, &x, t, 1024, 1e-12).unwrap().value;
    let h = 1e-3;
    let (d1, d2) = ((u(h) - u(-h)) / (2.0 * h), (u(h) - 2.0 * u(0.0) + u(-h)) / (h * h));
    assert!((d1 + 1.0 / 3.0).abs() < 1e-4, "{d1}");
    assert!((d2 + 16.0 / 27.0).abs() < 1e-4, "{d2}");

    let mut r = rng(22);
    for _ in 0..20 {
        let p = TriParams::random(&mut r);
        let base = p.base();
        let tri = p.build(&base);
        let k = truncation_k(tri.tau);
        for x in base.sample_measure(3, 4) {
            let u = |t| u_theta(&tri, &base, &x, t, 1024, 1e-12).unwrap().value;
            assert!(u(0.0).abs() < 1e-12);
            let (d1, d2) = slope_differences(u, 1e-3);
            let ud = udot0(&tri, &base, &x, k).unwrap().value;
            let udd = uddot0(&tri, &base, &x, k).unwrap().value;
            assert!((d1 - ud).abs() < 1e-4, "{p:?}: {d1} vs {ud}");
            assert!((d2 - udd).abs() < 1e-4, "{p:?}: {d2} vs {udd}");
        }
    }
}

#[test]
fn exponent_is_analytic_near_zero() {
    let base = circle();
    let tri = TriangularCocycle::constant(0.5, 1.0, 2.0, &base).unwrap();
    let err = chebyshev_max_error(
        |t| lyap_plus_theta(&tri, &base, t, &quick()).map(|e| e.lambda_plus),
        -0.1,
        0.1,
        6,
        101,
    )
    .unwrap();
    assert!(err < 1e-6, "{err}");
}

#[test]
fn formula_agrees_with_direct_estimate() {
    let mut r = rng(23);
    let grid = [-0.1, -0.05, 0.0, 0.05, 0.1];
    let opts = SweepOptions {
        theta: ThetaOptions::default(),
        ..SweepOptions::default()
    };
    for _ in 0..5 {
        let p = TriParams::random(&mut r);
        let base = p.base();
        let res = sweep(&p.build(&base), &base, &grid, &opts).unwrap();
        assert_eq!(res.anomalies().count(), 0, "{p:?}");
        for row in &res.rows {
            if let (Some(f), Some(d)) = (row.lambda_plus_formula, row.lambda_plus_direct) {
                assert!((f - d).abs() < 1e-3, "{p:?} at {}", row.theta);
                assert!((f + row.lambda_minus.unwrap() - res.det_sum).abs() < 1e-12);
            }
        }
    }
}

#[test]
fn diagonal_families_are_even() {
    let mut r = rng(24);
    for _ in 0..10 {
        let p = TriParams::random(&mut r);
        let base = p.base();
        let (l, e) = (p.lam, p.eta);
        let tri = TriangularCocycle::from_entries(move |x| l.eval(x), |_| 0.0, move |x| e.eval(x), &base).unwrap();
        for t in [0.05, 0.2] {
            let a = lyap_plus_theta(&tri, &base, t, &quick()).unwrap().lambda_plus;
            let b = lyap_plus_theta(&tri, &base, -t, &quick()).unwrap().lambda_plus;
            assert!((a - b).abs() < 1e-9, "{p:?}");
        }
    }
}

#[test]
fn constant_family_is_concave_on_grid() {
    let base = circle();
    let tri = TriangularCocycle::constant(0.5, 0.0, 2.0, &base).unwrap();
    let grid: Vec<f64> = (-6..=6).map(|i| i as f64 * 0.05).collect();
    let res = sweep(
        &tri,
        &base,
        &grid,
        &SweepOptions {
            theta: quick(),
            ..SweepOptions::default()
        },
    )
    .unwrap();
    assert!(res.concavity_violations.is_empty());
    let interior: Vec<_> = res.rows.iter().filter_map(|r| r.ddlambda_estimate).collect();
    assert_eq!(interior.len(), grid.len() - 2);
    assert!(interior.iter().all(|&d| d < 0.0));
    for row in &res.rows {
        let exact = (1.25 * row.theta.cos()).acosh();
        assert!((row.lambda_plus_formula.unwrap() - exact).abs() < 1e-9);
    }
}

#[test]
fn heisenberg_report_is_consistent() {
    let model = HeisenbergModel::new();
    let grid: Vec<f64> = (-5..=5).map(|i| i as f64 * 0.04).collect();
    let r = corollary_main_report(&model, &grid, &default_interval_options()).unwrap();
    assert!((r.lambda_plus0 - model.log_lam_u()).abs() < 1e-3);
    assert!(r.dlambda0 < 0.0 && r.ddlambda0 < 0.0);
    let (lo, hi) = r.interval.unwrap();
    assert!(lo <= 0.0 && 0.0 <= hi && hi > lo);
    assert!(r.diagnostics.iter().all(|d| !d.contains("second derivative")));
    for row in &r.rows {
        assert!((row.lambda_s + model.log_lam_u()).abs() < 1e-12);
        if let (Some(p), Some(m)) = (row.lambda_plus, row.lambda_minus) {
            assert!((p + m - model.log_lam_u()).abs() < 1e-12);
            assert!(p >= m);
        }
        if row.in_interval && row.theta != 0.0 {
            assert!(row.theta >= lo && row.theta <= hi);
        }
    }
}
