mod common;

use cocycle_core::cocycle::{compose_n, lyap_minus_direct, lyap_plus_direct, lyap_sum_via_det, rotate_family};
use cocycle_core::domination::{certify, refute, strong_section, weak_section, DominationOptions, SectionOptions};
use cocycle_core::mat2::Mat2;
use cocycle_core::theta::{entries_theta, u_theta};
use cocycle_core::triangular::{check_norm_equality, ratio_decay_factor};
use cocycle_core::{mobius_act, CocycleSpec, Slope, TriangularCocycle, Verdict};
use common::{circle, rng, DomParams, TriParams};
use proptest::prelude::*;
use proptest::test_runner::RngSeed;

fn dom(seed: u64) -> (DomParams, cocycle_core::BaseSystem, CocycleSpec) {
    let p = DomParams::random(&mut rng(seed));
    (p, p.base(), p.cocycle())
}

proptest! {
    #![proptest_config(ProptestConfig {
        cases: 32,
        rng_seed: RngSeed::Fixed(0x5eed),
        ..ProptestConfig::default()
    })]

    #[test]
    fn sections_are_invariant(seed in any::<u64>(), t in 0.0f64..1.0) {
        let (_, base, a) = dom(seed);
        let x = cocycle_core::Point::Circle(t);
        let opts = SectionOptions::default();
        let m = a.at(&x);
        let s0 = strong_section(&a, &base, &x, &opts).unwrap();
        let s1 = strong_section(&a, &base, &base.forward(&x), &opts).unwrap();
        prop_assert!(s0.converged && s1.converged);
        prop_assert!(mobius_act(&m, s0.slope).distance(&s1.slope) < 1e-8);
        let w0 = weak_section(&a, &base, &x, &opts).unwrap();
        let w1 = weak_section(&a, &base, &base.forward(&x), &opts).unwrap();
        prop_assert!(mobius_act(&m, w0.slope).distance(&w1.slope) < 1e-8);
        prop_assert!(s0.slope.distance(&w0.slope) > 1e-3);
    }

    #[test]
    fn residual_improves_with_depth(seed in any::<u64>(), t in 0.0f64..1.0) {
        let (_, base, a) = dom(seed);
        let x = cocycle_core::Point::Circle(t);
        let mut last = f64::INFINITY;
        for depth in [4, 16, 64, 256] {
            let s = strong_section(&a, &base, &x, &SectionOptions { depth, tol: 0.0 }).unwrap();
            prop_assert!(s.residual <= last);
            last = s.residual;
        }
    }

    #[test]
    fn certified_disks_contract(seed in any::<u64>()) {
        let (_, base, a) = dom(seed);
        let cert = certify(&a, &base, &DominationOptions { samples: 8, ..DominationOptions::default() }).unwrap();
        prop_assert_eq!(cert.verdict, Verdict::Dominated);
        let l = cert.l.unwrap();
        for x in base.sample_measure(4, seed) {
            for r0 in [0.1, cert.margin] {
                prop_assert!(cocycle_core::domination::disk_contraction_holds(&a, &base, &x, l, r0, &SectionOptions::default()).unwrap());
            }
        }
    }

    #[test]
    fn certify_and_refute_exclusive(theta in 0.0f64..std::f64::consts::PI) {
        let base = circle();
        let a = rotate_family(&CocycleSpec::constant(Mat2::diag(2.0, 0.5)), theta);
        let opts = DominationOptions { samples: 4, ..DominationOptions::default() };
        let cert = certify(&a, &base, &opts).unwrap();
        let w = refute(&a, &base, &base.sample_measure(4, 0), opts.n_probe, opts.gap_floor).unwrap();
        prop_assert!(!(cert.l.is_some() && w.is_some()));
        match cert.verdict {
            Verdict::Dominated => prop_assert!(cert.margin < 0.5 && cert.witness.is_none()),
            Verdict::NotDominated => prop_assert!(cert.witness.is_some() && cert.l.is_none()),
            Verdict::Inconclusive => {}
        }
        // |trace| > 2 is hyperbolic, |trace| < 2 elliptic
        let tr = 2.5 * theta.cos();
        if tr.abs() > 2.1 {
            prop_assert_eq!(cert.verdict, Verdict::Dominated);
        }
        if tr.abs() < 1.9 {
            prop_assert_eq!(cert.verdict, Verdict::NotDominated);
        }
    }

    #[test]
    fn triangular_form_preserves_det_and_norms(seed in any::<u64>()) {
        let (_, base, a) = dom(seed);
        let tri = TriangularCocycle::build(&a, &base, SectionOptions::default()).unwrap();
        for x in base.sample_measure(8, seed) {
            let e = tri.entries_at(&x).unwrap();
            prop_assert!(e.eta > e.lam.abs());
            let det = a.at(&x).det();
            prop_assert!((e.lam * e.eta - det).abs() < 1e-10 * det.abs());
        }
        let x = base.sample_measure(1, seed ^ 1)[0];
        prop_assert!(check_norm_equality(&a, &tri, &base, &x, 50).unwrap() < 1e-7);
        prop_assert!(ratio_decay_factor(&tri, &base, &x, 100).unwrap() <= 1.0);
    }

    #[test]
    fn exponents_sum_to_det_average(seed in any::<u64>()) {
        let (_, base, a) = dom(seed);
        let p = lyap_plus_direct(&a, &base, 4000, 4, 1).unwrap();
        let m = lyap_minus_direct(&a, &base, 4000, 4, 1).unwrap();
        let s = lyap_sum_via_det(&a, &base, 4000, 4, 1).unwrap();
        prop_assert!(p > m);
        prop_assert!((p + m - s).abs() < 5e-3);
    }

    #[test]
    fn u_theta_is_invariant(seed in any::<u64>(), theta in -0.1f64..0.1) {
        let p = TriParams::random(&mut rng(seed));
        let base = p.base();
        let tri = p.build(&base);
        // the window of domination shrinks with the shear; only certified angles count
        let cert = certify(&rotate_family(&tri.direct_cocycle(), theta), &base, &DominationOptions::default()).unwrap();
        prop_assume!(cert.verdict == Verdict::Dominated);
        let x = base.sample_measure(1, seed)[0];
        let u0 = u_theta(&tri, &base, &x, theta, 4096, 1e-10).unwrap().value;
        let u1 = u_theta(&tri, &base, &base.forward(&x), theta, 4096, 1e-10).unwrap().value;
        let m = entries_theta(&tri.entries_at(&x).unwrap(), theta).matrix();
        let pushed = mobius_act(&m, Slope::Finite(u0));
        prop_assert!(pushed.distance(&Slope::Finite(u1)) < 1e-9);
    }

    #[test]
    fn native_ratio_bounded_by_tau(seed in any::<u64>()) {
        let p = TriParams::random(&mut rng(seed));
        let base = p.base();
        let tri = p.build(&base);
        prop_assert!(tri.tau < 1.0);
        for x in base.sample_measure(4, seed) {
            prop_assert!(ratio_decay_factor(&tri, &base, &x, 200).unwrap() <= 1.0);
        }
    }
}

#[test]
fn powers_agree_with_products() {
    let (_, base, a) = dom(17);
    let x = base.sample_measure(1, 2)[0];
    let mut prod = Mat2::IDENTITY;
    let mut y = x;
    for _ in 0..20 {
        prod = a.at(&y) * prod;
        y = base.forward(&y);
    }
    assert!(compose_n(&a, &base, &x, 20).unwrap().approx_eq(&prod, 1e-9 * prod.max_abs()));
}
