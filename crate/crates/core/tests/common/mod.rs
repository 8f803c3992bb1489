#![allow(dead_code)]

use cocycle_core::mat2::{Mat2, Rotation};
use cocycle_core::{BaseSystem, CocycleSpec, Point, TriangularCocycle};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::f64::consts::TAU;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn circle() -> BaseSystem {
    BaseSystem::circle_rotation(2f64.sqrt() - 1.0).unwrap()
}

fn coord(x: &Point) -> f64 {
    x.coords()[0]
}

/// `c + a sin(2 pi (k x + p))` on the circle.
#[derive(Debug, Clone, Copy)]
pub struct Wave {
    pub c: f64,
    pub a: f64,
    pub k: f64,
    pub p: f64,
}

impl Wave {
    pub fn eval(&self, x: &Point) -> f64 {
        self.c + self.a * (TAU * (self.k * coord(x) + self.p)).sin()
    }

    fn random(r: &mut ChaCha8Rng, c: f64, a: f64) -> Self {
        Wave {
            c,
            a,
            k: r.gen_range(1..=3) as f64,
            p: r.gen(),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct TriParams {
    pub alpha: f64,
    pub lam: Wave,
    pub sig: Wave,
    pub eta: Wave,
}

impl TriParams {
    /// `lambda` in [0.1, 1], `eta >= lambda + 0.2` pointwise.
    pub fn random(r: &mut ChaCha8Rng) -> Self {
        let lc = r.gen_range(0.2..0.9);
        let la = r.gen_range(0.0..0.1f64.min(1.0 - lc));
        let ea = r.gen_range(0.0..0.3);
        let ec = lc + la + 0.2 + ea + r.gen_range(0.0..2.0);
        let (sc, sa) = (r.gen_range(-2.0..2.0), r.gen_range(0.0..1.0));
        TriParams {
            alpha: r.gen_range(0.05..0.95),
            lam: Wave::random(r, lc, la),
            sig: Wave::random(r, sc, sa),
            eta: Wave::random(r, ec, ea),
        }
    }

    pub fn base(&self) -> BaseSystem {
        BaseSystem::circle_rotation(self.alpha).unwrap()
    }

    pub fn build(&self, base: &BaseSystem) -> TriangularCocycle {
        let (l, s, e) = (self.lam, self.sig, self.eta);
        TriangularCocycle::from_entries(move |x| l.eval(x), move |x| s.eval(x), move |x| e.eval(x), base).unwrap()
    }
}

/// `R(phi(x)) [[eta, s(x)], [0, lam(x)]]` with a wide gap and a small twist.
#[derive(Debug, Clone, Copy)]
pub struct DomParams {
    pub alpha: f64,
    pub eta: f64,
    pub lam: Wave,
    pub shear: Wave,
    pub twist: Wave,
    pub flip: bool,
}

impl DomParams {
    pub fn random(r: &mut ChaCha8Rng) -> Self {
        let constant = r.gen_bool(0.2);
        let amp = |r: &mut ChaCha8Rng, hi: f64| if constant { 0.0 } else { r.gen_range(0.0..hi) };
        let (lc, la) = (r.gen_range(0.3..0.8), amp(r, 0.1));
        let (sc, sa) = (r.gen_range(-0.5..0.5), amp(r, 0.5));
        let (tc, ta) = (r.gen_range(-0.1..0.1), amp(r, 0.1));
        DomParams {
            alpha: r.gen_range(0.05..0.95),
            eta: r.gen_range(1.5..3.0),
            lam: Wave::random(r, lc, la),
            shear: Wave::random(r, sc, sa),
            twist: Wave::random(r, tc, ta),
            flip: r.gen_bool(0.2),
        }
    }

    pub fn base(&self) -> BaseSystem {
        BaseSystem::circle_rotation(self.alpha).unwrap()
    }

    pub fn cocycle(&self) -> CocycleSpec {
        let p = *self;
        let sign = if p.flip { -1.0 } else { 1.0 };
        CocycleSpec::new(
            move |x| Rotation::new(p.twist.eval(x)).matrix() * Mat2::new(p.eta, p.shear.eval(x), 0.0, sign * p.lam.eval(x)),
            !p.flip,
        )
    }
}
