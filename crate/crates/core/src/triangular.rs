//! Quasi-conjugation of a dominated cocycle to a lower-triangular one.
//!
//! With `u(x)` a unit vector spanning the strong direction, `B = [u^perp | u]`
//! and `D = [v^perp | v]` for `v = A u / |A u|`, the matrix `H = D^{-1} A B` has
//! a zero upper-right entry and `H[1][1] = |A u| > 0`. Flipping the sign of `u`
//! flips both `B` and `D`, so `H` does not depend on the sign choice.

use crate::base::{BaseSystem, Point};
use crate::cocycle::{sample_mean, vector_growth, CocycleSpec, DEFAULT_BURN_IN};
use crate::domination::{strong_section, SectionOptions};
use crate::error::{CocycleError, Result};
use crate::mat2::{norm2, perp, Mat2};
use rayon::prelude::*;
use serde::Serialize;
use std::sync::Arc;

pub type EntryFn = Arc<dyn Fn(&Point) -> f64 + Send + Sync>;

/// Headroom added to the largest sampled `lambda / eta`.
pub const TAU_HEADROOM: f64 = 0.01;
const TAU_SAMPLES: usize = 64;
const TAU_SEED: u64 = 0x7a75;

/// The entries of `H(x) = [[lam, 0], [sig, eta]]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TriEntries {
    pub lam: f64,
    pub sig: f64,
    pub eta: f64,
}

impl TriEntries {
    pub fn matrix(&self) -> Mat2 {
        Mat2::lower(self.lam, self.sig, self.eta)
    }

    pub fn ratio(&self) -> f64 {
        self.lam / self.eta
    }
}

fn sign_normalized(u: [f64; 2]) -> [f64; 2] {
    if u[1] < 0.0 || (u[1] == 0.0 && u[0] < 0.0) {
        [-u[0], -u[1]]
    } else {
        u
    }
}

/// `H = D_u^{-1} A B_u` and the unit vector `v = A u / |A u|`.
pub fn triangularize_point(a: &Mat2, u: [f64; 2]) -> Result<(Mat2, [f64; 2])> {
    if a.inverse().is_none() {
        return Err(CocycleError::NonInvertible { index: 0, det: a.det() });
    }
    let nu = norm2(u);
    if !((nu - 1.0).abs() < 1e-9) {
        return Err(CocycleError::InvalidInput(format!("frame vector has norm {nu}")));
    }
    let b = Mat2::from_columns(perp(u), u);
    let au = a.apply(u);
    let s = norm2(au);
    let v = [au[0] / s, au[1] / s];
    let d = Mat2::from_columns(perp(v), v);
    let mut h = d.transpose() * *a * b;
    debug_assert!(h.b.abs() <= 1e-12 * a.max_abs().max(1.0));
    h.b = 0.0;
    // exact by construction: the second column of B is mapped onto v
    h.d = s;
    Ok((h, v))
}

#[derive(Clone)]
enum Source {
    Native {
        lam: EntryFn,
        sig: EntryFn,
        eta: EntryFn,
    },
    Derived {
        cocycle: CocycleSpec,
        base: BaseSystem,
        section: SectionOptions,
    },
}

/// Lower-triangular cocycle `H`, either given by its entry functions or
/// obtained from a dominated cocycle `A` through its strong section.
#[derive(Clone)]
pub struct TriangularCocycle {
    source: Source,
    /// Uniform bound on `lambda / eta` (sampled maximum plus headroom).
    pub tau: f64,
}

impl std::fmt::Debug for TriangularCocycle {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let kind = match self.source {
            Source::Native { .. } => "native",
            Source::Derived { .. } => "derived",
        };
        f.debug_struct("TriangularCocycle")
            .field("source", &kind)
            .field("tau", &self.tau)
            .finish()
    }
}

impl TriangularCocycle {
    /// From entry functions; validated on a fixed sample of `base`.
    pub fn from_entries<L, S, E>(lam: L, sig: S, eta: E, base: &BaseSystem) -> Result<Self>
    where
        L: Fn(&Point) -> f64 + Send + Sync + 'static,
        S: Fn(&Point) -> f64 + Send + Sync + 'static,
        E: Fn(&Point) -> f64 + Send + Sync + 'static,
    {
        let mut tri = TriangularCocycle {
            source: Source::Native {
                lam: Arc::new(lam),
                sig: Arc::new(sig),
                eta: Arc::new(eta),
            },
            tau: f64::NAN,
        };
        tri.tau = tri.estimate_tau(base)?;
        Ok(tri)
    }

    pub fn constant(lam: f64, sig: f64, eta: f64, base: &BaseSystem) -> Result<Self> {
        Self::from_entries(move |_| lam, move |_| sig, move |_| eta, base)
    }

    /// Quasi-conjugate of a dominated cocycle.
    pub fn build(cocycle: &CocycleSpec, base: &BaseSystem, section: SectionOptions) -> Result<Self> {
        let mut tri = TriangularCocycle {
            source: Source::Derived {
                cocycle: cocycle.clone(),
                base: base.clone(),
                section,
            },
            tau: f64::NAN,
        };
        tri.tau = tri.estimate_tau(base)?;
        Ok(tri)
    }

    pub fn is_derived(&self) -> bool {
        matches!(self.source, Source::Derived { .. })
    }

    fn estimate_tau(&self, base: &BaseSystem) -> Result<f64> {
        let points = base.sample_measure(TAU_SAMPLES, TAU_SEED);
        let entries: Vec<TriEntries> = points.par_iter().map(|x| self.entries_at(x)).collect::<Result<_>>()?;
        let mut worst: f64 = 0.0;
        for (x, e) in points.iter().zip(&entries) {
            check_entries(e, x)?;
            worst = worst.max(e.ratio().abs());
        }
        let tau = worst + TAU_HEADROOM;
        if tau >= 1.0 {
            return Err(CocycleError::Data(format!(
                "sampled lambda/eta reaches {worst:.6}: no uniform bound tau < 1"
            )));
        }
        Ok(tau)
    }

    /// Strong direction at `x` as a sign-normalized unit vector.
    fn frame_at(cocycle: &CocycleSpec, base: &BaseSystem, section: &SectionOptions, x: &Point) -> Result<[f64; 2]> {
        let s = strong_section(cocycle, base, x, section)?;
        if !s.converged {
            return Err(CocycleError::Inconclusive {
                reason: format!("strong section at {x} did not converge"),
                residual: s.residual,
            });
        }
        Ok(s.slope.unit_vector())
    }

    fn derived_entries(cocycle: &CocycleSpec, a: &Mat2, u: [f64; 2]) -> Result<(TriEntries, [f64; 2])> {
        let (h, v) = triangularize_point(a, u)?;
        let e = TriEntries {
            lam: h.a,
            sig: h.c,
            eta: h.d,
        };
        if cocycle.orientation_preserving && !(e.lam > 0.0) {
            return Err(CocycleError::Data(format!(
                "lambda = {} <= 0 for an orientation-preserving cocycle: wrong section",
                e.lam
            )));
        }
        Ok((e, v))
    }

    /// Entries at a single point. For a derived cocycle this solves the strong section at `x`.
    pub fn entries_at(&self, x: &Point) -> Result<TriEntries> {
        match &self.source {
            Source::Native { lam, sig, eta } => Ok(TriEntries {
                lam: lam(x),
                sig: sig(x),
                eta: eta(x),
            }),
            Source::Derived { cocycle, base, section } => {
                let u = Self::frame_at(cocycle, base, section, x)?;
                let a = cocycle.checked_at(x, 0)?;
                Ok(Self::derived_entries(cocycle, &a, u)?.0)
            }
        }
    }

    /// Entries at `T^{start + j} x` for `j = 0..len`.
    ///
    /// A derived cocycle solves the section once at the first point and carries
    /// it forward with `u(Ty) = +-A(y)u(y)/|A(y)u(y)|`, which is stable since `F` attracts.
    pub fn orbit_entries(&self, base: &BaseSystem, x: &Point, start: i64, len: usize) -> Result<Vec<TriEntries>> {
        let mut y = base.iterate(x, start);
        let mut out = Vec::with_capacity(len);
        match &self.source {
            Source::Native { .. } => {
                for _ in 0..len {
                    out.push(self.entries_at(&y)?);
                    y = base.forward(&y);
                }
            }
            Source::Derived { cocycle, section, .. } => {
                if len == 0 {
                    return Ok(out);
                }
                let mut u = Self::frame_at(cocycle, base, section, &y)?;
                for j in 0..len {
                    let a = cocycle.checked_at(&y, start + j as i64)?;
                    let (e, v) = Self::derived_entries(cocycle, &a, u)?;
                    out.push(e);
                    u = sign_normalized(v);
                    y = base.forward(&y);
                }
            }
        }
        Ok(out)
    }

    /// Cocycle with the same exponents and the same domination behavior as `H`:
    /// `A` itself for a derived cocycle, the pointwise `H` otherwise.
    pub fn direct_cocycle(&self) -> CocycleSpec {
        match &self.source {
            Source::Derived { cocycle, .. } => cocycle.clone(),
            Source::Native { lam, sig, eta } => {
                let (lam, sig, eta) = (lam.clone(), sig.clone(), eta.clone());
                CocycleSpec::new(move |x| Mat2::lower(lam(x), sig(x), eta(x)), true)
            }
        }
    }

    /// Top exponent of `H` itself, by vector growth along carried orbits.
    pub fn lyap_plus_h(&self, base: &BaseSystem, n: usize, samples: usize, seed: u64) -> Result<f64> {
        if n == 0 || samples == 0 {
            return Err(CocycleError::InvalidInput("need n >= 1 and samples >= 1".into()));
        }
        let points = base.sample_measure(samples, seed);
        sample_mean(&points, |x| {
            let entries = self.orbit_entries(base, x, 0, DEFAULT_BURN_IN + n)?;
            let g = vector_growth(entries.iter().map(|e| Ok(e.matrix())), DEFAULT_BURN_IN, n)?;
            Ok(g / n as f64)
        })
    }
}

fn check_entries(e: &TriEntries, x: &Point) -> Result<()> {
    if !(e.lam.is_finite() && e.sig.is_finite() && e.eta.is_finite()) {
        return Err(CocycleError::Data(format!("non-finite entries at {x}")));
    }
    if !(e.eta > 0.0) {
        return Err(CocycleError::Data(format!("eta = {} <= 0 at {x}", e.eta)));
    }
    if !(e.eta > e.lam.abs()) {
        return Err(CocycleError::Data(format!(
            "eta = {} does not exceed |lambda| = {} at {x}",
            e.eta,
            e.lam.abs()
        )));
    }
    Ok(())
}

/// Largest relative gap `| |A^n(x)| - |H^n(x)| | / |A^n(x)|` over `1 <= n <= n_max`.
pub fn check_norm_equality(
    cocycle: &CocycleSpec,
    tri: &TriangularCocycle,
    base: &BaseSystem,
    x: &Point,
    n_max: usize,
) -> Result<f64> {
    let entries = tri.orbit_entries(base, x, 0, n_max)?;
    let (mut pa, mut ph) = (Mat2::IDENTITY, Mat2::IDENTITY);
    let (mut la, mut lh) = (0.0, 0.0);
    let mut y = *x;
    let mut worst: f64 = 0.0;
    for (j, e) in entries.iter().enumerate() {
        pa = cocycle.checked_at(&y, j as i64)? * pa;
        ph = e.matrix() * ph;
        let (sa, sh) = (pa.max_abs(), ph.max_abs());
        pa = pa.scale(1.0 / sa);
        ph = ph.scale(1.0 / sh);
        la += sa.ln();
        lh += sh.ln();
        let log_ratio = (ph.norm().ln() + lh) - (pa.norm().ln() + la);
        worst = worst.max(log_ratio.exp_m1().abs());
        y = base.forward(&y);
    }
    Ok(worst)
}

/// Largest `|lambda_n(x)| / eta_n(x) / tau^n` over `1 <= n <= n_max` along the orbit of `x`.
pub fn ratio_decay_factor(tri: &TriangularCocycle, base: &BaseSystem, x: &Point, n_max: usize) -> Result<f64> {
    let entries = tri.orbit_entries(base, x, 0, n_max)?;
    let mut log_ratio = 0.0;
    let mut worst = f64::NEG_INFINITY;
    for (k, e) in entries.iter().enumerate() {
        log_ratio += e.lam.abs().ln() - e.eta.ln();
        worst = worst.max(log_ratio - (k + 1) as f64 * tri.tau.ln());
    }
    Ok(worst.exp())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mat2::Rotation;

    fn circle() -> BaseSystem {
        BaseSystem::circle_rotation(2f64.sqrt() - 1.0).unwrap()
    }

    #[test]
    fn lower_triangular_is_fixed() {
        let a = Mat2::lower(0.5, 0.7, 2.0);
        let (h, v) = triangularize_point(&a, [0.0, 1.0]).unwrap();
        assert!(h.approx_eq(&a, 1e-15));
        assert!((v[0] - 0.0).abs() < 1e-15 && (v[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn diagonal_with_first_axis() {
        let (h, _) = triangularize_point(&Mat2::diag(2.0, 0.5), [1.0, 0.0]).unwrap();
        assert!(h.approx_eq(&Mat2::diag(0.5, 2.0), 1e-15));
    }

    #[test]
    fn shear_frame() {
        let a = Mat2::new(1.0, 1.0, 0.0, 1.0);
        let (h, v) = triangularize_point(&a, [0.0, 1.0]).unwrap();
        let r = 0.5f64.sqrt();
        assert!((v[0] - r).abs() < 1e-15 && (v[1] - r).abs() < 1e-15);
        assert_eq!(h.b, 0.0);
        assert!((h.d - 2f64.sqrt()).abs() < 1e-15);
        assert!((h.det() - a.det()).abs() < 1e-12);
        assert!((h.norm() - a.norm()).abs() < 1e-12);
    }

    #[test]
    fn sign_of_frame_is_irrelevant() {
        let a = Mat2::new(1.3, -0.4, 0.8, 0.9);
        let u = [0.6, 0.8];
        let (h1, _) = triangularize_point(&a, u).unwrap();
        let (h2, _) = triangularize_point(&a, [-0.6, -0.8]).unwrap();
        assert!(h1.approx_eq(&h2, 1e-15));
    }

    #[test]
    fn singular_matrix_rejected() {
        assert!(matches!(
            triangularize_point(&Mat2::new(1.0, 2.0, 2.0, 4.0), [0.0, 1.0]),
            Err(CocycleError::NonInvertible { .. })
        ));
    }

    #[test]
    fn build_from_diagonal() {
        let tri = TriangularCocycle::build(
            &CocycleSpec::constant(Mat2::diag(2.0, 0.5)),
            &circle(),
            SectionOptions::default(),
        )
        .unwrap();
        let e = tri.entries_at(&Point::Circle(0.3)).unwrap();
        assert!((e.lam - 0.5).abs() < 1e-12 && e.sig.abs() < 1e-12 && (e.eta - 2.0).abs() < 1e-12);
        assert!((tri.tau - 0.26).abs() < 1e-12);
    }

    #[test]
    fn build_from_lower_triangular_is_identity_map() {
        let a = Mat2::lower(0.5, 0.3, 2.0);
        let tri = TriangularCocycle::build(&CocycleSpec::constant(a), &circle(), SectionOptions::default()).unwrap();
        let es = tri.orbit_entries(&circle(), &Point::Circle(0.1), -3, 10).unwrap();
        for e in es {
            assert!(e.matrix().approx_eq(&a, 1e-12));
        }
    }

    #[test]
    fn rotation_is_not_triangularizable() {
        let r = CocycleSpec::constant(Rotation::new(0.5).matrix());
        assert!(TriangularCocycle::build(&r, &circle(), SectionOptions::default()).is_err());
    }

    #[test]
    fn invalid_entries_rejected() {
        assert!(TriangularCocycle::constant(2.0, 0.0, 1.0, &circle()).is_err());
        assert!(TriangularCocycle::constant(0.5, 0.0, -1.0, &circle()).is_err());
    }

    #[test]
    fn norm_equality_on_diagonal() {
        let a = CocycleSpec::constant(Mat2::diag(2.0, 0.5));
        let tri = TriangularCocycle::build(&a, &circle(), SectionOptions::default()).unwrap();
        let err = check_norm_equality(&a, &tri, &circle(), &Point::Circle(0.2), 50).unwrap();
        assert!(err < 1e-12, "{err}");
    }
}
