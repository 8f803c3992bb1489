//! Invariant direction fields and sample-based evidence for or against a
//! dominated splitting.
//!
//! The strong field `F` is the attracting section of the graph transform: a
//! slope at `T^{-N}x` is pushed forward along the orbit by the Möbius action.
//! Three starting slopes (0, infinity, 1) are pushed together; at most one of
//! them can sit on the repelling weak direction, so the closest pair of images
//! converges to `F(x)` and their distance is the residual. Depths are doubled
//! until the residual drops below the tolerance, and the best estimate seen is
//! returned, so a larger depth budget never gives a worse residual.
//!
//! Verdicts are evidence over a finite sample set, not proofs.

use crate::base::{BaseSystem, Direction, Point};
use crate::cocycle::{inverse_cocycle, rotate_family, CocycleSpec};
use crate::error::Result;
use crate::mat2::{norm2, Mat2};
use crate::slope::{mobius_act, Slope};
use rayon::prelude::*;
use serde::Serialize;

/// Margin below which item (3) of the domination definition is accepted.
pub const DOMINATION_BOUND: f64 = 0.5;
/// Margins in `[BOUNDARY_LOW, BOUNDARY_HIGH]` are reported as boundary cells.
pub const BOUNDARY_LOW: f64 = 0.45;
pub const BOUNDARY_HIGH: f64 = 0.55;

const STARTS: [Slope; 3] = [Slope::Finite(0.0), Slope::Infinity, Slope::Finite(1.0)];
const FIRST_DEPTH: usize = 16;
/// Sections closer than this are not transversal.
const TRANSVERSAL_MIN: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SectionOptions {
    /// Maximum push depth `N`.
    pub depth: usize,
    pub tol: f64,
}

impl Default for SectionOptions {
    fn default() -> Self {
        SectionOptions { depth: 4096, tol: 1e-12 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SectionResult {
    pub slope: Slope,
    pub residual: f64,
    pub converged: bool,
    /// Depth at which the returned estimate was produced.
    pub depth: usize,
}

/// Lazily extended backward orbit with the matrices transporting each fiber one step forward.
struct PastOrbit<'a> {
    cocycle: &'a CocycleSpec,
    base: &'a BaseSystem,
    /// `points[k] = T^{-k} x`
    points: Vec<Point>,
    /// `mats[k-1]` maps the fiber at `T^{-k}x` to the fiber at `T^{-k+1}x`.
    mats: Vec<Mat2>,
}

impl<'a> PastOrbit<'a> {
    fn new(cocycle: &'a CocycleSpec, base: &'a BaseSystem, x: &Point) -> Self {
        PastOrbit {
            cocycle,
            base,
            points: vec![*x],
            mats: Vec::new(),
        }
    }

    fn extend_to(&mut self, depth: usize) -> Result<()> {
        while self.mats.len() < depth {
            let y = self.base.step(self.points.last().unwrap(), Direction::Backward);
            let k = self.points.len() as i64;
            self.mats.push(self.cocycle.checked_at(&y, -k)?);
            self.points.push(y);
        }
        Ok(())
    }

    fn push(&self, depth: usize, start: Slope) -> Slope {
        self.mats[..depth].iter().rev().fold(start, |z, m| mobius_act(m, z))
    }
}

/// Closest pair among the pushed images: `(estimate, distance)`.
fn closest_pair(images: &[Slope; 3]) -> (Slope, f64) {
    let mut best = (images[0], f64::INFINITY);
    for i in 0..3 {
        for j in i + 1..3 {
            let d = images[i].distance(&images[j]);
            if d < best.1 {
                best = (images[i], d);
            }
        }
    }
    best
}

/// Strong (dominant) direction `F(x)` by the forward graph transform from the past.
///
/// Non-convergence is reported through `converged = false`, not as an error.
pub fn strong_section(cocycle: &CocycleSpec, base: &BaseSystem, x: &Point, opts: &SectionOptions) -> Result<SectionResult> {
    let mut past = PastOrbit::new(cocycle, base, x);
    let max_depth = opts.depth.max(1);
    let mut best = SectionResult {
        slope: Slope::ZERO,
        residual: f64::INFINITY,
        converged: false,
        depth: 0,
    };
    let mut depth = FIRST_DEPTH.min(max_depth);
    loop {
        past.extend_to(depth)?;
        let images = [
            past.push(depth, STARTS[0]),
            past.push(depth, STARTS[1]),
            past.push(depth, STARTS[2]),
        ];
        let (slope, residual) = closest_pair(&images);
        if residual < best.residual {
            best = SectionResult {
                slope,
                residual,
                converged: residual <= opts.tol,
                depth,
            };
        }
        if best.converged || depth == max_depth {
            break;
        }
        depth = (2 * depth).min(max_depth);
    }
    Ok(best)
}

/// Weak direction `E(x)`: the strong direction of the inverse cocycle over `T^{-1}`.
pub fn weak_section(cocycle: &CocycleSpec, base: &BaseSystem, x: &Point, opts: &SectionOptions) -> Result<SectionResult> {
    let inv = inverse_cocycle(cocycle, base);
    strong_section(&inv, &base.inverse(), x, opts)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SectionSample {
    pub x: Point,
    pub strong: Slope,
    pub weak: Slope,
    /// Larger of the two section residuals.
    pub residual: f64,
    pub converged: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Dominated,
    NotDominated,
    Inconclusive,
}

impl Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::Dominated => "dominated",
            Verdict::NotDominated => "not_dominated",
            Verdict::Inconclusive => "inconclusive",
        }
    }
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Concrete evidence of non-domination: the singular-value gap of `A^n(x)`
/// grows at rate `gap_rate` per step, below the floor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Witness {
    pub x: Point,
    pub n: usize,
    pub gap_rate: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DominationOptions {
    pub samples: usize,
    pub l_max: usize,
    pub section: SectionOptions,
    pub n_probe: usize,
    pub gap_floor: f64,
    pub seed: u64,
    /// Keeps sampled coordinates this far from the fundamental-domain boundary.
    pub sample_margin: f64,
}

impl Default for DominationOptions {
    fn default() -> Self {
        DominationOptions {
            samples: 32,
            l_max: 64,
            section: SectionOptions::default(),
            n_probe: 200,
            gap_floor: 0.02,
            seed: 0,
            sample_margin: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DominationCertificate {
    /// Least `l` whose margin is below the boundary band, if any.
    pub l: Option<usize>,
    /// `max_x |A^l(x)|E| * |A^{-l}(T^l x)|F|` at `l`, or the smallest such value over
    /// `1..=l_max` when no `l` qualifies.
    pub margin: f64,
    pub samples: Vec<SectionSample>,
    pub verdict: Verdict,
    /// Smallest observed singular-gap growth rate.
    pub gap_rate: f64,
    pub witness: Option<Witness>,
}

/// `|A^l(x) e| / |A^l(x) f|` for `l = 1..=l_max`, with unit `e` in `E(x)`, `f` in `F(x)`.
///
/// Equals the domination product since `A^{-l}(T^l x)` restricted to `F(T^l x)`
/// has norm `1 / |A^l(x) f|`.
fn margin_profile(cocycle: &CocycleSpec, base: &BaseSystem, s: &SectionSample, l_max: usize) -> Result<Vec<f64>> {
    let mut e = s.weak.unit_vector();
    let mut f = s.strong.unit_vector();
    let mut log_ratio = 0.0;
    let mut y = s.x;
    let mut out = Vec::with_capacity(l_max);
    for l in 0..l_max {
        let m = cocycle.checked_at(&y, l as i64)?;
        e = m.apply(e);
        f = m.apply(f);
        let (ne, nf) = (norm2(e), norm2(f));
        log_ratio += ne.ln() - nf.ln();
        e = [e[0] / ne, e[1] / ne];
        f = [f[0] / nf, f[1] / nf];
        out.push(log_ratio.exp());
        y = base.forward(&y);
    }
    Ok(out)
}

/// Smallest singular-gap growth rate `(1/n) log(s1/s2)` of `A^n(x)` over the sample
/// points and `n` in `[n_probe/2, n_probe]`.
///
/// `log s2` is taken as `log|det| - log s1`, so the ratio does not saturate at
/// the inverse machine epsilon.
pub fn min_gap_rate(cocycle: &CocycleSpec, base: &BaseSystem, points: &[Point], n_probe: usize) -> Result<Witness> {
    let lo = (n_probe / 2).max(1);
    let per_point: Vec<Witness> = points
        .par_iter()
        .map(|x| {
            let mut p = Mat2::IDENTITY;
            let (mut log_scale, mut log_det) = (0.0, 0.0);
            let mut y = *x;
            let mut best = Witness {
                x: *x,
                n: n_probe,
                gap_rate: f64::INFINITY,
            };
            for k in 1..=n_probe {
                let m = cocycle.checked_at(&y, k as i64 - 1)?;
                log_det += m.det().abs().ln();
                p = m * p;
                let s = p.max_abs();
                p = p.scale(1.0 / s);
                log_scale += s.ln();
                if k >= lo {
                    let log_s1 = p.norm().ln() + log_scale;
                    let rate = ((2.0 * log_s1 - log_det) / k as f64).max(0.0);
                    if rate < best.gap_rate {
                        best = Witness {
                            x: *x,
                            n: k,
                            gap_rate: rate,
                        };
                    }
                }
                y = base.forward(&y);
            }
            Ok(best)
        })
        .collect::<Result<_>>()?;
    Ok(per_point
        .into_iter()
        .fold(None::<Witness>, |acc, w| match acc {
            Some(a) if a.gap_rate <= w.gap_rate => Some(a),
            _ => Some(w),
        })
        .expect("at least one sample point"))
}

/// Witness of non-domination when the singular-gap rate falls below `gap_floor`.
pub fn refute(
    cocycle: &CocycleSpec,
    base: &BaseSystem,
    points: &[Point],
    n_probe: usize,
    gap_floor: f64,
) -> Result<Option<Witness>> {
    let w = min_gap_rate(cocycle, base, points, n_probe.max(2))?;
    Ok((w.gap_rate < gap_floor).then_some(w))
}

/// Sample sections, domination margins for `l = 1..=l_max`, and a refutation probe.
pub fn certify(cocycle: &CocycleSpec, base: &BaseSystem, opts: &DominationOptions) -> Result<DominationCertificate> {
    let points = base.sample_measure_with_margin(opts.samples.max(1), opts.seed, opts.sample_margin);
    let samples: Vec<SectionSample> = points
        .par_iter()
        .map(|x| {
            let f = strong_section(cocycle, base, x, &opts.section)?;
            let e = weak_section(cocycle, base, x, &opts.section)?;
            let transversal = f.slope.distance(&e.slope) > TRANSVERSAL_MIN;
            Ok(SectionSample {
                x: *x,
                strong: f.slope,
                weak: e.slope,
                residual: f.residual.max(e.residual),
                converged: f.converged && e.converged && transversal,
            })
        })
        .collect::<Result<_>>()?;

    let l_max = opts.l_max.max(1);
    let profiles: Vec<Vec<f64>> = samples
        .par_iter()
        .map(|s| margin_profile(cocycle, base, s, l_max))
        .collect::<Result<_>>()?;
    let margins: Vec<f64> = (0..l_max)
        .map(|l| profiles.iter().map(|p| p[l]).fold(0.0, f64::max))
        .collect();

    let all_converged = samples.iter().all(|s| s.converged);
    let l = if all_converged {
        margins.iter().position(|&m| m < BOUNDARY_LOW).map(|i| i + 1)
    } else {
        None
    };
    let margin = match l {
        Some(l) => margins[l - 1],
        None => margins.iter().copied().fold(f64::INFINITY, f64::min),
    };

    let probe = min_gap_rate(cocycle, base, &points, opts.n_probe.max(2))?;
    let witness = (probe.gap_rate < opts.gap_floor).then_some(probe);

    let verdict = match (l.is_some(), witness.is_some()) {
        (true, false) => Verdict::Dominated,
        (false, true) => Verdict::NotDominated,
        // conflicting or missing evidence
        _ => Verdict::Inconclusive,
    };
    log::debug!(
        "certify: verdict={verdict} l={l:?} margin={margin:.4} gap_rate={:.4}",
        probe.gap_rate
    );
    Ok(DominationCertificate {
        l,
        margin,
        samples,
        verdict,
        gap_rate: probe.gap_rate,
        witness,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DsetRow {
    pub theta: f64,
    pub verdict: Verdict,
    pub l: Option<usize>,
    pub margin: f64,
    pub gap_rate: f64,
}

/// Domination verdicts of `A R_theta` over a parameter grid, sorted by `theta`.
pub fn dset_sweep(
    cocycle: &CocycleSpec,
    base: &BaseSystem,
    theta_grid: &[f64],
    opts: &DominationOptions,
) -> Result<Vec<DsetRow>> {
    if theta_grid.is_empty() {
        return Err(crate::error::CocycleError::InvalidInput("empty theta grid".into()));
    }
    let mut rows: Vec<DsetRow> = theta_grid
        .par_iter()
        .map(|&theta| {
            let cert = certify(&rotate_family(cocycle, theta), base, opts)?;
            Ok(DsetRow {
                theta,
                verdict: cert.verdict,
                l: cert.l,
                margin: cert.margin,
                gap_rate: cert.gap_rate,
            })
        })
        .collect::<Result<_>>()?;
    rows.sort_by(|a, b| a.theta.total_cmp(&b.theta));
    Ok(rows)
}

/// Maximal runs of equal verdicts: `(verdict, first theta, last theta)`.
pub fn verdict_runs(rows: &[DsetRow]) -> Vec<(Verdict, f64, f64)> {
    let mut runs: Vec<(Verdict, f64, f64)> = Vec::new();
    for r in rows {
        match runs.last_mut() {
            Some(last) if last.0 == r.verdict => last.2 = r.theta,
            _ => runs.push((r.verdict, r.theta, r.theta)),
        }
    }
    runs
}

/// Checks that `A^l(x)` maps the spherical disk of radius `r0` around `F(x)`
/// into the disk of the same radius around `F(T^l x)`.
pub fn disk_contraction_holds(
    cocycle: &CocycleSpec,
    base: &BaseSystem,
    x: &Point,
    l: usize,
    r0: f64,
    section: &SectionOptions,
) -> Result<bool> {
    let here = strong_section(cocycle, base, x, section)?;
    let there = strong_section(cocycle, base, &base.iterate(x, l as i64), section)?;
    let prod = crate::cocycle::compose_n(cocycle, base, x, l as i64)?;
    let half = r0.clamp(0.0, 1.0).asin();
    let phi = here.slope.angle();
    let lo = mobius_act(&prod, Slope::from_angle(phi - half));
    let hi = mobius_act(&prod, Slope::from_angle(phi + half));
    let centre = mobius_act(&prod, here.slope);
    let a = there.slope.signed_angle_to(&lo);
    let b = there.slope.signed_angle_to(&hi);
    let c = there.slope.signed_angle_to(&centre);
    // the image arc runs from lo through centre to hi
    let inside = a.abs() < half && b.abs() < half && c.abs() < half;
    let ordered = (a < c && c < b) || (b < c && c < a);
    Ok(inside && ordered)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mat2::Rotation;
    use std::f64::consts::PI;

    fn base() -> BaseSystem {
        BaseSystem::circle_rotation(2f64.sqrt() - 1.0).unwrap()
    }

    fn x0() -> Point {
        Point::Circle(0.25)
    }

    fn opts() -> SectionOptions {
        SectionOptions::default()
    }

    #[test]
    fn strong_section_of_lower_triangular_is_zero() {
        let h = CocycleSpec::constant(Mat2::lower(0.5, 0.0, 2.0));
        let s = strong_section(&h, &base(), &x0(), &opts()).unwrap();
        assert!(s.converged);
        assert!(s.slope.distance(&Slope::ZERO) < 1e-12);
    }

    #[test]
    fn diagonal_sections() {
        // starting slope 0 is exactly the weak direction here
        let a = CocycleSpec::constant(Mat2::diag(2.0, 0.5));
        let f = strong_section(&a, &base(), &x0(), &opts()).unwrap();
        assert!(f.converged);
        assert!(f.slope.distance(&Slope::Infinity) < 1e-12);
        let e = weak_section(&a, &base(), &x0(), &opts()).unwrap();
        assert!(e.converged);
        assert!(e.slope.distance(&Slope::ZERO) < 1e-12);
    }

    #[test]
    fn lower_triangular_sections() {
        let a = CocycleSpec::constant(Mat2::new(0.5, 0.0, 1.0, 2.0));
        let f = strong_section(&a, &base(), &x0(), &opts()).unwrap();
        assert!(f.slope.distance(&Slope::ZERO) < 1e-12);
        let e = weak_section(&a, &base(), &x0(), &opts()).unwrap();
        assert!(e.converged);
        assert!(e.slope.distance(&Slope::Finite(-1.5)) < 1e-12, "{}", e.slope);
    }

    #[test]
    fn rotation_sections_do_not_converge() {
        let r = CocycleSpec::constant(Rotation::new(PI / 3.0).matrix());
        assert!(!weak_section(&r, &base(), &x0(), &opts()).unwrap().converged);
        assert!(!strong_section(&r, &base(), &x0(), &opts()).unwrap().converged);
    }

    #[test]
    fn certify_diagonal() {
        let a = CocycleSpec::constant(Mat2::diag(2.0, 0.5));
        let c = certify(&a, &base(), &DominationOptions::default()).unwrap();
        assert_eq!(c.verdict, Verdict::Dominated);
        assert_eq!(c.l, Some(1));
        assert!((c.margin - 0.25).abs() < 1e-12);
        assert!(c.witness.is_none());
    }

    #[test]
    fn certify_rotation() {
        let r = CocycleSpec::constant(Rotation::new(0.4).matrix());
        let c = certify(&r, &base(), &DominationOptions::default()).unwrap();
        assert_eq!(c.verdict, Verdict::NotDominated);
        assert!((c.margin - 1.0).abs() < 1e-9);
        assert!(c.witness.unwrap().gap_rate < 1e-9);
    }

    #[test]
    fn elliptic_square_root_of_minus_identity() {
        let m = Mat2::lower(0.5, 0.0, 2.0) * Rotation::new(PI / 2.0).matrix();
        assert!((m * m).approx_eq(&-Mat2::IDENTITY, 1e-15));
        let a = CocycleSpec::constant(m);
        let c = certify(&a, &base(), &DominationOptions::default()).unwrap();
        assert_eq!(c.verdict, Verdict::NotDominated);
    }

    #[test]
    fn refute_examples() {
        let pts = base().sample_measure(4, 1);
        let r = CocycleSpec::constant(Rotation::new(1.1).matrix());
        let w = refute(&r, &base(), &pts, 200, 0.02).unwrap().unwrap();
        assert!(w.gap_rate.abs() < 1e-12);
        let d = CocycleSpec::constant(Mat2::diag(2.0, 0.5));
        assert!(refute(&d, &base(), &pts, 20, 0.02).unwrap().is_none());
        let g = min_gap_rate(&d, &base(), &pts, 20).unwrap();
        assert!((g.gap_rate - 2.0 * 2f64.ln()).abs() < 1e-12);
        let e = CocycleSpec::constant(Mat2::diag(2.0, 0.5) * Rotation::new(PI / 2.0).matrix());
        assert!(refute(&e, &base(), &pts, 200, 0.02).unwrap().is_some());
    }

    #[test]
    fn sweep_of_diagonal_family() {
        let a = CocycleSpec::constant(Mat2::diag(2.0, 0.5));
        let rows = dset_sweep(&a, &base(), &[PI / 2.0, 0.0, 0.3], &DominationOptions::default()).unwrap();
        assert_eq!(rows.iter().map(|r| r.theta).collect::<Vec<_>>(), vec![0.0, 0.3, PI / 2.0]);
        assert_eq!(rows[0].verdict, Verdict::Dominated);
        assert_eq!(rows[1].verdict, Verdict::Dominated);
        assert_eq!(rows[2].verdict, Verdict::NotDominated);
        let runs = verdict_runs(&rows);
        assert_eq!(runs.len(), 2);
        assert!(dset_sweep(&a, &base(), &[], &DominationOptions::default()).is_err());
    }

    #[test]
    fn larger_depth_never_worsens_residual() {
        // weakly dominated: slow convergence, so small depths are not yet converged
        let a = CocycleSpec::constant(Mat2::diag(2.0, 0.5) * Rotation::new(0.64).matrix());
        let x = x0();
        let mut last = f64::INFINITY;
        for depth in [4, 16, 40, 100, 250, 600, 2000] {
            let s = strong_section(&a, &base(), &x, &SectionOptions { depth, tol: 1e-14 }).unwrap();
            assert!(s.residual <= last + 1e-12, "depth {depth}: {} > {last}", s.residual);
            last = s.residual;
        }
        assert!(last < 1e-12);
    }
}
