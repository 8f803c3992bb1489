//! Exponents of the rotated family `H_theta = H R_theta` of a lower-triangular cocycle.
//!
//! `F_theta(x) = span((u_theta(x), 1))` is the strong direction of `H_theta`,
//! and the stretch along it is `t_theta = eta lam / (a - c u_theta(Tx))`, so
//! `lambda^+(theta)` is the average of `log t_theta`. Differentiating the slope
//! update at `theta = 0` gives the recurrences
//!
//! ```text
//! u'(x)  = r(T^-1 x) (u'(T^-1 x) - 1)
//! u''(x) = r(T^-1 x) (u''(T^-1 x) - alpha(T^-1 x) sig(T^-1 x))
//! ```
//!
//! with `r = lam / eta` and `alpha = 2 (u' - 1)^2 / eta`. Running them forward
//! from zero along an orbit segment of length `K` sums the defining series from
//! the deepest term, with truncation error at most `tau^(K+1) / (1 - tau)`.

use crate::base::{BaseSystem, Point};
use crate::cocycle::{lyap_plus_direct, rotate_family, sample_mean};
use crate::domination::{certify, DominationOptions, Verdict};
use crate::error::{CocycleError, Result};
use crate::mat2::Mat2;
use crate::slope::{mobius_act, Slope};
use crate::sum::CompensatedSum;
use crate::triangular::{TriEntries, TriangularCocycle};
use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::PI;

/// Target for the geometric tail of the derivative series.
pub const SERIES_TAIL: f64 = 1e-12;
pub const MAX_TRUNCATION: usize = 200;

/// Entries of `(H R_theta)(x)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ThetaEntries {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl ThetaEntries {
    pub fn matrix(&self) -> Mat2 {
        Mat2::new(self.a, self.b, self.c, self.d)
    }
}

pub fn entries_theta(e: &TriEntries, theta: f64) -> ThetaEntries {
    let (s, c) = theta.sin_cos();
    ThetaEntries {
        a: e.lam * c,
        b: -e.lam * s,
        c: e.sig * c + e.eta * s,
        d: e.eta * c - e.sig * s,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ThetaOptions {
    /// Birkhoff window per sample orbit.
    pub n: usize,
    pub samples: usize,
    pub seed: u64,
    /// Updates of the slope before the window starts.
    pub warmup: usize,
    /// Spherical tolerance for the slope section.
    pub tol: f64,
}

impl Default for ThetaOptions {
    fn default() -> Self {
        ThetaOptions {
            n: 10_000,
            samples: 64,
            seed: 0,
            warmup: 512,
            tol: 1e-10,
        }
    }
}

const STARTS: [Slope; 3] = [Slope::Finite(0.0), Slope::Infinity, Slope::Finite(1.0)];

/// Slopes `u_theta` at the orbit points `warmup..entries.len()`, pushed from three
/// starts at the first point, plus the convergence residual at `warmup`.
fn u_along(entries: &[TriEntries], theta: f64, warmup: usize, tol: f64) -> Result<(Vec<f64>, f64)> {
    assert!(warmup < entries.len());
    let mut z = STARTS;
    for e in &entries[..warmup] {
        let m = entries_theta(e, theta).matrix();
        for zi in z.iter_mut() {
            *zi = mobius_act(&m, *zi);
        }
    }
    let mut best = (z[0], f64::INFINITY);
    for i in 0..3 {
        for j in i + 1..3 {
            let d = z[i].distance(&z[j]);
            if d < best.1 {
                best = (z[i], d);
            }
        }
    }
    let (mut u, residual) = best;
    if !(residual <= tol) {
        return Err(CocycleError::Inconclusive {
            reason: format!("u_theta section at theta = {theta} did not converge in {warmup} steps"),
            residual,
        });
    }
    let mut out = Vec::with_capacity(entries.len() - warmup);
    for (j, e) in entries[warmup..].iter().enumerate() {
        match u {
            Slope::Finite(v) => out.push(v),
            Slope::Infinity => {
                return Err(CocycleError::Inconclusive {
                    reason: format!("u_theta is infinite at orbit index {} (theta = {theta})", warmup + j),
                    residual,
                })
            }
        }
        u = mobius_act(&entries_theta(e, theta).matrix(), u);
    }
    Ok((out, residual))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct USection {
    pub value: f64,
    pub residual: f64,
}

/// `u_theta(x)`, pushing the slope forward from `T^{-m} x`.
pub fn u_theta(tri: &TriangularCocycle, base: &BaseSystem, x: &Point, theta: f64, m: usize, tol: f64) -> Result<USection> {
    let m = m.max(1);
    let entries = tri.orbit_entries(base, x, -(m as i64), m + 1)?;
    let (u, residual) = u_along(&entries, theta, m, tol)?;
    Ok(USection { value: u[0], residual })
}

/// Stretch factor `eta lam / (a_theta - c_theta u)` with `u = u_theta(Tx)`.
pub fn t_theta(e: &TriEntries, theta: f64, u_at_tx: f64) -> Result<f64> {
    let th = entries_theta(e, theta);
    let den = th.a - th.c * u_at_tx;
    if !(den > 0.0) {
        return Err(CocycleError::NonPositiveDenominator { theta, value: den });
    }
    Ok(e.eta * (e.lam / den))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ThetaEstimate {
    pub lambda_plus: f64,
    /// Average of `log |det H|` over the same orbit windows, `lambda^+ + lambda^-`.
    pub det_sum: f64,
    pub residual: f64,
}

impl ThetaEstimate {
    pub fn lambda_minus(&self) -> f64 {
        self.det_sum - self.lambda_plus
    }
}

/// `lambda^+(theta)` as the Birkhoff average of `log t_theta`.
pub fn lyap_plus_theta(tri: &TriangularCocycle, base: &BaseSystem, theta: f64, opts: &ThetaOptions) -> Result<ThetaEstimate> {
    check_window(opts)?;
    let points = base.sample_measure(opts.samples, opts.seed);
    let per: Vec<(f64, f64, f64)> = points
        .par_iter()
        .map(|x| {
            let w = opts.warmup.max(1);
            let entries = tri.orbit_entries(base, x, -(w as i64), w + opts.n + 1)?;
            let (u, residual) = u_along(&entries, theta, w, opts.tol)?;
            let (mut lt, mut ld) = (CompensatedSum::new(), CompensatedSum::new());
            for j in 0..opts.n {
                let e = &entries[w + j];
                if !(e.lam > 0.0) {
                    return Err(CocycleError::Data(format!("lambda = {} <= 0 on the orbit", e.lam)));
                }
                let t = t_theta(e, theta, u[j + 1])?;
                lt.add(t.ln());
                ld.add(e.lam.ln() + e.eta.ln());
            }
            Ok((lt.mean(), ld.mean(), residual))
        })
        .collect::<Result<_>>()?;
    let lambda_plus = per.iter().map(|p| p.0).collect::<CompensatedSum>().mean();
    let det_sum = per.iter().map(|p| p.1).collect::<CompensatedSum>().mean();
    let residual = per.iter().map(|p| p.2).fold(0.0, f64::max);
    Ok(ThetaEstimate {
        lambda_plus,
        det_sum,
        residual,
    })
}

/// `lambda^+ + lambda^-` of `H` (and of every `H_theta`).
pub fn det_sum(tri: &TriangularCocycle, base: &BaseSystem, opts: &ThetaOptions) -> Result<f64> {
    check_window(opts)?;
    let points = base.sample_measure(opts.samples, opts.seed);
    sample_mean(&points, |x| {
        let w = opts.warmup.max(1);
        // same windows as lyap_plus_theta
        let entries = tri.orbit_entries(base, x, -(w as i64), w + opts.n)?;
        Ok(entries[w..]
            .iter()
            .map(|e| e.lam.abs().ln() + e.eta.ln())
            .collect::<CompensatedSum>()
            .mean())
    })
}

fn check_window(opts: &ThetaOptions) -> Result<()> {
    if opts.n == 0 || opts.samples == 0 {
        return Err(CocycleError::InvalidInput("need n >= 1 and samples >= 1".into()));
    }
    Ok(())
}

/// Smallest `K` with `tau^(K+1) / (1 - tau) <= SERIES_TAIL`, capped at [`MAX_TRUNCATION`].
pub fn truncation_k(tau: f64) -> usize {
    if !(tau > 0.0 && tau < 1.0) {
        return MAX_TRUNCATION;
    }
    let k = ((SERIES_TAIL * (1.0 - tau)).ln() / tau.ln()).ceil() - 1.0;
    (k.max(1.0) as usize).min(MAX_TRUNCATION)
}

pub fn series_tail(tau: f64, k: usize) -> f64 {
    tau.powi(k as i32 + 1) / (1.0 - tau)
}

/// First derivative of the slope at every point of the segment, from 0 at the first.
fn udot_chain(entries: &[TriEntries]) -> Vec<f64> {
    let mut out = Vec::with_capacity(entries.len());
    let mut v = 0.0;
    out.push(v);
    for e in &entries[..entries.len() - 1] {
        v = e.ratio() * (v - 1.0);
        out.push(v);
    }
    out
}

pub fn alpha(udot: f64, eta: f64) -> f64 {
    2.0 * (udot - 1.0).powi(2) / eta
}

fn uddot_chain(entries: &[TriEntries], udot: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(entries.len());
    let mut v = 0.0;
    out.push(v);
    for (e, &ud) in entries[..entries.len() - 1].iter().zip(udot) {
        v = e.ratio() * (v - alpha(ud, e.eta) * e.sig);
        out.push(v);
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SeriesValue {
    pub value: f64,
    /// Truncation bound of the partial sum.
    pub bound: f64,
}

/// `u'_0(x)` truncated to `k` terms.
pub fn udot0(tri: &TriangularCocycle, base: &BaseSystem, x: &Point, k: usize) -> Result<SeriesValue> {
    let k = k.max(1);
    let entries = tri.orbit_entries(base, x, -(k as i64), k + 1)?;
    Ok(SeriesValue {
        value: udot_chain(&entries)[k],
        bound: series_tail(tri.tau, k),
    })
}

/// `u''_0(x)` truncated to `k` terms; the `u'_0` values inside `alpha` use `k` terms too.
pub fn uddot0(tri: &TriangularCocycle, base: &BaseSystem, x: &Point, k: usize) -> Result<SeriesValue> {
    let k = k.max(1);
    let entries = tri.orbit_entries(base, x, -2 * k as i64, 2 * k + 1)?;
    let ud = udot_chain(&entries);
    let udd = uddot_chain(&entries, &ud);
    let sup = entries[k..]
        .iter()
        .zip(&ud[k..])
        .map(|(e, &u)| (alpha(u, e.eta) * e.sig).abs())
        .fold(0.0, f64::max);
    Ok(SeriesValue {
        value: udd[2 * k],
        bound: series_tail(tri.tau, k) * sup,
    })
}

pub fn alpha0(tri: &TriangularCocycle, base: &BaseSystem, x: &Point, k: usize) -> Result<f64> {
    let ud = udot0(tri, base, x, k)?;
    Ok(alpha(ud.value, tri.entries_at(x)?.eta))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SeriesOptions {
    pub n: usize,
    pub samples: usize,
    pub seed: u64,
    /// Truncation; `None` picks it from `tau`.
    pub k: Option<usize>,
}

impl Default for SeriesOptions {
    fn default() -> Self {
        SeriesOptions {
            n: 10_000,
            samples: 64,
            seed: 0,
            k: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DerivativeReport {
    pub dlambda0: f64,
    pub ddlambda0: f64,
    pub k: usize,
    pub tau: f64,
    pub udot_bound: f64,
    pub uddot_bound: f64,
    pub sup_alpha_sigma: f64,
    pub n: usize,
    pub samples: usize,
    /// Set when the second derivative is not negative.
    pub anomaly: Option<String>,
}

/// First and second derivatives of `lambda^+(theta)` at 0 from the series.
pub fn derivatives(tri: &TriangularCocycle, base: &BaseSystem, opts: &SeriesOptions) -> Result<DerivativeReport> {
    if opts.n == 0 || opts.samples == 0 {
        return Err(CocycleError::InvalidInput("need n >= 1 and samples >= 1".into()));
    }
    let k = opts.k.unwrap_or_else(|| truncation_k(tri.tau)).max(1);
    let points = base.sample_measure(opts.samples, opts.seed);
    let per: Vec<(f64, f64, f64)> = points
        .par_iter()
        .map(|x| {
            let warm = 2 * k;
            let entries = tri.orbit_entries(base, x, -(warm as i64), warm + opts.n + 1)?;
            let ud = udot_chain(&entries);
            let udd = uddot_chain(&entries, &ud);
            let (mut d1, mut d2) = (CompensatedSum::new(), CompensatedSum::new());
            let mut sup: f64 = 0.0;
            for j in warm..warm + opts.n {
                let e = &entries[j];
                let (u1, u2) = (ud[j + 1], udd[j + 1]);
                let g = e.sig * u1 / e.lam;
                d1.add(g);
                d2.add(1.0 + 2.0 * e.eta * u1 / e.lam + e.sig * u2 / e.lam + g * g);
                sup = sup.max((alpha(ud[j], e.eta) * e.sig).abs());
            }
            Ok((d1.mean(), d2.mean(), sup))
        })
        .collect::<Result<_>>()?;
    let dlambda0 = per.iter().map(|p| p.0).collect::<CompensatedSum>().mean();
    let ddlambda0 = per.iter().map(|p| p.1).collect::<CompensatedSum>().mean();
    let sup = per.iter().map(|p| p.2).fold(0.0, f64::max);
    let anomaly = (!(ddlambda0 < 0.0)).then(|| format!("second derivative at 0 is {ddlambda0:e}, expected < 0"));
    if let Some(a) = &anomaly {
        log::warn!("{a}");
    }
    Ok(DerivativeReport {
        dlambda0,
        ddlambda0,
        k,
        tau: tri.tau,
        udot_bound: series_tail(tri.tau, k),
        uddot_bound: series_tail(tri.tau, k) * sup,
        sup_alpha_sigma: sup,
        n: opts.n,
        samples: opts.samples,
        anomaly,
    })
}

pub fn dlambda0(tri: &TriangularCocycle, base: &BaseSystem, opts: &SeriesOptions) -> Result<f64> {
    Ok(derivatives(tri, base, opts)?.dlambda0)
}

pub fn ddlambda0(tri: &TriangularCocycle, base: &BaseSystem, opts: &SeriesOptions) -> Result<f64> {
    Ok(derivatives(tri, base, opts)?.ddlambda0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepOptions {
    pub theta: ThetaOptions,
    pub domination: DominationOptions,
    /// Also run the direct estimator on every grid point.
    pub direct: bool,
    /// Largest accepted gap between the formula and the direct estimate.
    pub mismatch_tol: f64,
}

impl Default for SweepOptions {
    fn default() -> Self {
        SweepOptions {
            theta: ThetaOptions::default(),
            domination: DominationOptions::default(),
            direct: true,
            mismatch_tol: 1e-3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub theta: f64,
    /// Present only when domination is certified and `t_theta > 0` on every orbit.
    pub lambda_plus_formula: Option<f64>,
    pub lambda_plus_direct: Option<f64>,
    pub lambda_minus: Option<f64>,
    pub verdict: Verdict,
    pub residual: Option<f64>,
    /// Second divided difference of the formula values at neighboring grid points.
    pub ddlambda_estimate: Option<f64>,
    pub anomaly: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
    pub det_sum: f64,
    /// Grid points with a non-negative second difference.
    pub concavity_violations: Vec<f64>,
}

impl SweepResult {
    pub fn anomalies(&self) -> impl Iterator<Item = (f64, &str)> {
        self.rows.iter().filter_map(|r| r.anomaly.as_deref().map(|a| (r.theta, a)))
    }
}

/// Both estimators and the domination verdict on every grid point.
pub fn sweep(tri: &TriangularCocycle, base: &BaseSystem, theta_grid: &[f64], opts: &SweepOptions) -> Result<SweepResult> {
    if theta_grid.is_empty() {
        return Err(CocycleError::InvalidInput("empty theta grid".into()));
    }
    let sum = det_sum(tri, base, &opts.theta)?;
    let direct_cocycle = tri.direct_cocycle();
    let mut rows: Vec<SweepRow> = theta_grid
        .par_iter()
        .map(|&theta| {
            let family = rotate_family(&direct_cocycle, theta);
            let cert = certify(&family, base, &opts.domination)?;
            let formula = match lyap_plus_theta(tri, base, theta, &opts.theta) {
                Ok(est) => Some(est),
                Err(CocycleError::Inconclusive { .. }) | Err(CocycleError::NonPositiveDenominator { .. }) => None,
                Err(e) => return Err(e),
            };
            let direct = if opts.direct {
                let t = &opts.theta;
                Some(lyap_plus_direct(&family, base, t.n, t.samples, t.seed)?)
            } else {
                None
            };
            let lambda_plus_formula = formula.filter(|_| cert.verdict == Verdict::Dominated).map(|f| f.lambda_plus);
            let anomaly = match (lambda_plus_formula, direct) {
                (Some(f), Some(d)) if !((f - d).abs() <= opts.mismatch_tol) => {
                    Some(format!("formula {f:.9} and direct {d:.9} differ by {:.3e}", (f - d).abs()))
                }
                _ => None,
            };
            Ok(SweepRow {
                theta,
                lambda_plus_formula,
                lambda_plus_direct: direct,
                lambda_minus: lambda_plus_formula.or(direct).map(|l| sum - l),
                verdict: cert.verdict,
                residual: formula.map(|f| f.residual),
                ddlambda_estimate: None,
                anomaly,
            })
        })
        .collect::<Result<_>>()?;
    rows.sort_by(|a, b| a.theta.total_cmp(&b.theta));

    let mut violations = Vec::new();
    for i in 1..rows.len().saturating_sub(1) {
        let (p, c, n) = (&rows[i - 1], &rows[i], &rows[i + 1]);
        if let (Some(fp), Some(fc), Some(fn_)) = (p.lambda_plus_formula, c.lambda_plus_formula, n.lambda_plus_formula) {
            let (hm, hp) = (c.theta - p.theta, n.theta - c.theta);
            let dd = 2.0 * ((fn_ - fc) / hp - (fc - fp) / hm) / (hm + hp);
            if !(dd < 0.0) {
                violations.push(c.theta);
            }
            rows[i].ddlambda_estimate = Some(dd);
        }
    }
    Ok(SweepResult {
        rows,
        det_sum: sum,
        concavity_violations: violations,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Both,
    Positive,
    Negative,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IntervalPoint {
    pub theta: f64,
    pub lambda_plus: f64,
    pub lambda_minus: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IntervalReport {
    pub side: Side,
    pub dlambda0: f64,
    pub lambda_plus0: f64,
    pub lambda_minus0: f64,
    /// Closed interval with 0 on its boundary or inside; `None` when nothing qualified.
    pub interval: Option<(f64, f64)>,
    pub witnesses: Vec<IntervalPoint>,
    pub diagnostics: Vec<String>,
    /// Sweep over the grid without `theta = 0`.
    pub rows: Vec<SweepRow>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IntervalOptions {
    pub sweep: SweepOptions,
    pub series: SeriesOptions,
    /// Required drop of `lambda^+` below its value at 0.
    pub strict_margin: f64,
    /// `|dlambda0|` below this counts as zero.
    pub slope_tol: f64,
}

impl Default for IntervalOptions {
    fn default() -> Self {
        IntervalOptions {
            sweep: SweepOptions {
                direct: false,
                ..SweepOptions::default()
            },
            series: SeriesOptions::default(),
            strict_margin: 0.0,
            slope_tol: 1e-6,
        }
    }
}

/// Contiguous run of grid points next to 0 where `lambda^+` drops and `lambda^-` rises.
pub fn hyperbolicity_interval(
    tri: &TriangularCocycle,
    base: &BaseSystem,
    theta_grid: &[f64],
    opts: &IntervalOptions,
) -> Result<IntervalReport> {
    let d1 = dlambda0(tri, base, &opts.series)?;
    let side = if d1.abs() <= opts.slope_tol {
        Side::Both
    } else if d1 < 0.0 {
        Side::Positive
    } else {
        Side::Negative
    };
    let at0 = lyap_plus_theta(tri, base, 0.0, &opts.sweep.theta)?;
    let (lp0, lm0) = (at0.lambda_plus, at0.lambda_minus());
    let grid: Vec<f64> = theta_grid.iter().copied().filter(|t| *t != 0.0).collect();
    let result = sweep(tri, base, &grid, &opts.sweep)?;

    let qualifies = |r: &SweepRow| match (r.lambda_plus_formula, r.lambda_minus) {
        (Some(lp), Some(lm)) => lp < lp0 - opts.strict_margin && lm > lm0 + opts.strict_margin,
        _ => false,
    };
    let mut witnesses = Vec::new();
    let mut diagnostics = Vec::new();
    let positive: Vec<&SweepRow> = result.rows.iter().filter(|r| r.theta > 0.0).collect();
    let negative: Vec<&SweepRow> = result.rows.iter().rev().filter(|r| r.theta < 0.0).collect();
    let mut lo = 0.0f64;
    let mut hi = 0.0f64;
    let mut take = |rows: &[&SweepRow], edge: &mut f64| {
        for r in rows {
            if !qualifies(r) {
                break;
            }
            *edge = r.theta;
            witnesses.push(IntervalPoint {
                theta: r.theta,
                lambda_plus: r.lambda_plus_formula.unwrap(),
                lambda_minus: r.lambda_minus.unwrap(),
            });
        }
    };
    if matches!(side, Side::Both | Side::Positive) {
        take(&positive, &mut hi);
        if positive.is_empty() {
            diagnostics.push("grid has no positive theta".into());
        }
    }
    if matches!(side, Side::Both | Side::Negative) {
        take(&negative, &mut lo);
        if negative.is_empty() {
            diagnostics.push("grid has no negative theta".into());
        }
    }
    witnesses.sort_by(|a, b| a.theta.total_cmp(&b.theta));
    let interval = if witnesses.is_empty() {
        diagnostics.push("no grid point next to 0 qualifies: grid too coarse or window too small".into());
        None
    } else {
        Some((lo, hi))
    };
    Ok(IntervalReport {
        side,
        dlambda0: d1,
        lambda_plus0: lp0,
        lambda_minus0: lm0,
        interval,
        witnesses,
        diagnostics,
        rows: result.rows,
    })
}

/// Max error of the degree-`degree` Chebyshev interpolant of `f` on `[a, b]`,
/// measured at `checks` equally spaced points.
pub fn chebyshev_max_error<F>(f: F, a: f64, b: f64, degree: usize, checks: usize) -> Result<f64>
where
    F: Fn(f64) -> Result<f64> + Sync,
{
    let m = degree + 1;
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let nodes: Vec<f64> = (0..m).map(|k| (PI * (k as f64 + 0.5) / m as f64).cos()).collect();
    let values: Vec<f64> = nodes.par_iter().map(|t| f(mid + half * t)).collect::<Result<_>>()?;
    let coef: Vec<f64> = (0..m)
        .map(|j| {
            let s: f64 = (0..m)
                .map(|k| values[k] * (PI * j as f64 * (k as f64 + 0.5) / m as f64).cos())
                .sum();
            s * 2.0 / m as f64
        })
        .collect();
    let eval = |t: f64| {
        // Clenshaw
        let (mut b1, mut b2) = (0.0, 0.0);
        for &c in coef.iter().skip(1).rev() {
            let b0 = 2.0 * t * b1 - b2 + c;
            b2 = b1;
            b1 = b0;
        }
        t * b1 - b2 + 0.5 * coef[0]
    };
    let pts: Vec<f64> = (0..checks.max(2))
        .map(|i| -1.0 + 2.0 * i as f64 / (checks.max(2) - 1) as f64)
        .collect();
    let errs: Vec<f64> = pts
        .par_iter()
        .map(|&t| Ok((f(mid + half * t)? - eval(t)).abs()))
        .collect::<Result<_>>()?;
    Ok(errs.into_iter().fold(0.0, f64::max))
}
