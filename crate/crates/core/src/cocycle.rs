//! Linear cocycles over a base system: products, the rotation family and
//! direct Birkhoff estimates of Lyapunov exponents.

use crate::base::{BaseSystem, Direction, Point};
use crate::error::{CocycleError, Result};
use crate::mat2::{Mat2, Rotation, DET_FLOOR};
use crate::sum::CompensatedSum;
use rayon::prelude::*;
use std::fmt;
use std::sync::Arc;

/// Longest product `compose_n` will form.
pub const MAX_PRODUCT_LEN: u64 = 10_000_000;

/// Products are renormalized every this many steps.
pub const RENORM_CADENCE: usize = 32;

/// Steps discarded before measuring vector growth, so that the propagated
/// vector has aligned with the dominant direction.
pub const DEFAULT_BURN_IN: usize = 512;

pub type Generator = Arc<dyn Fn(&Point) -> Mat2 + Send + Sync>;

/// A matrix-valued generator `x -> A(x)`.
#[derive(Clone)]
pub struct CocycleSpec {
    generator: Generator,
    pub orientation_preserving: bool,
    pub det_floor: f64,
}

impl fmt::Debug for CocycleSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CocycleSpec")
            .field("orientation_preserving", &self.orientation_preserving)
            .field("det_floor", &self.det_floor)
            .finish_non_exhaustive()
    }
}

impl CocycleSpec {
    pub fn new<F>(generator: F, orientation_preserving: bool) -> Self
    where
        F: Fn(&Point) -> Mat2 + Send + Sync + 'static,
    {
        CocycleSpec {
            generator: Arc::new(generator),
            orientation_preserving,
            det_floor: DET_FLOOR,
        }
    }

    pub fn constant(m: Mat2) -> Self {
        CocycleSpec::new(move |_| m, m.det() > 0.0)
    }

    /// Raw generator value.
    pub fn at(&self, x: &Point) -> Mat2 {
        (self.generator)(x)
    }

    /// Generator value with the invertibility and orientation checks applied;
    /// `index` is the orbit position used in diagnostics.
    pub fn checked_at(&self, x: &Point, index: i64) -> Result<Mat2> {
        let m = self.at(x);
        let det = m.det();
        if !(det.abs() >= self.det_floor) {
            return Err(CocycleError::NonInvertible { index, det });
        }
        if self.orientation_preserving && det <= 0.0 {
            return Err(CocycleError::Data(format!(
                "cocycle flagged orientation-preserving has det {det} at {x} (orbit index {index})"
            )));
        }
        Ok(m)
    }

    /// Pointwise post-composition `x -> A(x) M`.
    pub fn right_multiply(&self, m: Mat2) -> Self {
        let g = self.generator.clone();
        CocycleSpec {
            generator: Arc::new(move |x| g(x) * m),
            orientation_preserving: self.orientation_preserving && m.det() > 0.0,
            det_floor: self.det_floor,
        }
    }
}

/// `x -> A(x) R_theta`.
pub fn rotate_family(cocycle: &CocycleSpec, theta: f64) -> CocycleSpec {
    cocycle.right_multiply(Rotation::new(theta).matrix())
}

/// The inverse cocycle `x -> A(T^{-1}x)^{-1}`, to be run over `base.inverse()`.
///
/// Its top exponent is `-lambda^-` of the original cocycle, and its strong
/// direction field is the weak direction field of the original.
pub fn inverse_cocycle(cocycle: &CocycleSpec, base: &BaseSystem) -> CocycleSpec {
    let inner = cocycle.clone();
    let base = base.clone();
    let floor = cocycle.det_floor;
    CocycleSpec {
        generator: Arc::new(move |x| {
            let y = base.backward(x);
            let m = inner.at(&y);
            // a singular matrix maps to the zero matrix, which checked_at rejects
            m.inverse_with_floor(floor).unwrap_or(Mat2::new(0.0, 0.0, 0.0, 0.0))
        }),
        orientation_preserving: cocycle.orientation_preserving,
        det_floor: floor,
    }
}

/// `A^n(x)` for signed `n`; `A^0(x)` is the identity and
/// `A^{-n}(x) = A(T^{-n}x)^{-1} ... A(T^{-1}x)^{-1}`.
pub fn compose_n(cocycle: &CocycleSpec, base: &BaseSystem, x: &Point, n: i64) -> Result<Mat2> {
    if n.unsigned_abs() > MAX_PRODUCT_LEN {
        return Err(CocycleError::InvalidInput(format!(
            "product length {n} exceeds {MAX_PRODUCT_LEN}"
        )));
    }
    let mut prod = Mat2::IDENTITY;
    let mut y = *x;
    if n >= 0 {
        for j in 0..n {
            prod = cocycle.checked_at(&y, j)? * prod;
            y = base.forward(&y);
        }
    } else {
        for j in 1..=n.unsigned_abs() as i64 {
            y = base.backward(&y);
            let m = cocycle.checked_at(&y, -j)?;
            let inv = m
                .inverse_with_floor(cocycle.det_floor)
                .ok_or(CocycleError::NonInvertible { index: -j, det: m.det() })?;
            prod = inv * prod;
        }
    }
    Ok(prod)
}

/// Renormalized forward product: returns `(P, s)` with `A^n(x) = e^s P` and
/// `max|P_ij| = 1` (unless `n = 0`).
pub fn compose_n_scaled(cocycle: &CocycleSpec, base: &BaseSystem, x: &Point, n: usize) -> Result<(Mat2, f64)> {
    let mut prod = Mat2::IDENTITY;
    let mut log_scale = 0.0;
    let mut y = *x;
    for j in 0..n {
        prod = cocycle.checked_at(&y, j as i64)? * prod;
        if (j + 1) % RENORM_CADENCE == 0 || j + 1 == n {
            let s = prod.max_abs();
            if !s.is_finite() || s == 0.0 {
                return Err(CocycleError::Overflow { index: j });
            }
            prod = prod.scale(1.0 / s);
            log_scale += s.ln();
        }
        y = base.forward(&y);
    }
    Ok((prod, log_scale))
}

/// Log growth of a propagated vector over `n` matrices after `burn` discarded ones.
///
/// The vector is renormalized by its max-abs entry every [`RENORM_CADENCE`] steps.
pub fn vector_growth<I>(mats: I, burn: usize, n: usize) -> Result<f64>
where
    I: IntoIterator<Item = Result<Mat2>>,
{
    // direction at angle 1 rad: generic, not aligned with coordinate axes
    let mut v = [1f64.cos(), 1f64.sin()];
    let mut log_growth = 0.0;
    let mut it = mats.into_iter();
    for j in 0..burn + n {
        let m = it
            .next()
            .ok_or_else(|| CocycleError::InvalidInput(format!("matrix stream ended at {j} (wanted {})", burn + n)))??;
        v = m.apply(v);
        let last = j + 1 == burn || j + 1 == burn + n;
        if (j + 1) % RENORM_CADENCE == 0 || last {
            let s = v[0].abs().max(v[1].abs());
            if !s.is_finite() || s == 0.0 {
                return Err(CocycleError::Overflow { index: j });
            }
            v = [v[0] / s, v[1] / s];
            if j >= burn {
                log_growth += s.ln();
            } else if j + 1 == burn {
                // restart the measurement from a unit vector
                let r = v[0].hypot(v[1]);
                v = [v[0] / r, v[1] / r];
            }
        }
    }
    if n > 0 {
        // the accumulated scales track max-norm; convert the final vector to Euclidean norm
        log_growth += v[0].hypot(v[1]).ln();
    }
    Ok(log_growth)
}

fn matrices_along<'a>(cocycle: &'a CocycleSpec, base: &'a BaseSystem, x: &Point) -> impl Iterator<Item = Result<Mat2>> + 'a {
    let mut y = *x;
    let mut j = 0i64;
    std::iter::from_fn(move || {
        let m = cocycle.checked_at(&y, j);
        y = base.forward(&y);
        j += 1;
        Some(m)
    })
}

/// Average over sample points of `f(x)`, evaluated in parallel and summed in sample order.
pub(crate) fn sample_mean<F>(points: &[Point], f: F) -> Result<f64>
where
    F: Fn(&Point) -> Result<f64> + Sync,
{
    let values: Vec<f64> = points.par_iter().map(&f).collect::<Result<_>>()?;
    Ok(values.into_iter().collect::<CompensatedSum>().mean())
}

/// Estimator of the top Lyapunov exponent: average over `samples` points of
/// `(1/n) log |A^n(x) v|` after a burn-in that aligns `v` with the dominant direction.
pub fn lyap_plus_direct(cocycle: &CocycleSpec, base: &BaseSystem, n: usize, samples: usize, seed: u64) -> Result<f64> {
    lyap_plus_direct_with_burn(cocycle, base, n, samples, seed, DEFAULT_BURN_IN)
}

pub fn lyap_plus_direct_with_burn(
    cocycle: &CocycleSpec,
    base: &BaseSystem,
    n: usize,
    samples: usize,
    seed: u64,
    burn: usize,
) -> Result<f64> {
    if n == 0 || samples == 0 {
        return Err(CocycleError::InvalidInput("need n >= 1 and samples >= 1".into()));
    }
    let points = base.sample_measure(samples, seed);
    sample_mean(&points, |x| {
        let g = vector_growth(matrices_along(cocycle, base, x), burn, n)?;
        Ok(g / n as f64)
    })
}

/// Estimator of `lambda^-` as minus the top exponent of the inverse cocycle.
pub fn lyap_minus_direct(cocycle: &CocycleSpec, base: &BaseSystem, n: usize, samples: usize, seed: u64) -> Result<f64> {
    let inv = inverse_cocycle(cocycle, base);
    Ok(-lyap_plus_direct(&inv, &base.inverse(), n, samples, seed)?)
}

/// Birkhoff average of `log |det A|`, an estimator of `lambda^+ + lambda^-`.
pub fn lyap_sum_via_det(cocycle: &CocycleSpec, base: &BaseSystem, n: usize, samples: usize, seed: u64) -> Result<f64> {
    if n == 0 || samples == 0 {
        return Err(CocycleError::InvalidInput("need n >= 1 and samples >= 1".into()));
    }
    let points = base.sample_measure(samples, seed);
    sample_mean(&points, |x| {
        let mut acc = CompensatedSum::new();
        let mut y = *x;
        for j in 0..n {
            acc.add(cocycle.checked_at(&y, j as i64)?.det().abs().ln());
            y = base.step(&y, Direction::Forward);
        }
        Ok(acc.mean())
    })
}
