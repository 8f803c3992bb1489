//! Invertible base dynamics `T: X -> X` with sampling of the invariant measure.
//!
//! Sampling uses ChaCha8 (`rand_chacha::ChaCha8Rng::seed_from_u64`), a
//! counter-based stream cipher generator, so sample sets are reproducible
//! bit-for-bit for a given `(seed, count)`.

use crate::error::{CocycleError, Result};
use crate::sum::CompensatedSum;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Serialize, Serializer};
use std::sync::Arc;

/// A point of the base space.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Point {
    /// Circle `R/Z`, coordinate in `[0, 1)`.
    Circle(f64),
    /// Torus `R^2/Z^2`, canonical representative in `[0, 1)^2`.
    Torus([f64; 2]),
    /// Element `index` of a finite cycle, carrying the cycle's label `value`.
    Cycle { index: usize, value: f64 },
}

impl Point {
    /// Coordinates of the point (padded with zeros for one-dimensional spaces).
    pub fn coords(&self) -> [f64; 2] {
        match *self {
            Point::Circle(x) => [x, 0.0],
            Point::Torus(p) => p,
            Point::Cycle { value, .. } => [value, 0.0],
        }
    }
}

impl Serialize for Point {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match *self {
            Point::Circle(x) => s.serialize_f64(x),
            Point::Torus(p) => p.serialize(s),
            Point::Cycle { index, .. } => s.serialize_u64(index as u64),
        }
    }
}

impl std::fmt::Display for Point {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Point::Circle(x) => write!(f, "{x}"),
            Point::Torus(p) => write!(f, "({}, {})", p[0], p[1]),
            Point::Cycle { index, value } => write!(f, "#{index}({value})"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Backward,
}

impl Direction {
    pub fn reversed(self) -> Self {
        match self {
            Direction::Forward => Direction::Backward,
            Direction::Backward => Direction::Forward,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum BaseKind {
    CircleRotation { alpha: f64 },
    TorusAutomorphism { matrix: [[i64; 2]; 2], inverse: [[i64; 2]; 2] },
    PeriodicOrbit { points: Arc<Vec<f64>> },
}

/// An invertible base map together with its invariant measure.
#[derive(Debug, Clone, PartialEq)]
pub struct BaseSystem {
    kind: BaseKind,
    /// When set, `Forward` steps apply `T^{-1}`.
    reversed: bool,
}

/// Reduce into `[0, 1)`.
pub fn wrap_unit(x: f64) -> f64 {
    let r = x.rem_euclid(1.0);
    if r >= 1.0 {
        0.0
    } else {
        r
    }
}

/// Distance on `R/Z`.
pub fn circle_distance(x: f64, y: f64) -> f64 {
    let d = (x - y).rem_euclid(1.0);
    d.min(1.0 - d)
}

impl BaseSystem {
    pub fn circle_rotation(alpha: f64) -> Result<Self> {
        if !alpha.is_finite() {
            return Err(CocycleError::InvalidInput(format!("rotation number {alpha} is not finite")));
        }
        Ok(BaseSystem {
            kind: BaseKind::CircleRotation { alpha: wrap_unit(alpha) },
            reversed: false,
        })
    }

    pub fn torus_automorphism(matrix: [[i64; 2]; 2]) -> Result<Self> {
        let det = matrix[0][0] * matrix[1][1] - matrix[0][1] * matrix[1][0];
        if det.abs() != 1 {
            return Err(CocycleError::InvalidInput(format!(
                "torus automorphism needs |det| = 1, got {det}"
            )));
        }
        let inverse = [
            [matrix[1][1] * det, -matrix[0][1] * det],
            [-matrix[1][0] * det, matrix[0][0] * det],
        ];
        Ok(BaseSystem {
            kind: BaseKind::TorusAutomorphism { matrix, inverse },
            reversed: false,
        })
    }

    pub fn periodic_orbit(points: Vec<f64>) -> Result<Self> {
        if points.is_empty() {
            return Err(CocycleError::InvalidInput("periodic orbit must be nonempty".into()));
        }
        Ok(BaseSystem {
            kind: BaseKind::PeriodicOrbit {
                points: Arc::new(points),
            },
            reversed: false,
        })
    }

    pub fn kind(&self) -> &BaseKind {
        &self.kind
    }

    pub fn is_reversed(&self) -> bool {
        self.reversed
    }

    /// The same measure-preserving system with time reversed (`T^{-1}` as the forward map).
    pub fn inverse(&self) -> Self {
        BaseSystem {
            kind: self.kind.clone(),
            reversed: !self.reversed,
        }
    }

    /// Point of a periodic orbit by index (taken modulo the period).
    pub fn cycle_point(&self, index: usize) -> Option<Point> {
        match &self.kind {
            BaseKind::PeriodicOrbit { points } => {
                let i = index % points.len();
                Some(Point::Cycle {
                    index: i,
                    value: points[i],
                })
            }
            _ => None,
        }
    }

    /// `Tx` for `Forward`, `T^{-1}x` for `Backward`.
    pub fn step(&self, x: &Point, direction: Direction) -> Point {
        let forward = (direction == Direction::Forward) != self.reversed;
        match (&self.kind, *x) {
            (BaseKind::CircleRotation { alpha }, Point::Circle(p)) => {
                Point::Circle(wrap_unit(if forward { p + alpha } else { p - alpha }))
            }
            (BaseKind::TorusAutomorphism { matrix, inverse }, Point::Torus(p)) => {
                let m = if forward { matrix } else { inverse };
                let x0 = m[0][0] as f64 * p[0] + m[0][1] as f64 * p[1];
                let x1 = m[1][0] as f64 * p[0] + m[1][1] as f64 * p[1];
                Point::Torus([wrap_unit(x0), wrap_unit(x1)])
            }
            (BaseKind::PeriodicOrbit { points }, Point::Cycle { index, .. }) => {
                let n = points.len();
                let i = if forward { (index + 1) % n } else { (index + n - 1) % n };
                Point::Cycle {
                    index: i,
                    value: points[i],
                }
            }
            (kind, p) => panic!("point {p:?} does not belong to base {kind:?}"),
        }
    }

    pub fn forward(&self, x: &Point) -> Point {
        self.step(x, Direction::Forward)
    }

    pub fn backward(&self, x: &Point) -> Point {
        self.step(x, Direction::Backward)
    }

    /// `T^n x` for signed `n`.
    pub fn iterate(&self, x: &Point, n: i64) -> Point {
        let dir = if n >= 0 { Direction::Forward } else { Direction::Backward };
        let mut y = *x;
        for _ in 0..n.unsigned_abs() {
            y = self.step(&y, dir);
        }
        y
    }

    /// Distance between two points of this space.
    pub fn distance(&self, x: &Point, y: &Point) -> f64 {
        match (*x, *y) {
            (Point::Circle(a), Point::Circle(b)) => circle_distance(a, b),
            (Point::Torus(a), Point::Torus(b)) => circle_distance(a[0], b[0]).hypot(circle_distance(a[1], b[1])),
            (Point::Cycle { index: i, .. }, Point::Cycle { index: j, .. }) => {
                if i == j {
                    0.0
                } else {
                    1.0
                }
            }
            _ => f64::INFINITY,
        }
    }

    /// Deterministic samples of the invariant measure.
    ///
    /// Circle and torus: uniform. Periodic orbit: the orbit points in order,
    /// cycling when `count` exceeds the period.
    pub fn sample_measure(&self, count: usize, seed: u64) -> Vec<Point> {
        self.sample_measure_with_margin(count, seed, 0.0)
    }

    /// As [`sample_measure`](Self::sample_measure), keeping continuous coordinates
    /// inside `[margin, 1 - margin]`.
    pub fn sample_measure_with_margin(&self, count: usize, seed: u64, margin: f64) -> Vec<Point> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let width = 1.0 - 2.0 * margin;
        let mut unit = move || margin + width * rng.gen::<f64>();
        match &self.kind {
            BaseKind::CircleRotation { .. } => (0..count).map(|_| Point::Circle(unit())).collect(),
            BaseKind::TorusAutomorphism { .. } => (0..count)
                .map(|_| {
                    let a = unit();
                    let b = unit();
                    Point::Torus([a, b])
                })
                .collect(),
            BaseKind::PeriodicOrbit { points } => (0..count)
                .map(|i| {
                    let k = i % points.len();
                    Point::Cycle {
                        index: k,
                        value: points[k],
                    }
                })
                .collect(),
        }
    }

    /// `(1/n) sum_{j<n} f(T^j x)` with compensated summation.
    pub fn birkhoff_average<F>(&self, x: &Point, f: F, n: usize) -> Result<f64>
    where
        F: Fn(&Point) -> f64,
    {
        if n == 0 {
            return Err(CocycleError::InvalidInput("Birkhoff average needs n >= 1".into()));
        }
        let mut acc = CompensatedSum::new();
        let mut y = *x;
        for j in 0..n {
            let v = f(&y);
            if !v.is_finite() {
                return Err(CocycleError::NonFinite {
                    index: j,
                    what: format!("observable value {v} at {y}"),
                });
            }
            acc.add(v);
            y = self.forward(&y);
        }
        Ok(acc.mean())
    }

    /// Points of least period dividing `p` of a torus automorphism: solutions of
    /// `(M^p - I) x in Z^2` in `[0, 1)^2`.
    pub fn torus_periodic_points(&self, p: u32) -> Result<Vec<[f64; 2]>> {
        let matrix = match &self.kind {
            BaseKind::TorusAutomorphism { matrix, .. } => *matrix,
            _ => return Err(CocycleError::InvalidInput("not a torus automorphism".into())),
        };
        let mut mp = [[1i64, 0], [0, 1]];
        for _ in 0..p.max(1) {
            mp = [
                [
                    matrix[0][0] * mp[0][0] + matrix[0][1] * mp[1][0],
                    matrix[0][0] * mp[0][1] + matrix[0][1] * mp[1][1],
                ],
                [
                    matrix[1][0] * mp[0][0] + matrix[1][1] * mp[1][0],
                    matrix[1][0] * mp[0][1] + matrix[1][1] * mp[1][1],
                ],
            ];
        }
        let k = [[mp[0][0] - 1, mp[0][1]], [mp[1][0], mp[1][1] - 1]];
        let det = k[0][0] * k[1][1] - k[0][1] * k[1][0];
        if det == 0 {
            return Err(CocycleError::InvalidInput(format!(
                "M^{p} - I is singular: non-isolated periodic points"
            )));
        }
        // images of the unit square under K bound the integer targets
        let corners = [[0i64, 0], [1, 0], [0, 1], [1, 1]];
        let img: Vec<[i64; 2]> = corners
            .iter()
            .map(|c| [k[0][0] * c[0] + k[0][1] * c[1], k[1][0] * c[0] + k[1][1] * c[1]])
            .collect();
        let (lo0, hi0) = (
            img.iter().map(|v| v[0]).min().unwrap(),
            img.iter().map(|v| v[0]).max().unwrap(),
        );
        let (lo1, hi1) = (
            img.iter().map(|v| v[1]).min().unwrap(),
            img.iter().map(|v| v[1]).max().unwrap(),
        );
        let detf = det as f64;
        let mut out: Vec<[f64; 2]> = Vec::new();
        for n0 in lo0..=hi0 {
            for n1 in lo1..=hi1 {
                // x = K^{-1} n
                let x0 = (k[1][1] * n0 - k[0][1] * n1) as f64 / detf;
                let x1 = (-k[1][0] * n0 + k[0][0] * n1) as f64 / detf;
                if (0.0..1.0).contains(&x0) && (0.0..1.0).contains(&x1) {
                    let p = [x0, x1];
                    if !out.iter().any(|q| (q[0] - p[0]).abs() < 1e-12 && (q[1] - p[1]).abs() < 1e-12) {
                        out.push(p);
                    }
                }
            }
        }
        out.sort_by(|a, b| a.partial_cmp(b).unwrap());
        Ok(out)
    }
}

/// A finite stretch of an orbit.
#[derive(Debug, Clone)]
pub struct OrbitBuffer {
    /// `x, Tx, ..., T^{n-1}x` (or the backward analogue).
    pub points: Vec<Point>,
    pub origin: usize,
    pub direction: Direction,
}

impl OrbitBuffer {
    pub fn generate(base: &BaseSystem, x: &Point, n: usize, direction: Direction) -> Self {
        let mut points = Vec::with_capacity(n);
        let mut y = *x;
        for _ in 0..n {
            points.push(y);
            y = base.step(&y, direction);
        }
        OrbitBuffer {
            points,
            origin: 0,
            direction,
        }
    }

    /// Re-applies the map to every consecutive pair.
    pub fn verify(&self, base: &BaseSystem, tol: f64) -> bool {
        self.points
            .windows(2)
            .all(|w| base.distance(&base.step(&w[0], self.direction), &w[1]) <= tol)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}
