//! Real 2x2 matrices and plane rotations.

use serde::{Deserialize, Serialize};
use std::ops::{Mul, Neg};

/// |det| below this is treated as singular.
pub const DET_FLOOR: f64 = 1e-12;

/// Row-major real 2x2 matrix `[[a, b], [c, d]]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mat2 {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl Mat2 {
    pub const IDENTITY: Mat2 = Mat2 {
        a: 1.0,
        b: 0.0,
        c: 0.0,
        d: 1.0,
    };

    pub const fn new(a: f64, b: f64, c: f64, d: f64) -> Self {
        Mat2 { a, b, c, d }
    }

    pub fn from_rows(rows: [[f64; 2]; 2]) -> Self {
        Mat2::new(rows[0][0], rows[0][1], rows[1][0], rows[1][1])
    }

    pub fn rows(&self) -> [[f64; 2]; 2] {
        [[self.a, self.b], [self.c, self.d]]
    }

    pub const fn diag(p: f64, q: f64) -> Self {
        Mat2::new(p, 0.0, 0.0, q)
    }

    /// Lower-triangular `[[lam, 0], [sig, eta]]`.
    pub const fn lower(lam: f64, sig: f64, eta: f64) -> Self {
        Mat2::new(lam, 0.0, sig, eta)
    }

    /// Matrix with columns `c0`, `c1`.
    pub fn from_columns(c0: [f64; 2], c1: [f64; 2]) -> Self {
        Mat2::new(c0[0], c1[0], c0[1], c1[1])
    }

    pub fn det(&self) -> f64 {
        self.a * self.d - self.b * self.c
    }

    pub fn trace(&self) -> f64 {
        self.a + self.d
    }

    pub fn transpose(&self) -> Self {
        Mat2::new(self.a, self.c, self.b, self.d)
    }

    pub fn scale(&self, s: f64) -> Self {
        Mat2::new(self.a * s, self.b * s, self.c * s, self.d * s)
    }

    pub fn max_abs(&self) -> f64 {
        self.a.abs().max(self.b.abs()).max(self.c.abs()).max(self.d.abs())
    }

    pub fn is_finite(&self) -> bool {
        self.a.is_finite() && self.b.is_finite() && self.c.is_finite() && self.d.is_finite()
    }

    /// Inverse, or `None` when |det| is below [`DET_FLOOR`].
    pub fn inverse(&self) -> Option<Self> {
        self.inverse_with_floor(DET_FLOOR)
    }

    pub fn inverse_with_floor(&self, floor: f64) -> Option<Self> {
        let det = self.det();
        if !(det.abs() >= floor) {
            return None;
        }
        Some(Mat2::new(self.d / det, -self.b / det, -self.c / det, self.a / det))
    }

    pub fn apply(&self, v: [f64; 2]) -> [f64; 2] {
        [self.a * v[0] + self.b * v[1], self.c * v[0] + self.d * v[1]]
    }

    /// Singular values `(s1, s2)` with `s1 >= s2 >= 0`, in closed form.
    ///
    /// Uses `s1 + s2 = |(a + d, c - b)|` and `s1 - s2 = |(a - d, b + c)|`,
    /// which avoids the cancellation of the characteristic-polynomial route.
    pub fn singular_values(&self) -> (f64, f64) {
        let p = (self.a + self.d).hypot(self.c - self.b);
        let q = (self.a - self.d).hypot(self.b + self.c);
        (0.5 * (p + q), 0.5 * (p - q).abs())
    }

    /// Operator 2-norm.
    pub fn norm(&self) -> f64 {
        self.singular_values().0
    }

    /// Entrywise closeness with a mixed absolute/relative tolerance.
    pub fn approx_eq(&self, other: &Mat2, tol: f64) -> bool {
        let scale = self.max_abs().max(other.max_abs()).max(1.0);
        (self.a - other.a).abs() <= tol * scale
            && (self.b - other.b).abs() <= tol * scale
            && (self.c - other.c).abs() <= tol * scale
            && (self.d - other.d).abs() <= tol * scale
    }

    pub fn max_abs_diff(&self, other: &Mat2) -> f64 {
        (self.a - other.a)
            .abs()
            .max((self.b - other.b).abs())
            .max((self.c - other.c).abs())
            .max((self.d - other.d).abs())
    }
}

impl Mul for Mat2 {
    type Output = Mat2;
    fn mul(self, r: Mat2) -> Mat2 {
        Mat2::new(
            self.a * r.a + self.b * r.c,
            self.a * r.b + self.b * r.d,
            self.c * r.a + self.d * r.c,
            self.c * r.b + self.d * r.d,
        )
    }
}

impl Neg for Mat2 {
    type Output = Mat2;
    fn neg(self) -> Mat2 {
        self.scale(-1.0)
    }
}

/// Counter-clockwise rotation by `theta` radians.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rotation {
    pub theta: f64,
}

impl Rotation {
    pub fn new(theta: f64) -> Self {
        Rotation { theta }
    }

    pub fn matrix(&self) -> Mat2 {
        let (s, c) = self.theta.sin_cos();
        Mat2::new(c, -s, s, c)
    }
}

impl From<Rotation> for Mat2 {
    fn from(r: Rotation) -> Mat2 {
        r.matrix()
    }
}

pub fn norm2(v: [f64; 2]) -> f64 {
    v[0].hypot(v[1])
}

pub fn normalize(v: [f64; 2]) -> [f64; 2] {
    let n = norm2(v);
    [v[0] / n, v[1] / n]
}

/// `u^perp = (u2, -u1)`.
pub fn perp(u: [f64; 2]) -> [f64; 2] {
    [u[1], -u[0]]
}

pub fn dot(u: [f64; 2], v: [f64; 2]) -> f64 {
    u[0] * v[0] + u[1] * v[1]
}
