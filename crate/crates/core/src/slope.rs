//! Slopes of lines through the origin and the Möbius action of 2x2 matrices.
//!
//! A line `span((v1, v2))` is encoded by `z = v1 / v2`, with `span((1, 0))`
//! mapped to the point at infinity. Internally every slope is handled through a
//! vector representative in one of two charts: `(z, 1)` when `|z| <= 1` and
//! `(1, 1/z)` otherwise, so nothing ever divides by a small denominator.

use crate::mat2::{norm2, Mat2};
use serde::{Serialize, Serializer};
use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Slope {
    Finite(f64),
    Infinity,
}

impl Slope {
    pub const ZERO: Slope = Slope::Finite(0.0);

    /// Slope of `span(v)`. `v` must be non-zero.
    pub fn from_vector(v: [f64; 2]) -> Slope {
        if v[1] == 0.0 {
            Slope::Infinity
        } else {
            let z = v[0] / v[1];
            if z.is_finite() {
                Slope::Finite(z)
            } else {
                Slope::Infinity
            }
        }
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self, Slope::Infinity)
    }

    pub fn value(&self) -> Option<f64> {
        match *self {
            Slope::Finite(z) => Some(z),
            Slope::Infinity => None,
        }
    }

    /// Vector representative in the bounded chart.
    pub fn representative(&self) -> [f64; 2] {
        match *self {
            Slope::Finite(z) if z.abs() <= 1.0 => [z, 1.0],
            Slope::Finite(z) => [1.0, 1.0 / z],
            Slope::Infinity => [1.0, 0.0],
        }
    }

    /// Unit vector spanning the line, signed so that `u2 > 0`, or `u1 > 0` when `u2 = 0`.
    pub fn unit_vector(&self) -> [f64; 2] {
        let r = self.representative();
        let n = norm2(r);
        let mut u = [r[0] / n, r[1] / n];
        if u[1] < 0.0 || (u[1] == 0.0 && u[0] < 0.0) {
            u = [-u[0], -u[1]];
        }
        u
    }

    /// Direction angle in `[0, pi)`.
    pub fn angle(&self) -> f64 {
        let r = self.representative();
        let mut phi = r[1].atan2(r[0]);
        if phi < 0.0 {
            phi += PI;
        }
        if phi >= PI {
            phi -= PI;
        }
        phi
    }

    /// Slope of the line at direction angle `phi` (radians, any real).
    pub fn from_angle(phi: f64) -> Slope {
        Slope::from_vector([phi.cos(), phi.sin()])
    }

    /// Spherical distance: `|sin|` of the angle between the two lines.
    ///
    /// For finite slopes this equals `|z - w| / sqrt((1 + z^2)(1 + w^2))`.
    pub fn distance(&self, other: &Slope) -> f64 {
        let p = self.representative();
        let q = other.representative();
        let cross = p[0] * q[1] - p[1] * q[0];
        (cross / (norm2(p) * norm2(q))).abs()
    }

    /// Signed angle from `self` to `other`, reduced into `(-pi/2, pi/2]`.
    pub fn signed_angle_to(&self, other: &Slope) -> f64 {
        let mut d = other.angle() - self.angle();
        while d > PI / 2.0 {
            d -= PI;
        }
        while d <= -PI / 2.0 {
            d += PI;
        }
        d
    }
}

impl Serialize for Slope {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match *self {
            Slope::Finite(z) => s.serialize_f64(z),
            Slope::Infinity => s.serialize_str("inf"),
        }
    }
}

impl std::fmt::Display for Slope {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Slope::Finite(z) => write!(f, "{z}"),
            Slope::Infinity => write!(f, "inf"),
        }
    }
}

/// Möbius action `z -> (a z + b) / (c z + d)` on the extended real line.
///
/// `inf -> a / c`, and a vanishing denominator gives `inf`.
pub fn mobius_act(m: &Mat2, z: Slope) -> Slope {
    Slope::from_vector(m.apply(z.representative()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mat2::Rotation;
    use proptest::prelude::*;

    #[test]
    fn identity_action() {
        assert_eq!(mobius_act(&Mat2::IDENTITY, Slope::Finite(0.7)), Slope::Finite(0.7));
    }

    #[test]
    fn quarter_turn_sends_zero_to_infinity() {
        let r = Rotation::new(PI / 2.0).matrix();
        let z = mobius_act(&r, Slope::ZERO);
        assert!(z.is_infinite() || z.value().unwrap().abs() > 1e15);
        assert!(z.distance(&Slope::Infinity) < 1e-15);
    }

    #[test]
    fn diagonal_action() {
        let z = mobius_act(&Mat2::diag(2.0, 0.5), Slope::Finite(1.0));
        assert_eq!(z, Slope::Finite(4.0));
    }

    #[test]
    fn infinity_maps_to_a_over_c() {
        let m = Mat2::new(3.0, 1.0, 2.0, 5.0);
        assert_eq!(mobius_act(&m, Slope::Infinity), Slope::Finite(1.5));
        let upper = Mat2::new(3.0, 1.0, 0.0, 5.0);
        assert!(mobius_act(&upper, Slope::Infinity).is_infinite());
    }

    #[test]
    fn zero_denominator_is_infinity() {
        // c z + d = 0 at z = -1
        let m = Mat2::new(1.0, 2.0, 1.0, 1.0);
        assert!(mobius_act(&m, Slope::Finite(-1.0)).is_infinite());
    }

    #[test]
    fn unit_vector_sign_convention() {
        assert_eq!(Slope::Infinity.unit_vector(), [1.0, 0.0]);
        let u = Slope::Finite(-2.0).unit_vector();
        assert!(u[1] > 0.0 && u[0] < 0.0);
    }

    #[test]
    fn distance_formula_for_finite() {
        let (z, w) = (0.3f64, -2.5f64);
        let expect = (z - w).abs() / ((1.0 + z * z) * (1.0 + w * w)).sqrt();
        assert!((Slope::Finite(z).distance(&Slope::Finite(w)) - expect).abs() < 1e-15);
        assert!((Slope::Finite(0.0).distance(&Slope::Infinity) - 1.0).abs() < 1e-15);
    }

    fn arb_mat() -> impl Strategy<Value = Mat2> {
        (-3.0..3.0f64, -3.0..3.0f64, -3.0..3.0f64, -3.0..3.0f64)
            .prop_map(|(a, b, c, d)| Mat2::new(a, b, c, d))
            .prop_filter("invertible", |m| m.det().abs() > 1e-2)
    }

    fn arb_slope() -> impl Strategy<Value = Slope> {
        prop_oneof![
            9 => (-50.0..50.0f64).prop_map(Slope::Finite),
            1 => Just(Slope::Infinity),
        ]
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]
        #[test]
        fn composition_law(m1 in arb_mat(), m2 in arb_mat(), z in arb_slope()) {
            let lhs = mobius_act(&(m1 * m2), z);
            let rhs = mobius_act(&m1, mobius_act(&m2, z));
            prop_assert!(lhs.distance(&rhs) <= 1e-9, "{lhs} vs {rhs}");
        }

        #[test]
        fn angle_roundtrip(phi in 0.0..PI) {
            let s = Slope::from_angle(phi);
            let back = Slope::from_angle(s.angle());
            prop_assert!(s.distance(&back) < 1e-12);
        }
    }
}
