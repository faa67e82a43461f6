//! Plane geometry: circles, reflections and anti-Möbius maps.
//!
//! The point at infinity is never stored in a [`Complex`]; operations that
//! would produce it return an error the caller maps to its own flag.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Complex numbers used throughout the crate.
pub type Complex = Complex64;

/// Default tolerance for tangency classification.
pub const TANGENCY_TOL: f64 = 1e-9;

/// Distance below which a point counts as the center of a circle.
pub const CENTER_EPS: f64 = 1e-14;

/// Modulus below which a Möbius denominator counts as a pole.
pub const POLE_EPS: f64 = 1e-30;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeomError {
    #[error("point coincides with the circle center; image is the point at infinity")]
    CenterInput,
    #[error("points are antipodal; the orthogonal circle degenerates to a diameter")]
    AntipodalPoints,
    #[error("point is a pole of the map; image is the point at infinity")]
    PoleInput,
    #[error("degenerate map (determinant {0:e})")]
    Singular(f64),
    #[error("circle radius must be positive and finite, got {0}")]
    BadRadius(f64),
}

/// A Euclidean circle with positive radius.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Circle {
    #[serde(with = "pair")]
    pub center: Complex,
    #[serde(rename = "r")]
    pub radius: f64,
}

impl Circle {
    pub fn new(center: Complex, radius: f64) -> Result<Self, GeomError> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(GeomError::BadRadius(radius));
        }
        Ok(Circle { center, radius })
    }

    pub fn unit() -> Self {
        Circle { center: Complex::new(0.0, 0.0), radius: 1.0 }
    }

    /// Point on the circle at angle `t` measured from the center.
    pub fn point(&self, t: f64) -> Complex {
        self.center + Complex::from_polar(self.radius, t)
    }

    pub fn contains(&self, z: Complex, slack: f64) -> bool {
        (z - self.center).norm() <= self.radius + slack
    }
}

/// Reflection (inversion) in a circle.
pub fn reflect(c: &Circle, z: Complex) -> Result<Complex, GeomError> {
    let w = z - c.center;
    if w.norm() < CENTER_EPS {
        return Err(GeomError::CenterInput);
    }
    Ok(c.center + c.radius * c.radius / w.conj())
}

/// Relative position of two circles.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CircleRelation {
    Disjoint,
    ExternallyTangent(Complex),
    Overlapping,
    Nested,
}

/// Classifies two circles by comparing the center distance against the
/// sum and difference of the radii.
pub fn circle_relation(c1: &Circle, c2: &Circle, tol: f64) -> CircleRelation {
    let dist = (c2.center - c1.center).norm();
    let sum = c1.radius + c2.radius;
    let diff = (c1.radius - c2.radius).abs();
    if (dist - sum).abs() <= tol {
        let t = c1.radius / sum;
        return CircleRelation::ExternallyTangent(c1.center + (c2.center - c1.center) * t);
    }
    if dist > sum {
        CircleRelation::Disjoint
    } else if dist <= diff + tol {
        CircleRelation::Nested
    } else {
        CircleRelation::Overlapping
    }
}

/// The circle through `e^{iθ1}` and `e^{iθ2}` meeting the unit circle at
/// right angles.
pub fn orthogonal_chord_circle(theta1: f64, theta2: f64) -> Result<Circle, GeomError> {
    let p = Complex::from_polar(1.0, theta1);
    let q = Complex::from_polar(1.0, theta2);
    let mid = (p + q) * 0.5;
    if mid.norm() < 1e-12 {
        return Err(GeomError::AntipodalPoints);
    }
    // The center lies on the ray through the chord midpoint with |c| = 1/|mid|.
    let center = mid / mid.norm_sqr();
    let radius = (center - p).norm();
    Ok(Circle { center, radius })
}

/// Whether a map preserves or reverses orientation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Orientation {
    Preserving,
    Reversing,
}

/// `z ↦ (a w + b)/(c w + d)` where `w = z` or `w = conj(z)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AntiMoebius {
    pub a: Complex,
    pub b: Complex,
    pub c: Complex,
    pub d: Complex,
    pub orientation: Orientation,
}

impl AntiMoebius {
    /// Builds the map and rescales it to determinant one.
    pub fn new(
        a: Complex,
        b: Complex,
        c: Complex,
        d: Complex,
        orientation: Orientation,
    ) -> Result<Self, GeomError> {
        let det = a * d - b * c;
        if det.norm() <= POLE_EPS {
            return Err(GeomError::Singular(det.norm()));
        }
        let s = det.sqrt().inv();
        Ok(AntiMoebius { a: a * s, b: b * s, c: c * s, d: d * s, orientation })
    }

    pub fn identity() -> Self {
        let one = Complex::new(1.0, 0.0);
        let zero = Complex::new(0.0, 0.0);
        AntiMoebius { a: one, b: zero, c: zero, d: one, orientation: Orientation::Preserving }
    }

    /// Reflection in a circle: `z ↦ c + r²/conj(z − c)`.
    pub fn reflection(circle: &Circle) -> Self {
        let c = circle.center;
        let r2 = circle.radius * circle.radius;
        let one = Complex::new(1.0, 0.0);
        // In terms of w = conj(z): (c w + r² − |c|²) / (w − conj c).
        AntiMoebius::new(c, Complex::new(r2 - c.norm_sqr(), 0.0), one, -c.conj(), Orientation::Reversing)
            .expect("reflection has nonzero determinant")
    }

    pub fn apply(&self, z: Complex) -> Result<Complex, GeomError> {
        let w = match self.orientation {
            Orientation::Preserving => z,
            Orientation::Reversing => z.conj(),
        };
        let den = self.c * w + self.d;
        if den.norm() < POLE_EPS {
            return Err(GeomError::PoleInput);
        }
        Ok((self.a * w + self.b) / den)
    }

    /// Returns `self ∘ other`.
    pub fn compose(&self, other: &AntiMoebius) -> AntiMoebius {
        // If self reverses orientation it conjugates other's coefficients.
        let (a2, b2, c2, d2) = match self.orientation {
            Orientation::Preserving => (other.a, other.b, other.c, other.d),
            Orientation::Reversing => (other.a.conj(), other.b.conj(), other.c.conj(), other.d.conj()),
        };
        let a = self.a * a2 + self.b * c2;
        let b = self.a * b2 + self.b * d2;
        let c = self.c * a2 + self.d * c2;
        let d = self.c * b2 + self.d * d2;
        let orientation = if self.orientation == other.orientation {
            Orientation::Preserving
        } else {
            Orientation::Reversing
        };
        AntiMoebius::new(a, b, c, d, orientation).expect("composition of invertible maps")
    }
}

/// Serde helper storing a complex number as `[re, im]`.
pub mod pair {
    use super::Complex;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(z: &Complex, s: S) -> Result<S::Ok, S::Error> {
        [z.re, z.im].serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Complex, D::Error> {
        let [re, im] = <[f64; 2]>::deserialize(d)?;
        Ok(Complex::new(re, im))
    }
}

/// Serde helper storing a list of complex numbers as `[[re, im], ...]`.
pub mod pair_vec {
    use super::Complex;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(zs: &[Complex], s: S) -> Result<S::Ok, S::Error> {
        let v: Vec<[f64; 2]> = zs.iter().map(|z| [z.re, z.im]).collect();
        v.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Complex>, D::Error> {
        let v = Vec::<[f64; 2]>::deserialize(d)?;
        Ok(v.into_iter().map(|[re, im]| Complex::new(re, im)).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> Complex {
        Complex::new(re, im)
    }

    #[test]
    fn reflect_examples() {
        let u = Circle::unit();
        assert!((reflect(&u, c(2.0, 0.0)).unwrap() - c(0.5, 0.0)).norm() < 1e-15);
        let b = Complex::from_polar(1.0, 0.7);
        assert!((reflect(&u, b).unwrap() - b).norm() < 1e-15);
        assert_eq!(reflect(&u, c(0.0, 0.0)), Err(GeomError::CenterInput));
    }

    #[test]
    fn relation_examples() {
        let u = Circle::unit();
        match circle_relation(&u, &Circle { center: c(3.0, 0.0), radius: 2.0 }, TANGENCY_TOL) {
            CircleRelation::ExternallyTangent(p) => assert!((p - c(1.0, 0.0)).norm() < 1e-15),
            other => panic!("{other:?}"),
        }
        let far = Circle { center: c(4.0, 0.0), radius: 1.0 };
        assert_eq!(circle_relation(&u, &far, TANGENCY_TOL), CircleRelation::Disjoint);
        let over = Circle { center: c(0.5, 0.0), radius: 1.0 };
        assert_eq!(circle_relation(&u, &over, TANGENCY_TOL), CircleRelation::Overlapping);
        let inner = Circle { center: c(0.1, 0.0), radius: 0.2 };
        assert_eq!(circle_relation(&u, &inner, TANGENCY_TOL), CircleRelation::Nested);
    }

    #[test]
    fn chord_circle_examples() {
        let k = orthogonal_chord_circle(0.0, 2.0 * PI / 3.0).unwrap();
        assert!((k.center - Complex::from_polar(2.0, PI / 3.0)).norm() < 1e-12);
        assert!((k.radius - 3f64.sqrt()).abs() < 1e-12);
        let k = orthogonal_chord_circle(0.0, PI / 2.0).unwrap();
        assert!((k.center - Complex::from_polar(2f64.sqrt(), PI / 4.0)).norm() < 1e-12);
        assert!((k.radius - 1.0).abs() < 1e-12);
        assert_eq!(orthogonal_chord_circle(0.0, PI), Err(GeomError::AntipodalPoints));
    }

    #[test]
    fn moebius_identity_and_involution() {
        let z = c(1.0, 1.0);
        assert_eq!(AntiMoebius::identity().apply(z).unwrap(), z);
        let r = AntiMoebius::reflection(&Circle { center: c(0.3, -1.2), radius: 0.7 });
        let rr = r.compose(&r);
        assert_eq!(rr.orientation, Orientation::Preserving);
        for k in 0..20 {
            let z = Complex::from_polar(0.5 + 0.1 * k as f64, 0.37 * k as f64);
            assert!((rr.apply(z).unwrap() - z).norm() < 1e-12);
        }
    }
}
