//! Necklace reflection groups: validation of labeled circle chains, the
//! reflection map `ρ_Γ`, and orbit classification.

use crate::geom::{circle_relation, orthogonal_chord_circle, reflect, Circle, CircleRelation, Complex, GeomError};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;
use thiserror::Error;

/// Tangency tolerance used by [`validate_necklace`].
pub const NECKLACE_TOL: f64 = 1e-8;

/// Raster resolution of the visibility check.
pub const VISIBILITY_RES: usize = 2048;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GroupError {
    #[error("need at least 3 circles, got {0}")]
    TooFewCircles(usize),
    #[error("circles {0} and {1} are not externally tangent")]
    NotTangentChain(usize, usize),
    #[error("circles {0} and {1} have overlapping interiors")]
    OverlappingInteriors(usize, usize),
    #[error("circles {0} and {1} cross transversally")]
    TransversalIntersection(usize, usize),
    #[error("circle {0} does not meet the boundary of the unbounded complementary region")]
    HiddenCircle(usize),
    #[error("point lies outside every closed disk")]
    NotInDomain,
    #[error("base group needs 3 <= d <= 17, got {0}")]
    BadDegree(usize),
}

/// A point where two circles touch, with 1-based circle labels `i < j`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tangency {
    pub i: usize,
    pub j: usize,
    pub point: Complex,
}

impl Tangency {
    /// Consecutive pairs `{i, i+1}` (including `{1, d}`) are cusps of `∂Π`.
    pub fn is_consecutive(&self, d: usize) -> bool {
        self.j == self.i + 1 || (self.i == 1 && self.j == d)
    }
}

/// Label of a tangency point.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TangencyKind {
    /// `C_i ∩ C_{i+1}`, labeled `i` (with `C_{d+1} = C_1`).
    Cusp(usize),
    /// A non-consecutive contact `{i, j}`.
    Double(usize, usize),
}

/// A validated necklace group.
#[derive(Debug, Clone, PartialEq)]
pub struct NecklaceGroup {
    circles: Vec<Circle>,
    tangencies: Vec<Tangency>,
    /// Bounded faces of the contact graph as cyclic lists of 1-based labels.
    faces: Vec<Vec<usize>>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GroupJson {
    circles: Vec<Circle>,
}

impl Serialize for NecklaceGroup {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        GroupJson { circles: self.circles.clone() }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for NecklaceGroup {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let raw = GroupJson::deserialize(d)?;
        for c in &raw.circles {
            Circle::new(c.center, c.radius).map_err(serde::de::Error::custom)?;
        }
        validate_necklace(&raw.circles).map_err(serde::de::Error::custom)
    }
}

/// The ideal-polygon group: circles orthogonal to `𝕋` through consecutive
/// `d`-th roots of unity.
pub fn base_group(d: usize) -> Result<NecklaceGroup, GroupError> {
    if !(3..=17).contains(&d) {
        return Err(GroupError::BadDegree(d));
    }
    validate_necklace(&base_circles(d))
}

/// Circles of the ideal-polygon group without validation.
pub fn base_circles(d: usize) -> Vec<Circle> {
    (1..=d)
        .map(|j| {
            let t1 = TAU * (j - 1) as f64 / d as f64;
            let t2 = TAU * j as f64 / d as f64;
            orthogonal_chord_circle(t1, t2).expect("arc shorter than pi")
        })
        .collect()
}

/// Checks the necklace conditions and records every tangency.
pub fn validate_necklace(circles: &[Circle]) -> Result<NecklaceGroup, GroupError> {
    let d = circles.len();
    if d < 3 {
        return Err(GroupError::TooFewCircles(d));
    }
    let mut tangencies = Vec::new();
    for i in 0..d {
        for j in (i + 1)..d {
            let consecutive = j == i + 1 || (i == 0 && j == d - 1);
            match circle_relation(&circles[i], &circles[j], NECKLACE_TOL) {
                CircleRelation::ExternallyTangent(p) => tangencies.push(Tangency { i: i + 1, j: j + 1, point: p }),
                CircleRelation::Disjoint if consecutive => return Err(GroupError::NotTangentChain(i + 1, j + 1)),
                CircleRelation::Disjoint => {}
                CircleRelation::Nested => return Err(GroupError::OverlappingInteriors(i + 1, j + 1)),
                CircleRelation::Overlapping => return Err(GroupError::TransversalIntersection(i + 1, j + 1)),
            }
        }
    }
    let chords: Vec<(usize, usize)> = tangencies
        .iter()
        .filter(|t| !t.is_consecutive(d))
        .map(|t| (t.i, t.j))
        .collect();
    let faces = faces_of_outerplanar(d, &chords);
    let group = NecklaceGroup { circles: circles.to_vec(), tangencies, faces };
    if let Some(hidden) = hidden_circle(&group.circles) {
        return Err(GroupError::HiddenCircle(hidden));
    }
    Ok(group)
}

/// Inner faces of the cycle `1..n` with non-crossing chords.
pub fn faces_of_outerplanar(n: usize, chords: &[(usize, usize)]) -> Vec<Vec<usize>> {
    let mut faces: Vec<Vec<usize>> = vec![(1..=n).collect()];
    for &(a, b) in chords {
        let Some(idx) = faces.iter().position(|f| f.contains(&a) && f.contains(&b)) else { continue };
        let face = faces.swap_remove(idx);
        let pa = face.iter().position(|&v| v == a).unwrap();
        let pb = face.iter().position(|&v| v == b).unwrap();
        let (lo, hi) = (pa.min(pb), pa.max(pb));
        let first: Vec<usize> = face[lo..=hi].to_vec();
        let mut second: Vec<usize> = face[hi..].to_vec();
        second.extend_from_slice(&face[..=lo]);
        faces.push(first);
        faces.push(second);
    }
    faces.sort();
    faces
}

/// Flood fills the outside of the (slightly dilated) disks on a raster and
/// returns the first circle with no outside pixel near its boundary.
fn hidden_circle(circles: &[Circle]) -> Option<usize> {
    let (mut x0, mut x1, mut y0, mut y1) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
    for c in circles {
        x0 = x0.min(c.center.re - c.radius);
        x1 = x1.max(c.center.re + c.radius);
        y0 = y0.min(c.center.im - c.radius);
        y1 = y1.max(c.center.im + c.radius);
    }
    let span = (x1 - x0).max(y1 - y0) * 1.1;
    let (cx, cy) = (0.5 * (x0 + x1), 0.5 * (y0 + y1));
    let n = VISIBILITY_RES;
    let px = span / n as f64;
    let ox = cx - 0.5 * span;
    let oy = cy - 0.5 * span;
    let at = |i: usize, j: usize| Complex::new(ox + (i as f64 + 0.5) * px, oy + (j as f64 + 0.5) * px);
    let dil = 0.75 * px;
    // Scanline fill of each dilated disk.
    let mut blocked = vec![false; n * n];
    for c in circles {
        let rr = c.radius + dil;
        let j0 = (((c.center.im - rr - oy) / px).floor().max(0.0)) as usize;
        let j1 = ((((c.center.im + rr - oy) / px).ceil()) as usize).min(n - 1);
        for j in j0..=j1 {
            let y = oy + (j as f64 + 0.5) * px - c.center.im;
            let h2 = rr * rr - y * y;
            if h2 < 0.0 {
                continue;
            }
            let h = h2.sqrt();
            let i0 = ((c.center.re - h - ox) / px - 0.5).ceil().max(0.0) as usize;
            let i1 = ((c.center.re + h - ox) / px - 0.5).floor();
            if i1 < 0.0 {
                continue;
            }
            let i1 = (i1 as usize).min(n - 1);
            for b in &mut blocked[j * n + i0.min(n)..=j * n + i1] {
                *b = true;
            }
        }
    }
    let mut outer = vec![false; n * n];
    let mut stack: Vec<usize> = Vec::new();
    for i in 0..n {
        for k in [i, (n - 1) * n + i, i * n, i * n + n - 1] {
            if !blocked[k] && !outer[k] {
                outer[k] = true;
                stack.push(k);
            }
        }
    }
    while let Some(k) = stack.pop() {
        let (i, j) = (k % n, k / n);
        let mut push = |ii: usize, jj: usize| {
            let q = jj * n + ii;
            if !blocked[q] && !outer[q] {
                outer[q] = true;
                stack.push(q);
            }
        };
        if i > 0 {
            push(i - 1, j);
        }
        if i + 1 < n {
            push(i + 1, j);
        }
        if j > 0 {
            push(i, j - 1);
        }
        if j + 1 < n {
            push(i, j + 1);
        }
    }
    (0..circles.len())
        .find(|&ci| {
            let c = &circles[ci];
            // Pixels in the annulus of width 2px around C_i.
            let lo_i = (((c.center.re - c.radius - ox) / px) as isize - 3).max(0) as usize;
            let hi_i = ((((c.center.re + c.radius - ox) / px) as isize + 3).max(0) as usize).min(n - 1);
            let lo_j = (((c.center.im - c.radius - oy) / px) as isize - 3).max(0) as usize;
            let hi_j = ((((c.center.im + c.radius - oy) / px) as isize + 3).max(0) as usize).min(n - 1);
            !(lo_j..=hi_j).into_par_iter().any(|j| {
                (lo_i..=hi_i).any(|i| {
                    outer[j * n + i] && ((at(i, j) - c.center).norm() - c.radius).abs() <= 2.0 * px
                })
            })
        })
        .map(|i| i + 1)
}

/// Where an orbit of `ρ_Γ` ends up.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OrbitFate {
    /// Reached the unbounded part `Π°` of the fundamental domain.
    InPolygon { depth: usize },
    /// Reached the bounded face with the given index.
    InDroplet { component: usize, depth: usize },
    /// Hit a circle center, whose image is the point at infinity.
    Escaped { depth: usize },
    /// Still inside the disks after `max_depth` steps.
    Undecided { max_depth: usize },
}

impl OrbitFate {
    pub fn depth(&self) -> usize {
        match *self {
            OrbitFate::InPolygon { depth } | OrbitFate::Escaped { depth } => depth,
            OrbitFate::InDroplet { depth, .. } => depth,
            OrbitFate::Undecided { max_depth } => max_depth,
        }
    }
}

impl NecklaceGroup {
    pub fn d(&self) -> usize {
        self.circles.len()
    }

    pub fn circles(&self) -> &[Circle] {
        &self.circles
    }

    /// Circle `C_i` for a 1-based label.
    pub fn circle(&self, i: usize) -> &Circle {
        &self.circles[i - 1]
    }

    pub fn tangencies(&self) -> &[Tangency] {
        &self.tangencies
    }

    /// Bounded faces of the contact graph (1-based labels, cyclic order).
    pub fn faces(&self) -> &[Vec<usize>] {
        &self.faces
    }

    /// Non-consecutive contacts `{i, j}`.
    pub fn extra_tangencies(&self) -> Vec<(usize, usize)> {
        let d = self.d();
        self.tangencies.iter().filter(|t| !t.is_consecutive(d)).map(|t| (t.i, t.j)).collect()
    }

    /// Tangency point of `C_i` and `C_j`.
    pub fn tangency(&self, i: usize, j: usize) -> Option<Complex> {
        let (a, b) = (i.min(j), i.max(j));
        self.tangencies.iter().find(|t| t.i == a && t.j == b).map(|t| t.point)
    }

    /// Consecutive tangencies labeled `1..d`, then the extra contacts.
    pub fn tangency_points(&self) -> Vec<(TangencyKind, Complex)> {
        let d = self.d();
        let mut out: Vec<(TangencyKind, Complex)> = (1..=d)
            .map(|i| {
                let j = if i == d { 1 } else { i + 1 };
                (TangencyKind::Cusp(i), self.tangency(i, j).expect("validated chain"))
            })
            .collect();
        for (i, j) in self.extra_tangencies() {
            out.push((TangencyKind::Double(i, j), self.tangency(i, j).unwrap()));
        }
        out
    }

    /// One step of `ρ_Γ`; ties go to the smallest label.
    pub fn rho_step(&self, z: Complex) -> Result<(Result<Complex, GeomError>, usize), GroupError> {
        for (i, c) in self.circles.iter().enumerate() {
            if (z - c.center).norm() <= c.radius + 1e-12 {
                return Ok((reflect(c, z), i + 1));
            }
        }
        Err(GroupError::NotInDomain)
    }

    /// Classifies a point outside all closed disks.
    pub fn locate(&self, z: Complex) -> OrbitFate {
        if self.winding(&(1..=self.d()).collect::<Vec<_>>(), z) == 0 {
            return OrbitFate::InPolygon { depth: 0 };
        }
        for (k, face) in self.faces.iter().enumerate() {
            if self.winding(face, z) != 0 {
                return OrbitFate::InDroplet { component: k, depth: 0 };
            }
        }
        OrbitFate::InPolygon { depth: 0 }
    }

    /// Winding number around `z` of the polygon through the centers and the
    /// tangency points of a cycle of circles.
    fn winding(&self, cycle: &[usize], z: Complex) -> i64 {
        let m = cycle.len();
        let mut verts = Vec::with_capacity(2 * m);
        for k in 0..m {
            let a = cycle[k];
            let b = cycle[(k + 1) % m];
            verts.push(self.circle(a).center);
            verts.push(self.tangency(a, b).unwrap_or_else(|| 0.5 * (self.circle(a).center + self.circle(b).center)));
        }
        let mut total = 0.0;
        for k in 0..verts.len() {
            let p = verts[k] - z;
            let q = verts[(k + 1) % verts.len()] - z;
            total += (q / p).arg();
        }
        (total / TAU).round() as i64
    }

    /// Iterates `ρ_Γ` until the orbit leaves the disks.
    ///
    /// A running bound on the accumulated rounding error is kept; an exit
    /// closer to the disks than that bound is not trusted and reported as
    /// undecided (this keeps orbits on invariant circles from drifting out).
    pub fn classify_orbit(&self, z: Complex, max_depth: usize) -> OrbitFate {
        let mut z = z;
        let mut err = 0.0f64;
        for depth in 0..=max_depth {
            match self.rho_step(z) {
                Err(_) => {
                    let margin = self
                        .circles
                        .iter()
                        .map(|c| (z - c.center).norm() - c.radius)
                        .fold(f64::INFINITY, f64::min);
                    if margin <= 10.0 * err {
                        return OrbitFate::Undecided { max_depth };
                    }
                    return match self.locate(z) {
                        OrbitFate::InDroplet { component, .. } => OrbitFate::InDroplet { component, depth },
                        _ => OrbitFate::InPolygon { depth },
                    };
                }
                Ok((Err(_), _)) => return OrbitFate::Escaped { depth: depth + 1 },
                Ok((Ok(w), i)) => {
                    if depth == max_depth {
                        break;
                    }
                    let c = self.circle(i);
                    let gain = c.radius * c.radius / (z - c.center).norm_sqr();
                    err = err * gain + 1e-15 * (1.0 + w.norm());
                    z = w;
                }
            }
        }
        OrbitFate::Undecided { max_depth }
    }

    /// Applies `ρ_Γ` to a point of `𝕋` for the base group (used by the
    /// symbolic layer); returns the generator label.
    pub fn rho_on_circle(&self, t: Complex) -> Option<(Complex, usize)> {
        let (img, i) = self.rho_step(t).ok()?;
        img.ok().map(|w| (w / w.norm(), i))
    }
}

/// Angle of `z` in `[0, 2π)`.
pub(crate) fn arg_positive(z: Complex) -> f64 {
    let a = z.arg();
    if a < 0.0 { a + TAU } else { a }
}

/// Samples of the inner arc of `C_i` from `from` to `to`, traversed
/// clockwise about its own center (the side facing the bounded face).
pub fn inner_arc(c: &Circle, from: Complex, to: Complex, samples: usize) -> Vec<Complex> {
    let a0 = arg_positive(from - c.center);
    let a1 = arg_positive(to - c.center);
    let sweep = (a0 - a1).rem_euclid(TAU);
    let sweep = if sweep == 0.0 { TAU } else { sweep };
    (0..samples)
        .map(|k| c.point(a0 - sweep * k as f64 / samples as f64))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> Complex {
        Complex::new(re, im)
    }

    #[test]
    fn base_group_closed_form() {
        let g = base_group(4).unwrap();
        for j in 1..=4 {
            let circ = g.circle(j);
            assert!((circ.radius - 1.0).abs() < 1e-12);
            let expect = Complex::from_polar(2f64.sqrt(), PI * (2 * j - 1) as f64 / 4.0);
            assert!((circ.center - expect).norm() < 1e-12);
        }
        for (kind, p) in g.tangency_points() {
            let TangencyKind::Cusp(j) = kind else { panic!("extra tangency") };
            assert!((p - Complex::from_polar(1.0, TAU * j as f64 / 4.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn base_groups_validate() {
        for d in 3..=17 {
            let g = base_group(d).unwrap();
            assert_eq!(g.tangencies().len(), d);
            assert!(g.extra_tangencies().is_empty());
        }
    }

    #[test]
    fn hidden_circle_detected() {
        let r4 = 1.09f64.sqrt() - 1.0;
        let circles = vec![
            Circle::new(c(-1.0, 0.0), 1.0).unwrap(),
            Circle::new(c(0.0, 3f64.sqrt()), 1.0).unwrap(),
            Circle::new(c(1.0, 0.0), 1.0).unwrap(),
            Circle::new(c(0.0, 0.3), r4).unwrap(),
        ];
        assert_eq!(validate_necklace(&circles), Err(GroupError::HiddenCircle(4)));
    }

    #[test]
    fn transversal_detected() {
        let mut circles = base_group(5).unwrap().circles().to_vec();
        circles[0].radius *= 1.2;
        assert!(matches!(validate_necklace(&circles), Err(GroupError::TransversalIntersection(_, _))));
    }

    #[test]
    fn rho_step_examples() {
        let g = base_group(4).unwrap();
        let c1 = *g.circle(1);
        let dir = c1.center / c1.center.norm();
        let z = c1.center + dir * (0.5 * c1.radius);
        let (img, i) = g.rho_step(z).unwrap();
        assert_eq!(i, 1);
        assert!(((img.unwrap() - c1.center).norm() - 2.0 * c1.radius).abs() < 1e-12);
        let on = c1.point(2.0);
        let (img, _) = g.rho_step(on).unwrap();
        assert!((img.unwrap() - on).norm() < 1e-12);
        let t = g.tangency(1, 2).unwrap();
        assert_eq!(g.rho_step(t).unwrap().1, 1);
    }

    #[test]
    fn orbit_examples() {
        for d in 3..=8 {
            let g = base_group(d).unwrap();
            assert_eq!(g.classify_orbit(c(0.0, 0.0), 10), OrbitFate::InDroplet { component: 0, depth: 0 });
            assert_eq!(g.classify_orbit(c(2.0, 0.0), 10), OrbitFate::InPolygon { depth: 0 });
            let on = Complex::from_polar(1.0, 0.3);
            assert_eq!(g.classify_orbit(on, 50), OrbitFate::Undecided { max_depth: 50 });
        }
    }

    #[test]
    fn faces_split_by_chords() {
        assert_eq!(faces_of_outerplanar(4, &[(2, 4)]), vec![vec![2, 3, 4], vec![4, 1, 2]]);
        assert_eq!(faces_of_outerplanar(3, &[]), vec![vec![1, 2, 3]]);
    }
}
