//! Circle packings of contact complexes inside the unit disk, every
//! vertex circle internally tangent to `𝕋`.
//!
//! The unit circle is the apex adjacent to every vertex, so in the
//! hyperbolic metric of `𝔻` the vertex circles are horocycles. Faces of
//! the outerplanar complex with more than three vertices get one helper
//! vertex, a hyperbolic circle whose radius comes from Thurston's
//! angle-sum iteration. Faces are laid out in a symmetric standard
//! position and glued along chords by automorphisms of the disk.

use crate::geom::{Circle, Complex};
use crate::group::{faces_of_outerplanar, validate_necklace, GroupError, NecklaceGroup};
use crate::sigma::{SigmaError, SigmaMap};
use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, TAU};
use thiserror::Error;

/// Stop once no radius parameter changes by more than this.
pub const RADIUS_TOL: f64 = 1e-12;
/// Largest tolerated closing-up error of the layout.
pub const LAYOUT_TOL: f64 = 1e-6;
pub const MAX_VERTICES: usize = 17;
const MAX_ITERATIONS: usize = 100_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PackingError {
    #[error("invalid contact complex: {0}")]
    InvalidComplex(String),
    #[error("radius iteration stalled with change {0:.3e}")]
    IterationStalled(f64),
    #[error("layout does not close up (residual {0:.3e})")]
    LayoutInconsistent(f64),
    #[error(transparent)]
    Sigma(#[from] SigmaError),
    #[error(transparent)]
    Group(#[from] GroupError),
}

/// Outer cycle `1..n` plus non-crossing chords.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "ComplexJson")]
pub struct ContactComplex {
    n: usize,
    chords: Vec<(usize, usize)>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ComplexJson {
    n: usize,
    chords: Vec<(usize, usize)>,
}

impl TryFrom<ComplexJson> for ContactComplex {
    type Error = PackingError;
    fn try_from(raw: ComplexJson) -> Result<Self, PackingError> {
        ContactComplex::new(raw.n, raw.chords)
    }
}

impl ContactComplex {
    pub fn new(n: usize, chords: Vec<(usize, usize)>) -> Result<Self, PackingError> {
        if !(3..=MAX_VERTICES).contains(&n) {
            return Err(PackingError::InvalidComplex(format!("{n} vertices, expected 3..={MAX_VERTICES}")));
        }
        let mut norm: Vec<(usize, usize)> = Vec::new();
        for (a, b) in chords {
            let (a, b) = (a.min(b), a.max(b));
            if a < 1 || b > n || a == b {
                return Err(PackingError::InvalidComplex(format!("chord {{{a},{b}}} out of range")));
            }
            if b == a + 1 || (a == 1 && b == n) {
                return Err(PackingError::InvalidComplex(format!("chord {{{a},{b}}} joins neighbors")));
            }
            if norm.contains(&(a, b)) {
                return Err(PackingError::InvalidComplex(format!("chord {{{a},{b}}} repeated")));
            }
            if let Some(&(c, e)) = norm.iter().find(|&&(c, e)| crosses((a, b), (c, e))) {
                return Err(PackingError::InvalidComplex(format!("chords {{{a},{b}}} and {{{c},{e}}} cross")));
            }
            norm.push((a, b));
        }
        norm.sort();
        Ok(ContactComplex { n, chords: norm })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn chords(&self) -> &[(usize, usize)] {
        &self.chords
    }
}

fn crosses((a, b): (usize, usize), (c, d): (usize, usize)) -> bool {
    let inside = |x: usize| a < x && x < b;
    if [c, d].iter().any(|&x| x == a || x == b) {
        return false;
    }
    inside(c) != inside(d)
}

/// Contact complex of the droplet of `f`: one vertex per boundary arc
/// between consecutive cusps and one chord per double point.
pub fn contact_complex(f: &SigmaMap) -> Result<ContactComplex, PackingError> {
    let cusps = f.find_cusps()?;
    let doubles = f.find_double_points()?;
    let n = cusps.len();
    let mut chords = Vec::new();
    for p in &doubles.points {
        let (a, b) = (cusps.arc_of(p.theta), cusps.arc_of(p.theta_prime));
        chords.push((a, b));
    }
    ContactComplex::new(n, chords)
}

/// Radii and layout of a packed complex.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PackingResult {
    /// One circle per complex vertex, in label order.
    pub circles: Vec<Circle>,
    /// Scaffolding circles filling non-triangular faces.
    pub helper_circles: Vec<Circle>,
    /// Largest tangency residual over all edges, helpers included.
    pub max_tangency_residual: f64,
    pub iterations: usize,
}

/// The complex with one helper per non-triangular face.
struct Triangulation {
    n: usize,
    /// Vertex ids are `1..=n` for the complex, then helpers.
    vertices: usize,
    /// Faces of the complex with their helper, if any.
    faces: Vec<(Vec<usize>, Option<usize>)>,
}

impl Triangulation {
    fn of(k: &ContactComplex) -> Self {
        let mut next = k.n + 1;
        let faces = faces_of_outerplanar(k.n, &k.chords)
            .into_iter()
            .map(|f| {
                let h = (f.len() > 3).then(|| {
                    next += 1;
                    next - 1
                });
                (f, h)
            })
            .collect();
        Triangulation { n: k.n, vertices: next, faces }
    }

    /// Tangent pairs, apex (vertex 0) included.
    fn edges(&self) -> Vec<(usize, usize)> {
        let mut e: Vec<(usize, usize)> = (1..=self.n).map(|i| (0, i)).collect();
        for (f, h) in &self.faces {
            for w in 0..f.len() {
                let (a, b) = (f[w], f[(w + 1) % f.len()]);
                e.push((a.min(b), a.max(b)));
                if let Some(h) = h {
                    e.push((a, *h));
                }
            }
        }
        e.sort();
        e.dedup();
        e
    }

    /// Petals of each helper, in cyclic order.
    fn flowers(&self) -> Vec<(usize, Vec<usize>)> {
        self.faces.iter().filter_map(|(f, h)| h.map(|h| (h, f.clone()))).collect()
    }
}

/// Angle at `v` in the triangle of circles `(v, u, w)`, for hyperbolic
/// radii given as `s = e^{−h}` (`s = 0` is a horocycle).
fn hyperbolic_corner(sv: f64, su: f64, sw: f64) -> f64 {
    let q = sv * sv * (1.0 - su * su) * (1.0 - sw * sw) / ((1.0 - sv * sv * su * su) * (1.0 - sv * sv * sw * sw));
    2.0 * q.clamp(0.0, 1.0).sqrt().asin()
}

fn flower_sum(sv: f64, petals: &[usize], s: &[f64]) -> f64 {
    (0..petals.len())
        .map(|k| hyperbolic_corner(sv, s[petals[k]], s[petals[(k + 1) % petals.len()]]))
        .sum()
}

/// Packs `k`; see the module documentation.
pub fn pack(k: &ContactComplex) -> Result<PackingResult, PackingError> {
    pack_with_history(k).map(|(p, _)| p)
}

/// [`pack`] together with the largest angle-sum deviation before each sweep.
pub fn pack_with_history(k: &ContactComplex) -> Result<(PackingResult, Vec<f64>), PackingError> {
    let tri = Triangulation::of(k);
    let flowers = tri.flowers();
    let mut s = vec![0.0; tri.vertices];
    for (h, _) in &flowers {
        s[*h] = 0.5;
    }
    let mut history = Vec::new();
    let mut iterations = 0;
    loop {
        let deviation = flowers.iter().map(|(h, p)| (flower_sum(s[*h], p, &s) - TAU).abs()).fold(0.0, f64::max);
        history.push(deviation);
        if flowers.is_empty() {
            break;
        }
        // Jacobi sweep: each helper solves its own angle sum exactly
        // against the previous radii (the sum increases with `s`).
        let old = s.clone();
        let mut change = 0.0f64;
        for (h, petals) in &flowers {
            let (mut lo, mut hi) = (0.0f64, 1.0f64);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if flower_sum(mid, petals, &old) < TAU {
                    lo = mid;
                } else {
                    hi = mid;
                }
                if hi - lo < 1e-16 {
                    break;
                }
            }
            s[*h] = 0.5 * (lo + hi);
            change = change.max((s[*h] - old[*h]).abs());
        }
        iterations += 1;
        if change < RADIUS_TOL {
            history.push(flowers.iter().map(|(h, p)| (flower_sum(s[*h], p, &s) - TAU).abs()).fold(0.0, f64::max));
            break;
        }
        if iterations >= MAX_ITERATIONS {
            return Err(PackingError::IterationStalled(change));
        }
    }
    let circles = layout(&tri, &s)?;
    let mut residual = 0.0f64;
    for (a, b) in tri.edges() {
        let r = if a == 0 {
            (circles[b].center.norm() + circles[b].radius - 1.0).abs()
        } else {
            let (ca, cb) = (&circles[a], &circles[b]);
            ((ca.center - cb.center).norm() - ca.radius - cb.radius).abs()
        };
        residual = residual.max(r);
    }
    if !(residual <= LAYOUT_TOL) {
        return Err(PackingError::LayoutInconsistent(residual));
    }
    Ok((
        PackingResult {
            circles: circles[1..=k.n].to_vec(),
            helper_circles: circles[k.n + 1..].to_vec(),
            max_tangency_residual: residual,
            iterations,
        },
        history,
    ))
}

/// `z ↦ (az + b)/(cz + d)`.
#[derive(Debug, Clone, Copy)]
struct Moebius([Complex; 4]);

impl Moebius {
    fn apply(&self, z: Complex) -> Complex {
        let [a, b, c, d] = self.0;
        (a * z + b) / (c * z + d)
    }

    fn compose(&self, o: &Moebius) -> Moebius {
        let [a, b, c, d] = self.0;
        let [e, f, g, h] = o.0;
        Moebius([a * e + b * g, a * f + b * h, c * e + d * g, c * f + d * h])
    }

    fn inverse(&self) -> Moebius {
        let [a, b, c, d] = self.0;
        Moebius([d, -b, -c, a])
    }

    /// Sends `z1, z2, z3` to `0, 1, ∞`.
    fn normalizing(z1: Complex, z2: Complex, z3: Complex) -> Moebius {
        Moebius([z2 - z3, -z1 * (z2 - z3), z2 - z1, -z3 * (z2 - z1)])
    }

    fn from_points(from: [Complex; 3], to: [Complex; 3]) -> Moebius {
        let a = Moebius::normalizing(from[0], from[1], from[2]);
        let b = Moebius::normalizing(to[0], to[1], to[2]);
        b.inverse().compose(&a)
    }

    /// Disk automorphism `z ↦ (z − a)/(1 − āz)`.
    fn disk(a: Complex) -> Moebius {
        let one = Complex::new(1.0, 0.0);
        Moebius([one, -a, -a.conj(), one])
    }

    fn circle(&self, c: &Circle) -> Circle {
        let p: Vec<Complex> = (0..3).map(|k| self.apply(c.point(TAU * k as f64 / 3.0))).collect();
        circumcircle(p[0], p[1], p[2])
    }
}

fn circumcircle(a: Complex, b: Complex, c: Complex) -> Circle {
    let (b, c) = (b - a, c - a);
    let d = 2.0 * (b.re * c.im - b.im * c.re);
    let ux = (c.im * b.norm_sqr() - b.im * c.norm_sqr()) / d;
    let uy = (b.re * c.norm_sqr() - c.re * b.norm_sqr()) / d;
    let u = Complex::new(ux, uy);
    Circle { center: a + u, radius: u.norm() }
}

/// Point where a circle internally tangent to `𝕋` touches it.
fn touch_point(c: &Circle) -> Complex {
    c.center / c.center.norm()
}

fn tangency_point(a: &Circle, b: &Circle) -> Complex {
    let u = b.center - a.center;
    a.center + u * (a.radius / u.norm())
}

/// Face circles in symmetric position: vertex `k` of an `m`-face touches
/// `𝕋` at `e^{2πik/m}`, and the helper (if any) is centered at 0.
fn standard_face(face: &[usize], helper_s: Option<f64>) -> (Vec<Circle>, Option<Circle>) {
    let m = face.len();
    let rho = chain_radius(m);
    let circles = (0..m)
        .map(|k| Circle { center: Complex::from_polar(1.0 - rho, TAU * k as f64 / m as f64), radius: rho })
        .collect();
    let helper = helper_s.map(|s| Circle { center: Complex::new(0.0, 0.0), radius: (1.0 - s) / (1.0 + s) });
    (circles, helper)
}

/// Lays out every circle; entry 0 is the unit circle.
fn layout(tri: &Triangulation, s: &[f64]) -> Result<Vec<Circle>, PackingError> {
    let mut out: Vec<Option<Circle>> = vec![None; tri.vertices];
    out[0] = Some(Circle::unit());
    let mut placed = vec![false; tri.faces.len()];
    let first = tri.faces.iter().position(|(f, _)| f.contains(&1)).expect("vertex 1 lies on a face");
    let mut queue = vec![first];
    let mut seeded = false;
    while let Some(fi) = queue.pop() {
        if placed[fi] {
            continue;
        }
        let (face, helper) = &tri.faces[fi];
        let (std, std_helper) = standard_face(face, helper.map(|h| s[h]));
        let map = if !seeded {
            seeded = true;
            Moebius::disk(Complex::new(0.0, 0.0))
        } else {
            let m = face.len();
            let w = (0..m)
                .find(|&w| out[face[w]].is_some() && out[face[(w + 1) % m]].is_some())
                .ok_or(PackingError::LayoutInconsistent(f64::INFINITY))?;
            let (a, b) = (face[w], face[(w + 1) % m]);
            let (pa, pb) = (out[a].unwrap(), out[b].unwrap());
            let (sa, sb) = (std[w], std[(w + 1) % m]);
            Moebius::from_points(
                [touch_point(&sa), touch_point(&sb), tangency_point(&sa, &sb)],
                [touch_point(&pa), touch_point(&pb), tangency_point(&pa, &pb)],
            )
        };
        for (k, &v) in face.iter().enumerate() {
            if out[v].is_none() {
                out[v] = Some(map.circle(&std[k]));
            }
        }
        if let (Some(h), Some(c)) = (helper, std_helper) {
            out[*h] = Some(map.circle(&c));
        }
        placed[fi] = true;
        for (j, (g, _)) in tri.faces.iter().enumerate() {
            if !placed[j] && g.iter().filter(|v| face.contains(v)).count() == 2 {
                queue.push(j);
            }
        }
    }
    let mut circles: Vec<Circle> = out
        .into_iter()
        .map(|c| c.ok_or(PackingError::LayoutInconsistent(f64::INFINITY)))
        .collect::<Result<_, _>>()?;
    // Conformal barycenter of the touching points to 0, then vertex 1 to 1.
    let mut total = Moebius::disk(Complex::new(0.0, 0.0));
    let base: Vec<Complex> = circles[1..=tri.n].iter().map(touch_point).collect();
    for _ in 0..1000 {
        let pts: Vec<Complex> = base.iter().map(|&p| total.apply(p)).collect();
        let mean = pts.iter().sum::<Complex>() / pts.len() as f64;
        if mean.norm() < 1e-15 {
            break;
        }
        total = Moebius::disk(mean).compose(&total);
    }
    let p1 = total.apply(base[0]);
    let rot = p1.conj() / p1.norm();
    let zero = Complex::new(0.0, 0.0);
    total = Moebius([rot, zero, zero, Complex::new(1.0, 0.0)]).compose(&total);
    for c in circles.iter_mut().skip(1) {
        *c = total.circle(c);
    }
    Ok(circles)
}

/// Group generated by the vertex circles; helpers are dropped.
pub fn packing_to_necklace(pr: &PackingResult) -> Result<NecklaceGroup, PackingError> {
    Ok(validate_necklace(&pr.circles)?)
}

/// Radius of `n` equal circles in a closed chain inside `𝕋`.
pub fn chain_radius(n: usize) -> f64 {
    let s = (PI / n as f64).sin();
    s / (1.0 + s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_chords() {
        assert!(ContactComplex::new(4, vec![(1, 2)]).is_err());
        assert!(ContactComplex::new(4, vec![(1, 4)]).is_err());
        assert!(ContactComplex::new(6, vec![(1, 4), (2, 5)]).is_err());
        assert!(ContactComplex::new(6, vec![(1, 4), (4, 6)]).is_ok());
    }

    #[test]
    fn equal_chain() {
        for n in 3..9 {
            let p = pack(&ContactComplex::new(n, vec![]).unwrap()).unwrap();
            for c in &p.circles {
                assert!((c.radius - chain_radius(n)).abs() < 1e-9, "n={n}: {}", c.radius);
                assert!((c.center.norm() + c.radius - 1.0).abs() < 1e-9);
            }
            assert!((p.circles[0].center.norm() + p.circles[0].radius - 1.0).abs() < 1e-12);
            assert!(p.circles[0].center.im.abs() < 1e-12);
        }
    }

    #[test]
    fn json_round_trip() {
        let k: ContactComplex = serde_json::from_str(r#"{"n":4,"chords":[[2,4]]}"#).unwrap();
        assert_eq!(k.chords(), &[(2, 4)]);
        assert!(serde_json::from_str::<ContactComplex>(r#"{"n":4,"chords":[[1,2]]}"#).is_err());
    }
}
