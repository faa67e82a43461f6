//! Maps `f(z) = z + a₁/z + … + a_d/z^d` with `a_d = −1/d`, their Schwarz
//! reflections, and the anatomy of the droplet boundary `f(𝕋)`.

use crate::geom::{pair_vec, Complex};
use crate::poly::Poly;
use crate::rays::{self, RayParams, Target};
use crate::symbolic::RationalAngle;
use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, TAU};
use thiserror::Error;

/// Largest supported degree.
pub const MAX_DEGREE: usize = 16;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SigmaError {
    #[error("degree {0} outside 2..=16")]
    BadDegree(usize),
    #[error("leading coefficient {0} differs from -1/d")]
    BadLeadingCoefficient(Complex),
    #[error("coefficient list has {got} entries, expected {expected}")]
    BadCoefficientCount { expected: usize, got: usize },
    #[error("evaluation at the origin")]
    OriginInput,
    #[error("Newton inversion failed after {0} iterations")]
    NoConvergence(usize),
    #[error("preimage lies in the closed unit disk (|z| = {0})")]
    NotExterior(f64),
    #[error("found {0} critical points on the unit circle, expected d+1")]
    WrongCuspCount(usize),
    #[error("the 0-ray does not land near a unique cusp: {0}")]
    RayLandingAmbiguous(String),
    #[error("found {found} double points, at most {max} allowed")]
    TooManyDoublePoints { found: usize, max: usize },
    #[error("boundary gluing does not produce a tree of components: {0}")]
    InconsistentDecomposition(String),
}

/// A member of the family Σ_d^*, stored by its coefficients `a₁ … a_d`.
#[derive(Debug, Clone, PartialEq)]
pub struct SigmaMap {
    d: usize,
    a: Vec<Complex>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SigmaJson {
    d: usize,
    #[serde(with = "pair_vec")]
    a: Vec<Complex>,
}

impl Serialize for SigmaMap {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        SigmaJson { d: self.d, a: self.a.clone() }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for SigmaMap {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let raw = SigmaJson::deserialize(d)?;
        if raw.a.len() != raw.d {
            return Err(serde::de::Error::custom(SigmaError::BadCoefficientCount {
                expected: raw.d,
                got: raw.a.len(),
            }));
        }
        SigmaMap::new(raw.a).map_err(serde::de::Error::custom)
    }
}

impl SigmaMap {
    /// Builds a map from `a₁ … a_d`; the last entry must equal `−1/d`.
    pub fn new(a: Vec<Complex>) -> Result<Self, SigmaError> {
        let d = a.len();
        if !(2..=MAX_DEGREE).contains(&d) {
            return Err(SigmaError::BadDegree(d));
        }
        let expected = Complex::new(-1.0 / d as f64, 0.0);
        if (a[d - 1] - expected).norm() > 1e-12 {
            return Err(SigmaError::BadLeadingCoefficient(a[d - 1]));
        }
        let mut a = a;
        a[d - 1] = expected;
        Ok(SigmaMap { d, a })
    }

    /// `f₀(z) = z − 1/(d z^d)`.
    pub fn f0(d: usize) -> Result<Self, SigmaError> {
        let mut a = vec![Complex::new(0.0, 0.0); d];
        if d >= 1 {
            a[d - 1] = Complex::new(-1.0 / d as f64, 0.0);
        }
        SigmaMap::new(a)
    }

    /// Cubic family `z − t/(3z) − 1/(3z³)`.
    pub fn cubic_family(t: f64) -> Self {
        SigmaMap::new(vec![
            Complex::new(-t / 3.0, 0.0),
            Complex::new(0.0, 0.0),
            Complex::new(-1.0 / 3.0, 0.0),
        ])
        .expect("valid cubic")
    }

    pub fn degree(&self) -> usize {
        self.d
    }

    pub fn coeffs(&self) -> &[Complex] {
        &self.a
    }

    /// `f(z)` and `f′(z)` by Horner in `1/z`.
    pub fn eval_with_derivative(&self, z: Complex) -> Result<(Complex, Complex), SigmaError> {
        if z.norm() == 0.0 {
            return Err(SigmaError::OriginInput);
        }
        let u = z.inv();
        let zero = Complex::new(0.0, 0.0);
        // tail = Σ a_k u^k, dtail = Σ k a_k u^k
        let mut tail = zero;
        let mut dtail = zero;
        for k in (1..=self.d).rev() {
            tail = (tail + self.a[k - 1]) * u;
            dtail = (dtail + self.a[k - 1] * k as f64) * u;
        }
        Ok((z + tail, Complex::new(1.0, 0.0) - dtail * u))
    }

    pub fn eval(&self, z: Complex) -> Result<Complex, SigmaError> {
        self.eval_with_derivative(z).map(|p| p.0)
    }

    /// `f(e^{iθ})`.
    pub fn boundary_point(&self, theta: f64) -> Complex {
        self.eval(Complex::from_polar(1.0, theta)).expect("unit circle avoids origin")
    }

    /// `z^{d+1} f′(z)`, whose unit-circle roots are the cusp preimages.
    pub fn critical_polynomial(&self) -> Poly {
        let d = self.d;
        let mut c = vec![Complex::new(0.0, 0.0); d + 2];
        c[d + 1] = Complex::new(1.0, 0.0);
        for k in 1..=d {
            c[d - k] = -self.a[k - 1] * k as f64;
        }
        Poly::new(c)
    }

    /// `z^d (f(z) − w)` as a polynomial in `z`.
    fn preimage_polynomial(&self, w: Complex) -> Poly {
        let d = self.d;
        let mut c = vec![Complex::new(0.0, 0.0); d + 2];
        c[d + 1] = Complex::new(1.0, 0.0);
        c[d] = -w;
        for k in 1..=d {
            c[d - k] = self.a[k - 1];
        }
        Poly::new(c)
    }

    /// Damped Newton for `f(z) = w` from `z0`; `None` if it stalls.
    pub fn newton(&self, w: Complex, z0: Complex) -> Option<Complex> {
        let target = 1e-12 * (1.0 + w.norm());
        let mut z = z0;
        let mut res = match self.eval(z) {
            Ok(v) => (v - w).norm(),
            Err(_) => return None,
        };
        for _ in 0..NEWTON_STEPS {
            if res < target {
                return Some(z);
            }
            let (v, dv) = self.eval_with_derivative(z).ok()?;
            if dv.norm() == 0.0 {
                return None;
            }
            let step = (v - w) / dv;
            let mut scale = 1.0;
            let mut accepted = false;
            for _ in 0..=NEWTON_HALVINGS {
                let cand = z - step * scale;
                if let Ok(fc) = self.eval(cand) {
                    let r = (fc - w).norm();
                    if r < res {
                        z = cand;
                        res = r;
                        accepted = true;
                        break;
                    }
                }
                scale *= 0.5;
            }
            if !accepted {
                return if res < 1e3 * target { Some(z) } else { None };
            }
        }
        if res < target { Some(z) } else { None }
    }

    /// The preimage of `w` in the exterior disk.
    pub fn invert_exterior(&self, w: Complex, guess: Option<Complex>) -> Result<Complex, SigmaError> {
        let seed = guess.unwrap_or(if w.norm() > 1.0 { w } else { Complex::new(2.0, 0.0) });
        if let Some(z) = self.newton(w, seed) {
            if z.norm() > 1.0 {
                return Ok(z);
            }
        }
        // Fall back to all preimages and keep the outermost one.
        let roots = self
            .preimage_polynomial(w)
            .roots()
            .map_err(|_| SigmaError::NoConvergence(NEWTON_STEPS))?;
        let best = roots
            .into_iter()
            .max_by(|a, b| a.norm().partial_cmp(&b.norm()).unwrap())
            .expect("degree d+1 ≥ 3");
        let z = self.newton(w, best).unwrap_or(best);
        if z.norm() < 1.0 - EXTERIOR_SLACK {
            return Err(SigmaError::NotExterior(z.norm()));
        }
        Ok(z)
    }

    /// The Schwarz reflection `σ_f(w) = f(1/conj(f⁻¹(w)))`.
    pub fn schwarz(&self, w: Complex) -> Result<Complex, SigmaError> {
        self.schwarz_with_preimage(w, None).map(|p| p.0)
    }

    /// `σ_f(w)` together with the exterior preimage `f⁻¹(w)`.
    pub fn schwarz_with_preimage(
        &self,
        w: Complex,
        guess: Option<Complex>,
    ) -> Result<(Complex, Complex), SigmaError> {
        let z = self.invert_exterior(w, guess)?;
        Ok((self.eval(z.conj().inv())?, z))
    }

    /// Finite-difference modulus of the anti-holomorphic derivative of
    /// `σ_f` at `f(w)`, for `|w| > 1`.
    pub fn dbar_schwarz_fd(&self, w: Complex, h: f64) -> Result<f64, SigmaError> {
        let zeta = self.eval(w)?;
        let sig = |p: Complex| -> Result<Complex, SigmaError> {
            let (v, _) = self.schwarz_with_preimage(p, Some(w))?;
            Ok(v)
        };
        let one = Complex::new(1.0, 0.0);
        let i = Complex::new(0.0, 1.0);
        let sx = (sig(zeta + one * h)? - sig(zeta - one * h)?) / (2.0 * h);
        let sy = (sig(zeta + i * h)? - sig(zeta - i * h)?) / (2.0 * h);
        Ok(((sx + i * sy) * 0.5).norm())
    }

    /// Classifies `w` against the droplet by the winding number of `f(𝕋)`.
    pub fn membership_exterior(&self, w: Complex, tol: f64) -> Membership {
        let n = 4096;
        let mut total = 0.0;
        let mut min_dist = f64::INFINITY;
        let mut prev_t = 0.0;
        let mut prev = self.boundary_point(0.0) - w;
        min_dist = min_dist.min(prev.norm());
        for k in 1..=n {
            let t = TAU * k as f64 / n as f64;
            let cur = self.boundary_point(t) - w;
            total += self.winding_piece(w, prev_t, prev, t, cur, 0, &mut min_dist);
            prev_t = t;
            prev = cur;
        }
        if min_dist < tol {
            return Membership::Boundary(min_dist);
        }
        let winding = (total / TAU).round() as i64;
        if winding == 0 { Membership::Exterior } else { Membership::Droplet }
    }

    #[allow(clippy::too_many_arguments)]
    fn winding_piece(
        &self,
        w: Complex,
        t0: f64,
        v0: Complex,
        t1: f64,
        v1: Complex,
        depth: usize,
        min_dist: &mut f64,
    ) -> f64 {
        *min_dist = min_dist.min(v1.norm());
        let delta = (v1 / v0).arg();
        if delta.abs() < PI / 8.0 || depth >= 16 {
            return delta;
        }
        let tm = 0.5 * (t0 + t1);
        let vm = self.boundary_point(tm) - w;
        self.winding_piece(w, t0, v0, tm, vm, depth + 1, min_dist)
            + self.winding_piece(w, tm, vm, t1, v1, depth + 1, min_dist)
    }

    /// Unit-circle roots of `z^{d+1} f′(z)`, sorted by argument in `[0, 2π)`.
    pub fn cusp_preimages(&self) -> Result<Vec<Complex>, SigmaError> {
        let poly = self.critical_polynomial();
        let roots = poly.roots().map_err(|_| SigmaError::WrongCuspCount(0))?;
        let mut on_circle: Vec<Complex> = roots
            .into_iter()
            .map(|r| polish_root(&poly, r))
            .filter(|r| (r.norm() - 1.0).abs() < 1e-8)
            .collect();
        if on_circle.len() != self.d + 1 {
            return Err(SigmaError::WrongCuspCount(on_circle.len()));
        }
        on_circle.sort_by(|a, b| positive_arg(*a).partial_cmp(&positive_arg(*b)).unwrap());
        Ok(on_circle)
    }

    /// Cusps labeled so that `ξ₁` is where the 0-ray lands.
    pub fn find_cusps(&self) -> Result<CuspSet, SigmaError> {
        let xi = self.cusp_preimages()?;
        let zeta: Vec<Complex> = xi.iter().map(|&x| self.eval(x).expect("unit circle")).collect();
        let ray = rays::trace_ray(&Target::Sigma(self.clone()), RationalAngle::zero(), &RayParams::default())
            .map_err(|e| SigmaError::RayLandingAmbiguous(e.to_string()))?;
        let land = rays::landing(&ray).map_err(|e| SigmaError::RayLandingAmbiguous(e.to_string()))?;
        let near: Vec<usize> = (0..zeta.len())
            .filter(|&i| (zeta[i] - land.point).norm() < 1e-3)
            .collect();
        if near.len() != 1 {
            return Err(SigmaError::RayLandingAmbiguous(format!(
                "0-ray landing {:.6} is near {} cusps",
                land.point,
                near.len()
            )));
        }
        let first = near[0];
        let n = xi.len();
        let order: Vec<usize> = (0..n).map(|k| (first + k) % n).collect();
        Ok(CuspSet {
            xi: order.iter().map(|&i| xi[i]).collect(),
            zeta: order.iter().map(|&i| zeta[i]).collect(),
        })
    }

    /// Pairs `θ < θ′` with `f(e^{iθ}) = f(e^{iθ′})`.
    pub fn find_double_points(&self) -> Result<DoublePointSet, SigmaError> {
        let n = DOUBLE_POINT_GRID;
        let vals: Vec<Complex> = (0..n).map(|i| self.boundary_point(TAU * i as f64 / n as f64)).collect();
        let g = |i: usize, j: usize| (vals[i % n] - vals[j % n]).norm();
        let cyc = |i: usize, j: usize| {
            let d = i.abs_diff(j);
            d.min(n - d)
        };
        let mut seeds: Vec<(f64, usize, usize)> = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                if cyc(i, j) <= 3 {
                    continue;
                }
                let v = g(i, j);
                if v >= 1e-2 {
                    continue;
                }
                let mut is_min = true;
                'nb: for di in [n - 1, 0, 1] {
                    for dj in [n - 1, 0, 1] {
                        if di == 0 && dj == 0 {
                            continue;
                        }
                        if g(i + di, j + dj) < v {
                            is_min = false;
                            break 'nb;
                        }
                    }
                }
                if is_min {
                    seeds.push((v, i, j));
                }
            }
        }
        seeds.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        seeds.truncate(256);
        let mut found: Vec<DoublePoint> = Vec::new();
        for &(_, i, j) in &seeds {
            let t0 = TAU * i as f64 / n as f64;
            let t1 = TAU * j as f64 / n as f64;
            let Some((a, b)) = self.refine_double_point(t0, t1) else { continue };
            let (a, b) = (a.rem_euclid(TAU), b.rem_euclid(TAU));
            let (a, b) = if a < b { (a, b) } else { (b, a) };
            let gap = (b - a).min(TAU - (b - a));
            if gap < 1e-4 {
                continue;
            }
            let dup = found.iter().any(|p| {
                circ_dist(p.theta, a) < 1e-6 && circ_dist(p.theta_prime, b) < 1e-6
            });
            if !dup {
                let zeta = (self.boundary_point(a) + self.boundary_point(b)) * 0.5;
                found.push(DoublePoint { theta: a, theta_prime: b, zeta });
            }
        }
        found.sort_by(|p, q| p.theta.partial_cmp(&q.theta).unwrap());
        let max = self.d.saturating_sub(2);
        if found.len() > max {
            return Err(SigmaError::TooManyDoublePoints { found: found.len(), max });
        }
        Ok(DoublePointSet { points: found })
    }

    /// Levenberg–Marquardt on `F(θ, θ′) = f(e^{iθ}) − f(e^{iθ′})`; the root
    /// is degenerate at a tangential double point, so plain Newton is avoided.
    fn refine_double_point(&self, mut a: f64, mut b: f64) -> Option<(f64, f64)> {
        let resid = |a: f64, b: f64| self.boundary_point(a) - self.boundary_point(b);
        let tangent = |t: f64| {
            let z = Complex::from_polar(1.0, t);
            let (_, df) = self.eval_with_derivative(z).expect("unit circle");
            df * z * Complex::new(0.0, 1.0)
        };
        let mut r = resid(a, b);
        let mut mu = 1e-6;
        for _ in 0..400 {
            if r.norm() < 1e-12 {
                return Some((a, b));
            }
            let ja = tangent(a);
            let jb = -tangent(b);
            // Normal equations for the 2x2 real system.
            let m11 = ja.norm_sqr();
            let m22 = jb.norm_sqr();
            let m12 = ja.re * jb.re + ja.im * jb.im;
            let g1 = ja.re * r.re + ja.im * r.im;
            let g2 = jb.re * r.re + jb.im * r.im;
            let mut improved = false;
            for _ in 0..30 {
                let (p11, p22) = (m11 * (1.0 + mu) + 1e-300, m22 * (1.0 + mu) + 1e-300);
                let det = p11 * p22 - m12 * m12;
                if det <= 0.0 {
                    mu *= 10.0;
                    continue;
                }
                let da = -(p22 * g1 - m12 * g2) / det;
                let db = -(p11 * g2 - m12 * g1) / det;
                let rn = resid(a + da, b + db);
                if rn.norm() < r.norm() {
                    a += da;
                    b += db;
                    r = rn;
                    mu = (mu * 0.3).max(1e-15);
                    improved = true;
                    break;
                }
                mu *= 10.0;
            }
            if !improved {
                break;
            }
        }
        if r.norm() < 1e-12 { Some((a, b)) } else { None }
    }

    /// Components of the droplet interior obtained by cutting at double points.
    pub fn droplet_decomposition(&self) -> Result<Decomposition, SigmaError> {
        let cusps = self.find_cusps()?;
        let doubles = self.find_double_points()?;
        decompose(&cusps, &doubles)
    }

    /// The angled tree of the droplet components.
    pub fn angled_tree(&self) -> Result<AngledTree, SigmaError> {
        Ok(AngledTree::from_decomposition(&self.droplet_decomposition()?))
    }
}

const NEWTON_STEPS: usize = 200;
const NEWTON_HALVINGS: usize = 20;
const EXTERIOR_SLACK: f64 = 1e-8;
const DOUBLE_POINT_GRID: usize = 512;

fn polish_root(p: &Poly, mut z: Complex) -> Complex {
    for _ in 0..3 {
        let (v, dv) = p.eval_with_derivative(z);
        if dv.norm() == 0.0 {
            break;
        }
        let step = v / dv;
        if !step.is_finite() {
            break;
        }
        z -= step;
    }
    z
}

/// Argument in `[0, 2π)`.
pub fn positive_arg(z: Complex) -> f64 {
    let a = z.arg();
    if a < 0.0 { a + TAU } else { a }
}

fn circ_dist(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(TAU);
    d.min(TAU - d)
}

/// Result of [`SigmaMap::membership_exterior`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Membership {
    Exterior,
    Droplet,
    /// Within the tolerance of `f(𝕋)`; carries the sampled distance.
    Boundary(f64),
}

/// Cusp preimages `ξ_i` and cusps `ζ_i = f(ξ_i)`, counter-clockwise from `ξ₁`.
#[derive(Debug, Clone, PartialEq)]
pub struct CuspSet {
    pub xi: Vec<Complex>,
    pub zeta: Vec<Complex>,
}

impl CuspSet {
    pub fn len(&self) -> usize {
        self.xi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xi.is_empty()
    }

    /// Label (1-based) of the boundary arc from `ξ_i` to `ξ_{i+1}` containing `e^{iθ}`.
    pub fn arc_of(&self, theta: f64) -> usize {
        let n = self.xi.len();
        let t = theta.rem_euclid(TAU);
        for i in 0..n {
            let a = positive_arg(self.xi[i]);
            let span = (positive_arg(self.xi[(i + 1) % n]) - a).rem_euclid(TAU);
            if (t - a).rem_euclid(TAU) < span {
                return i + 1;
            }
        }
        n
    }
}

/// A tangential self-intersection `f(e^{iθ}) = f(e^{iθ′})`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DoublePoint {
    pub theta: f64,
    pub theta_prime: f64,
    pub zeta: Complex,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct DoublePointSet {
    pub points: Vec<DoublePoint>,
}

impl DoublePointSet {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// A singular point on the boundary of a droplet component.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Singular {
    /// Cusp with its 1-based label.
    Cusp(usize),
    /// Double point, indexed into the [`DoublePointSet`].
    Double(usize),
}

/// One component of the droplet interior.
#[derive(Debug, Clone, PartialEq)]
pub struct Component {
    /// Singular points in positive boundary order.
    pub boundary: Vec<Singular>,
    /// Number of singular boundary points minus three.
    pub j: usize,
}

impl Component {
    pub fn cusp_labels(&self) -> Vec<usize> {
        self.boundary
            .iter()
            .filter_map(|s| if let Singular::Cusp(l) = s { Some(*l) } else { None })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Decomposition {
    pub components: Vec<Component>,
    /// For each double point, the two components it joins.
    pub adjacency: Vec<(usize, usize)>,
}

/// Cuts `𝕋` at the double-point parameters and walks the faces of the chord
/// diagram; each face is one component of the droplet interior.
pub fn decompose(cusps: &CuspSet, doubles: &DoublePointSet) -> Result<Decomposition, SigmaError> {
    let k = doubles.len();
    // Endpoints (angle, double point index).
    let mut ends: Vec<(f64, usize)> = Vec::with_capacity(2 * k);
    for (i, p) in doubles.points.iter().enumerate() {
        ends.push((p.theta.rem_euclid(TAU), i));
        ends.push((p.theta_prime.rem_euclid(TAU), i));
    }
    ends.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let cusp_angles: Vec<(f64, usize)> = cusps
        .xi
        .iter()
        .enumerate()
        .map(|(i, &x)| (positive_arg(x), i + 1))
        .collect();
    if k == 0 {
        let mut sorted = cusp_angles.clone();
        sorted.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        let boundary: Vec<Singular> = sorted.iter().map(|c| Singular::Cusp(c.1)).collect();
        if boundary.len() < 3 {
            return Err(SigmaError::InconsistentDecomposition("fewer than three cusps".into()));
        }
        let j = boundary.len() - 3;
        return Ok(Decomposition { components: vec![Component { boundary, j }], adjacency: vec![] });
    }
    let m = ends.len();
    let partner = |e: usize| -> usize {
        let idx = ends[e].1;
        (0..m).find(|&q| q != e && ends[q].1 == idx).expect("each chord has two ends")
    };
    // Cusps on arc e (from ends[e] to ends[e+1]).
    let arc_cusps = |e: usize| -> Vec<usize> {
        let a = ends[e].0;
        let span = (ends[(e + 1) % m].0 - a).rem_euclid(TAU);
        let mut on: Vec<(f64, usize)> = cusp_angles
            .iter()
            .map(|&(t, l)| ((t - a).rem_euclid(TAU), l))
            .filter(|&(off, _)| off > 0.0 && off < span)
            .collect();
        on.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap());
        on.into_iter().map(|x| x.1).collect()
    };
    let mut face_of_arc = vec![usize::MAX; m];
    let mut components = Vec::new();
    for start in 0..m {
        if face_of_arc[start] != usize::MAX {
            continue;
        }
        let face = components.len();
        let mut boundary = Vec::new();
        let mut e = start;
        let mut guard = 0;
        loop {
            face_of_arc[e] = face;
            boundary.extend(arc_cusps(e).into_iter().map(Singular::Cusp));
            let end = (e + 1) % m;
            boundary.push(Singular::Double(ends[end].1));
            e = partner(end);
            guard += 1;
            if e == start || guard > m {
                break;
            }
            if face_of_arc[e] != usize::MAX {
                return Err(SigmaError::InconsistentDecomposition("crossing chords".into()));
            }
        }
        if boundary.len() < 3 {
            return Err(SigmaError::InconsistentDecomposition(format!(
                "component with {} singular boundary points",
                boundary.len()
            )));
        }
        let j = boundary.len() - 3;
        components.push(Component { boundary, j });
    }
    if components.len() != k + 1 {
        return Err(SigmaError::InconsistentDecomposition(format!(
            "{} components for {} double points",
            components.len(),
            k
        )));
    }
    let mut adjacency = vec![(usize::MAX, usize::MAX); k];
    for (f, comp) in components.iter().enumerate() {
        for s in &comp.boundary {
            if let Singular::Double(i) = *s {
                let slot = &mut adjacency[i];
                if slot.0 == usize::MAX {
                    slot.0 = f;
                } else {
                    slot.1 = f;
                }
            }
        }
    }
    if adjacency.iter().any(|&(a, b)| b == usize::MAX || a == b) {
        return Err(SigmaError::InconsistentDecomposition("double point not shared by two components".into()));
    }
    if !is_tree(components.len(), &adjacency) {
        return Err(SigmaError::InconsistentDecomposition("component graph is not a tree".into()));
    }
    Ok(Decomposition { components, adjacency })
}

fn is_tree(n: usize, edges: &[(usize, usize)]) -> bool {
    if edges.len() + 1 != n {
        return false;
    }
    let mut seen = vec![false; n];
    let mut stack = vec![0];
    seen[0] = true;
    while let Some(v) = stack.pop() {
        for &(a, b) in edges {
            let w = if a == v { b } else if b == v { a } else { continue };
            if !seen[w] {
                seen[w] = true;
                stack.push(w);
            }
        }
    }
    seen.into_iter().all(|s| s)
}

/// Abstract angled tree: vertices are droplet components, edges double points.
#[derive(Debug, Clone, PartialEq)]
pub struct AngledTree {
    pub deg: Vec<usize>,
    /// Edge `e` joins `edges[e].0` and `edges[e].1`.
    pub edges: Vec<(usize, usize)>,
    /// For each vertex, `(edge, position)` in its cyclic boundary sequence of
    /// length `deg + 1`.
    pub slots: Vec<Vec<(usize, usize)>>,
}

impl AngledTree {
    pub fn from_decomposition(dec: &Decomposition) -> Self {
        let deg = dec.components.iter().map(|c| 2 + c.j).collect();
        let slots = dec
            .components
            .iter()
            .map(|c| {
                c.boundary
                    .iter()
                    .enumerate()
                    .filter_map(|(pos, s)| if let Singular::Double(e) = s { Some((*e, pos)) } else { None })
                    .collect()
            })
            .collect();
        AngledTree { deg, edges: dec.adjacency.clone(), slots }
    }

    pub fn total_degree(&self) -> usize {
        1 + self.deg.iter().map(|d| d - 1).sum::<usize>()
    }

    /// `∠(e, e′)` at vertex `v` in units of `2π/(1 + deg v)`.
    pub fn angle_units(&self, v: usize, e: usize, e2: usize) -> Option<usize> {
        let n = self.deg[v] + 1;
        let p = self.slots[v].iter().find(|s| s.0 == e)?.1;
        let q = self.slots[v].iter().find(|s| s.0 == e2)?.1;
        Some((q + n - p) % n)
    }

    pub fn angle(&self, v: usize, e: usize, e2: usize) -> Option<f64> {
        self.angle_units(v, e, e2)
            .map(|u| TAU * u as f64 / (self.deg[v] + 1) as f64)
    }

    /// Checks degree, valence, and skew-symmetry, non-degeneracy and
    /// additivity of the angle function on every edge pair.
    pub fn check(&self) -> Result<(), String> {
        for (v, &d) in self.deg.iter().enumerate() {
            if d < 2 {
                return Err(format!("vertex {v} has degree {d}"));
            }
            let val = self.slots[v].len();
            if val > d + 1 {
                return Err(format!("vertex {v} has valence {val} > 1 + deg"));
            }
            let n = d + 1;
            let es: Vec<usize> = self.slots[v].iter().map(|s| s.0).collect();
            for &a in &es {
                for &b in &es {
                    let ab = self.angle_units(v, a, b).unwrap();
                    let ba = self.angle_units(v, b, a).unwrap();
                    if (ab + ba) % n != 0 {
                        return Err(format!("angle not skew-symmetric at vertex {v}"));
                    }
                    if (a != b) == (ab == 0) {
                        return Err(format!("degenerate angle at vertex {v}"));
                    }
                    for &c in &es {
                        let bc = self.angle_units(v, b, c).unwrap();
                        let ac = self.angle_units(v, a, c).unwrap();
                        if (ab + bc) % n != ac {
                            return Err(format!("angle not additive at vertex {v}"));
                        }
                    }
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex {
        Complex::new(re, im)
    }

    #[test]
    fn eval_example() {
        let f = SigmaMap::f0(3).unwrap();
        let (v, _) = f.eval_with_derivative(c(2.0, 0.0)).unwrap();
        assert!((v - c(47.0 / 24.0, 0.0)).norm() < 1e-15);
        assert_eq!(f.eval(c(0.0, 0.0)), Err(SigmaError::OriginInput));
    }

    #[test]
    fn rejects_bad_leading_coefficient() {
        assert!(matches!(
            SigmaMap::new(vec![c(0.0, 0.0), c(0.5, 0.0)]),
            Err(SigmaError::BadLeadingCoefficient(_))
        ));
        assert!(matches!(SigmaMap::new(vec![c(-1.0, 0.0)]), Err(SigmaError::BadDegree(1))));
    }

    #[test]
    fn inversion_and_schwarz_examples() {
        let f = SigmaMap::f0(3).unwrap();
        let w = c(47.0 / 24.0, 0.0);
        assert!((f.invert_exterior(w, None).unwrap() - c(2.0, 0.0)).norm() < 1e-12);
        assert!((f.schwarz(w).unwrap() - c(-13.0 / 6.0, 0.0)).norm() < 1e-12);
        assert!(matches!(f.invert_exterior(c(0.0, 0.0), None), Err(SigmaError::NotExterior(_))));
    }

    #[test]
    fn json_round_trip_checks_leading_coefficient() {
        let f = SigmaMap::cubic_family(2.0);
        let s = serde_json::to_string(&f).unwrap();
        let g: SigmaMap = serde_json::from_str(&s).unwrap();
        assert_eq!(f, g);
        let bad = r#"{"d":2,"a":[[0,0],[0.5,0]]}"#;
        assert!(serde_json::from_str::<SigmaMap>(bad).is_err());
    }

    #[test]
    fn critical_polynomial_of_cubic_family() {
        // z⁴ + (t)z²·(1/3)·... for t = 2: z⁴ + (2/3) z² + 1.
        let p = SigmaMap::cubic_family(2.0).critical_polynomial();
        let expect = [1.0, 0.0, 2.0 / 3.0, 0.0, 1.0];
        for (k, e) in expect.iter().enumerate() {
            assert!((p.coeffs[k] - c(*e, 0.0)).norm() < 1e-15);
        }
    }
}
