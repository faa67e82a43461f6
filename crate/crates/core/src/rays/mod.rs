//! Potentials, external rays and their landing points for Schwarz
//! reflections and anti-polynomials, plus the pixel renderers.

pub mod render;

use crate::geom::{pair_vec, Complex};
use crate::poly::Poly;
use crate::sigma::SigmaMap;
use crate::symbolic::{md_step, RationalAngle};
use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, TAU};
use thiserror::Error;

/// Escape radius for potentials.
pub const ESCAPE_RADIUS: f64 = 1e6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RayError {
    #[error("ray left its branch at level {level} (step ratio {ratio:.3e})")]
    BranchJump { level: usize, ratio: f64 },
    #[error("pullback Newton failed at level {level}")]
    NoConvergence { level: usize },
    #[error("landing tail diameter {0:.3e} exceeds 1e-2")]
    NotConverged(f64),
    #[error("invalid anti-polynomial: {0}")]
    BadPolynomial(String),
    #[error("polynomial root finding failed")]
    RootFindingFailed,
    #[error("ray traced to potential {0:e}, landing needs at most 1e-6")]
    FloorTooHigh(f64),
}

/// `p(w) = Σ c_k conj(w)^k`, coefficients stored in increasing degree.
#[derive(Debug, Clone, PartialEq)]
pub struct AntiPoly {
    coeffs: Vec<Complex>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct AntiPolyJson {
    #[serde(with = "pair_vec")]
    coeffs: Vec<Complex>,
}

impl Serialize for AntiPoly {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        AntiPolyJson { coeffs: self.coeffs.clone() }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for AntiPoly {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let raw = AntiPolyJson::deserialize(d)?;
        AntiPoly::new(raw.coeffs).map_err(serde::de::Error::custom)
    }
}

impl AntiPoly {
    pub fn new(mut coeffs: Vec<Complex>) -> Result<Self, RayError> {
        while coeffs.len() > 1 && coeffs.last().map(|c| c.norm() == 0.0).unwrap_or(false) {
            coeffs.pop();
        }
        if coeffs.len() < 3 {
            return Err(RayError::BadPolynomial("degree must be at least 2".into()));
        }
        if coeffs.len() > 9 {
            return Err(RayError::BadPolynomial("degree must be at most 8".into()));
        }
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(RayError::BadPolynomial("non-finite coefficient".into()));
        }
        Ok(AntiPoly { coeffs })
    }

    /// `conj(w)^3 − (3i/2) conj(w)`.
    pub fn cubic_example() -> Self {
        let z = Complex::new(0.0, 0.0);
        AntiPoly::new(vec![z, Complex::new(0.0, -1.5), z, Complex::new(1.0, 0.0)]).expect("valid")
    }

    /// `conj(w)^d`.
    pub fn power(d: usize) -> Result<Self, RayError> {
        let mut c = vec![Complex::new(0.0, 0.0); d + 1];
        c[d] = Complex::new(1.0, 0.0);
        AntiPoly::new(c)
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[Complex] {
        &self.coeffs
    }

    pub fn eval(&self, w: Complex) -> Complex {
        let wb = w.conj();
        self.coeffs.iter().rev().fold(Complex::new(0.0, 0.0), |acc, &c| acc * wb + c)
    }

    /// Holomorphic `q` with `p(w) = conj(q(w))`.
    pub fn conjugate_poly(&self) -> Poly {
        Poly::new(self.coeffs.iter().map(|c| c.conj()).collect())
    }

    /// Zeros of `∂p/∂w̄`, i.e. the roots of `q′`.
    pub fn critical_points(&self) -> Result<Vec<Complex>, RayError> {
        let q = self.conjugate_poly();
        let dq = Poly::new(
            q.coeffs.iter().enumerate().skip(1).map(|(k, &c)| c * k as f64).collect(),
        );
        if dq.degree() == 0 {
            return Ok(vec![]);
        }
        dq.roots().map_err(|_| RayError::RootFindingFailed)
    }

    /// True when every finite critical point satisfies `|p(c) − c| < tol`.
    pub fn is_critically_fixed(&self, tol: f64) -> Result<bool, RayError> {
        Ok(self.critical_points()?.iter().all(|&c| (self.eval(c) - c).norm() < tol))
    }

    /// Fixed points from the roots of the holomorphic `p∘p(z) − z`.
    pub fn fixed_points(&self) -> Result<Vec<Complex>, RayError> {
        let q = self.conjugate_poly();
        // p(p(z)) = Σ c_k q(z)^k
        let mut acc = Poly::new(vec![Complex::new(0.0, 0.0)]);
        let mut power = Poly::new(vec![Complex::new(1.0, 0.0)]);
        for &c in &self.coeffs {
            acc = acc.add(&power.scale(c));
            power = power.mul(&q);
        }
        let pp = acc.add(&Poly::new(vec![Complex::new(0.0, 0.0), Complex::new(-1.0, 0.0)]));
        let roots = pp.roots().map_err(|_| RayError::RootFindingFailed)?;
        let mut out: Vec<Complex> = Vec::new();
        for r in roots {
            let r = polish_fixed_point(self, r);
            if (self.eval(r) - r).norm() >= 1e-8 {
                continue;
            }
            if out.iter().all(|&s| (s - r).norm() > 1e-8) {
                out.push(r);
            }
        }
        out.sort_by(|a, b| (a.re, a.im).partial_cmp(&(b.re, b.im)).unwrap());
        Ok(out)
    }
}

/// Newton in the real plane for `p(z) = z`; `p(z) − z` has real Jacobian
/// built from `∂p/∂z̄` (p is anti-holomorphic).
fn polish_fixed_point(p: &AntiPoly, mut z: Complex) -> Complex {
    let q = p.conjugate_poly();
    for _ in 0..4 {
        let f = p.eval(z) - z;
        if f.norm() < 1e-15 {
            break;
        }
        // p(z) = conj(q(z)); d p = conj(q′) dz̄.  F = p − z,
        // dF = B dz̄ − dz with B = conj(q′(z)).
        let (_, dq) = q.eval_with_derivative(z);
        let b = dq.conj();
        // Solve B conj(δ) − δ = −F.
        // Write δ and take conj: conj(B) δ − conj(δ) = −conj(F).
        // From the first: conj(δ) = (δ − F)/B ⇒ conj(B)δ − (δ − F)/B = −conj(F).
        let denom = b.conj() - b.inv();
        if b.norm() < 1e-300 || denom.norm() < 1e-300 {
            z += f;
            continue;
        }
        let delta = (-f.conj() - f / b) / denom;
        if !delta.is_finite() {
            break;
        }
        z += delta;
    }
    z
}

/// The dynamical system whose rays are traced.
#[derive(Debug, Clone, PartialEq)]
pub enum Target {
    Sigma(SigmaMap),
    Poly(AntiPoly),
}

impl Target {
    pub fn degree(&self) -> usize {
        match self {
            Target::Sigma(f) => f.degree(),
            Target::Poly(p) => p.degree(),
        }
    }

    /// One step of the map; `None` outside the domain of `σ_f`.
    pub fn apply(&self, z: Complex) -> Option<Complex> {
        match self {
            Target::Sigma(f) => f.schwarz(z).ok(),
            Target::Poly(p) => Some(p.eval(z)),
        }
    }

    /// `φ(u) ≈ c·u` near infinity for the normalized Böttcher map.
    pub fn seed_scale(&self) -> Complex {
        let d = self.degree() as f64;
        match self {
            Target::Sigma(_) => Complex::from_polar(d.powf(1.0 / (d - 1.0)), PI / (d + 1.0)),
            Target::Poly(p) => {
                // c = c_d conj(c)^d
                let cd = p.coeffs[p.degree()];
                Complex::from_polar(cd.norm().powf(-1.0 / (d - 1.0)), cd.arg() / (d + 1.0))
            }
        }
    }

    fn kappa(&self) -> f64 {
        self.seed_scale().norm().ln()
    }
}

/// Green's function with respect to infinity; 0 when no escape is seen.
pub fn potential(target: &Target, z: Complex, max_iter: usize) -> f64 {
    let d = target.degree() as f64;
    let mut z = z;
    let mut guess: Option<Complex> = None;
    let mut scale = 1.0;
    for _ in 0..=max_iter {
        if !z.is_finite() {
            return 0.0;
        }
        if z.norm() > ESCAPE_RADIUS {
            return (z.norm().ln() - target.kappa()) * scale;
        }
        z = match target {
            Target::Sigma(f) => match f.schwarz_with_preimage(z, guess) {
                Ok((v, pre)) => {
                    guess = Some(pre.conj().inv());
                    // The next preimage is unrelated to this one; drop the hint
                    // once it is clearly useless.
                    if pre.norm() < 1.5 {
                        guess = None;
                    }
                    v
                }
                Err(_) => return 0.0,
            },
            Target::Poly(p) => p.eval(z),
        };
        scale /= d;
    }
    0.0
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RayParams {
    /// Potential of the first sample.
    pub start_potential: f64,
    /// Tracing stops below this potential (or earlier once samples stall).
    pub floor_potential: f64,
    /// Samples per division of the potential by `d`.
    pub steps_per_halving: usize,
}

impl Default for RayParams {
    fn default() -> Self {
        RayParams { start_potential: 8.0, floor_potential: 1e-200, steps_per_halving: 8 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RaySample {
    pub potential: f64,
    pub point: Complex,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Landing {
    #[serde(with = "crate::geom::pair")]
    pub point: Complex,
    pub confidence: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RayTrace {
    pub angle: RationalAngle,
    pub samples: Vec<RaySample>,
    /// Stride (in samples) between points related by the first-return map.
    pub stride: usize,
    pub landing: Option<Landing>,
}

impl Serialize for RayTrace {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let samples: Vec<[f64; 3]> =
            self.samples.iter().map(|p| [p.potential, p.point.re, p.point.im]).collect();
        let mut st = s.serialize_struct("RayTrace", 3)?;
        st.serialize_field("angle", &self.angle)?;
        st.serialize_field("samples", &samples)?;
        st.serialize_field("landing", &self.landing)?;
        st.end()
    }
}

/// Forward orbit of `θ` under `m_{−d}` until it repeats; returns the orbit
/// and the index where the cycle starts.
pub fn angle_orbit(d: u64, theta: RationalAngle) -> (Vec<RationalAngle>, usize) {
    let mut orbit = vec![theta];
    loop {
        let next = md_step(d, *orbit.last().unwrap());
        if let Some(pos) = orbit.iter().position(|&a| a == next) {
            return (orbit, pos);
        }
        orbit.push(next);
    }
}

/// Traces the ray of angle `θ`.
pub fn trace_ray(target: &Target, theta: RationalAngle, params: &RayParams) -> Result<RayTrace, RayError> {
    let mut all = trace_orbit(target, theta, params)?;
    Ok(all.swap_remove(0))
}

/// Traces the rays of every angle in the forward orbit of `θ`; entry `i`
/// is the ray of `m_{−d}^i(θ)`.
///
/// Rays are pulled back level by level: the sample of ray `j` at potential
/// `g` is the preimage of the sample of ray `j+1` at `d·g`, chosen next to
/// the previous sample of ray `j`.
pub fn trace_orbit(target: &Target, theta: RationalAngle, params: &RayParams) -> Result<Vec<RayTrace>, RayError> {
    let d = target.degree();
    let s = params.steps_per_halving.max(1);
    let (orbit, cycle_start) = angle_orbit(d as u64, theta);
    let m = orbit.len();
    let period = m - cycle_start;
    let next = |j: usize| if j + 1 < m { j + 1 } else { cycle_start };
    let ratio = (d as f64).powf(-1.0 / s as f64);
    let max_levels = ((params.start_potential / params.floor_potential).ln() / (d as f64).ln() * s as f64)
        .ceil() as usize
        + 1;
    let scale = target.seed_scale();
    // Points and, for σ_f, exterior preimages f⁻¹(z).
    let mut pts: Vec<Vec<Complex>> = vec![Vec::with_capacity(max_levels); m];
    let mut pre: Vec<Vec<Complex>> = vec![Vec::new(); m];
    let mut pots: Vec<f64> = Vec::with_capacity(max_levels);
    let mut g = params.start_potential;
    for k in 0..max_levels {
        pots.push(g);
        for j in 0..m {
            let z;
            if k < s {
                z = scale * Complex::from_polar(g.exp(), TAU * orbit[j].to_f64());
                if let Target::Sigma(f) = target {
                    let zeta = f.invert_exterior(z, Some(z)).map_err(|_| RayError::NoConvergence { level: k })?;
                    pre[j].push(zeta);
                }
            } else {
                let w = pts[next(j)][k - s];
                let prev = pts[j][k - 1];
                match target {
                    Target::Sigma(f) => {
                        let u0 = pre[j][k - 1].conj().inv();
                        let u = damped_newton(|u| f.eval_with_derivative(u).ok().map(|(v, dv)| (v - w, dv)), u0, w.norm())
                            .ok_or(RayError::NoConvergence { level: k })?;
                        if u.norm() >= 1.0 {
                            return Err(RayError::BranchJump { level: k, ratio: f64::INFINITY });
                        }
                        let zeta = u.conj().inv();
                        pre[j].push(zeta);
                        z = f.eval(zeta).map_err(|_| RayError::NoConvergence { level: k })?;
                    }
                    Target::Poly(p) => {
                        let q = p.conjugate_poly();
                        let wc = w.conj();
                        z = damped_newton(|x| {
                            let (v, dv) = q.eval_with_derivative(x);
                            Some((v - wc, dv))
                        }, prev, w.norm())
                        .ok_or(RayError::NoConvergence { level: k })?;
                    }
                }
                if k >= 2 {
                    let expected = (prev - pts[j][k - 2]).norm().max(1e-9);
                    let step = (z - prev).norm();
                    if step > 10.0 * expected {
                        return Err(RayError::BranchJump { level: k, ratio: step / expected });
                    }
                }
            }
            pts[j].push(z);
        }
        // Stop once every ray has stalled at double precision.
        if k >= 2 * s * period + 12 * s * period {
            let stalled = (0..m).all(|j| (pts[j][k] - pts[j][k - 1]).norm() < 1e-15 * (1.0 + pts[j][k].norm()));
            if stalled {
                break;
            }
        }
        g *= ratio;
        if g < params.floor_potential {
            break;
        }
    }
    Ok((0..m)
        .map(|j| {
            let samples = pts[j]
                .iter()
                .zip(&pots)
                .map(|(&point, &potential)| RaySample { potential, point })
                .collect();
            let mut tr = RayTrace { angle: orbit[j], samples, stride: s * period, landing: None };
            if tr.samples.last().map(|x| x.potential <= 1e-6).unwrap_or(false) {
                tr.landing = landing(&tr).ok();
            }
            tr
        })
        .collect())
}

/// Damped Newton for `F(z) = 0` given `z ↦ (F, F′)`.
fn damped_newton<F>(f: F, z0: Complex, scale: f64) -> Option<Complex>
where
    F: Fn(Complex) -> Option<(Complex, Complex)>,
{
    let target = 1e-13 * (1.0 + scale);
    let mut z = z0;
    let (mut v, mut dv) = f(z)?;
    for _ in 0..100 {
        if v.norm() < target {
            return Some(z);
        }
        let step = v / dv;
        if !step.is_finite() {
            return None;
        }
        let mut t = 1.0;
        let mut ok = false;
        for _ in 0..=20 {
            let cand = z - step * t;
            if let Some((vc, dc)) = f(cand) {
                if vc.norm() < v.norm() {
                    z = cand;
                    v = vc;
                    dv = dc;
                    ok = true;
                    break;
                }
            }
            t *= 0.5;
        }
        if !ok {
            return if v.norm() < 1e3 * target { Some(z) } else { None };
        }
    }
    if v.norm() < 1e3 * target { Some(z) } else { None }
}

/// Aitken extrapolation over the last 12 first-return samples of a ray.
pub fn landing(ray: &RayTrace) -> Result<Landing, RayError> {
    let last = ray.samples.last().map(|s| s.potential).unwrap_or(f64::INFINITY);
    if last > 1e-6 {
        return Err(RayError::FloorTooHigh(last));
    }
    let n = ray.samples.len();
    let stride = ray.stride.max(1);
    let take = 12.min(n.div_ceil(stride));
    let mut tail: Vec<Complex> = (0..take).rev().map(|i| ray.samples[n - 1 - i * stride].point).collect();
    if tail.len() < 3 {
        let p = ray.samples[n - 1].point;
        return Ok(Landing { point: p, confidence: 0.0 });
    }
    // Geometric tails (repelling landing) suit plain Aitken; parabolic tails
    // behave like L + (an + b)^{−1/k} and suit the matching power model.
    let mut best: Option<(f64, Complex)> = None;
    for model in [None, Some(1.0), Some(0.5), Some(2.0)] {
        let extrap: Vec<Complex> = tail
            .windows(3)
            .map(|w| {
                let a = aitken(w);
                match model {
                    None => a,
                    Some(k) => power_extrapolate(w, k, a).unwrap_or(a),
                }
            })
            .collect();
        let mut diam: f64 = 0.0;
        for a in &extrap {
            for b in &extrap {
                diam = diam.max((a - b).norm());
            }
        }
        if best.map(|b| diam < b.0).unwrap_or(true) {
            best = Some((diam, *extrap.last().unwrap()));
        }
    }
    tail.clear();
    let (diam, point) = best.expect("at least one model");
    if diam > 1e-2 {
        return Err(RayError::NotConverged(diam));
    }
    Ok(Landing { point, confidence: diam })
}

fn aitken(w: &[Complex]) -> Complex {
    let d1 = w[1] - w[0];
    let d2 = w[2] - w[1];
    let den = d2 - d1;
    let e = if den.norm() > 1e-14 * (d1.norm() + d2.norm()) && den.norm() > 0.0 {
        w[2] - d2 * d2 / den
    } else {
        w[2]
    };
    if e.is_finite() { e } else { w[2] }
}

/// Finds `L` with `(z_i − L)^{−k}` in arithmetic progression.
fn power_extrapolate(w: &[Complex], k: f64, start: Complex) -> Option<Complex> {
    if (w[2] - w[1]).norm() < 1e-15 * (1.0 + w[2].norm()) {
        return Some(w[2]);
    }
    if k == 1.0 {
        let den = w[1] * 2.0 - w[0] - w[2];
        let l = (w[1] * (w[0] + w[2]) - w[0] * w[2] * 2.0) / den;
        return l.is_finite().then_some(l);
    }
    // Rotate so the tail approaches L from the positive real direction,
    // keeping the principal branch consistent.
    let mut l = start;
    for _ in 0..50 {
        let dir = (w[2] - l) / (w[2] - l).norm();
        if !dir.is_finite() {
            return None;
        }
        let s = |z: Complex| ((z - l) / dir).powf(-k);
        let ds = |z: Complex| ((z - l) / dir).powf(-k - 1.0) * (k / dir);
        let g = s(w[0]) + s(w[2]) - s(w[1]) * 2.0;
        let dg = ds(w[0]) + ds(w[2]) - ds(w[1]) * 2.0;
        let step = g / dg;
        if !step.is_finite() {
            return None;
        }
        // Keep L beyond the last sample.
        let step = if step.norm() > 0.5 * (w[2] - l).norm() { step * (0.5 * (w[2] - l).norm() / step.norm()) } else { step };
        l -= step;
        if step.norm() < 1e-15 * (1.0 + l.norm()) {
            break;
        }
    }
    l.is_finite().then_some(l)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn power_map_potential_and_rays() {
        let p = Target::Poly(AntiPoly::power(3).unwrap());
        assert!((potential(&p, Complex::new(2.0, 0.0), 100) - 2f64.ln()).abs() < 1e-12);
        let params = RayParams { floor_potential: 1e-8, ..Default::default() };
        let r = trace_ray(&p, RationalAngle::new(1, 8), &params).unwrap();
        for s in &r.samples {
            assert!((s.point.arg() - PI / 4.0).abs() < 1e-8);
        }
        let r0 = trace_ray(&p, RationalAngle::zero(), &params).unwrap();
        let l = r0.landing.unwrap();
        assert!((l.point - Complex::new(1.0, 0.0)).norm() < 1e-6);
    }

    #[test]
    fn fixed_points_of_conj_square() {
        let p = AntiPoly::power(2).unwrap();
        let fp = p.fixed_points().unwrap();
        assert_eq!(fp.len(), 4);
        for z in fp {
            assert!(z.norm() < 1e-9 || (z.norm() - 1.0).abs() < 1e-9);
        }
    }
}
