//! Conformal moduli of quadrilaterals by a finite-difference Dirichlet
//! problem on a uniform grid.
//!
//! `u = 0` on side `a₁`, `u = 1` on `a₂`, insulated on `b₁, b₂`; the
//! discrete energy `E` is the conductance of a resistor network on the
//! grid. Links cut by a Dirichlet side get conductance `1/θ` for a cut at
//! fraction `θ` of the step, links cut by an insulated side are dropped.
//! The default value is the extremal distance between the a-sides, `1/E`.

use crate::geom::{pair_vec, Complex};
use crate::group::{inner_arc, NecklaceGroup};
use crate::sigma::{SigmaError, SigmaMap};
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;
use thiserror::Error;

/// Marked sides closer than this touch.
pub const DEGENERACY_TOL: f64 = 1e-6;
/// Relative residual of the conjugate-gradient solve.
pub const CG_TOL: f64 = 1e-10;
pub const MIN_BOUNDARY_POINTS: usize = 64;
const CLOSURE_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModuliError {
    #[error("invalid quadrilateral: {0}")]
    InvalidQuadrilateral(String),
    #[error("grid step {h} too coarse (shortest side {shortest})")]
    GridTooCoarse { h: f64, shortest: f64 },
    #[error("conjugate gradient stalled at relative residual {0:.3e}")]
    SolverStalled(f64),
    #[error("bad side indices ({0}, {1})")]
    BadIndices(usize, usize),
    #[error(transparent)]
    Sigma(#[from] SigmaError),
}

/// Closed polyline (last point repeats the first) with four marked
/// vertices `a₁ = [m₀, m₁]`, `b₁ = [m₁, m₂]`, `a₂ = [m₂, m₃]`, `b₂ = [m₃, m₀]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "QuadJson")]
pub struct Quadrilateral {
    #[serde(with = "pair_vec")]
    boundary: Vec<Complex>,
    marks: [usize; 4],
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct QuadJson {
    #[serde(with = "pair_vec")]
    boundary: Vec<Complex>,
    marks: [usize; 4],
}

impl TryFrom<QuadJson> for Quadrilateral {
    type Error = ModuliError;
    fn try_from(raw: QuadJson) -> Result<Self, ModuliError> {
        Quadrilateral::new(raw.boundary, raw.marks)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Side {
    A1,
    B1,
    A2,
    B2,
}

impl Side {
    fn is_a(self) -> bool {
        matches!(self, Side::A1 | Side::A2)
    }
}

impl Quadrilateral {
    pub fn new(boundary: Vec<Complex>, marks: [usize; 4]) -> Result<Self, ModuliError> {
        let bad = |m: &str| Err(ModuliError::InvalidQuadrilateral(m.to_string()));
        let n = boundary.len();
        if n < MIN_BOUNDARY_POINTS + 1 {
            return bad("fewer than 64 boundary points");
        }
        if (boundary[0] - boundary[n - 1]).norm() > CLOSURE_TOL {
            return bad("boundary is not closed");
        }
        if boundary.iter().any(|z| !z.is_finite()) {
            return bad("non-finite boundary point");
        }
        let m = n - 1;
        if marks.iter().any(|&k| k >= m) {
            return bad("mark out of range");
        }
        // Strictly increasing after a cyclic shift.
        let descents = (0..4).filter(|&i| marks[i] >= marks[(i + 1) % 4]).count();
        if descents != 1 {
            return bad("marks not in cyclic order");
        }
        let q = Quadrilateral { boundary, marks };
        if q.signed_area() <= 0.0 {
            return bad("boundary is not positively oriented");
        }
        Ok(q)
    }

    pub fn boundary(&self) -> &[Complex] {
        &self.boundary
    }

    pub fn marks(&self) -> [usize; 4] {
        self.marks
    }

    /// Same polyline with the roles of a- and b-sides exchanged.
    pub fn swapped(&self) -> Quadrilateral {
        let [a, b, c, d] = self.marks;
        Quadrilateral { boundary: self.boundary.clone(), marks: [b, c, d, a] }
    }

    fn segments(&self) -> usize {
        self.boundary.len() - 1
    }

    fn signed_area(&self) -> f64 {
        self.boundary.windows(2).map(|w| w[0].re * w[1].im - w[1].re * w[0].im).sum::<f64>() * 0.5
    }

    /// Side of segment `s` (from vertex `s` to `s+1`).
    fn side(&self, s: usize) -> Side {
        let m = self.segments();
        let rel = |k: usize| (k + m - self.marks[0]) % m;
        let r = rel(s);
        if r < rel(self.marks[1]) {
            Side::A1
        } else if r < rel(self.marks[2]) {
            Side::B1
        } else if r < rel(self.marks[3]) {
            Side::A2
        } else {
            Side::B2
        }
    }

    fn side_segments(&self, side: Side) -> Vec<usize> {
        (0..self.segments()).filter(|&s| self.side(s) == side).collect()
    }

    fn side_length(&self, side: Side) -> f64 {
        self.side_segments(side).iter().map(|&s| (self.boundary[s + 1] - self.boundary[s]).norm()).sum()
    }

    fn side_distance(&self, x: Side, y: Side) -> f64 {
        let (sx, sy) = (self.side_segments(x), self.side_segments(y));
        let mut best = f64::INFINITY;
        for &i in &sx {
            let p = self.boundary[i];
            for &j in &sy {
                best = best.min(point_segment(p, self.boundary[j], self.boundary[j + 1]));
            }
        }
        for &j in &sy {
            let p = self.boundary[j];
            for &i in &sx {
                best = best.min(point_segment(p, self.boundary[i], self.boundary[i + 1]));
            }
        }
        best
    }

    /// Which pair of opposite sides touch, if any.
    pub fn degeneracy(&self) -> Option<Touching> {
        if self.side_distance(Side::A1, Side::A2) < DEGENERACY_TOL {
            Some(Touching::ASides)
        } else if self.side_distance(Side::B1, Side::B2) < DEGENERACY_TOL {
            Some(Touching::BSides)
        } else {
            None
        }
    }
}

fn point_segment(p: Complex, a: Complex, b: Complex) -> f64 {
    let ab = b - a;
    let t = if ab.norm_sqr() == 0.0 { 0.0 } else { ((p - a) * ab.conj()).re / ab.norm_sqr() };
    (p - (a + ab * t.clamp(0.0, 1.0))).norm()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Touching {
    ASides,
    BSides,
}

/// Which extremal distance is reported.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Convention {
    /// Extremal distance between the a-sides, `1/E`.
    #[default]
    BetweenASides,
    /// Extremal distance between the b-sides, `E`.
    BetweenBSides,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "value")]
pub enum ModulusValue {
    Finite(f64),
    Infinite,
    Zero,
}

impl ModulusValue {
    pub fn finite(&self) -> Option<f64> {
        match self {
            ModulusValue::Finite(v) => Some(*v),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModulusResult {
    pub value: ModulusValue,
    pub grid_step: f64,
    /// `|M(h) − M(h/2)|`; zero for degenerate quadrilaterals.
    pub error_estimate: f64,
    pub convention: Convention,
}

/// Modulus at step `h` with the error estimate from a second solve at `h/2`.
pub fn modulus(q: &Quadrilateral, h: f64, convention: Convention) -> Result<ModulusResult, ModuliError> {
    if let Some(t) = q.degeneracy() {
        let value = match (t, convention) {
            (Touching::BSides, Convention::BetweenASides) | (Touching::ASides, Convention::BetweenBSides) => {
                ModulusValue::Infinite
            }
            _ => ModulusValue::Zero,
        };
        return Ok(ModulusResult { value, grid_step: h, error_estimate: 0.0, convention });
    }
    let shortest = [Side::A1, Side::B1, Side::A2, Side::B2]
        .iter()
        .map(|&s| q.side_length(s))
        .fold(f64::INFINITY, f64::min);
    if !(h > 0.0) || h > shortest / 8.0 {
        return Err(ModuliError::GridTooCoarse { h, shortest });
    }
    let coarse = energy(q, h)?;
    let fine = energy(q, h / 2.0)?;
    let pick = |e: f64| match convention {
        Convention::BetweenASides => 1.0 / e,
        Convention::BetweenBSides => e,
    };
    Ok(ModulusResult {
        value: ModulusValue::Finite(pick(coarse)),
        grid_step: h,
        error_estimate: (pick(coarse) - pick(fine)).abs(),
        convention,
    })
}

/// Crossing of a grid line with the boundary: coordinate along the line
/// and the side it belongs to.
type Crossing = (f64, Side);

/// Sorted crossings of every grid line `fixed = origin + (k + ½)h`.
fn crossings(q: &Quadrilateral, horizontal: bool, origin: f64, h: f64, lines: usize) -> Vec<Vec<Crossing>> {
    let mut out = vec![Vec::new(); lines];
    let coord = |z: Complex| if horizontal { (z.im, z.re) } else { (z.re, z.im) };
    for s in 0..q.segments() {
        let (f0, t0) = coord(q.boundary[s]);
        let (f1, t1) = coord(q.boundary[s + 1]);
        if f0 == f1 {
            continue;
        }
        let (lo, hi) = (f0.min(f1), f0.max(f1));
        let k0 = ((lo - origin) / h - 0.5).ceil().max(0.0) as usize;
        let side = q.side(s);
        let mut k = k0;
        while k < lines {
            let y = origin + (k as f64 + 0.5) * h;
            if y >= hi {
                break;
            }
            if y >= lo {
                let t = t0 + (t1 - t0) * (y - f0) / (f1 - f0);
                out[k].push((t, side));
            }
            k += 1;
        }
    }
    for l in &mut out {
        l.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    }
    out
}

/// Discrete Dirichlet energy of the harmonic measure of `a₂` at step `h`.
fn energy(q: &Quadrilateral, h: f64) -> Result<f64, ModuliError> {
    let (mut x0, mut x1, mut y0, mut y1) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
    for z in &q.boundary {
        x0 = x0.min(z.re);
        x1 = x1.max(z.re);
        y0 = y0.min(z.im);
        y1 = y1.max(z.im);
    }
    let nx = ((x1 - x0) / h).ceil() as usize + 1;
    let ny = ((y1 - y0) / h).ceil() as usize + 1;
    let rows = crossings(q, true, y0, h, ny);
    let cols = crossings(q, false, x0, h, nx);
    let xs = |i: usize| x0 + (i as f64 + 0.5) * h;
    let ys = |j: usize| y0 + (j as f64 + 0.5) * h;

    // Inside by crossing parity along rows.
    let mut index = vec![usize::MAX; nx * ny];
    let mut count = 0;
    for j in 0..ny {
        let row = &rows[j];
        let mut c = 0;
        for i in 0..nx {
            let x = xs(i);
            while c < row.len() && row[c].0 < x {
                c += 1;
            }
            if c % 2 == 1 {
                index[j * nx + i] = count;
                count += 1;
            }
        }
    }
    if count == 0 {
        return Err(ModuliError::GridTooCoarse { h, shortest: 0.0 });
    }

    // First crossing strictly between `a` and `b` along a sorted line.
    let between = |line: &[Crossing], a: f64, b: f64| -> Option<Crossing> {
        let (lo, hi) = (a.min(b), a.max(b));
        let start = line.partition_point(|c| c.0 <= lo);
        let slice: Vec<&Crossing> = line[start..].iter().take_while(|c| c.0 < hi).collect();
        if slice.is_empty() {
            None
        } else if b > a {
            Some(*slice[0])
        } else {
            Some(**slice.last().unwrap())
        }
    };

    // Network: neighbor links and Dirichlet links per node.
    let mut diag = vec![0.0; count];
    let mut rhs = vec![0.0; count];
    let mut nbrs: Vec<[u32; 4]> = vec![[NONE; 4]; count];
    let mut dirichlet: Vec<(usize, f64, f64)> = Vec::new();
    for j in 0..ny {
        for i in 0..nx {
            let me = index[j * nx + i];
            if me == usize::MAX {
                continue;
            }
            let dirs: [(isize, isize); 4] = [(1, 0), (-1, 0), (0, 1), (0, -1)];
            for (slot, (di, dj)) in dirs.iter().enumerate() {
                let (ii, jj) = (i as isize + di, j as isize + dj);
                let (line, a, b) = if *dj == 0 {
                    (&rows[j], xs(i), xs(i) + *di as f64 * h)
                } else {
                    (&cols[i], ys(j), ys(j) + *dj as f64 * h)
                };
                match between(line, a, b) {
                    None => {
                        let inside = ii >= 0
                            && jj >= 0
                            && (ii as usize) < nx
                            && (jj as usize) < ny
                            && index[jj as usize * nx + ii as usize] != usize::MAX;
                        if inside {
                            let other = index[jj as usize * nx + ii as usize];
                            nbrs[me][slot] = other as u32;
                            diag[me] += 1.0;
                        }
                    }
                    Some((t, side)) if side.is_a() => {
                        let theta = ((t - a).abs() / h).max(1e-3);
                        let w = 1.0 / theta;
                        let g = if side == Side::A2 { 1.0 } else { 0.0 };
                        diag[me] += w;
                        rhs[me] += w * g;
                        dirichlet.push((me, w, g));
                    }
                    Some(_) => {}
                }
            }
        }
    }
    // Nodes with no conductance at all sit in slivers; pin them to 0 flux.
    for k in 0..count {
        if diag[k] == 0.0 {
            diag[k] = 1.0;
        }
    }
    let u = conjugate_gradient(&diag, &nbrs, &rhs)?;
    let mut e = 0.0;
    for k in 0..count {
        for &o in &nbrs[k] {
            if o != NONE && o as usize > k {
                e += (u[k] - u[o as usize]).powi(2);
            }
        }
    }
    for &(k, w, g) in &dirichlet {
        e += w * (u[k] - g).powi(2);
    }
    Ok(e)
}

const NONE: u32 = u32::MAX;

/// CG for the network Laplacian, preconditioned by modified incomplete
/// Cholesky on the row-major grid ordering. Every link between two nodes
/// has unit conductance; neighbor slots are right, left, up, down.
fn conjugate_gradient(diag: &[f64], nbrs: &[[u32; 4]], b: &[f64]) -> Result<Vec<f64>, ModuliError> {
    const OMEGA: f64 = 0.95;
    let n = diag.len();
    let has = |k: usize, slot: usize| nbrs[k][slot] != NONE;
    let apply = |x: &[f64], y: &mut [f64]| {
        for k in 0..n {
            let mut s = diag[k] * x[k];
            for &o in &nbrs[k] {
                if o != NONE {
                    s -= x[o as usize];
                }
            }
            y[k] = s;
        }
    };
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();

    // Pivots; the lower neighbors of k are left (slot 1) and down (slot 3).
    let mut piv = vec![0.0; n];
    for k in 0..n {
        let mut dk = diag[k];
        if has(k, 1) {
            let l = nbrs[k][1] as usize;
            let fill = if has(l, 2) { 1.0 } else { 0.0 };
            dk -= (1.0 + OMEGA * fill) / piv[l];
        }
        if has(k, 3) {
            let dn = nbrs[k][3] as usize;
            let fill = if has(dn, 0) { 1.0 } else { 0.0 };
            dk -= (1.0 + OMEGA * fill) / piv[dn];
        }
        piv[k] = if dk > 1e-8 * diag[k] { dk } else { diag[k] };
    }
    let inv: Vec<f64> = piv.iter().map(|p| 1.0 / p).collect();
    let precondition = |r: &[f64], z: &mut [f64]| {
        for k in 0..n {
            let mut s = r[k];
            let [_, l, _, dn] = nbrs[k];
            if l != NONE {
                s += z[l as usize];
            }
            if dn != NONE {
                s += z[dn as usize];
            }
            z[k] = s * inv[k];
        }
        for k in (0..n).rev() {
            let [rt, _, up, _] = nbrs[k];
            let mut s = 0.0;
            if rt != NONE {
                s += z[rt as usize];
            }
            if up != NONE {
                s += z[up as usize];
            }
            z[k] += s * inv[k];
        }
    };

    let bnorm = dot(b, b).sqrt();
    if bnorm == 0.0 {
        return Ok(vec![0.0; n]);
    }
    let mut x: Vec<f64> = vec![0.5; n];
    let mut r = vec![0.0; n];
    apply(&x, &mut r);
    for k in 0..n {
        r[k] = b[k] - r[k];
    }
    let mut z = vec![0.0; n];
    precondition(&r, &mut z);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut rr = dot(&r, &r);
    let mut ap = vec![0.0; n];
    let max_iter = 4 * n + 1000;
    for _ in 0..max_iter {
        if rr.sqrt() <= CG_TOL * bnorm {
            return Ok(x);
        }
        apply(&p, &mut ap);
        let alpha = rz / dot(&p, &ap);
        rr = 0.0;
        for k in 0..n {
            x[k] += alpha * p[k];
            r[k] -= alpha * ap[k];
            rr += r[k] * r[k];
        }
        precondition(&r, &mut z);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for k in 0..n {
            p[k] = z[k] + beta * p[k];
        }
    }
    Err(ModuliError::SolverStalled(rr.sqrt() / bnorm))
}

fn check_indices(n: usize, j: usize, k: usize) -> Result<(), ModuliError> {
    if j >= 1 && j + 2 <= k && k + 1 <= n {
        Ok(())
    } else {
        Err(ModuliError::BadIndices(j, k))
    }
}

/// Marks at the starts of arcs `j, j+1, k, k+1` of a polyline built arc by arc.
fn marks_for(starts: &[usize], j: usize, k: usize) -> [usize; 4] {
    let n = starts.len();
    let at = |i: usize| starts[(i - 1) % n];
    [at(j), at(j + 1), at(k), at(k + 1)]
}

/// `T(σ_f)(ζ_j, ζ_{j+1}, ζ_k, ζ_{k+1})`, traced along `f(𝕋)`.
///
/// Each arc between consecutive cusp preimages gets `samples_per_arc`
/// parameters, tripled where the image is within 0.05 of a cusp. The
/// parameters of double points are inserted exactly so that touching
/// sides are detected.
pub fn droplet_quad(f: &SigmaMap, j: usize, k: usize, samples_per_arc: usize) -> Result<Quadrilateral, ModuliError> {
    let cusps = f.find_cusps()?;
    let n = cusps.len();
    check_indices(n, j, k)?;
    let doubles = f.find_double_points()?;
    let args: Vec<f64> = cusps.xi.iter().map(|x| crate::sigma::positive_arg(*x)).collect();
    let samples = samples_per_arc.max(16);
    let mut boundary = Vec::new();
    let mut starts = Vec::with_capacity(n);
    for i in 0..n {
        let t0 = args[i];
        let mut t1 = args[(i + 1) % n];
        if t1 <= t0 {
            t1 += TAU;
        }
        let mut params: Vec<f64> = Vec::new();
        for s in 0..samples {
            let a = t0 + (t1 - t0) * s as f64 / samples as f64;
            let b = t0 + (t1 - t0) * (s + 1) as f64 / samples as f64;
            params.push(a);
            let near = |t: f64| cusps.zeta.iter().any(|c| (f.boundary_point(t) - c).norm() < 0.05);
            if near(a) || near(b) {
                params.push(a + (b - a) / 3.0);
                params.push(a + 2.0 * (b - a) / 3.0);
            }
        }
        for p in &doubles.points {
            for t in [p.theta, p.theta_prime] {
                let mut t = t;
                while t < t0 {
                    t += TAU;
                }
                if t > t0 && t < t1 {
                    params.push(t);
                }
            }
        }
        params.sort_by(|a, b| a.partial_cmp(b).unwrap());
        starts.push(boundary.len());
        for (idx, &t) in params.iter().enumerate() {
            // Snap the cusp itself to the computed critical value.
            let z = if idx == 0 { cusps.zeta[i] } else { f.boundary_point(t) };
            boundary.push(z);
        }
    }
    boundary.push(boundary[0]);
    Quadrilateral::new(boundary, marks_for(&starts, j, k))
}

/// `T(Γ)(C_{j−1}∩C_j, C_j∩C_{j+1}, C_{k−1}∩C_k, C_k∩C_{k+1})`, bounded by
/// the inner arcs of the circles between consecutive tangency points.
pub fn group_quad(g: &NecklaceGroup, j: usize, k: usize, samples_per_arc: usize) -> Result<Quadrilateral, ModuliError> {
    let n = g.d();
    check_indices(n, j, k)?;
    let samples = samples_per_arc.max(16);
    let tangency = |i: usize| {
        let prev = if i == 1 { n } else { i - 1 };
        g.tangency(prev, i).expect("validated chain")
    };
    let mut boundary = Vec::new();
    let mut starts = Vec::with_capacity(n);
    for i in 1..=n {
        let from = tangency(i);
        let to = tangency(i % n + 1);
        let arc = inner_arc(g.circle(i), from, to, samples + 1);
        starts.push(boundary.len());
        boundary.extend_from_slice(&arc[..arc.len() - 1]);
    }
    boundary.push(boundary[0]);
    Quadrilateral::new(boundary, marks_for(&starts, j, k))
}

/// Admissible `(j, k)` pairs for `n` arcs: `1 ≤ j < j+2 ≤ k ≤ n−1`.
pub fn admissible_pairs(n: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for j in 1..n {
        for k in j + 2..n {
            out.push((j, k));
        }
    }
    out
}

/// Axis-parallel rectangle `[0, w] × [0, ht]` with a-sides the vertical ends.
pub fn rectangle(w: f64, ht: f64, per_side: usize) -> Quadrilateral {
    let corners = [
        Complex::new(0.0, ht),
        Complex::new(0.0, 0.0),
        Complex::new(w, 0.0),
        Complex::new(w, ht),
    ];
    let mut boundary = Vec::new();
    let mut marks = [0; 4];
    for s in 0..4 {
        marks[s] = boundary.len();
        let (a, b) = (corners[s], corners[(s + 1) % 4]);
        for t in 0..per_side {
            boundary.push(a + (b - a) * (t as f64 / per_side as f64));
        }
    }
    boundary.push(boundary[0]);
    Quadrilateral::new(boundary, marks).expect("rectangle is a valid quadrilateral")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_input() {
        let q = rectangle(1.0, 1.0, 20);
        let mut b = q.boundary().to_vec();
        b.reverse();
        assert!(Quadrilateral::new(b, [0, 20, 40, 60]).is_err());
        assert!(Quadrilateral::new(q.boundary().to_vec(), [0, 40, 20, 60]).is_err());
        assert!(Quadrilateral::new(q.boundary()[..30].to_vec(), [0, 5, 10, 15]).is_err());
    }

    #[test]
    fn square_and_rectangle() {
        let m = modulus(&rectangle(1.0, 1.0, 32), 1.0 / 64.0, Convention::default()).unwrap();
        assert!((m.value.finite().unwrap() - 1.0).abs() < 0.02);
        let m = modulus(&rectangle(2.0, 1.0, 32), 1.0 / 64.0, Convention::default()).unwrap();
        assert!((m.value.finite().unwrap() - 2.0).abs() < 0.04);
    }

    #[test]
    fn admissible() {
        assert_eq!(admissible_pairs(4), vec![(1, 3)]);
        assert_eq!(admissible_pairs(5), vec![(1, 3), (1, 4), (2, 4)]);
    }
}
