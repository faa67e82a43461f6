//! Markov itineraries for `m_{−d}` and for `ρ` of the ideal `(d+1)`-gon
//! group on `𝕋`, and the conjugacy `𝓔_d` between them.
//!
//! Both partitions have `d+1` pieces: `J_j = [(j−1)/(d+1), j/(d+1)]` for
//! `m_{−d}` and the arc `I_j` of `𝕋` inside the circle `C_j` for `ρ`.
//! Boundary points go to the lower-index piece.

use super::RationalAngle;
use crate::geom::{reflect, Circle, Complex};
use crate::group::base_circles;
use std::f64::consts::TAU;
use thiserror::Error;

/// Distance to a fixed point `e^{2πij/(d+1)}` treated as landing on it.
pub const FIXED_POINT_SNAP: f64 = 1e-12;

/// A finite symbol sequence over `{1, …, d+1}`.
pub type Itinerary = Vec<usize>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CodingError {
    #[error("arc diameter {diameter:.3e} still above tolerance after {symbols} symbols")]
    SlowConvergence { point: Complex, diameter: f64, symbols: usize },
}

/// Piece of `m_{−d}` containing `θ`.
pub fn md_piece(d: u64, theta: RationalAngle) -> usize {
    let k = theta.num() as u128 * (d as u128 + 1);
    let den = theta.den() as u128;
    let j = k.div_ceil(den) as usize;
    j.max(1)
}

/// Symbols of the `m_{−d}` orbit of `θ`.
pub fn itinerary_md(d: u64, theta: RationalAngle, n: usize) -> Itinerary {
    let mut out = Vec::with_capacity(n);
    let mut t = theta;
    for _ in 0..n {
        out.push(md_piece(d, t));
        t = super::md_step(d, t);
    }
    out
}

/// `ρ` of the ideal `(d+1)`-gon group restricted to `𝕋`.
#[derive(Debug, Clone)]
pub struct CircleCoding {
    d: usize,
    circles: Vec<Circle>,
}

impl CircleCoding {
    pub fn new(d: usize) -> Self {
        CircleCoding { d, circles: base_circles(d + 1) }
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn circles(&self) -> &[Circle] {
        &self.circles
    }

    /// `e^{2πij/(d+1)}`.
    pub fn fixed_point(&self, j: usize) -> Complex {
        Complex::from_polar(1.0, TAU * j as f64 / (self.d + 1) as f64)
    }

    /// Piece index of `t` (lowest label among circles containing it).
    pub fn piece(&self, t: Complex) -> usize {
        for (i, c) in self.circles.iter().enumerate() {
            if (t - c.center).norm() <= c.radius + 1e-12 {
                return i + 1;
            }
        }
        // Only reachable through rounding far from 𝕋; fall back to angles.
        let a = t.arg().rem_euclid(TAU);
        ((a * (self.d + 1) as f64 / TAU).ceil() as usize).clamp(1, self.d + 1)
    }

    /// Reflection `r_s` followed by projection back to `𝕋`.
    pub fn reflect_on_circle(&self, s: usize, t: Complex) -> Complex {
        let w = reflect(&self.circles[s - 1], t).expect("points of the unit circle avoid centers");
        w / w.norm()
    }

    /// One step of `ρ` on `𝕋` with its symbol.
    pub fn step(&self, t: Complex) -> (Complex, usize) {
        let s = self.piece(t);
        (self.reflect_on_circle(s, t), s)
    }

    /// Index `j ∈ 0..=d` of a fixed point within [`FIXED_POINT_SNAP`] of `t`.
    pub fn snap_fixed(&self, t: Complex) -> Option<usize> {
        (0..=self.d).find(|&j| (t - self.fixed_point(j)).norm() < FIXED_POINT_SNAP)
    }

    /// Symbols of the `ρ` orbit of `t`.
    pub fn itinerary(&self, t: Complex, n: usize) -> Itinerary {
        let mut out = Vec::with_capacity(n);
        let mut t = t / t.norm();
        for _ in 0..n {
            let (next, s) = self.step(t);
            out.push(s);
            t = next;
        }
        out
    }

    /// `𝓔_d(t)` to within `tol`.
    ///
    /// Reads off the `ρ`-itinerary and pulls back the nested `m_{−d}`
    /// intervals; if the orbit lands on a fixed point the remaining
    /// symbols are known exactly and the result is exact.
    pub fn eval_e(&self, t: Complex, tol: f64) -> EValue {
        let d = self.d as u64;
        let n = ((tol.ln() / (1.0 / d as f64).ln()).ceil().max(0.0) as usize) + 1;
        let mut symbols = Vec::with_capacity(n);
        let mut terminal = None;
        let mut z = t / t.norm();
        for _ in 0..n {
            if let Some(j) = self.snap_fixed(z) {
                terminal = Some(j);
                break;
            }
            let (next, s) = self.step(z);
            symbols.push(s);
            z = next;
        }
        match terminal {
            Some(j) => {
                let mut exact = RationalAngle::new(j as i128, d as i128 + 1);
                for &s in symbols.iter().rev() {
                    exact = md_branch_exact(d, s, exact);
                }
                EValue { value: exact.to_f64(), exact: Some(exact) }
            }
            None => {
                let last = *symbols.last().expect("n >= 1");
                let mut mid = (last as f64 - 0.5) / (d + 1) as f64;
                for &s in symbols[..symbols.len() - 1].iter().rev() {
                    mid = md_branch(d, s, mid);
                }
                EValue { value: mid.rem_euclid(1.0), exact: None }
            }
        }
    }

    /// `𝓔_d^{−1}(θ)` by nested arcs of `ρ`-cylinders.
    pub fn eval_e_inverse(&self, theta: RationalAngle, tol: f64, max_symbols: usize) -> Result<EInverse, CodingError> {
        let d = self.d as u64;
        let mut symbols = Vec::new();
        let mut terminal = None;
        let mut x = theta;
        let fixed: Vec<RationalAngle> = (0..=self.d).map(|j| RationalAngle::new(j as i128, self.d as i128 + 1)).collect();
        for _ in 0..max_symbols.max(1) {
            if let Some(j) = fixed.iter().position(|&f| f == x) {
                terminal = Some(j);
                break;
            }
            symbols.push(md_piece(d, x));
            x = super::md_step(d, x);
        }
        if let Some(j) = terminal {
            let mut p = self.fixed_point(j);
            for &s in symbols.iter().rev() {
                p = self.reflect_on_circle(s, p);
            }
            return Ok(EInverse { point: p, diameter: 0.0, symbols: symbols.len() });
        }
        let mut best = None;
        for n in 1..=symbols.len() {
            let s_last = symbols[n - 1];
            let mut p = self.fixed_point(s_last - 1);
            let mut q = self.fixed_point(s_last % (self.d + 1));
            for &s in symbols[..n - 1].iter().rev() {
                p = self.reflect_on_circle(s, p);
                q = self.reflect_on_circle(s, q);
            }
            let mid = arc_midpoint(p, q);
            let diameter = (p - q).norm();
            best = Some(EInverse { point: mid, diameter, symbols: n });
            // The m-cylinder must be small too, or 𝓔 of the midpoint can
            // sit far from θ where ρ expands faster than m_{−d}.
            let m_width = (d as f64).powi(1 - n as i32) / (d + 1) as f64;
            if diameter < tol && m_width < tol {
                return Ok(best.unwrap());
            }
        }
        let b = best.expect("at least one symbol");
        Err(CodingError::SlowConvergence { point: b.point, diameter: b.diameter, symbols: b.symbols })
    }
}

/// Midpoint of the short arc from `p` to `q`; the single-symbol arc is
/// longer than a half circle only for `d = 1`, so the chord midpoint works.
fn arc_midpoint(p: Complex, q: Complex) -> Complex {
    let m = p + q;
    if m.norm() < 1e-300 {
        return p;
    }
    m / m.norm()
}

/// Inverse branch of `m_{−d}` into piece `s`, on a real representative.
pub(crate) fn md_branch(d: u64, s: usize, y: f64) -> f64 {
    let df = d as f64;
    let k = (df * (s as f64 - 0.5) / (df + 1.0) + y).round();
    (k - y) / df
}

/// Exact inverse branch of `m_{−d}` into piece `s`.
pub(crate) fn md_branch_exact(d: u64, s: usize, y: RationalAngle) -> RationalAngle {
    let pre = y.preimages(d);
    let lo = RationalAngle::new(s as i128 - 1, d as i128 + 1);
    let hi = RationalAngle::new(s as i128, d as i128 + 1);
    let inside = |x: &RationalAngle| {
        let ge = if s == 1 { true } else { *x >= lo };
        let le = if s == (d as usize + 1) { true } else { *x <= hi };
        ge && le
    };
    *pre.iter().find(|x| inside(x)).unwrap_or(&pre[0])
}

/// Value of `𝓔_d`, exact when the orbit hits a fixed point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EValue {
    pub value: f64,
    pub exact: Option<RationalAngle>,
}

/// Result of `𝓔_d^{−1}` with the diameter of the final arc.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EInverse {
    pub point: Complex,
    pub diameter: f64,
    pub symbols: usize,
}

/// Symbols of the `ρ` orbit of `t ∈ 𝕋` for the `(d+1)`-circle group.
pub fn itinerary_rho(d: usize, t: Complex, n: usize) -> Itinerary {
    CircleCoding::new(d).itinerary(t, n)
}

/// `𝓔_d(t)`; see [`CircleCoding::eval_e`].
pub fn eval_e(d: usize, t: Complex, tol: f64) -> EValue {
    CircleCoding::new(d).eval_e(t, tol)
}

/// `𝓔_d^{−1}(θ)`; see [`CircleCoding::eval_e_inverse`].
pub fn eval_e_inverse(d: usize, theta: RationalAngle, tol: f64, max_symbols: usize) -> Result<EInverse, CodingError> {
    CircleCoding::new(d).eval_e_inverse(theta, tol, max_symbols)
}

/// Distance in `ℝ/ℤ`.
pub fn circle_dist(a: f64, b: f64) -> f64 {
    let x = (a - b).rem_euclid(1.0);
    x.min(1.0 - x)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(n: i128, d: i128) -> RationalAngle {
        RationalAngle::new(n, d)
    }

    #[test]
    fn md_itinerary_example() {
        assert_eq!(itinerary_md(3, r(1, 8), 4), vec![1, 3, 1, 3]);
        assert_eq!(md_piece(3, r(0, 1)), 1);
        assert_eq!(md_piece(3, r(1, 4)), 1);
        assert_eq!(md_piece(3, r(3, 4)), 3);
    }

    #[test]
    fn rho_itinerary_of_fixed_points_is_constant() {
        let c = CircleCoding::new(4);
        for j in 0..5 {
            let it = c.itinerary(c.fixed_point(j), 6);
            assert!(it.iter().all(|&s| s == it[0]), "{it:?}");
            assert_eq!(it[0], if j == 0 { 1 } else { j });
        }
    }

    #[test]
    fn e_on_fixed_points() {
        for d in 2..6 {
            let c = CircleCoding::new(d);
            let v = c.eval_e(Complex::new(1.0, 0.0), 1e-9);
            assert_eq!(v.exact, Some(RationalAngle::zero()));
            for j in 0..=d {
                let v = c.eval_e(c.fixed_point(j), 1e-9);
                assert_eq!(v.exact, Some(r(j as i128, d as i128 + 1)));
                let p = c.eval_e_inverse(r(j as i128, d as i128 + 1), 1e-9, 100).unwrap();
                assert!((p.point - c.fixed_point(j)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn e_inverse_round_trip_on_two_cycle() {
        let c = CircleCoding::new(3);
        for a in [r(1, 8), r(3, 8), r(7, 24)] {
            let p = c.eval_e_inverse(a, 1e-9, 200).unwrap();
            let v = c.eval_e(p.point, 1e-9);
            assert!(circle_dist(v.value, a.to_f64()) < 2e-9, "{a}: {}", v.value);
        }
    }
}
