//! Dense complex polynomials and simultaneous root finding by the
//! Aberth–Ehrlich iteration.

use crate::geom::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RootError {
    #[error("polynomial has degree zero or a vanishing leading coefficient")]
    Degenerate,
    #[error("Aberth iteration did not reach residual target after {0} sweeps")]
    NoConvergence(usize),
}

/// Polynomial with coefficients in increasing degree: `c[0] + c[1] z + ...`.
#[derive(Debug, Clone, PartialEq)]
pub struct Poly {
    pub coeffs: Vec<Complex>,
}

impl Poly {
    pub fn new(mut coeffs: Vec<Complex>) -> Self {
        while coeffs.len() > 1 && *coeffs.last().unwrap() == Complex::new(0.0, 0.0) {
            coeffs.pop();
        }
        Poly { coeffs }
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn eval(&self, z: Complex) -> Complex {
        self.coeffs.iter().rev().fold(Complex::new(0.0, 0.0), |acc, &c| acc * z + c)
    }

    /// Value and first derivative by Horner.
    pub fn eval_with_derivative(&self, z: Complex) -> (Complex, Complex) {
        let zero = Complex::new(0.0, 0.0);
        let mut p = zero;
        let mut dp = zero;
        for &c in self.coeffs.iter().rev() {
            dp = dp * z + p;
            p = p * z + c;
        }
        (p, dp)
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        let mut out = vec![Complex::new(0.0, 0.0); self.coeffs.len() + other.coeffs.len() - 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            for (j, &b) in other.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Poly::new(out)
    }

    pub fn add(&self, other: &Poly) -> Poly {
        let n = self.coeffs.len().max(other.coeffs.len());
        let zero = Complex::new(0.0, 0.0);
        let out = (0..n)
            .map(|k| {
                self.coeffs.get(k).copied().unwrap_or(zero) + other.coeffs.get(k).copied().unwrap_or(zero)
            })
            .collect();
        Poly::new(out)
    }

    pub fn scale(&self, s: Complex) -> Poly {
        Poly::new(self.coeffs.iter().map(|&c| c * s).collect())
    }

    /// Root-modulus bound used to size the initial ring.
    fn cauchy_radius(&self) -> f64 {
        let n = self.degree();
        let lead = self.coeffs[n].norm();
        (0..n)
            .map(|k| (self.coeffs[k].norm() / lead).powf(1.0 / (n - k) as f64))
            .fold(0.0, f64::max)
    }

    /// All roots, polished until `|p(z)| / Σ|c_k||z|^k` falls below 1e-14.
    pub fn roots(&self) -> Result<Vec<Complex>, RootError> {
        self.roots_seeded(0x5eed_ab3e)
    }

    pub fn roots_seeded(&self, seed: u64) -> Result<Vec<Complex>, RootError> {
        let n = self.degree();
        if n == 0 || self.coeffs[n].norm() == 0.0 {
            return Err(RootError::Degenerate);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let radius = self.cauchy_radius().max(1e-3);
        let phase: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
        let mut z: Vec<Complex> = (0..n)
            .map(|k| {
                let jitter: f64 = rng.gen_range(0.9..1.1);
                Complex::from_polar(
                    radius * jitter,
                    phase + std::f64::consts::TAU * k as f64 / n as f64,
                )
            })
            .collect();
        let abs_coeffs = Poly::new(self.coeffs.iter().map(|c| Complex::new(c.norm(), 0.0)).collect());
        let backward = |w: Complex, p: Complex| -> f64 {
            let scale = abs_coeffs.eval(Complex::new(w.norm(), 0.0)).re;
            if scale == 0.0 { p.norm() } else { p.norm() / scale }
        };
        let max_sweeps = 500;
        for _ in 0..max_sweeps {
            let mut worst = 0.0f64;
            for i in 0..n {
                let (p, dp) = self.eval_with_derivative(z[i]);
                let res = backward(z[i], p);
                worst = worst.max(res);
                if p.norm() == 0.0 || res < 1e-16 {
                    continue;
                }
                let ratio = p / dp;
                let sum: Complex = (0..n)
                    .filter(|&j| j != i)
                    .map(|j| (z[i] - z[j]).inv())
                    .sum();
                let step = ratio / (Complex::new(1.0, 0.0) - ratio * sum);
                if step.is_finite() {
                    z[i] -= step;
                }
            }
            if worst < 1e-14 {
                return Ok(z);
            }
        }
        // Clusters from multiple roots never reach a small relative
        // residual; accept them when the residual is negligible on the
        // scale of the root disk.
        let disk_scale = abs_coeffs.eval(Complex::new(radius, 0.0)).re;
        let worst = z
            .iter()
            .map(|&w| {
                let p = self.eval(w);
                backward(w, p).min(p.norm() / disk_scale)
            })
            .fold(0.0, f64::max);
        if worst < 1e-11 {
            Ok(z)
        } else {
            Err(RootError::NoConvergence(max_sweeps))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex {
        Complex::new(re, 0.0)
    }

    #[test]
    fn roots_of_unity() {
        // z^5 - 1
        let p = Poly::new(vec![c(-1.0), c(0.0), c(0.0), c(0.0), c(0.0), c(1.0)]);
        let mut r = p.roots().unwrap();
        r.sort_by(|a, b| a.arg().partial_cmp(&b.arg()).unwrap());
        assert_eq!(r.len(), 5);
        for w in &r {
            assert!((w.norm() - 1.0).abs() < 1e-13);
            assert!((w.powu(5) - c(1.0)).norm() < 1e-13);
        }
    }

    #[test]
    fn wilkinson_ten() {
        let mut p = Poly::new(vec![c(1.0)]);
        for k in 1..=10 {
            p = p.mul(&Poly::new(vec![c(-(k as f64)), c(1.0)]));
        }
        let mut r: Vec<f64> = p.roots().unwrap().iter().map(|z| z.re).collect();
        r.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for (k, x) in r.iter().enumerate() {
            assert!((x - (k + 1) as f64).abs() < 1e-7, "{x}");
        }
    }
}
