//! Schwarz reflections of quadrature domains, necklace reflection groups
//! and critically fixed anti-polynomials.

pub mod geom;
pub mod group;
pub mod moduli;
pub mod packing;
pub mod poly;
pub mod rays;
pub mod sigma;
pub mod symbolic;
