//! Pixel renderers for the three systems.
//!
//! Pixels are classified independently and in parallel; the droplet of a
//! Schwarz reflection is rasterized once (scanline parity of a dense
//! sample of `f(𝕋)` plus a band around the curve) so that per-pixel and
//! per-iterate membership is a lookup.

use super::{AntiPoly, ESCAPE_RADIUS};
use crate::geom::Complex;
use crate::group::{NecklaceGroup, OrbitFate};
use crate::sigma::{Membership, SigmaMap};
use rayon::prelude::*;
use std::collections::{BTreeMap, VecDeque};
use std::f64::consts::TAU;
use std::io::Write;
use thiserror::Error;

pub const MAX_RESOLUTION: usize = 8192;
/// Samples of `f(𝕋)` used for the droplet mask.
const BOUNDARY_SAMPLES: usize = 1 << 14;
/// Resolution of the droplet lookup mask used for iterates.
const MASK_RES: usize = 2048;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RenderError {
    #[error("resolution {0}x{1} outside 1..=8192")]
    BadResolution(usize, usize),
    #[error("viewport width must be positive")]
    BadViewport,
}

#[derive(Debug, Clone)]
pub enum SceneTarget {
    SchwarzMap(SigmaMap),
    Group(NecklaceGroup),
    AntiPolynomial(AntiPoly),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ColorMode {
    /// One flat color per class.
    #[default]
    Classes,
    /// Classes shaded by depth or potential.
    Depth,
}

#[derive(Debug, Clone)]
pub struct RenderScene {
    pub target: SceneTarget,
    pub center: Complex,
    /// Width of the viewport in the plane.
    pub width: f64,
    pub resolution: (usize, usize),
    pub max_depth: usize,
    pub coloring: ColorMode,
}

impl RenderScene {
    pub fn new(target: SceneTarget, center: Complex, width: f64, resolution: usize) -> Self {
        RenderScene { target, center, width, resolution: (resolution, resolution), max_depth: 512, coloring: ColorMode::Classes }
    }

    pub fn pixel_size(&self) -> f64 {
        self.width / self.resolution.0 as f64
    }

    /// Center of pixel `(i, j)`; row 0 is the top.
    pub fn pixel_center(&self, i: usize, j: usize) -> Complex {
        let s = self.pixel_size();
        let (w, h) = self.resolution;
        Complex::new(
            self.center.re + (i as f64 + 0.5 - w as f64 / 2.0) * s,
            self.center.im - (j as f64 + 0.5 - h as f64 / 2.0) * s,
        )
    }
}

/// Per-pixel classification.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PixelClass {
    /// Schwarz: interior of the droplet (rank-0 tile).
    Droplet,
    /// Schwarz: enters the droplet after `rank` reflections.
    Tile { rank: usize },
    /// Schwarz or anti-polynomial: escapes to infinity.
    Basin { potential: f64 },
    /// Limit set or Julia set (unresolved, on a boundary, or between
    /// different fates).
    Limit,
    /// Group: reaches the unbounded part of the fundamental domain.
    Polygon { depth: usize },
    /// Group: reaches a bounded face.
    Face { component: usize, depth: usize },
    /// Anti-polynomial: attracted to the fixed critical point `index`.
    Attracted { index: usize, iterations: usize },
    /// Numerical failure.
    Failed,
}

impl PixelClass {
    pub fn name(&self) -> &'static str {
        match self {
            PixelClass::Droplet => "droplet",
            PixelClass::Tile { .. } => "tile",
            PixelClass::Basin { .. } => "basin",
            PixelClass::Limit => "limit",
            PixelClass::Polygon { .. } => "polygon",
            PixelClass::Face { .. } => "face",
            PixelClass::Attracted { .. } => "attracted",
            PixelClass::Failed => "failed",
        }
    }

    fn rgb(&self, mode: ColorMode) -> [u8; 3] {
        let shade = |base: [u8; 3], t: f64| -> [u8; 3] {
            if mode == ColorMode::Classes {
                return base;
            }
            let k = 0.35 + 0.65 * (1.0 - t.clamp(0.0, 1.0));
            base.map(|c| (c as f64 * k) as u8)
        };
        match *self {
            PixelClass::Droplet => [240, 200, 60],
            PixelClass::Tile { rank } => {
                let base = if rank % 2 == 0 { [230, 150, 50] } else { [200, 90, 40] };
                shade(base, (rank as f64).ln_1p() / 6.0)
            }
            PixelClass::Basin { potential } => shade([60, 110, 200], 1.0 - potential.ln_1p() / 4.0),
            PixelClass::Limit => [0, 0, 0],
            PixelClass::Polygon { depth } => shade([90, 170, 220], (depth as f64).ln_1p() / 6.0),
            PixelClass::Face { component, depth } => {
                let palette = [[240, 200, 60], [120, 200, 110], [210, 120, 200], [230, 120, 90]];
                shade(palette[component % palette.len()], (depth as f64).ln_1p() / 6.0)
            }
            PixelClass::Attracted { index, iterations } => {
                let palette = [[220, 80, 80], [80, 200, 120], [200, 180, 60], [150, 90, 220]];
                shade(palette[index % palette.len()], (iterations as f64).ln_1p() / 5.0)
            }
            PixelClass::Failed => [255, 0, 255],
        }
    }
}

#[derive(Debug, Clone)]
pub struct Image {
    pub width: usize,
    pub height: usize,
    /// Row-major, row 0 at the top.
    pub classes: Vec<PixelClass>,
    pub coloring: ColorMode,
}

impl Image {
    pub fn class(&self, i: usize, j: usize) -> PixelClass {
        self.classes[j * self.width + i]
    }

    pub fn histogram(&self) -> BTreeMap<String, u64> {
        let mut h = BTreeMap::new();
        for c in &self.classes {
            *h.entry(c.name().to_string()).or_insert(0) += 1;
        }
        h
    }

    /// Binary PPM (P6).
    pub fn write_ppm<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        write!(out, "P6\n{} {}\n255\n", self.width, self.height)?;
        let mut buf = Vec::with_capacity(3 * self.classes.len());
        for c in &self.classes {
            buf.extend_from_slice(&c.rgb(self.coloring));
        }
        out.write_all(&buf)
    }

    /// Pixels `(i, j)` satisfying `pred`.
    pub fn pixels_where(&self, pred: impl Fn(&PixelClass) -> bool) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for j in 0..self.height {
            for i in 0..self.width {
                if pred(&self.class(i, j)) {
                    out.push((i, j));
                }
            }
        }
        out
    }

    /// Number of 4-connected components of the pixels satisfying `pred`
    /// with at least `min_size` pixels.
    pub fn components(&self, pred: impl Fn(&PixelClass) -> bool, min_size: usize) -> usize {
        let (w, h) = (self.width, self.height);
        let mut seen = vec![false; w * h];
        let mut count = 0;
        for start in 0..w * h {
            if seen[start] || !pred(&self.classes[start]) {
                continue;
            }
            let mut size = 0;
            let mut queue = VecDeque::from([start]);
            seen[start] = true;
            while let Some(k) = queue.pop_front() {
                size += 1;
                let (i, j) = (k % w, k / w);
                let mut push = |n: usize| {
                    if !seen[n] && pred(&self.classes[n]) {
                        seen[n] = true;
                        queue.push_back(n);
                    }
                };
                if i > 0 {
                    push(k - 1);
                }
                if i + 1 < w {
                    push(k + 1);
                }
                if j > 0 {
                    push(k - w);
                }
                if j + 1 < h {
                    push(k + w);
                }
            }
            if size >= min_size {
                count += 1;
            }
        }
        count
    }
}

pub fn render(scene: &RenderScene) -> Result<Image, RenderError> {
    let (w, h) = scene.resolution;
    if w == 0 || h == 0 || w > MAX_RESOLUTION || h > MAX_RESOLUTION {
        return Err(RenderError::BadResolution(w, h));
    }
    if !(scene.width > 0.0) {
        return Err(RenderError::BadViewport);
    }
    let classes = match &scene.target {
        SceneTarget::SchwarzMap(f) => render_schwarz(scene, f),
        SceneTarget::Group(g) => render_group(scene, g),
        SceneTarget::AntiPolynomial(p) => render_antipoly(scene, p),
    };
    Ok(Image { width: w, height: h, classes, coloring: scene.coloring })
}

fn par_pixels(scene: &RenderScene, f: impl Fn(usize, usize) -> PixelClass + Sync) -> Vec<PixelClass> {
    let (w, h) = scene.resolution;
    (0..w * h).into_par_iter().map(|k| f(k % w, k / w)).collect()
}

/// Rasterized droplet: inside by scanline parity, with every cell within
/// `band` of the sampled curve marked as boundary.
struct DropletMask {
    origin: Complex,
    step: f64,
    nx: usize,
    ny: usize,
    /// 0 exterior, 1 interior, 2 boundary band.
    cells: Vec<u8>,
}

impl DropletMask {
    /// Mask with cell centers `origin + (i + ½, j + ½)·step`.
    fn new(curve: &[Complex], origin: Complex, step: f64, nx: usize, ny: usize, band: f64) -> Self {
        let mut cells = vec![0u8; nx * ny];
        for j in 0..ny {
            let y = origin.im + (j as f64 + 0.5) * step;
            let mut xs: Vec<f64> = Vec::new();
            for k in 0..curve.len() {
                let (a, b) = (curve[k], curve[(k + 1) % curve.len()]);
                if (a.im <= y) != (b.im <= y) {
                    xs.push(a.re + (b.re - a.re) * (y - a.im) / (b.im - a.im));
                }
            }
            xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let mut c = 0;
            for i in 0..nx {
                let x = origin.re + (i as f64 + 0.5) * step;
                while c < xs.len() && xs[c] < x {
                    c += 1;
                }
                if c % 2 == 1 {
                    cells[j * nx + i] = 1;
                }
            }
        }
        for k in 0..curve.len() {
            let (a, b) = (curve[k], curve[(k + 1) % curve.len()]);
            let lo_x = ((a.re.min(b.re) - band - origin.re) / step - 0.5).floor().max(0.0) as usize;
            let hi_x = ((a.re.max(b.re) + band - origin.re) / step - 0.5).ceil().max(0.0) as usize;
            let lo_y = ((a.im.min(b.im) - band - origin.im) / step - 0.5).floor().max(0.0) as usize;
            let hi_y = ((a.im.max(b.im) + band - origin.im) / step - 0.5).ceil().max(0.0) as usize;
            for j in lo_y..=hi_y.min(ny.saturating_sub(1)) {
                for i in lo_x..=hi_x.min(nx.saturating_sub(1)) {
                    let p = origin + Complex::new((i as f64 + 0.5) * step, (j as f64 + 0.5) * step);
                    if segment_distance(p, a, b) <= band {
                        cells[j * nx + i] = 2;
                    }
                }
            }
        }
        DropletMask { origin, step, nx, ny, cells }
    }

    /// `None` outside the mask's extent.
    fn lookup(&self, z: Complex) -> Option<u8> {
        let i = ((z.re - self.origin.re) / self.step).floor();
        let j = ((z.im - self.origin.im) / self.step).floor();
        if i < 0.0 || j < 0.0 || i >= self.nx as f64 || j >= self.ny as f64 {
            return None;
        }
        Some(self.cells[j as usize * self.nx + i as usize])
    }
}

fn segment_distance(p: Complex, a: Complex, b: Complex) -> f64 {
    let ab = b - a;
    let l2 = ab.norm_sqr();
    let t = if l2 == 0.0 { 0.0 } else { (((p - a) * ab.conj()).re / l2).clamp(0.0, 1.0) };
    (p - a - ab * t).norm()
}

fn render_schwarz(scene: &RenderScene, f: &SigmaMap) -> Vec<PixelClass> {
    let curve: Vec<Complex> = (0..BOUNDARY_SAMPLES).map(|k| f.boundary_point(TAU * k as f64 / BOUNDARY_SAMPLES as f64)).collect();
    let (w, h) = scene.resolution;
    let s = scene.pixel_size();
    // Screen mask: rows counted from the bottom so cell (i, j) is pixel (i, h−1−j).
    let screen_origin = scene.pixel_center(0, h - 1) - Complex::new(0.5 * s, 0.5 * s);
    let screen = DropletMask::new(&curve, screen_origin, s, w, h, s);
    // Lookup mask for iterates over the droplet's bounding box.
    let (mut lo, mut hi) = (curve[0], curve[0]);
    for z in &curve {
        lo = Complex::new(lo.re.min(z.re), lo.im.min(z.im));
        hi = Complex::new(hi.re.max(z.re), hi.im.max(z.im));
    }
    let span = (hi.re - lo.re).max(hi.im - lo.im) * 1.02;
    let step = span / MASK_RES as f64;
    let fine = DropletMask::new(&curve, lo - Complex::new(0.01 * span, 0.01 * span), step, MASK_RES, MASK_RES, 1.5 * step);

    let inside = |z: Complex| -> Option<bool> {
        match fine.lookup(z) {
            None => Some(false),
            Some(0) => Some(false),
            Some(1) => Some(true),
            _ => match f.membership_exterior(z, 1e-9) {
                Membership::Exterior => Some(false),
                Membership::Droplet => Some(true),
                Membership::Boundary(_) => None,
            },
        }
    };
    let d = f.degree() as f64;
    par_pixels(scene, |i, j| {
        match screen.cells[(h - 1 - j) * w + i] {
            1 => return PixelClass::Droplet,
            2 => return PixelClass::Limit,
            _ => {}
        }
        let mut z = scene.pixel_center(i, j);
        let mut guess: Option<Complex> = None;
        let mut scale = 1.0;
        for rank in 1..=scene.max_depth {
            if z.norm() > ESCAPE_RADIUS {
                return PixelClass::Basin { potential: z.norm().ln() * scale };
            }
            z = match f.schwarz_with_preimage(z, guess) {
                Ok((v, pre)) => {
                    guess = if pre.norm() < 1.5 { None } else { Some(pre.conj().inv()) };
                    v
                }
                Err(_) => return PixelClass::Failed,
            };
            scale /= d;
            match inside(z) {
                Some(true) => return PixelClass::Tile { rank },
                Some(false) => {}
                None => return PixelClass::Limit,
            }
        }
        PixelClass::Limit
    })
}

fn render_group(scene: &RenderScene, g: &NecklaceGroup) -> Vec<PixelClass> {
    let (w, h) = scene.resolution;
    let raw = par_pixels(scene, |i, j| match g.classify_orbit(scene.pixel_center(i, j), scene.max_depth) {
        OrbitFate::InPolygon { depth } | OrbitFate::Escaped { depth } => PixelClass::Polygon { depth },
        OrbitFate::InDroplet { component, depth } => PixelClass::Face { component, depth },
        OrbitFate::Undecided { .. } => PixelClass::Limit,
    });
    // The limit set separates different fates: a pixel whose 4-neighbor
    // ends in another region of the fundamental domain is marked.
    let region = |c: &PixelClass| match c {
        PixelClass::Polygon { .. } => Some(usize::MAX),
        PixelClass::Face { component, .. } => Some(*component),
        _ => None,
    };
    (0..w * h)
        .into_par_iter()
        .map(|k| {
            let (i, j) = (k % w, k / w);
            let me = region(&raw[k]);
            if me.is_none() {
                return raw[k];
            }
            let mut nbrs = Vec::with_capacity(4);
            if i > 0 {
                nbrs.push(k - 1);
            }
            if i + 1 < w {
                nbrs.push(k + 1);
            }
            if j > 0 {
                nbrs.push(k - w);
            }
            if j + 1 < h {
                nbrs.push(k + w);
            }
            if nbrs.iter().any(|&n| region(&raw[n]).is_some_and(|r| Some(r) != me)) {
                PixelClass::Limit
            } else {
                raw[k]
            }
        })
        .collect()
}

fn render_antipoly(scene: &RenderScene, p: &AntiPoly) -> Vec<PixelClass> {
    let attractors: Vec<Complex> = p
        .critical_points()
        .unwrap_or_default()
        .into_iter()
        .filter(|c| (p.eval(*c) - c).norm() < 1e-8)
        .collect();
    let d = p.degree() as f64;
    par_pixels(scene, |i, j| {
        let mut z = scene.pixel_center(i, j);
        let mut scale = 1.0;
        for it in 0..=scene.max_depth {
            if !z.is_finite() {
                return PixelClass::Failed;
            }
            if z.norm() > ESCAPE_RADIUS {
                return PixelClass::Basin { potential: z.norm().ln() * scale };
            }
            if let Some(index) = attractors.iter().position(|a| (z - a).norm() < 1e-6) {
                return PixelClass::Attracted { index, iterations: it };
            }
            z = p.eval(z);
            scale /= d;
        }
        PixelClass::Limit
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::base_group;

    #[test]
    fn rejects_bad_scenes() {
        let g = base_group(3).unwrap();
        let mut s = RenderScene::new(SceneTarget::Group(g), Complex::new(0.0, 0.0), 3.0, 0);
        assert!(render(&s).is_err());
        s.resolution = (16, 16);
        s.width = 0.0;
        assert!(render(&s).is_err());
    }

    #[test]
    fn ppm_header_and_size() {
        let g = base_group(4).unwrap();
        let s = RenderScene::new(SceneTarget::Group(g), Complex::new(0.0, 0.0), 3.0, 32);
        let img = render(&s).unwrap();
        let mut buf = Vec::new();
        img.write_ppm(&mut buf).unwrap();
        assert!(buf.starts_with(b"P6\n32 32\n255\n"));
        assert_eq!(buf.len(), 13 + 32 * 32 * 3);
        assert_eq!(img.histogram().values().sum::<u64>(), 1024);
    }

    #[test]
    fn power_map_basins() {
        let p = AntiPoly::power(3).unwrap();
        let s = RenderScene::new(SceneTarget::AntiPolynomial(p), Complex::new(0.0, 0.0), 4.0, 64);
        let img = render(&s).unwrap();
        // Inside the unit disk everything is attracted to the fixed critical point 0.
        assert!(matches!(img.class(32, 32), PixelClass::Attracted { .. }));
        assert!(matches!(img.class(0, 0), PixelClass::Basin { .. }));
    }
}
