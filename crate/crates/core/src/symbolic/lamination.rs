//! Finite-depth rational laminations generated by co-landing 2-cycles.

use super::coding::{circle_dist, md_piece, CircleCoding};
use super::{md_step, periodic_angles, periodic_cycles, RationalAngle};
use crate::geom::Complex;
use crate::group::NecklaceGroup;
use crate::rays::{trace_orbit, AntiPoly, Landing, RayError, RayParams, Target};
use crate::sigma::{SigmaError, SigmaMap};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use thiserror::Error;

/// Default pullback depth.
pub const DEFAULT_DEPTH: usize = 6;
/// Rays landing closer than this co-land.
pub const CO_LANDING_TOL: f64 = 1e-3;
/// Rays landing farther apart than this are separated; in between is ambiguous.
pub const SEPARATION_TOL: f64 = 1e-2;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LaminationError {
    #[error("ambiguous ray landing: {0}")]
    AmbiguousLanding(String),
    #[error("anti-polynomial is not critically fixed")]
    NotCriticallyFixed,
    #[error(transparent)]
    Sigma(#[from] SigmaError),
    #[error(transparent)]
    Ray(#[from] RayError),
}

/// An unordered pair of angles, stored with the smaller angle first.
pub type Class = [RationalAngle; 2];

fn class(a: RationalAngle, b: RationalAngle) -> Class {
    if a <= b {
        [a, b]
    } else {
        [b, a]
    }
}

/// A finite set of unlinked angle pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lamination {
    pub d: u64,
    pub depth: usize,
    pub classes: Vec<Class>,
    /// Rotation added to every angle, when one was applied.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rotation: Option<RationalAngle>,
    /// Circle points of each class under the group's own dynamics, in
    /// the same order as `classes`.
    #[serde(default, skip_serializing_if = "Option::is_none", with = "opt_points")]
    pub points: Option<Vec<[Complex; 2]>>,
}

mod opt_points {
    use crate::geom::Complex;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(p: &Option<Vec<[Complex; 2]>>, s: S) -> Result<S::Ok, S::Error> {
        p.as_ref()
            .map(|v| v.iter().map(|[a, b]| [[a.re, a.im], [b.re, b.im]]).collect::<Vec<_>>())
            .serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Vec<[Complex; 2]>>, D::Error> {
        let raw: Option<Vec<[[f64; 2]; 2]>> = Option::deserialize(d)?;
        Ok(raw.map(|v| {
            v.into_iter()
                .map(|[a, b]| [Complex::new(a[0], a[1]), Complex::new(b[0], b[1])])
                .collect()
        }))
    }
}

impl Lamination {
    pub fn empty(d: u64, depth: usize) -> Self {
        Lamination { d, depth, classes: Vec::new(), rotation: None, points: None }
    }

    /// Classes fixed as pairs by `m_{−d}`: the co-landing 2-cycles.
    pub fn generators(&self) -> Vec<Class> {
        self.classes.iter().copied().filter(|c| step_class(self.d, c) == *c).collect()
    }

    pub fn is_planar(&self) -> bool {
        for (i, a) in self.classes.iter().enumerate() {
            for b in &self.classes[i + 1..] {
                if linked(a, b) || shares_endpoint(a, b) {
                    return false;
                }
            }
        }
        true
    }

    /// Every class maps onto a class of the lamination.
    pub fn is_invariant(&self) -> bool {
        let set: BTreeSet<Class> = self.classes.iter().copied().collect();
        self.classes.iter().all(|c| set.contains(&step_class(self.d, c)))
    }

    /// All angles shifted by `r`.
    pub fn rotated(&self, r: RationalAngle) -> Lamination {
        let mut classes: Vec<Class> = self.classes.iter().map(|[a, b]| class(a.add(&r), b.add(&r))).collect();
        classes.sort();
        Lamination { d: self.d, depth: self.depth, classes, rotation: Some(r), points: None }
    }

    fn sorted_classes(&self) -> Vec<Class> {
        let mut c = self.classes.clone();
        c.sort();
        c.dedup();
        c
    }
}

/// `m_{−d}` applied to both endpoints.
pub fn step_class(d: u64, c: &Class) -> Class {
    class(md_step(d, c[0]), md_step(d, c[1]))
}

/// Chords `{a0,a1}` and `{b0,b1}` cross.
pub fn linked(a: &Class, b: &Class) -> bool {
    let inside = |x: RationalAngle| a[0] < x && x < a[1];
    let ends = [b[0], b[1]];
    if ends.iter().any(|x| *x == a[0] || *x == a[1]) {
        return false;
    }
    inside(ends[0]) != inside(ends[1])
}

fn shares_endpoint(a: &Class, b: &Class) -> bool {
    a.iter().any(|x| b.contains(x))
}

/// `x` and `y` lie in one component of `𝕋` minus the sorted `cuts`.
fn same_component(cuts: &[RationalAngle], x: RationalAngle, y: RationalAngle) -> bool {
    if cuts.binary_search(&x).is_ok() || cuts.binary_search(&y).is_ok() {
        return false;
    }
    let n = cuts.len();
    let ix = cuts.partition_point(|c| *c < x) % n.max(1);
    let iy = cuts.partition_point(|c| *c < y) % n.max(1);
    ix == iy
}

/// Pullback of generator pairs: a class first mapped onto a generator
/// after `n` steps must lie in one component of the complement of
/// `m_{−d}^{−(n−1)}(A)`, where `A` holds the fixed angles and the
/// generators, and must not cross any class already kept.
///
/// When `points` is given (one pair of circle points per generator) the
/// matching points are pulled back by the reflections of the ideal group.
fn pull_back(
    d: u64,
    generators: &[Class],
    depth: usize,
    coding: Option<&CircleCoding>,
    points: Option<&[[Complex; 2]]>,
) -> Lamination {
    let mut cuts: BTreeSet<RationalAngle> = periodic_angles(d, 1).into_iter().collect();
    for g in generators {
        cuts.extend(g.iter().copied());
    }
    let mut classes: Vec<Class> = generators.iter().map(|g| class(g[0], g[1])).collect();
    classes.sort();
    classes.dedup();
    let mut pts: Option<Vec<[Complex; 2]>> = points.map(|p| {
        classes
            .iter()
            .map(|c| {
                let k = generators.iter().position(|g| class(g[0], g[1]) == *c).unwrap();
                let [u, v] = p[k];
                if class(generators[k][0], generators[k][1])[0] == generators[k][0] {
                    [u, v]
                } else {
                    [v, u]
                }
            })
            .collect()
    });
    let mut present: BTreeSet<Class> = classes.iter().copied().collect();
    let mut frontier: Vec<usize> = (0..classes.len()).collect();
    let mut cut_level: Vec<RationalAngle> = cuts.iter().copied().collect();
    for level in 1..=depth {
        let mut next = Vec::new();
        for &ci in &frontier {
            let parent = classes[ci];
            let pre0 = parent[0].preimages(d);
            let pre1 = parent[1].preimages(d);
            let mut candidates: Vec<(RationalAngle, RationalAngle)> = Vec::new();
            for &x in &pre0 {
                for &y in &pre1 {
                    if same_component(&cut_level, x, y) {
                        candidates.push((x, y));
                    }
                }
            }
            candidates.sort();
            for (x, y) in candidates {
                let c = class(x, y);
                if present.contains(&c) {
                    continue;
                }
                if classes.iter().any(|k| linked(k, &c) || shares_endpoint(k, &c)) {
                    continue;
                }
                if let (Some(pts), Some(coding)) = (pts.as_mut(), coding) {
                    let [p0, p1] = pts[ci];
                    let q0 = coding.reflect_on_circle(md_piece(d, x), p0);
                    let q1 = coding.reflect_on_circle(md_piece(d, y), p1);
                    pts.push(if c[0] == x { [q0, q1] } else { [q1, q0] });
                }
                present.insert(c);
                classes.push(c);
                next.push(classes.len() - 1);
            }
        }
        frontier = next;
        if level < depth {
            let mut grown: BTreeSet<RationalAngle> = BTreeSet::new();
            for c in &cut_level {
                grown.extend(c.preimages(d));
            }
            cut_level = grown.into_iter().collect();
        }
    }
    if let Some(p) = pts.as_mut() {
        let mut idx: Vec<usize> = (0..classes.len()).collect();
        idx.sort_by_key(|&i| classes[i]);
        *p = idx.iter().map(|&i| p[i]).collect();
        classes = idx.iter().map(|&i| classes[i]).collect();
    } else {
        classes.sort();
    }
    Lamination { d, depth, classes, rotation: None, points: pts }
}

/// Pullback of the given generators alone, as used by every constructor.
pub fn lamination_from_generators(d: u64, generators: &[Class], depth: usize) -> Lamination {
    pull_back(d, generators, depth, None, None)
}

/// Landing points of the rays of all angles in `angles`.
fn landings(target: &Target, angles: &[RationalAngle]) -> Result<Vec<Landing>, LaminationError> {
    let params = RayParams::default();
    angles
        .par_iter()
        .map(|&a| {
            let tr = trace_orbit(target, a, &params)?;
            tr[0].landing.ok_or_else(|| LaminationError::AmbiguousLanding(format!("ray {a} did not converge")))
        })
        .collect()
}

/// Which period-2 cycles co-land, with their landing points.
pub fn co_landing_cycles(target: &Target) -> Result<Vec<(Class, Complex)>, LaminationError> {
    let d = target.degree() as u64;
    let cycles = periodic_cycles(d, 2);
    let flat: Vec<RationalAngle> = cycles.iter().flatten().copied().collect();
    let land = landings(target, &flat)?;
    let mut out = Vec::new();
    for (k, cyc) in cycles.iter().enumerate() {
        let (a, b) = (land[2 * k], land[2 * k + 1]);
        let dist = (a.point - b.point).norm();
        if dist < CO_LANDING_TOL {
            out.push((class(cyc[0], cyc[1]), (a.point + b.point) * 0.5));
        } else if dist <= SEPARATION_TOL {
            return Err(LaminationError::AmbiguousLanding(format!(
                "rays {} and {} land {dist:.3e} apart",
                cyc[0], cyc[1]
            )));
        }
    }
    Ok(out)
}

/// Fixed angles whose rays land on a cusp of the droplet.
pub fn cusp_angles(f: &SigmaMap) -> Result<Vec<RationalAngle>, LaminationError> {
    let cusps = f.find_cusps()?;
    let fixed = periodic_angles(f.degree() as u64, 1);
    let land = landings(&Target::Sigma(f.clone()), &fixed)?;
    Ok(fixed
        .into_iter()
        .zip(land)
        .filter(|(_, l)| cusps.zeta.iter().any(|c| (c - l.point).norm() < CO_LANDING_TOL))
        .map(|(a, _)| a)
        .collect())
}

/// `λ(σ_f)` truncated at `depth`.
pub fn lamination_sigma(f: &SigmaMap, depth: usize) -> Result<Lamination, LaminationError> {
    let doubles = f.find_double_points()?;
    let pairs = co_landing_cycles(&Target::Sigma(f.clone()))?;
    for (c, z) in &pairs {
        if !doubles.points.iter().any(|p| (p.zeta - z).norm() < CO_LANDING_TOL) {
            return Err(LaminationError::AmbiguousLanding(format!(
                "rays {} and {} co-land away from every double point",
                c[0], c[1]
            )));
        }
    }
    if pairs.len() != doubles.len() {
        return Err(LaminationError::AmbiguousLanding(format!(
            "{} co-landing 2-cycles for {} double points",
            pairs.len(),
            doubles.len()
        )));
    }
    let gens: Vec<Class> = pairs.into_iter().map(|(c, _)| c).collect();
    Ok(lamination_from_generators(f.degree() as u64, &gens, depth))
}

/// `λ(p)` truncated at `depth`, with every angle shifted by `rotation`.
pub fn lamination_antipoly(p: &AntiPoly, depth: usize, rotation: RationalAngle) -> Result<Lamination, LaminationError> {
    if !p.is_critically_fixed(1e-8)? {
        return Err(LaminationError::NotCriticallyFixed);
    }
    let pairs = co_landing_cycles(&Target::Poly(p.clone()))?;
    let gens: Vec<Class> = pairs.into_iter().map(|(c, _)| c).collect();
    let lam = lamination_from_generators(p.degree() as u64, &gens, depth);
    Ok(lam.rotated(rotation))
}

/// The `m_{−d}` 2-cycle with one angle in `J_i` and the other in `J_j`.
pub fn two_cycle_in(d: u64, i: usize, j: usize) -> Option<Class> {
    let open = |x: RationalAngle, k: usize| {
        let lo = RationalAngle::new(k as i128 - 1, d as i128 + 1);
        let hi = RationalAngle::new(k as i128, d as i128 + 1);
        x > lo && (x < hi || (k == d as usize + 1 && x > lo))
    };
    periodic_cycles(d, 2).into_iter().find_map(|c| {
        let (a, b) = (c[0], c[1]);
        if (open(a, i) && open(b, j)) || (open(a, j) && open(b, i)) {
            Some(class(a, b))
        } else {
            None
        }
    })
}

/// `λ(Γ)` from the tangency pattern of the group.
///
/// Each non-consecutive tangency `{i, j}` gives the 2-cycle of `m_{−d}` in
/// `J_i × J_j`. The matching 2-cycle of `ρ` on `𝕋` (the attracting fixed
/// point of `r_j ∘ r_i` on `I_i` and its image) is pulled back alongside
/// and kept in `points`.
pub fn lamination_group(g: &NecklaceGroup, depth: usize) -> Lamination {
    let d = (g.d() - 1) as u64;
    let coding = CircleCoding::new(d as usize);
    let mut gens = Vec::new();
    let mut pts = Vec::new();
    for (i, j) in g.extra_tangencies() {
        let Some(c) = two_cycle_in(d, i, j) else { continue };
        let (ti, tj) = rho_two_cycle(&coding, i, j);
        // Orient the points like the angles.
        let first_in_i = md_piece(d, c[0]) == i;
        gens.push(c);
        pts.push(if first_in_i { [ti, tj] } else { [tj, ti] });
    }
    pull_back(d, &gens, depth, Some(&coding), Some(&pts))
}

/// The `ρ` 2-cycle in `I_i × I_j` of the ideal group, by iterating the
/// contraction `r_i ∘ r_j` on `I_i`.
fn rho_two_cycle(coding: &CircleCoding, i: usize, j: usize) -> (Complex, Complex) {
    let c = &coding.circles()[i - 1];
    let mut t = c.center / c.center.norm();
    for _ in 0..10_000 {
        let next = coding.reflect_on_circle(i, coding.reflect_on_circle(j, t));
        let done = (next - t).norm() < 1e-15;
        t = next;
        if done {
            break;
        }
    }
    (t, coding.reflect_on_circle(i, t))
}

/// Comparison mode for [`compare_laminations`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CompareMode {
    Identity,
    /// Circle points of `A` mapped by `𝓔_d` at tolerance `tol`.
    ViaE { d: usize, tol: f64 },
    UpToRotation,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompareReport {
    pub matched: bool,
    /// First class without a partner, or a count mismatch.
    pub witness: Option<String>,
    pub rotation_used: Option<RationalAngle>,
}

fn identity_witness(a: &Lamination, b: &Lamination) -> Option<String> {
    let (ca, cb) = (a.sorted_classes(), b.sorted_classes());
    if let Some(c) = ca.iter().find(|c| cb.binary_search(c).is_err()) {
        return Some(format!("class {{{}, {}}} of A missing from B", c[0], c[1]));
    }
    if let Some(c) = cb.iter().find(|c| ca.binary_search(c).is_err()) {
        return Some(format!("class {{{}, {}}} of B missing from A", c[0], c[1]));
    }
    None
}

pub fn compare_laminations(a: &Lamination, b: &Lamination, mode: CompareMode) -> CompareReport {
    match mode {
        CompareMode::Identity => {
            let witness = identity_witness(a, b);
            CompareReport { matched: witness.is_none(), witness, rotation_used: None }
        }
        CompareMode::UpToRotation => {
            let n = a.d + 1;
            let mut first = None;
            for j in 0..n {
                let r = RationalAngle::new(j as i128, n as i128);
                let w = identity_witness(&a.rotated(r), b);
                if w.is_none() {
                    return CompareReport { matched: true, witness: None, rotation_used: Some(r) };
                }
                first.get_or_insert(w);
            }
            CompareReport { matched: false, witness: first.flatten(), rotation_used: None }
        }
        CompareMode::ViaE { d, tol } => {
            let Some(points) = &a.points else {
                return CompareReport {
                    matched: false,
                    witness: Some("A carries no circle points".into()),
                    rotation_used: None,
                };
            };
            let coding = CircleCoding::new(d);
            let mut used = vec![false; b.classes.len()];
            for (k, [p, q]) in points.iter().enumerate() {
                let (e0, e1) = (coding.eval_e(*p, tol).value, coding.eval_e(*q, tol).value);
                let hit = b.classes.iter().enumerate().position(|(m, c)| {
                    let (c0, c1) = (c[0].to_f64(), c[1].to_f64());
                    !used[m]
                        && ((circle_dist(e0, c0) < 10.0 * tol && circle_dist(e1, c1) < 10.0 * tol)
                            || (circle_dist(e0, c1) < 10.0 * tol && circle_dist(e1, c0) < 10.0 * tol))
                });
                match hit {
                    Some(m) => used[m] = true,
                    None => {
                        return CompareReport {
                            matched: false,
                            witness: Some(format!(
                                "class {} of A maps to {{{e0:.9}, {e1:.9}}}, unmatched in B",
                                a.classes.get(k).map(|c| format!("{{{}, {}}}", c[0], c[1])).unwrap_or_default()
                            )),
                            rotation_used: None,
                        }
                    }
                }
            }
            if let Some(m) = used.iter().position(|u| !u) {
                let c = b.classes[m];
                return CompareReport {
                    matched: false,
                    witness: Some(format!("class {{{}, {}}} of B has no partner in A", c[0], c[1])),
                    rotation_used: None,
                };
            }
            CompareReport { matched: true, witness: None, rotation_used: None }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(n: i128, d: i128) -> RationalAngle {
        RationalAngle::new(n, d)
    }

    #[test]
    fn depth_one_pullback_of_worked_generator() {
        let lam = lamination_from_generators(3, &[[r(1, 8), r(5, 8)]], 1);
        assert_eq!(lam.classes, vec![[r(1, 8), r(5, 8)], [r(7, 24), r(11, 24)], [r(19, 24), r(23, 24)]]);
        assert!(lam.is_planar());
        assert!(lam.is_invariant());
    }

    #[test]
    fn two_cycles_per_interval_pair() {
        assert_eq!(two_cycle_in(3, 2, 4), Some([r(3, 8), r(7, 8)]));
        assert_eq!(two_cycle_in(3, 1, 3), Some([r(1, 8), r(5, 8)]));
    }

    #[test]
    fn linking() {
        assert!(linked(&[r(1, 8), r(5, 8)], &[r(3, 8), r(7, 8)]));
        assert!(!linked(&[r(1, 8), r(5, 8)], &[r(7, 24), r(11, 24)]));
    }

    #[test]
    fn json_shape() {
        let lam = lamination_from_generators(3, &[[r(1, 8), r(5, 8)]], 0);
        let s = serde_json::to_string(&lam).unwrap();
        assert_eq!(s, r#"{"d":3,"depth":0,"classes":[[["1","8"],["5","8"]]]}"#);
        let back: Lamination = serde_json::from_str(&s).unwrap();
        assert_eq!(back, lam);
    }
}
