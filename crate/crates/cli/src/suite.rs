//! The d = 3 verification battery: ten criteria, each a list of measured
//! checks with the tolerance that was applied.

use mating_lab::geom::Complex;
use mating_lab::group::{base_group, NecklaceGroup};
use mating_lab::moduli::{admissible_pairs, droplet_quad, group_quad, modulus, rectangle, Convention, ModulusValue};
use mating_lab::packing::{chain_radius, contact_complex, pack, packing_to_necklace, ContactComplex};
use mating_lab::rays::render::{render, PixelClass, RenderScene, SceneTarget};
use mating_lab::rays::{landing, trace_ray, AntiPoly, RayParams, Target};
use mating_lab::sigma::SigmaMap;
use mating_lab::symbolic::{
    circle_dist, co_landing_cycles, compare_laminations, cusp_angles, lamination_antipoly, lamination_group,
    lamination_sigma, md_step, CircleCoding, CompareMode, RationalAngle,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};
use std::f64::consts::{PI, TAU};
use std::time::Instant;

pub const SUITES: &[&str] = &["paper-d3"];

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub measured: Value,
    pub tolerance: Value,
}

impl Check {
    fn new(name: impl Into<String>, passed: bool, measured: impl Serialize, tolerance: impl Serialize) -> Self {
        Check {
            name: name.into(),
            passed,
            measured: serde_json::to_value(measured).unwrap_or(Value::Null),
            tolerance: serde_json::to_value(tolerance).unwrap_or(Value::Null),
        }
    }

    /// `measured < bound`.
    fn below(name: impl Into<String>, measured: f64, bound: f64) -> Self {
        Check::new(name, measured < bound, measured, json!({ "below": bound }))
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Criterion {
    pub id: u32,
    pub title: &'static str,
    pub passed: bool,
    pub checks: Vec<Check>,
    pub error: Option<String>,
    pub elapsed_ms: u128,
}

impl Criterion {
    /// One-line summary.
    pub fn line(&self) -> String {
        let failed: Vec<&str> = self.checks.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect();
        let mut s = format!(
            "criterion {:>2} {}: {} ({} checks, {} ms)",
            self.id,
            if self.passed { "PASS" } else { "FAIL" },
            self.title,
            self.checks.len(),
            self.elapsed_ms
        );
        if let Some(e) = &self.error {
            s.push_str(&format!(" error: {e}"));
        } else if !failed.is_empty() {
            s.push_str(&format!(" failing: {}", failed.join(", ")));
        }
        s
    }
}

type Outcome = Result<Vec<Check>, String>;

pub const TITLES: [&str; 10] = [
    "fixed rays land at cusps",
    "cusp and double-point angles of the worked example",
    "expansion law of the Schwarz reflection",
    "circle conjugacy E_d",
    "lamination correspondence, group side",
    "lamination correspondence, anti-polynomial side",
    "base-point moduli",
    "degeneration of moduli along the cubic family",
    "circle packing",
    "limit set and droplet rasters",
];

/// Runs criterion `id` (1-based).
pub fn run_criterion(id: u32) -> Criterion {
    let start = Instant::now();
    let outcome = match id {
        1 => fixed_rays(),
        2 => double_point_angles(),
        3 => expansion_law(),
        4 => conjugacy_suite(&[3, 4, 5], 1000, 1e-7),
        5 => group_lamination(),
        6 => antipoly_lamination(),
        7 => base_point_moduli(),
        8 => degeneration(),
        9 => packing(),
        10 => rasters(),
        _ => Err(format!("no criterion {id}")),
    };
    let (checks, error) = match outcome {
        Ok(c) => (c, None),
        Err(e) => (Vec::new(), Some(e)),
    };
    Criterion {
        id,
        title: TITLES.get(id as usize - 1).copied().unwrap_or("unknown"),
        passed: error.is_none() && !checks.is_empty() && checks.iter().all(|c| c.passed),
        checks,
        error,
        elapsed_ms: start.elapsed().as_millis(),
    }
}

/// `z − 2/(3z) − 1/(3z³)`, the worked d = 3 example.
pub fn worked_example() -> SigmaMap {
    SigmaMap::cubic_family(2.0)
}

fn s<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn fixed_rays() -> Outcome {
    let mut checks = Vec::new();
    let mut maps: Vec<(String, SigmaMap)> = (2..=6).map(|d| (format!("f0 d={d}"), SigmaMap::f0(d).unwrap())).collect();
    maps.push(("worked example".into(), worked_example()));
    let params = RayParams::default();
    for (name, f) in &maps {
        let d = f.degree();
        let cusps = f.find_cusps().map_err(s)?;
        let target = Target::Sigma(f.clone());
        let mut assigned = Vec::new();
        let mut worst: f64 = 0.0;
        for j in 0..=d {
            let ray = trace_ray(&target, RationalAngle::new(j as i128, d as i128 + 1), &params).map_err(s)?;
            let land = landing(&ray).map_err(s)?;
            let (k, dist) = cusps
                .zeta
                .iter()
                .enumerate()
                .map(|(k, c)| (k, (c - land.point).norm()))
                .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
                .unwrap();
            worst = worst.max(dist);
            assigned.push(k);
            if j == 0 && name.starts_with("f0") {
                let omega = Complex::from_polar(1.0, PI / (d as f64 + 1.0));
                let expect = omega * (1.0 + 1.0 / d as f64);
                checks.push(Check::below(format!("{name}: 0-ray landing error"), (land.point - expect).norm(), 1e-3));
                let off = ray
                    .samples
                    .iter()
                    .map(|p| {
                        let q = p.point * omega.conj();
                        if q.re > 0.0 { q.im.abs() } else { q.norm() }
                    })
                    .fold(0.0, f64::max);
                checks.push(Check::below(format!("{name}: 0-ray distance from half-line"), off, 1e-8));
            }
        }
        checks.push(Check::below(format!("{name}: worst fixed-ray landing distance to a cusp"), worst, 1e-3));
        let mut sorted = assigned.clone();
        sorted.sort_unstable();
        sorted.dedup();
        checks.push(Check::new(format!("{name}: rays to cusps is a bijection"), sorted.len() == d + 1, assigned, "bijective"));
    }
    Ok(checks)
}

fn double_point_angles() -> Outcome {
    let f = worked_example();
    let mut checks = Vec::new();
    let cusp = cusp_angles(&f).map_err(s)?;
    let expect_cusp: Vec<RationalAngle> = (0..4).map(|j| RationalAngle::new(j, 4)).collect();
    checks.push(Check::new("cusp angles", cusp == expect_cusp, display(&cusp), display(&expect_cusp)));

    let pairs = co_landing_cycles(&Target::Sigma(f.clone())).map_err(s)?;
    let mut double: Vec<RationalAngle> = pairs.iter().flat_map(|(c, _)| c.iter().copied()).collect();
    double.sort();
    let expect = vec![RationalAngle::new(1, 8), RationalAngle::new(5, 8)];
    checks.push(Check::new("double-point angles", double == expect, display(&double), display(&expect)));

    let doubles = f.find_double_points().map_err(s)?;
    checks.push(Check::new("unique double point", doubles.len() == 1, doubles.len(), 1));
    let target = Target::Sigma(f);
    let land = |n: i128| -> Result<Complex, String> {
        let ray = trace_ray(&target, RationalAngle::new(n, 8), &RayParams::default()).map_err(s)?;
        Ok(landing(&ray).map_err(s)?.point)
    };
    let (l1, l5, l3, l7) = (land(1)?, land(5)?, land(3)?, land(7)?);
    let to_double = doubles.points.first().map(|p| (p.zeta - l1).norm().max((p.zeta - l5).norm())).unwrap_or(f64::INFINITY);
    checks.push(Check::below("rays 1/8, 5/8 land together", (l1 - l5).norm(), 1e-3));
    checks.push(Check::below("rays 1/8, 5/8 land at the double point", to_double, 1e-3));
    let sep = (l3 - l7).norm();
    checks.push(Check::new("rays 3/8, 7/8 land apart", sep > 1e-2, sep, json!({ "above": 1e-2 })));
    Ok(checks)
}

fn display(v: &[RationalAngle]) -> Vec<String> {
    v.iter().map(|a| a.to_string()).collect()
}

fn expansion_law() -> Outcome {
    let mut checks = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let maps = [
        ("f0 d=3", SigmaMap::f0(3).unwrap()),
        ("f0 d=4", SigmaMap::f0(4).unwrap()),
        ("worked example", worked_example()),
    ];
    for (name, f) in &maps {
        let d = f.degree() as i32;
        let mut worst: f64 = 0.0;
        for _ in 0..1000 {
            let w = Complex::from_polar(rng.gen_range(1.1..3.0), rng.gen_range(0.0..TAU));
            let fd = f.dbar_schwarz_fd(w, 1e-5).map_err(s)?;
            let expect = w.norm().powi(d - 1);
            worst = worst.max((fd - expect).abs() / expect);
        }
        checks.push(Check::below(format!("{name}: worst relative error over 1000 samples"), worst, 1e-5));
    }
    Ok(checks)
}

/// Conjugacy checks for `𝓔_d` on `n` random points per degree.
pub fn conjugacy_suite(degrees: &[usize], n: usize, tol: f64) -> Outcome {
    let mut checks = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for &d in degrees {
        let c = CircleCoding::new(d);
        let md = |x: f64| (-(d as f64) * x).rem_euclid(1.0);
        let mut pts: Vec<(f64, f64)> = Vec::with_capacity(n);
        let (mut conj_err, mut equi_err): (f64, f64) = (0.0, 0.0);
        for _ in 0..n {
            let a = rng.gen_range(0.0..1.0);
            let t = Complex::from_polar(1.0, TAU * a);
            let e = c.eval_e(t, tol).value;
            let (rt, _) = c.step(t);
            conj_err = conj_err.max(circle_dist(c.eval_e(rt, tol).value, md(e)));
            equi_err = equi_err.max(circle_dist(c.eval_e(t.conj(), tol).value, -e));
            pts.push((a, e));
        }
        checks.push(Check::below(format!("d={d}: |E(rho t) - m(E t)|"), conj_err, 1e-6));
        checks.push(Check::below(format!("d={d}: |E(conj t) + E(t)|"), equi_err, 2.0 * tol));
        let one = c.eval_e(Complex::new(1.0, 0.0), tol).exact;
        checks.push(Check::new(
            format!("d={d}: E(1) = 0 exactly"),
            one == Some(RationalAngle::zero()),
            one.map(|a| a.to_string()),
            "0",
        ));
        pts.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap());
        let worst_drop = pts.windows(2).map(|w| w[0].1 - w[1].1).fold(0.0, f64::max);
        checks.push(Check::below(format!("d={d}: largest decrease of E along the circle"), worst_drop, 2.0 * tol));

        let mut round: f64 = 0.0;
        let mut tried = 0;
        while tried < n / 10 {
            let den: i128 = rng.gen_range(2..5000);
            let theta = RationalAngle::new(rng.gen_range(0..den), den);
            if lands_on_fixed_point(d as u64, theta) {
                continue;
            }
            tried += 1;
            let inv = c.eval_e_inverse(theta, tol, 400).map_err(s)?;
            round = round.max(circle_dist(c.eval_e(inv.point, tol).value, theta.to_f64()));
        }
        checks.push(Check::below(format!("d={d}: round trip E(E^-1(theta))"), round, 2.0 * tol));
    }
    Ok(checks)
}

/// True when the `m_{−d}` orbit of `θ` reaches a fixed angle (the angle
/// of a parabolic point).
fn lands_on_fixed_point(d: u64, theta: RationalAngle) -> bool {
    let mut seen = Vec::new();
    let mut x = theta;
    while !seen.contains(&x) {
        if (d + 1) % x.den() == 0 || x.den() == 1 {
            return true;
        }
        seen.push(x);
        x = md_step(d, x);
    }
    false
}

fn packed_group(f: &SigmaMap) -> Result<NecklaceGroup, String> {
    let k = contact_complex(f).map_err(s)?;
    let packed = pack(&k).map_err(s)?;
    packing_to_necklace(&packed).map_err(s)
}

fn group_lamination() -> Outcome {
    let f = worked_example();
    let lam_f = lamination_sigma(&f, 3).map_err(s)?;
    let g = packed_group(&f)?;
    let lam_g = lamination_group(&g, 3);
    let report = compare_laminations(&lam_g, &lam_f, CompareMode::ViaE { d: 3, tol: 1e-5 });
    Ok(vec![
        Check::new("class counts", lam_f.classes.len() == lam_g.classes.len(), [lam_g.classes.len(), lam_f.classes.len()], "equal"),
        Check::new("ViaE match at 1e-5", report.matched, report.witness, "no unmatched class"),
    ])
}

fn antipoly_lamination() -> Outcome {
    let p = AntiPoly::cubic_example();
    let mut checks = Vec::new();
    let lam_p = lamination_antipoly(&p, 3, RationalAngle::zero()).map_err(s)?;
    let lam_f = lamination_sigma(&SigmaMap::cubic_family(-2.0), 3).map_err(s)?;
    let report = compare_laminations(&lam_p, &lam_f, CompareMode::UpToRotation);
    checks.push(Check::new(
        "lambda(p) matches lambda(sigma_f) up to rotation",
        report.matched,
        json!({ "rotation": report.rotation_used.map(|r| r.to_string()), "witness": report.witness }),
        "match",
    ));
    let fixed = p.fixed_points().map_err(s)?;
    checks.push(Check::new("fixed points", fixed.len() == 7, fixed.len(), 7));
    let crit = p.critical_points().map_err(s)?;
    let fixed_crit = crit
        .iter()
        .filter(|c| (p.eval(**c) - **c).norm() < 1e-8 && fixed.iter().any(|z| (z - **c).norm() < 1e-8))
        .count();
    checks.push(Check::new("fixed critical points", fixed_crit == 2, fixed_crit, 2));
    let pairs = co_landing_cycles(&Target::Poly(p)).map_err(s)?;
    checks.push(Check::new("co-landing 2-cycle pairs", pairs.len() == 1, pairs.len(), 1));
    Ok(checks)
}

/// Samples per boundary arc of the quadrilaterals in criteria 7 and 8.
const QUAD_SAMPLES: usize = 400;

fn finite(v: ModulusValue) -> Result<f64, String> {
    v.finite().ok_or_else(|| format!("unexpected degenerate modulus {v:?}"))
}

fn base_point_moduli() -> Outcome {
    let h = 1.0 / 256.0;
    let conv = Convention::default();
    let mut checks = Vec::new();
    for (w, expect) in [(1.0, 1.0), (2.0, 2.0)] {
        let m = finite(modulus(&rectangle(w, 1.0, 128), h, conv).map_err(s)?.value)?;
        checks.push(Check::below(format!("{w}x1 rectangle relative error"), (m - expect).abs() / expect, 0.02));
    }
    let f0 = SigmaMap::f0(3).unwrap();
    let g = base_group(4).map_err(s)?;
    for (j, k) in admissible_pairs(4) {
        let qf = droplet_quad(&f0, j, k, QUAD_SAMPLES).map_err(s)?;
        let qg = group_quad(&g, j, k, QUAD_SAMPLES).map_err(s)?;
        let mf = finite(modulus(&qf, h, conv).map_err(s)?.value)?;
        let mg = finite(modulus(&qg, h, conv).map_err(s)?.value)?;
        let mf_dual = finite(modulus(&qf.swapped(), h, conv).map_err(s)?.value)?;
        let mg_dual = finite(modulus(&qg.swapped(), h, conv).map_err(s)?.value)?;
        checks.push(Check::below(format!("({j},{k}) droplet vs group relative difference"), (mf - mg).abs() / mg, 0.05));
        // (j, k) and its complement are exchanged by the rotation by 2π/(d+1)·(k−j).
        if 2 * (k - j) == 4 {
            checks.push(Check::below(format!("({j},{k}) symmetric droplet modulus |M - 1|"), (mf - 1.0).abs(), 0.03));
            checks.push(Check::below(format!("({j},{k}) symmetric group modulus |M - 1|"), (mg - 1.0).abs(), 0.03));
        }
        for (name, p) in [("droplet", mf * mf_dual), ("group", mg * mg_dual)] {
            checks.push(Check::new(
                format!("({j},{k}) {name} duality product"),
                (0.97..=1.03).contains(&p),
                p,
                json!({ "within": [0.97, 1.03] }),
            ));
        }
    }
    Ok(checks)
}

fn degeneration() -> Outcome {
    let h = 1.0 / 128.0;
    let conv = Convention::default();
    let mut values: Vec<Value> = Vec::new();
    let mut finite_run: Vec<(f64, f64, f64)> = Vec::new();
    let mut degenerate_at = None;
    let mut flag = None;
    for i in 0..=5 {
        let t = 0.4 * i as f64;
        let f = SigmaMap::cubic_family(t);
        let fires = !f.find_double_points().map_err(s)?.is_empty();
        let q = droplet_quad(&f, 1, 3, QUAD_SAMPLES).map_err(s)?;
        let m = modulus(&q, h, conv).map_err(s)?;
        values.push(json!({ "t": t, "value": m.value, "error_estimate": m.error_estimate }));
        if fires && degenerate_at.is_none() {
            degenerate_at = Some(t);
            flag = Some(m.value);
        }
        if degenerate_at.is_none() {
            finite_run.push((t, finite(m.value)?, m.error_estimate));
        }
    }
    let mut ratio: f64 = 0.0;
    for w in finite_run.windows(2) {
        let bound = 5.0 * w[0].2.max(w[1].2);
        ratio = ratio.max((w[1].1 - w[0].1).abs() / bound);
    }
    Ok(vec![
        Check::new(
            "adjacent differences / (5 x grid error)",
            ratio < 1.0,
            json!({ "worst_ratio": ratio, "samples": values }),
            json!({ "below": 1.0 }),
        ),
        Check::new(
            "Infinite flag where double points first appear",
            flag == Some(ModulusValue::Infinite),
            json!({ "t": degenerate_at, "value": flag }),
            "Infinite",
        ),
        Check::new(
            "finite moduli increase towards the degeneration",
            finite_run.windows(2).all(|w| w[1].1 > w[0].1),
            finite_run.iter().map(|r| r.1).collect::<Vec<_>>(),
            "increasing",
        ),
    ])
}

fn packing() -> Outcome {
    let mut checks = Vec::new();
    for n in 4..=8 {
        let r = pack(&ContactComplex::new(n, vec![]).map_err(s)?).map_err(s)?;
        let expect = chain_radius(n);
        let err = r.circles.iter().map(|c| (c.radius - expect).abs()).fold(0.0, f64::max);
        checks.push(Check::below(format!("n={n}: radius error"), err, 1e-6));
        checks.push(Check::below(format!("n={n}: tangency residual"), r.max_tangency_residual, 1e-8));
    }
    let k = contact_complex(&worked_example()).map_err(s)?;
    let r = pack(&k).map_err(s)?;
    checks.push(Check::below("worked example: tangency residual", r.max_tangency_residual, 1e-8));
    let g = packing_to_necklace(&r).map_err(s)?;
    let extra = g.extra_tangencies();
    checks.push(Check::new("worked example: extra tangencies", extra.len() == 1, extra, 1));
    Ok(checks)
}

fn rasters() -> Outcome {
    let mut checks = Vec::new();
    for d in 3..=6 {
        let scene = RenderScene::new(SceneTarget::Group(base_group(d).map_err(s)?), Complex::new(0.0, 0.0), 3.0, 1024);
        let img = render(&scene).map_err(s)?;
        let hd = hausdorff_to_unit_circle(&scene, &img);
        checks.push(Check::new(format!("d={d}: Hausdorff distance to the unit circle (px)"), hd <= 1.0, hd, json!({ "at_most": 1.0 })));
    }
    let scene = RenderScene::new(SceneTarget::SchwarzMap(worked_example()), Complex::new(0.0, 0.0), 4.0, 384);
    let img = render(&scene).map_err(s)?;
    let comps = img.components(|c| matches!(c, PixelClass::Droplet), 4);
    checks.push(Check::new("worked example: droplet components", comps == 2, comps, 2));
    Ok(checks)
}

/// Hausdorff distance in pixels between the limit pixels and `𝕋`.
pub fn hausdorff_to_unit_circle(scene: &RenderScene, img: &mating_lab::rays::render::Image) -> f64 {
    let px = scene.pixel_size();
    let limit = img.pixels_where(|c| matches!(c, PixelClass::Limit));
    if limit.is_empty() {
        return f64::INFINITY;
    }
    let one_way = limit.iter().map(|&(i, j)| (scene.pixel_center(i, j).norm() - 1.0).abs() / px).fold(0.0, f64::max);
    let mut other: f64 = 0.0;
    let (w, h) = scene.resolution;
    let origin = scene.pixel_center(0, 0);
    for k in 0..8192 {
        let z = Complex::from_polar(1.0, TAU * k as f64 / 8192.0);
        let ci = ((z.re - origin.re) / px).round() as i64;
        let cj = ((origin.im - z.im) / px).round() as i64;
        let mut best = f64::INFINITY;
        for di in -4..=4 {
            for dj in -4..=4 {
                let (i, j) = (ci + di, cj + dj);
                if i < 0 || j < 0 || i as usize >= w || j as usize >= h {
                    continue;
                }
                if matches!(img.class(i as usize, j as usize), PixelClass::Limit) {
                    best = best.min((scene.pixel_center(i as usize, j as usize) - z).norm() / px);
                }
            }
        }
        other = other.max(best);
    }
    one_way.max(other)
}
