use mating_lab::geom::Complex;
use mating_lab::rays::{landing, potential, trace_orbit, trace_ray, AntiPoly, RayParams, Target};
use mating_lab::sigma::SigmaMap;
use mating_lab::symbolic::{md_step, periodic_cycles, RationalAngle};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::{PI, TAU};

fn r(n: i128, d: i128) -> RationalAngle {
    RationalAngle::new(n, d)
}

/// Sample `k` of the ray of `θ` maps onto sample `k − s` of the ray of
/// `m_{−d}(θ)`, both rays seeded at the same potential.
fn check_functional_equation(target: &Target, theta: RationalAngle) {
    let params = RayParams::default();
    let d = target.degree() as u64;
    let a = trace_ray(target, theta, &params).unwrap();
    let b = trace_ray(target, md_step(d, theta), &params).unwrap();
    let s = params.steps_per_halving;
    let n = a.samples.len().min(b.samples.len() + s);
    assert!(n > 4 * s, "ray too short");
    for k in s..n {
        let img = target.apply(a.samples[k].point).unwrap();
        let want = b.samples[k - s];
        assert!((want.potential - target.degree() as f64 * a.samples[k].potential).abs() <= 1e-9 * want.potential);
        assert!((img - want.point).norm() < 1e-8, "{theta} level {k}: {}", (img - want.point).norm());
    }
}

#[test]
fn functional_equation_along_rays() {
    let f = Target::Sigma(SigmaMap::f0(3).unwrap());
    for theta in [r(0, 1), r(1, 8), r(1, 5), r(7, 24)] {
        check_functional_equation(&f, theta);
    }
    check_functional_equation(&Target::Sigma(SigmaMap::cubic_family(2.0)), r(1, 8));
    check_functional_equation(&Target::Poly(AntiPoly::cubic_example()), r(3, 8));
}

#[test]
fn potential_homogeneity() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for target in [Target::Sigma(SigmaMap::f0(3).unwrap()), Target::Poly(AntiPoly::cubic_example())] {
        let d = target.degree() as f64;
        let mut tested = 0;
        while tested < 1000 {
            let z = Complex::from_polar(rng.gen_range(1.5..6.0), rng.gen_range(0.0..TAU));
            let g = potential(&target, z, 200);
            if g <= 0.0 {
                continue;
            }
            let gz = potential(&target, target.apply(z).unwrap(), 200);
            assert!((gz - d * g).abs() < 1e-6 * d * g, "{z}: {gz} vs {}", d * g);
            tested += 1;
        }
    }
}

#[test]
fn exact_bottcher_examples() {
    let p = Target::Poly(AntiPoly::power(3).unwrap());
    assert!((potential(&p, Complex::new(2.0, 0.0), 100) - 2f64.ln()).abs() < 1e-12);
    let ray = trace_ray(&p, r(1, 8), &RayParams::default()).unwrap();
    for s in &ray.samples {
        assert!((s.point.arg() - PI / 4.0).abs() < 1e-8);
    }
    let land = landing(&trace_ray(&p, r(0, 1), &RayParams::default()).unwrap()).unwrap();
    assert!((land.point - Complex::new(1.0, 0.0)).norm() < 1e-6);
    let f = Target::Sigma(SigmaMap::f0(3).unwrap());
    let inside = potential(&f, Complex::new(0.0, 0.0), 50);
    assert_eq!(inside, 0.0);
}

#[test]
fn two_cycles_co_land_exactly_at_double_points() {
    for f in [SigmaMap::cubic_family(2.0), SigmaMap::cubic_family(-2.0), SigmaMap::f0(3).unwrap()] {
        let doubles = f.find_double_points().unwrap();
        let target = Target::Sigma(f);
        let mut co_landing = 0;
        for cycle in periodic_cycles(3, 2).into_iter().filter(|c| c.len() == 2) {
            let rays = trace_orbit(&target, cycle[0], &RayParams::default()).unwrap();
            let a = landing(&rays[0]).unwrap().point;
            let b = landing(&rays[1]).unwrap().point;
            let together = (a - b).norm() < 1e-3;
            let at_double = doubles.points.iter().any(|p| (p.zeta - a).norm() < 1e-3);
            assert_eq!(together, at_double, "cycle {:?}", cycle);
            co_landing += together as usize;
        }
        assert_eq!(co_landing, doubles.len());
    }
}

#[test]
fn antipoly_fixed_points() {
    let p = AntiPoly::power(2).unwrap();
    let fixed = p.fixed_points().unwrap();
    assert_eq!(fixed.len(), 4);
    for z in [
        Complex::new(0.0, 0.0),
        Complex::new(1.0, 0.0),
        Complex::from_polar(1.0, TAU / 3.0),
        Complex::from_polar(1.0, -TAU / 3.0),
    ] {
        assert!(fixed.iter().any(|w| (w - z).norm() < 1e-8));
    }
    let p = AntiPoly::cubic_example();
    let fixed = p.fixed_points().unwrap();
    assert_eq!(fixed.len(), 7);
    // Critical points c with c̄² = i/2 are fixed.
    for k in [0.0, PI] {
        let c = Complex::from_polar(0.5f64.sqrt(), PI / 4.0 + k).conj();
        assert!((p.eval(c) - c).norm() < 1e-12);
        assert!(fixed.iter().any(|w| (w - c).norm() < 1e-8));
    }
}
