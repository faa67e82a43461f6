use mating_lab::geom::Complex;
use mating_lab::symbolic::{
    circle_dist, compare_laminations, lamination_from_generators, lamination_sigma, linked, md_step, step_class,
    two_cycle_in, CircleCoding, Class, CompareMode, Lamination, RationalAngle,
};
use mating_lab::sigma::SigmaMap;
use proptest::prelude::*;
use std::f64::consts::TAU;

const TOL: f64 = 1e-8;

fn angle() -> impl Strategy<Value = RationalAngle> {
    (1i128..3000).prop_flat_map(|den| (0..den).prop_map(move |num| RationalAngle::new(num, den)))
}

fn reaches_fixed_angle(d: u64, theta: RationalAngle) -> bool {
    let mut seen = Vec::new();
    let mut x = theta;
    while !seen.contains(&x) {
        if (d + 1) % x.den() == 0 {
            return true;
        }
        seen.push(x);
        x = md_step(d, x);
    }
    false
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn angles_are_normalized(num in -100_000i128..100_000, den in 1i128..100_000) {
        let a = RationalAngle::new(num, den);
        prop_assert!(a.num() < a.den());
        prop_assert_eq!(num_integer::gcd(a.num(), a.den()), 1);
        prop_assert!((a.to_f64() - (num as f64 / den as f64).rem_euclid(1.0)).abs() < 1e-9);
        let parsed: RationalAngle = a.to_string().parse().unwrap();
        prop_assert_eq!(parsed, a);
    }

    #[test]
    fn md_step_matches_floating_point(a in angle(), d in 2u64..7) {
        let exact = md_step(d, a).to_f64();
        prop_assert!(circle_dist(exact, -(d as f64) * a.to_f64()) < 1e-9);
        for p in a.preimages(d) {
            prop_assert_eq!(md_step(d, p), a);
        }
    }

    #[test]
    fn conjugacy_relation(u in 0.0..1.0f64, d in 3usize..6) {
        let c = CircleCoding::new(d);
        let t = Complex::from_polar(1.0, TAU * u);
        let e = c.eval_e(t, TOL).value;
        let (rt, _) = c.step(t);
        let lhs = c.eval_e(rt, TOL).value;
        prop_assert!(circle_dist(lhs, -(d as f64) * e) < 10.0 * TOL);
    }

    #[test]
    fn circular_order(u in 0.0..1.0f64, v in 0.0..1.0f64, d in 3usize..6) {
        let (a, b) = if u < v { (u, v) } else { (v, u) };
        let c = CircleCoding::new(d);
        let ea = c.eval_e(Complex::from_polar(1.0, TAU * a), TOL).value;
        let eb = c.eval_e(Complex::from_polar(1.0, TAU * b), TOL).value;
        prop_assert!(ea <= eb + 2.0 * TOL, "{} -> {}, {} -> {}", a, ea, b, eb);
    }

    #[test]
    fn conjugation_equivariance(u in 0.0..1.0f64, d in 3usize..6) {
        let c = CircleCoding::new(d);
        let t = Complex::from_polar(1.0, TAU * u);
        let sum = c.eval_e(t, TOL).value + c.eval_e(t.conj(), TOL).value;
        prop_assert!(circle_dist(sum, 0.0) < 10.0 * TOL);
    }

    #[test]
    fn inverse_round_trip(a in angle(), d in 3usize..6) {
        prop_assume!(!reaches_fixed_angle(d as u64, a));
        let c = CircleCoding::new(d);
        let p = c.eval_e_inverse(a, TOL, 400).unwrap();
        prop_assert!((p.point.norm() - 1.0).abs() < 1e-12);
        prop_assert!(circle_dist(c.eval_e(p.point, TOL).value, a.to_f64()) < 2.0 * TOL);
    }

    #[test]
    fn pulled_back_laminations_are_planar_and_invariant(d in 3u64..6, picks in proptest::collection::vec((1usize..7, 1usize..7), 1..4)) {
        let mut gens: Vec<Class> = Vec::new();
        for (i, j) in picks {
            let (i, j) = (i.min(d as usize + 1), j.min(d as usize + 1));
            if let Some(c) = two_cycle_in(d, i.min(j), i.max(j)) {
                if gens.iter().all(|g| !linked(g, &c) && g != &c && g.iter().all(|x| !c.contains(x))) {
                    gens.push(c);
                }
            }
        }
        prop_assume!(!gens.is_empty());
        let lam = lamination_from_generators(d, &gens, 2);
        prop_assert!(lam.is_planar());
        prop_assert!(lam.is_invariant());
        for c in &lam.classes {
            prop_assert!(c[0] < c[1]);
        }
    }
}

#[test]
fn e_of_one_is_exactly_zero() {
    for d in 2..8 {
        let v = CircleCoding::new(d).eval_e(Complex::new(1.0, 0.0), TOL);
        assert_eq!(v.exact, Some(RationalAngle::zero()));
        assert_eq!(v.value, 0.0);
    }
}

#[test]
fn worked_example_lamination() {
    let lam = lamination_sigma(&SigmaMap::cubic_family(2.0), 3).unwrap();
    assert!(lam.is_planar() && lam.is_invariant());
    let gens = lam.generators();
    assert_eq!(gens.len(), 1);
    assert_eq!(step_class(3, &gens[0]), gens[0]);
    let json = serde_json::to_string(&lam).unwrap();
    let back: Lamination = serde_json::from_str(&json).unwrap();
    assert!(compare_laminations(&lam, &back, CompareMode::Identity).matched);
}

#[test]
fn empty_laminations() {
    use mating_lab::rays::AntiPoly;
    use mating_lab::symbolic::lamination_antipoly;
    assert!(lamination_sigma(&SigmaMap::f0(3).unwrap(), 3).unwrap().classes.is_empty());
    let p = AntiPoly::power(3).unwrap();
    assert!(lamination_antipoly(&p, 3, RationalAngle::zero()).unwrap().classes.is_empty());
}
