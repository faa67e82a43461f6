use mating_lab::geom::{reflect, Complex};
use mating_lab::group::{base_group, OrbitFate};
use proptest::prelude::*;
use std::f64::consts::TAU;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn reflection_in_a_generator_is_an_involution(d in 3usize..9, s in 0usize..100, r in 0.05..0.95f64, t in 0.0..TAU) {
        let g = base_group(d).unwrap();
        let i = s % d + 1;
        let c = g.circle(i);
        let z = c.center + Complex::from_polar(r * c.radius, t);
        let w = reflect(c, z).unwrap();
        prop_assert!((reflect(c, w).unwrap() - z).norm() < 1e-10);
        // Forced through the same generator, two steps of ρ return z.
        let (first, label) = g.rho_step(z).unwrap();
        if label == i {
            prop_assert!((reflect(c, first.unwrap()).unwrap() - z).norm() < 1e-10);
        }
    }

    #[test]
    fn escape_depth_is_stable(d in 3usize..8, x in -2.0..2.0f64, y in -2.0..2.0f64) {
        let g = base_group(d).unwrap();
        let z = Complex::new(x, y);
        let a = g.classify_orbit(z, 200);
        if !matches!(a, OrbitFate::Undecided { .. }) {
            prop_assert_eq!(g.classify_orbit(z, 2000), a);
        }
    }

    #[test]
    fn off_circle_points_resolve(d in 3usize..8, r in 0.0..2.5f64, t in 0.0..TAU) {
        prop_assume!((r - 1.0).abs() > 1e-3);
        let g = base_group(d).unwrap();
        let fate = g.classify_orbit(Complex::from_polar(r, t), 1000);
        prop_assert!(!matches!(fate, OrbitFate::Undecided { .. }), "{:?}", fate);
    }

    #[test]
    fn words_unwind(d in 3usize..7, word in proptest::collection::vec(0usize..100, 1..=5), r in 1.0..3.0f64, t in 0.0..TAU) {
        let g = base_group(d).unwrap();
        // A point of the outer fundamental region, away from the disks.
        let z = Complex::from_polar(r, t);
        let margin = g.circles().iter().map(|c| (z - c.center).norm() - c.radius).fold(f64::INFINITY, f64::min);
        prop_assume!(margin > 0.05);
        let mut labels: Vec<usize> = Vec::new();
        for s in word {
            let l = s % d + 1;
            if labels.last() != Some(&l) {
                labels.push(l);
            }
        }
        let mut w = z;
        for &l in labels.iter().rev() {
            w = reflect(g.circle(l), w).unwrap();
        }
        let mut steps = 0;
        while let Ok((next, _)) = g.rho_step(w) {
            w = next.unwrap();
            steps += 1;
            prop_assert!(steps <= labels.len());
        }
        prop_assert_eq!(steps, labels.len());
        prop_assert!((w - z).norm() < 1e-8);
    }
}

#[test]
fn unit_circle_stays_undecided() {
    let g = base_group(5).unwrap();
    for k in 0..50 {
        let t = Complex::from_polar(1.0, 0.1 + TAU * k as f64 / 50.0);
        assert!(matches!(g.classify_orbit(t, 1000), OrbitFate::Undecided { .. }));
    }
}
