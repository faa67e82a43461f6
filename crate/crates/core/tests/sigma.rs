use mating_lab::geom::Complex;
use mating_lab::sigma::{Membership, SigmaMap};
use proptest::prelude::*;
use std::f64::consts::TAU;

fn maps() -> Vec<SigmaMap> {
    vec![
        SigmaMap::f0(2).unwrap(),
        SigmaMap::f0(3).unwrap(),
        SigmaMap::f0(5).unwrap(),
        SigmaMap::cubic_family(2.0),
        SigmaMap::cubic_family(-2.0),
        SigmaMap::cubic_family(1.0),
    ]
}

#[test]
fn schwarz_identity_on_a_grid() {
    for f in maps() {
        let mut worst: f64 = 0.0;
        for i in 0..40 {
            for k in 0..25 {
                let w = Complex::from_polar(1.05 + 0.1 * k as f64, TAU * i as f64 / 40.0);
                let z = f.eval(w).unwrap();
                let expect = f.eval(w.conj().inv()).unwrap();
                worst = worst.max((f.schwarz(z).unwrap() - expect).norm() / (1.0 + expect.norm()));
            }
        }
        assert!(worst < 1e-9, "{worst}");
    }
}

#[test]
fn cusps_and_decomposition() {
    for f in maps() {
        let d = f.degree();
        let cusps = f.find_cusps().unwrap();
        assert_eq!(cusps.len(), d + 1);
        let args: Vec<f64> = cusps.xi.iter().map(|z| mating_lab::sigma::positive_arg(*z)).collect();
        let rises = (0..=d).filter(|&i| args[(i + 1) % (d + 1)] > args[i]).count();
        assert_eq!(rises, d, "cusp arguments must increase cyclically: {args:?}");
        let doubles = f.find_double_points().unwrap();
        let dec = f.droplet_decomposition().unwrap();
        assert_eq!(dec.components.len(), doubles.len() + 1);
        let tree = f.angled_tree().unwrap();
        assert_eq!(tree.total_degree(), d);
        tree.check().unwrap();
    }
}

#[test]
fn worked_example_has_two_triangles() {
    let dec = SigmaMap::cubic_family(2.0).droplet_decomposition().unwrap();
    assert_eq!(dec.components.len(), 2);
    for c in &dec.components {
        assert_eq!(c.j, 0);
        assert_eq!(c.boundary.len(), 3);
    }
}

#[test]
fn membership_examples() {
    let f = SigmaMap::f0(3).unwrap();
    assert_eq!(f.membership_exterior(Complex::new(10.0, 0.0), 1e-9), Membership::Exterior);
    assert_eq!(f.membership_exterior(Complex::new(0.0, 0.0), 1e-9), Membership::Droplet);
    assert!(matches!(f.membership_exterior(f.boundary_point(0.3), 1e-6), Membership::Boundary(_)));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn expansion_law(r in 1.1..3.0f64, t in 0.0..TAU, which in 0usize..6) {
        let f = &maps()[which];
        let w = Complex::from_polar(r, t);
        let fd = f.dbar_schwarz_fd(w, 1e-5).unwrap();
        let expect = r.powi(f.degree() as i32 - 1);
        prop_assert!((fd - expect).abs() / expect < 1e-5, "{} vs {}", fd, expect);
    }

    #[test]
    fn inversion_round_trip(r in 2.0..10.0f64, t in 0.0..TAU) {
        let f = SigmaMap::f0(3).unwrap();
        let w = Complex::from_polar(r, t);
        let z = f.invert_exterior(f.eval(w).unwrap(), None).unwrap();
        prop_assert!((z - w).norm() < 1e-10 * r);
    }

    #[test]
    fn boundary_is_fixed(t in 0.0..TAU) {
        let f = SigmaMap::cubic_family(1.0);
        let w = f.boundary_point(t);
        let s = f.schwarz(w).unwrap();
        prop_assert!((s - w).norm() < 1e-9);
    }
}
