use mating_lab::geom::{circle_relation, orthogonal_chord_circle, reflect, Circle, CircleRelation, Complex};
use proptest::prelude::*;
use std::f64::consts::TAU;

fn circle() -> impl Strategy<Value = Circle> {
    (-5.0..5.0f64, -5.0..5.0f64, 0.05..4.0f64).prop_map(|(x, y, r)| Circle::new(Complex::new(x, y), r).unwrap())
}

proptest! {
    #[test]
    fn reflection_is_an_involution(c in circle(), x in -20.0..20.0f64, y in -20.0..20.0f64) {
        let z = Complex::new(x, y);
        prop_assume!((z - c.center).norm() > 1e-3);
        let w = reflect(&c, z).unwrap();
        prop_assume!((w - c.center).norm() > 1e-12);
        let back = reflect(&c, w).unwrap();
        prop_assert!((back - z).norm() < 1e-10 * (1.0 + z.norm()));
    }

    #[test]
    fn reflection_fixes_the_circle(c in circle(), t in 0.0..TAU) {
        let z = c.center + Complex::from_polar(c.radius, t);
        prop_assert!((reflect(&c, z).unwrap() - z).norm() < 1e-12 * (1.0 + z.norm()));
    }

    #[test]
    fn relation_is_symmetric(a in circle(), b in circle()) {
        let ab = circle_relation(&a, &b, 1e-9);
        let ba = circle_relation(&b, &a, 1e-9);
        match (ab, ba) {
            (CircleRelation::ExternallyTangent(p), CircleRelation::ExternallyTangent(q)) => {
                prop_assert!((p - q).norm() < 1e-9)
            }
            _ => prop_assert_eq!(ab, ba),
        }
    }

    #[test]
    fn chord_circle_meets_unit_circle_at_the_endpoints(t1 in 0.0..TAU, gap in 0.05..3.0f64) {
        let t2 = t1 + gap;
        let c = orthogonal_chord_circle(t1, t2).unwrap();
        for t in [t1, t2] {
            let p = Complex::from_polar(1.0, t);
            prop_assert!(((p - c.center).norm() - c.radius).abs() < 1e-10);
        }
        // Orthogonality: |c|² = 1 + r².
        prop_assert!((c.center.norm_sqr() - 1.0 - c.radius * c.radius).abs() < 1e-9 * c.center.norm_sqr());
    }
}

#[test]
fn tangent_circles_report_the_contact_point() {
    let a = Circle::new(Complex::new(0.0, 0.0), 1.0).unwrap();
    let b = Circle::new(Complex::new(3.0, 0.0), 2.0).unwrap();
    assert_eq!(circle_relation(&a, &b, 1e-12), CircleRelation::ExternallyTangent(Complex::new(1.0, 0.0)));
}
