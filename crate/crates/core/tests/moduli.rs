use mating_lab::group::base_group;
use mating_lab::moduli::{droplet_quad, group_quad, modulus, rectangle, Convention, ModulusValue, Quadrilateral};
use mating_lab::sigma::SigmaMap;
use mating_lab::geom::Complex;

const C: Convention = Convention::BetweenASides;

fn value(q: &Quadrilateral, h: f64) -> (f64, f64) {
    let m = modulus(q, h, C).unwrap();
    (m.value.finite().unwrap(), m.error_estimate)
}

/// A convex quadrilateral that is not symmetric.
fn trapezoid() -> Quadrilateral {
    let corners = [Complex::new(0.0, 0.0), Complex::new(2.0, 0.0), Complex::new(1.5, 1.0), Complex::new(0.3, 1.2)];
    let mut boundary = Vec::new();
    let mut marks = [0; 4];
    for s in 0..4 {
        marks[s] = boundary.len();
        let (a, b) = (corners[s], corners[(s + 1) % 4]);
        for t in 0..50 {
            boundary.push(a + (b - a) * (t as f64 / 50.0));
        }
    }
    boundary.push(boundary[0]);
    Quadrilateral::new(boundary, marks).unwrap()
}

#[test]
fn rectangles_are_exact() {
    for (w, ht) in [(1.0, 1.0), (2.0, 1.0), (1.0, 3.0)] {
        let q = rectangle(w, ht, 64);
        let (m, _) = value(&q, 1.0 / 256.0);
        assert!((m - w / ht).abs() / (w / ht) < 0.02, "{w}x{ht}: {m}");
    }
    // The finer check also solves at h/2, so it stays on the unit square.
    let (m, _) = value(&rectangle(1.0, 1.0, 64), 1.0 / 512.0);
    assert!((m - 1.0).abs() < 0.01, "{m}");
}

#[test]
fn reciprocal_duality() {
    let quads = vec![
        rectangle(2.0, 1.0, 40),
        trapezoid(),
        droplet_quad(&SigmaMap::f0(3).unwrap(), 1, 3, 200).unwrap(),
        droplet_quad(&SigmaMap::cubic_family(1.2), 1, 3, 200).unwrap(),
        group_quad(&base_group(5).unwrap(), 2, 4, 200).unwrap(),
    ];
    for q in &quads {
        let (a, _) = value(q, 1.0 / 64.0);
        let (b, _) = value(&q.swapped(), 1.0 / 64.0);
        assert!((a * b - 1.0).abs() < 0.03, "{a} * {b}");
        let r = modulus(q, 1.0 / 64.0, Convention::BetweenBSides).unwrap().value.finite().unwrap();
        assert!((r * a - 1.0).abs() < 1e-12);
    }
}

#[test]
fn grid_convergence() {
    // Straight-sided quadrilaterals can hit lucky cancellations on coarse grids,
    // so this uses curved ones.
    let quads = vec![
        droplet_quad(&SigmaMap::cubic_family(1.2), 1, 3, 200).unwrap(),
        group_quad(&base_group(4).unwrap(), 1, 3, 200).unwrap(),
    ];
    for q in &quads {
        let errs: Vec<f64> = [1.0 / 32.0, 1.0 / 64.0, 1.0 / 128.0].iter().map(|&h| value(q, h).1).collect();
        assert!(errs[1] < errs[0] && errs[2] < errs[1], "{errs:?}");
    }
}

#[test]
fn symmetric_base_points() {
    let (m, _) = value(&droplet_quad(&SigmaMap::f0(3).unwrap(), 1, 3, 300).unwrap(), 1.0 / 128.0);
    assert!((m - 1.0).abs() < 0.03, "{m}");
    let (m, _) = value(&group_quad(&base_group(4).unwrap(), 1, 3, 300).unwrap(), 1.0 / 128.0);
    assert!((m - 1.0).abs() < 0.03, "{m}");
}

#[test]
fn small_parameter_steps_move_the_modulus_little() {
    let q0 = droplet_quad(&SigmaMap::cubic_family(1.0), 1, 3, 300).unwrap();
    let q1 = droplet_quad(&SigmaMap::cubic_family(1.005), 1, 3, 300).unwrap();
    let (a, ea) = value(&q0, 1.0 / 128.0);
    let (b, eb) = value(&q1, 1.0 / 128.0);
    assert!((a - b).abs() < 5.0 * ea.max(eb), "{a} {b} {ea} {eb}");
    assert!(b > a);
}

#[test]
fn touching_sides_are_flagged() {
    let q = droplet_quad(&SigmaMap::cubic_family(2.0), 1, 3, 300).unwrap();
    assert_eq!(modulus(&q, 1.0 / 64.0, C).unwrap().value, ModulusValue::Infinite);
    assert_eq!(modulus(&q, 1.0 / 64.0, Convention::BetweenBSides).unwrap().value, ModulusValue::Zero);
    assert_eq!(modulus(&q.swapped(), 1.0 / 64.0, C).unwrap().value, ModulusValue::Zero);
}

#[test]
fn validation_and_json() {
    let q = rectangle(1.0, 1.0, 20);
    let json = serde_json::to_string(&q).unwrap();
    let back: Quadrilateral = serde_json::from_str(&json).unwrap();
    assert_eq!(back.marks(), q.marks());
    assert!(back.boundary().iter().zip(q.boundary()).all(|(a, b)| (a - b).norm() < 1e-15));
    assert!(serde_json::from_str::<Quadrilateral>(r#"{"boundary":[[0,0],[1,0],[1,1],[0,0]],"marks":[0,1,2,3]}"#).is_err());
    assert!(modulus(&q, 0.5, C).is_err());
    let mut open = q.boundary().to_vec();
    open.pop();
    open.push(Complex::new(0.5, 0.5));
    assert!(Quadrilateral::new(open, q.marks()).is_err());
    assert!(droplet_quad(&SigmaMap::f0(3).unwrap(), 1, 2, 100).is_err());
}
