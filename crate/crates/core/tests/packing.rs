use mating_lab::packing::{contact_complex, pack, pack_with_history, packing_to_necklace, ContactComplex};
use mating_lab::sigma::SigmaMap;
use mating_lab::symbolic::{compare_laminations, lamination_group, lamination_sigma, CompareMode};
use proptest::prelude::*;

fn crosses(a: (usize, usize), b: (usize, usize)) -> bool {
    (a.0 < b.0 && b.0 < a.1 && a.1 < b.1) || (b.0 < a.0 && a.0 < b.1 && b.1 < a.1)
}

/// Random non-crossing chords of an `n`-gon.
fn outerplanar() -> impl Strategy<Value = (usize, Vec<(usize, usize)>)> {
    (4usize..11).prop_flat_map(|n| {
        proptest::collection::vec((1..=n, 1..=n), 0..6).prop_map(move |raw| {
            let mut chords: Vec<(usize, usize)> = Vec::new();
            for (a, b) in raw {
                let (i, j) = (a.min(b), a.max(b));
                if j < i + 2 || (i == 1 && j == n) || chords.contains(&(i, j)) {
                    continue;
                }
                if chords.iter().all(|&c| !crosses(c, (i, j))) {
                    chords.push((i, j));
                }
            }
            (n, chords)
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn packings_are_tangent_and_monotone((n, chords) in outerplanar()) {
        let k = ContactComplex::new(n, chords.clone()).unwrap();
        let (r, history) = pack_with_history(&k).unwrap();
        for w in history.windows(2) {
            prop_assert!(w[1] <= w[0] + 1e-12, "{:?}", history);
        }
        prop_assert!(r.max_tangency_residual < 1e-8, "{}", r.max_tangency_residual);
        let g = packing_to_necklace(&r).unwrap();
        let mut extra = g.extra_tangencies();
        extra.sort_unstable();
        let mut want = chords;
        want.sort_unstable();
        prop_assert_eq!(extra, want);
    }
}

#[test]
fn combinatorial_round_trip() {
    for f in [SigmaMap::cubic_family(2.0), SigmaMap::cubic_family(-2.0), SigmaMap::f0(3).unwrap()] {
        let g = packing_to_necklace(&pack(&contact_complex(&f).unwrap()).unwrap()).unwrap();
        let a = lamination_group(&g, 0);
        let b = lamination_sigma(&f, 0).unwrap();
        let r = compare_laminations(&a, &b, CompareMode::Identity);
        assert!(r.matched, "{:?}", r.witness);
    }
}

#[test]
fn worked_example_complex() {
    let k = contact_complex(&SigmaMap::cubic_family(2.0)).unwrap();
    assert_eq!(k.n(), 4);
    assert_eq!(k.chords(), &[(2, 4)]);
    let json = serde_json::to_string(&k).unwrap();
    assert_eq!(json, r#"{"n":4,"chords":[[2,4]]}"#);
    assert!(serde_json::from_str::<ContactComplex>(r#"{"n":4,"chords":[[1,3],[2,4]]}"#).is_err());
}
