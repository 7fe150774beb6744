mod common;

use std::f64::consts::TAU;

use leafscope::constructor::{coverage_check, next_generator, BoundaryArcSet};
use leafscope::group::FuchsianGroupSpec;
use leafscope::{BoundaryPoint, Classification, Complex};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn arc_set() -> impl Strategy<Value = BoundaryArcSet> {
    prop::collection::vec((0.0..TAU, 0.0..2.0f64), 0..6).prop_map(|raw| {
        BoundaryArcSet::from_intervals(
            raw.into_iter()
                .map(|(s, l)| (s, (s + l).min(TAU)))
                .collect(),
        )
    })
}

fn well_formed(e: &BoundaryArcSet) -> bool {
    let iv = e.intervals();
    iv.iter().all(|&(s, t)| 0.0 <= s && s < t && t <= TAU) && iv.windows(2).all(|w| w[0].1 < w[1].0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn arc_set_measure_identities(a in arc_set(), b in arc_set()) {
        let (u, i) = (a.union(&b), a.intersection(&b));
        for e in [&u, &i, &a.complement(), &a.subtract(&b)] {
            prop_assert!(well_formed(e), "{:?}", e.intervals());
        }
        prop_assert!((u.measure() + i.measure() - a.measure() - b.measure()).abs() < 1e-12);
        prop_assert!((a.complement().measure() + a.measure() - TAU).abs() < 1e-12);
        prop_assert!((a.subtract(&b).measure() + i.measure() - a.measure()).abs() < 1e-12);
    }

    #[test]
    fn membership_is_consistent(a in arc_set(), b in arc_set(), x in 0.0..TAU) {
        let inside = |e: &BoundaryArcSet| e.intervals().iter().any(|&(s, t)| s < x && x < t);
        // open interiors only, so shared endpoints do not matter
        if inside(&a) || inside(&b) {
            prop_assert!(a.union(&b).contains(x));
        }
        if inside(&a) && inside(&b) {
            prop_assert!(a.intersection(&b).contains(x));
        }
        if inside(&a) {
            prop_assert!(!a.complement().intervals().iter().any(|&(s, t)| s < x && x < t));
        }
    }

    #[test]
    fn leading_measure_takes_what_is_asked(a in arc_set(), x in 0.0..TAU, amount in 0.0..7.0f64) {
        let lead = a.leading_measure(x, amount);
        prop_assert!((lead.measure() - amount.min(a.measure())).abs() < 1e-12);
        prop_assert!((lead.subtract(&a).measure()).abs() < 1e-12);
    }

    #[test]
    fn new_generators_are_hyperbolic(angle in 0.0..TAU, eps in 0.01..0.3f64, base_r in 0.3..0.95f64) {
        for spec in [FuchsianGroupSpec::trivial(), FuchsianGroupSpec::cyclic(0.8).unwrap()] {
            match next_generator(&spec, BoundaryPoint::new(angle), eps, base_r, "g") {
                Ok(g) => {
                    prop_assert_eq!(g.map.classify(), Classification::Hyperbolic);
                    let (p, m) = g.strip.unwrap();
                    for h in [p, m] {
                        let d = h.euclidean_disk().unwrap();
                        let room = eps - (d.center - BoundaryPoint::new(angle).to_complex()).norm();
                        prop_assert!(d.radius <= room + 1e-12);
                    }
                }
                // only a collision with the existing ping-pong arcs may refuse
                Err(e) => prop_assert!(!spec.is_trivial(), "{e}"),
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn coverage_grows_with_depth(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let spec = common::random_pingpong(&mut rng);
        let samples: Vec<Complex> = (0..400).map(|_| common::random_point(&mut rng, 0.99)).collect();
        let fractions: Vec<f64> = (1..=6).map(|l| coverage_check(&spec, l, &samples).unwrap()).collect();
        for w in fractions.windows(2) {
            prop_assert!(w[1] >= w[0], "{fractions:?}");
        }
    }
}
