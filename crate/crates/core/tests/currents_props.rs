use std::f64::consts::TAU;

use leafscope::currents::{
    angle_grid, annulus_cover, derivative_bound_profile, mass_curve, nevanlinna_mass,
    AnalyticMapSpec,
};
use leafscope::Complex;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn polynomial() -> impl Strategy<Value = AnalyticMapSpec> {
    prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 1..5).prop_map(|c| {
        AnalyticMapSpec::polynomial(c.into_iter().map(|(x, y)| Complex::new(x, y)).collect())
            .unwrap()
    })
}

fn cover() -> impl Strategy<Value = AnalyticMapSpec> {
    (0.05..1.0f64, 1.2..20.0f64).prop_map(|(a, k)| annulus_cover(a, a * k).unwrap())
}

fn disk_points(seed: u64, count: usize, radius: f64) -> Vec<Complex> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| Complex::from_polar(radius * rng.gen::<f64>().sqrt(), rng.gen_range(0.0..TAU)))
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn mass_grows_with_the_radius(f in prop_oneof![polynomial(), cover()]) {
        let curve = mass_curve(&f, &[0.2, 0.5, 0.8, 0.95, 0.99], 1e-6).unwrap();
        prop_assert!(curve.is_nondecreasing(), "{:?}", curve.masses);
    }

    #[test]
    fn refining_the_quadrature_barely_moves_the_mass(
        f in prop_oneof![polynomial(), cover()],
        r in 0.1..0.99f64,
    ) {
        let m = nevanlinna_mass(&f, r, 1e-6).unwrap();
        prop_assert!(m.relative_change < 5e-3, "{m:?}");
    }

    #[test]
    fn derivatives_agree_with_differences(f in prop_oneof![polynomial(), cover()], seed in any::<u64>()) {
        let err = f.derivative_check(&disk_points(seed, 100, 0.95), 1e-6);
        prop_assert!(err < 1e-6, "relative error {err}");
    }

    #[test]
    fn cover_lands_in_the_annulus(a in 0.05..1.0f64, k in 1.2..20.0f64, seed in any::<u64>()) {
        let f = annulus_cover(a, a * k).unwrap();
        for z in disk_points(seed, 10_000, 1.0 - 1e-9) {
            let w = f.eval(z).norm();
            prop_assert!(a < w && w < a * k, "|f({z})| = {w}");
        }
    }

    /// The deck translation length is `π²/log(b/a)`; for thin annuli its
    /// images round onto the circle, so those are left out.
    #[test]
    fn cover_is_deck_invariant(a in 0.05..1.0f64, k in 4.0..50.0f64, seed in any::<u64>()) {
        let f = annulus_cover(a, a * k).unwrap();
        let mu = f.deck_generator().unwrap();
        let mut checked = 0;
        for z in disk_points(seed, 200, 0.9) {
            for g in [mu, mu.inverse()] {
                let gz = g.apply(z);
                if gz.norm() > 1.0 - 1e-6 {
                    continue;
                }
                let (w0, w1) = (f.eval(z), f.eval(gz));
                prop_assert!((w0 - w1).norm() < 1e-9 * w0.norm().max(1.0), "{w0} vs {w1}");
                checked += 1;
            }
        }
        prop_assert!(checked > 0);
    }

    #[test]
    fn profiles_scale_linearly(f in prop_oneof![polynomial(), cover()], c in (0.1..5.0f64, 0.0..TAU)) {
        let c = Complex::from_polar(c.0, c.1);
        let s: Vec<f64> = (0..50).map(|k| k as f64 / 50.0).collect();
        let t = angle_grid(64);
        let p0 = derivative_bound_profile(&f, &s, &t, None).unwrap();
        let p1 = derivative_bound_profile(&f.clone().scaled(c), &s, &t, None).unwrap();
        prop_assert!((p1.c0 - c.norm() * p0.c0).abs() <= 1e-12 * p1.c0.max(1.0));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    /// `max (1 − s)|f′|` over ever finer grids forms a Cauchy sequence.
    #[test]
    fn cover_derivative_bound_stabilizes(f in cover()) {
        let c0 = |n: usize| {
            let s: Vec<f64> = (0..n).map(|k| 0.9999 * k as f64 / (n - 1) as f64).collect();
            derivative_bound_profile(&f, &s, &angle_grid(4 * n), None).unwrap().c0
        };
        let seq: Vec<f64> = [50, 100, 200, 400, 800].iter().map(|&n| c0(n)).collect();
        let last = (seq[4] - seq[3]).abs() / seq[4];
        prop_assert!(last < 1e-3, "{seq:?}");
    }
}
