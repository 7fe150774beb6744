mod common;

use leafscope::group::{
    self, coverage_fraction, dirichlet_domain, fundamental_domain_violations, limit_set_sample,
    word_ball, FuchsianGroupSpec, PingPongDomain,
};
use leafscope::{Complex, DiskAutomorphism};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn pingpong(seed: u64) -> FuchsianGroupSpec {
    common::random_pingpong(&mut ChaCha8Rng::seed_from_u64(seed))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn balls_are_closed_under_inversion(seed in any::<u64>()) {
        let ball = word_ball(&pingpong(seed), 4).unwrap();
        for e in ball.elements() {
            let inv = e.map.inverse();
            let k = ball.find(&inv, 1e-9);
            prop_assert!(k.is_some(), "inverse of {} missing", e.label(ball.spec()));
            prop_assert_eq!(ball.elements()[k.unwrap()].len(), e.len());
        }
    }

    #[test]
    fn cyclic_orbit_moduli(r in 0.05..0.95f64, depth in 1usize..12) {
        let ball = word_ball(&FuchsianGroupSpec::cyclic(r).unwrap(), depth).unwrap();
        prop_assert_eq!(ball.len(), 2 * depth);
        for e in ball.elements() {
            let n = e.len() as f64;
            let expected = (n * r.atanh()).tanh();
            prop_assert!((e.map.origin_image().norm() - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn certified_displacement_survives_deeper_balls(seed in any::<u64>(), t in 0.0..1.0f64) {
        let spec = pingpong(seed);
        let z = common::random_point(&mut ChaCha8Rng::seed_from_u64(seed ^ 0x5a5a), 0.5 * t);
        let shallow = group::displacement(&word_ball(&spec, 3).unwrap(), z).unwrap();
        let deep = group::displacement(&word_ball(&spec, 7).unwrap(), z).unwrap();
        prop_assert!(deep.value <= shallow.value + 1e-12);
        prop_assert!(deep.value >= shallow.lower_bound - 1e-12);
        if shallow.certified {
            prop_assert!((deep.value - shallow.value).abs() < 1e-12);
        }
    }

    #[test]
    fn pingpong_domains_tile_without_overlap(seed in any::<u64>()) {
        let spec = pingpong(seed);
        let ball = word_ball(&spec, 4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed.rotate_left(7));
        let samples: Vec<Complex> = (0..300).map(|_| common::random_point(&mut rng, 0.9)).collect();
        let domain = PingPongDomain::of(&spec).unwrap();
        prop_assert!(fundamental_domain_violations(&ball, &domain, &samples).is_empty());
        // the Dirichlet domain of the ball is a superset of the true one
        let dirichlet = dirichlet_domain(&ball);
        prop_assert!(fundamental_domain_violations(&ball, &dirichlet, &samples).is_empty());
        prop_assert!(coverage_fraction(&ball, &dirichlet, &samples, 1e-9) > 0.999);
    }

    #[test]
    fn limit_samples_rotate_with_the_group(seed in any::<u64>(), t in 0.0..std::f64::consts::TAU) {
        let spec = pingpong(seed);
        let rot = DiskAutomorphism::rotation(t);
        let a = limit_set_sample(&word_ball(&spec, 5).unwrap(), 0.05);
        let b = limit_set_sample(&word_ball(&spec.conjugate_by(&rot), 5).unwrap(), 0.05);
        prop_assert_eq!(a.len(), b.len());
        for s in &a {
            let moved = rot.apply_boundary(s.point);
            let hit = b.iter().any(|u| {
                u.point.angular_distance(&moved) < 1e-6 && (u.modulus - s.modulus).abs() < 1e-6
            });
            prop_assert!(hit, "no rotated partner for angle {}", s.point.angle());
        }
    }

    /// For a general `φ` the radial projections of `φγφ⁻¹(0)` and `φγ(0)`
    /// differ by about `(1 − |γ(0)|)·e^{d(0, φ(0))}`, so only orbit points
    /// within `1e−8` of the circle are compared.
    #[test]
    fn deep_limit_samples_follow_any_conjugation(
        r in 0.5..0.95f64,
        p in (0.0..0.5f64, 0.0..std::f64::consts::TAU),
        t in 0.0..std::f64::consts::TAU,
    ) {
        let phi = DiskAutomorphism::translation(Complex::from_polar(p.0, p.1))
            .unwrap()
            .compose(&DiskAutomorphism::rotation(t));
        let spec = FuchsianGroupSpec::cyclic(r).unwrap();
        let a = limit_set_sample(&word_ball(&spec, 20).unwrap(), 1e-8);
        let b = limit_set_sample(&word_ball(&spec.conjugate_by(&phi), 20).unwrap(), 1e-8);
        prop_assert!(!a.is_empty() && !b.is_empty());
        for u in &b {
            let near = a
                .iter()
                .map(|s| phi.apply_boundary(s.point).angular_distance(&u.point))
                .fold(f64::INFINITY, f64::min);
            prop_assert!(near < 1e-6, "angular error {near}");
        }
    }
}
