use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::FRAC_PI_2;
use steiner_core::{FieldProvider, RadialCoord, SpaceBackend};

const CH2: SpaceBackend = SpaceBackend::ComplexHyperbolic2;

#[test]
fn killing_norm_is_at_least_one() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let backends = [CH2, SpaceBackend::RealHyperbolic { dim: 3 }];
    for i in 0..10_000 {
        let b = backends[i % 2];
        let p = RadialCoord::new(rng.gen_range(0.0..4.0), rng.gen_range(0.0..FRAC_PI_2));
        let k = b.killing_norm(p).unwrap();
        assert!(k >= 1.0, "{b:?} at {p:?}: k = {k}");
        if p.t > 1e-6 {
            assert!(k > 1.0);
        }
    }
    assert_eq!(CH2.killing_norm(RadialCoord::new(0.0, 0.3)).unwrap(), 1.0);
}

#[test]
fn killing_norm_is_radially_convex() {
    let h = 1e-2;
    for b in [CH2, SpaceBackend::RealHyperbolic { dim: 4 }] {
        for j in 0..=16 {
            let theta = j as f64 * FRAC_PI_2 / 16.0;
            let k = |t: f64| b.killing_norm(RadialCoord::new(t, theta)).unwrap();
            for i in 1..300 {
                let t = i as f64 * h;
                assert!(k(t + h) - 2.0 * k(t) + k(t - h) >= -1e-12, "{b:?} theta={theta} t={t}");
            }
        }
    }
}

#[test]
fn hor_w_decays_monotonically_far_from_the_axis() {
    for j in 1..16 {
        let theta = j as f64 * FRAC_PI_2 / 16.0;
        let norm = |t: f64| CH2.hor_w(RadialCoord::new(t, theta)).unwrap().norm();
        let mut prev = norm(2.0);
        for i in 1..400 {
            let next = norm(2.0 + i as f64 * 0.02);
            assert!(next <= prev, "theta={theta}");
            prev = next;
        }
        assert!(prev < 1e-2);
    }
}

proptest! {
    #[test]
    fn area_factor_expressions_agree(t in 0.0f64..3.0, theta in 0.0f64..FRAC_PI_2) {
        let p = RadialCoord::new(t, theta);
        let k = CH2.killing_norm(p).unwrap();
        let direct = (1.0 + k * k * CH2.hor_w(p).unwrap().norm().powi(2)).sqrt();
        let ratio = k / CH2.normal_inner(p).unwrap();
        prop_assert!((direct - ratio).abs() <= 1e-12 * ratio);
    }

    #[test]
    fn hor_w_is_horizontal(t in 0.05f64..3.0, theta in 0.05f64..1.5, phi in 0.0f64..6.0) {
        let f = CH2.sample(&[t, theta, phi]).unwrap();
        prop_assert_eq!(f.w[0], 0.0);
        prop_assert_eq!(f.w[1], 0.0);
    }

    #[test]
    fn frame_reflection_flips_second_component(t in 0.0f64..3.0, theta in 0.0f64..FRAC_PI_2) {
        let a = CH2.hor_w(RadialCoord::new(t, theta)).unwrap();
        let b = CH2.hor_w(RadialCoord::new(t, -theta)).unwrap();
        prop_assert_eq!(a.x1, b.x1);
        prop_assert_eq!(a.x2, -b.x2);
    }

    #[test]
    fn orbit_metric_is_positive_definite(t in 0.01f64..3.0, theta in 0.01f64..3.13) {
        let g = CH2.orbit_metric(RadialCoord::new(t, theta)).unwrap();
        prop_assert!(g.is_positive_definite());
        prop_assert_eq!(g.get(0, 0), 1.0);
    }
}
