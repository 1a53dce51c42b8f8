use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use steiner_core::{domain_volume, Chart, FieldProvider, Region, ScalarField, SpaceBackend};

#[test]
fn complex_patch_volume_matches_monte_carlo() {
    let (lower, upper) = ([0.4, 0.4, 0.0], [1.2, 1.1, 0.8]);
    let h = 0.07;
    let chart = Chart::build(
        &SpaceBackend::ComplexHyperbolic2,
        &Region::new(lower.to_vec(), upper.to_vec(), vec![12, 12, 12]),
        &ScalarField::constant(h),
    )
    .unwrap();
    let volume = domain_volume(&chart).unwrap();

    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let samples = 200_000;
    let box_volume: f64 = (0..3).map(|i| upper[i] - lower[i]).product();
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for _ in 0..samples {
        let x: Vec<f64> = (0..3).map(|i| rng.gen_range(lower[i]..upper[i])).collect();
        // ambient volume of the slab {(x, s) : |s| ≤ h} over one orbit-space point
        let f = SpaceBackend::ComplexHyperbolic2.sample(&x).unwrap();
        let value = 2.0 * h * f.k * f.metric.det().sqrt() * box_volume;
        sum += value;
        sum_sq += value * value;
    }
    let mean = sum / samples as f64;
    let std_err = ((sum_sq / samples as f64 - mean * mean) / samples as f64).sqrt();
    assert!(3.0 * std_err < 1e-2 * mean, "Monte-Carlo error {std_err} too large");
    assert!((volume - mean).abs() < 1e-2 * mean, "quadrature {volume}, Monte-Carlo {mean} ± {std_err}");
}
