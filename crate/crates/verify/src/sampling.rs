//! Random inputs for the sampling checks.

use nalgebra::{DMatrix, Matrix3, Vector3};
use rand::Rng;
use steiner_core::{Integrand, ScalarField};

/// Log-uniform magnitude in `[10^lo, 10^hi]`.
pub fn log_uniform(rng: &mut impl Rng, lo: f64, hi: f64) -> f64 {
    10f64.powf(rng.gen_range(lo..hi))
}

/// Random symmetric positive definite `n × n` matrix with condition number up to ~1e4.
pub fn random_spd(rng: &mut impl Rng, n: usize) -> DMatrix<f64> {
    let a = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
    let q = a.qr().q();
    let d = DMatrix::from_diagonal(&nalgebra::DVector::from_fn(n, |_, _| log_uniform(rng, -2.0, 2.0)));
    &q * d * q.transpose()
}

pub fn random_vector(rng: &mut impl Rng, n: usize, scale: f64) -> Vector3<f64> {
    Vector3::from_fn(|i, _| if i < n { rng.gen_range(-1.0..1.0) * scale } else { 0.0 })
}

/// Random vector with a log-uniform magnitude scale in `[10^lo, 10^hi]`.
pub fn random_scaled_vector(rng: &mut impl Rng, n: usize, lo: f64, hi: f64) -> Vector3<f64> {
    let scale = log_uniform(rng, lo, hi);
    random_vector(rng, n, scale)
}

/// Integrand data on a random chart of dimension 2 or 3.
pub fn random_integrand(rng: &mut impl Rng) -> (Integrand, usize) {
    let n = rng.gen_range(2..=3);
    let g = random_spd(rng, n);
    let mut metric = Matrix3::identity();
    for i in 0..n {
        for j in 0..n {
            metric[(i, j)] = g[(i, j)];
        }
    }
    let metric_inv = metric.try_inverse().expect("spd matrix is invertible");
    let integrand = Integrand {
        metric_inv,
        k: 1.0 + log_uniform(rng, -3.0, 1.0),
        w: random_scaled_vector(rng, n, -3.0, 0.5),
        dh: random_scaled_vector(rng, n, -3.0, 0.5),
    };
    (integrand, n)
}

/// Smooth random function: affine part plus a few sine modes.
pub fn random_smooth(rng: &mut impl Rng, dim: usize, amplitude: f64) -> ScalarField {
    let mut terms = vec![ScalarField::Affine {
        offset: rng.gen_range(-1.0..1.0),
        slope: (0..dim).map(|_| rng.gen_range(-1.0..1.0) * amplitude).collect(),
    }];
    for _ in 0..3 {
        terms.push(ScalarField::SinProduct {
            amplitude: rng.gen_range(-1.0..1.0) * amplitude,
            wavenumbers: (0..dim).map(|_| rng.gen_range(0.5..4.0)).collect(),
        });
    }
    ScalarField::Sum { terms }
}
