use proptest::prelude::*;
use steiner_core::functional::AreaFunctional;
use steiner_core::{
    domain_volume, symmetrize, Chart, EuclideanChart, NodalFunction, OneForm, Region, ScalarField, SolveConfig,
    SpaceBackend, SyntheticField,
};

fn flat() -> SpaceBackend {
    SpaceBackend::Euclidean {
        dim: 3,
        coords: EuclideanChart::Cartesian,
    }
}

fn ch2_patch(cells: usize) -> Chart {
    Chart::build(
        &SpaceBackend::ComplexHyperbolic2,
        &Region::new(vec![0.4, 0.4, 0.0], vec![1.2, 1.1, 0.8], vec![cells, cells, cells]),
        &ScalarField::constant(0.05),
    )
    .unwrap()
}

fn wave(amplitude: f64, dim: usize) -> ScalarField {
    ScalarField::SinProduct {
        amplitude,
        wavenumbers: vec![2.0; dim],
    }
}

#[test]
fn euclidean_steiner_symmetrization() {
    let c = Chart::build(
        &flat(),
        &Region::new(vec![0.0, 0.0], vec![1.0, 1.0], vec![16, 16]),
        &ScalarField::constant(0.25),
    )
    .unwrap();
    let init = c.nodal(&wave(0.3, 2)).unwrap();
    let out = symmetrize(&c, &init, &SolveConfig::default()).unwrap();
    assert!(out.u0.sup_norm() < 1e-8);
    assert!(out.area < out.initial_area);
    assert_eq!(out.volume.to_bits(), domain_volume(&c).unwrap().to_bits());
    for (_, lo, hi) in out.sheets() {
        assert!((lo + 0.25).abs() < 1e-8 && (hi - 0.25).abs() < 1e-8);
    }
}

#[test]
fn exact_connection_is_absorbed() {
    let v = ScalarField::Gaussian {
        offset: 0.0,
        amplitude: 0.2,
        center: vec![0.5, 0.5],
        width: 0.3,
    };
    let field = SyntheticField::new(flat(), OneForm::Exact { potential: v.clone() }).unwrap();
    let c = Chart::build(
        &field,
        &Region::new(vec![0.0, 0.0], vec![1.0, 1.0], vec![24, 24]),
        &ScalarField::constant(0.1),
    )
    .unwrap();
    let out = symmetrize(&c, &NodalFunction::zeros(c.node_count()), &SolveConfig::default()).unwrap();
    let mut expected = c.nodal(&v).unwrap();
    for x in &mut expected.values {
        *x = -*x;
    }
    c.project_mean_zero(&mut expected);
    assert!(out.u0.max_abs_diff(&expected) < 5e-3);
}

#[test]
fn symmetrization_is_idempotent_on_complex_patch() {
    let c = ch2_patch(6);
    let init = c.nodal(&wave(0.1, 3)).unwrap();
    let config = SolveConfig::default();
    let once = symmetrize(&c, &init, &config).unwrap();
    let twice = symmetrize(&c, &once.u0, &config).unwrap();
    assert!(twice.u0.max_abs_diff(&once.u0) < 1e-7);
    assert!(twice.area <= once.area + 1e-12 * once.area);
    assert_eq!(twice.volume.to_bits(), once.volume.to_bits());
    assert!(once.u0.sup_norm() > 1e-4);
}

fn max_interior_second_difference(c: &Chart, u: &NodalFunction, cells: usize) -> f64 {
    let grid = &c.grid;
    let lo = cells / 4;
    let hi = cells - cells / 4;
    let mut worst = 0.0f64;
    for axis in 0..3 {
        for idx in 0..grid.node_count() {
            let mi = grid.node_multi_index(idx);
            if (0..3).any(|a| mi[a] < lo || mi[a] > hi) {
                continue;
            }
            let mut prev = mi;
            let mut next = mi;
            prev[axis] -= 1;
            next[axis] += 1;
            let d2 = u.values[grid.node_index(&next[..3])] - 2.0 * u.values[idx] + u.values[grid.node_index(&prev[..3])];
            worst = worst.max((d2 / grid.spacing[axis].powi(2)).abs());
        }
    }
    worst
}

#[test]
fn second_differences_stay_bounded_under_refinement() {
    let config = SolveConfig::default();
    let mut curvature = Vec::new();
    for cells in [6, 12] {
        let c = ch2_patch(cells);
        let out = symmetrize(&c, &NodalFunction::zeros(c.node_count()), &config).unwrap();
        curvature.push(max_interior_second_difference(&c, &out.u0, cells));
    }
    assert!(curvature[0] > 0.0);
    assert!(curvature[1] < 2.0 * curvature[0], "{curvature:?}");
}

#[test]
fn chart_json_round_trip_preserves_area() {
    let c = ch2_patch(4);
    let dir = std::env::temp_dir().join(format!("steiner-chart-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("chart.json");
    c.save_json(&path).unwrap();
    let d = Chart::load_json(&path).unwrap();
    std::fs::remove_dir_all(&dir).unwrap();
    let u = c.nodal(&wave(0.2, 3)).unwrap();
    let a = AreaFunctional::new(&c).area(&u).unwrap();
    let b = AreaFunctional::new(&d).area(&u).unwrap();
    assert_eq!(a.to_bits(), b.to_bits());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn area_is_invariant_under_constant_shift(shift in -5.0f64..5.0, amp in 0.0f64..0.5) {
        let c = ch2_patch(4);
        let f = AreaFunctional::new(&c);
        let u = c.nodal(&wave(amp, 3)).unwrap();
        let mut v = u.clone();
        for x in &mut v.values {
            *x += shift;
        }
        let (a, b) = (f.area(&u).unwrap(), f.area(&v).unwrap());
        prop_assert!((a - b).abs() <= 1e-12 * a);
    }

    #[test]
    fn regularized_area_dominates(eps in 0.0f64..1.0, amp in 0.0f64..0.5) {
        let c = ch2_patch(4);
        let f = AreaFunctional::new(&c);
        let u = c.nodal(&wave(amp, 3)).unwrap();
        prop_assert!(f.area_eps(&u, eps).unwrap() >= f.area(&u).unwrap());
    }

    #[test]
    fn mean_projection_zeroes_the_mean(offset in -3.0f64..3.0) {
        let c = ch2_patch(4);
        let mut u = c.nodal(&ScalarField::Affine { offset, slope: vec![0.3, -0.2, 0.1] }).unwrap();
        c.project_mean_zero(&mut u);
        prop_assert!(c.mean(&u).abs() < 1e-12);
    }
}
