mod common;

use std::f64::consts::PI;

use curvecascade::cascade::{BadicAddress, CascadeRealization};
use curvecascade::curve::{make_circle_arc, make_parabola_arc};
use curvecascade::fourier::{
    cell_transform_curve, cell_transform_flat, spherical_average, transform_curve, transform_flat, vdc_grid,
    vdc_statistic, Support, DEFAULT_TOL,
};
use curvecascade::rng::KeyedRng;
use curvecascade::weights::WeightModel;
use num_complex::Complex64;

fn lognormal() -> WeightModel {
    WeightModel::lognormal(0.09, 2, 1).unwrap()
}

#[test]
fn flat_cells_match_independent_quadrature() {
    let mut rng = KeyedRng::from_seed(17);
    for case in 0..100 {
        let b = 2 + (rng.uniform() * 3.0) as u32;
        let d = if case % 3 == 0 { 2 } else { 1 };
        let level = (rng.uniform() * 6.0) as u32;
        let cells = u64::from(b).pow(d * level);
        let index = ((rng.uniform() * cells as f64) as u64).min(cells - 1);
        let addr = BadicAddress::new(level, index);
        let h = f64::from(b).powi(-(level as i32));
        let span = if d == 1 { 400.0 } else { 20.0 / h };
        let xi: Vec<f64> = (0..d).map(|_| (2.0 * rng.uniform() - 1.0) * span).collect();
        let corner: Vec<f64> = addr.corner(b, d).iter().map(|&c| c as f64 * h).collect();
        let oracle = if d == 1 {
            common::oscillatory_1d(corner[0], corner[0] + h, xi[0])
        } else {
            common::oscillatory_2d([corner[0], corner[1]], h, [xi[0], xi[1]])
        };
        let got = cell_transform_flat(b, d, &addr, &xi).unwrap();
        assert!((got - oracle).norm() <= 1e-10, "b={b} d={d} {addr:?} xi={xi:?}: {got} vs {oracle}");
    }
}

#[test]
fn transforms_are_conjugate_symmetric_and_bounded() {
    let r = CascadeRealization::generate(&lognormal(), 10, 2).unwrap();
    let circle = make_circle_arc(2.0 * PI).unwrap();
    let mass = r.total_mass();
    for xi in [3.0, 41.5, 250.0] {
        let a = transform_flat(&r, &[xi]).unwrap().value;
        let b = transform_flat(&r, &[-xi]).unwrap().value;
        assert!((a - b.conj()).norm() < 1e-12);
        assert!(a.norm() <= mass * (1.0 + 1e-12));
        let v = [xi * 0.6, -xi * 0.8];
        let c = transform_curve(&r, &circle, v, DEFAULT_TOL).unwrap().value;
        let d = transform_curve(&r, &circle, [-v[0], -v[1]], DEFAULT_TOL).unwrap().value;
        assert!((c - d.conj()).norm() < 1e-9);
        assert!(c.norm() <= mass * (1.0 + 1e-9));
    }
}

#[test]
fn transforms_are_lipschitz_in_frequency() {
    // |x| <= 1 on both supports, so the gradient is at most 2 pi |mu|
    let r = CascadeRealization::generate(&lognormal(), 9, 8).unwrap();
    let parabola = make_parabola_arc();
    let mass = r.total_mass();
    let mut rng = KeyedRng::from_seed(3);
    for _ in 0..20 {
        let x = 200.0 * rng.uniform();
        let dx = 0.05 * rng.uniform();
        let a = transform_flat(&r, &[x]).unwrap().value;
        let b = transform_flat(&r, &[x + dx]).unwrap().value;
        assert!((a - b).norm() <= 2.0 * PI * mass * dx + 1e-12);
        let xi = [x, 0.5 * x];
        let eta = [x + dx, 0.5 * x];
        let c = transform_curve(&r, &parabola, xi, DEFAULT_TOL).unwrap().value;
        let d = transform_curve(&r, &parabola, eta, DEFAULT_TOL).unwrap().value;
        assert!((c - d).norm() <= 2.0 * PI * mass * dx + 1e-8);
    }
}

#[test]
fn curve_cells_converge_under_panel_refinement() {
    let parabola = make_parabola_arc();
    for (t, xi) in [((0.1, 0.35), [300.0, -40.0]), ((0.0, 1.0), [900.0, 900.0]), ((0.5, 0.5001), [5.0, 2.0])] {
        let loose = cell_transform_curve(&parabola, t, xi, 1e-8).unwrap();
        let tight = cell_transform_curve(&parabola, t, xi, 1e-12).unwrap();
        assert!((loose - tight).norm() <= 1e-8 * (t.1 - t.0));
        let panels = ((40.0 * (xi[0] * xi[0] + xi[1] * xi[1]).sqrt() * (t.1 - t.0)).ceil() as usize).max(8);
        let oracle = common::composite(t.0, t.1, panels, |s| {
            let p = parabola.position(s);
            Complex64::from_polar(1.0, -2.0 * PI * (p[0] * xi[0] + p[1] * xi[1]))
        });
        assert!((tight - oracle).norm() <= 1e-10 * (t.1 - t.0), "{t:?}: {tight} vs {oracle}");
    }
}

#[test]
fn uniform_circle_matches_bessel() {
    let r = CascadeRealization::generate(&WeightModel::deterministic(2, 1).unwrap(), 8, 0).unwrap();
    let circle = make_circle_arc(2.0 * PI).unwrap();
    let mut rng = KeyedRng::from_seed(5);
    for k in 0..60 {
        let rad = if k == 0 { 200.0 } else { 200.0 * rng.uniform() };
        let angle = 2.0 * PI * rng.uniform();
        let xi = [rad * angle.cos(), rad * angle.sin()];
        let v = transform_curve(&r, &circle, xi, DEFAULT_TOL).unwrap();
        assert!((v.magnitude - common::j0_oracle(rad).abs()).abs() <= 1e-6, "r={rad}");
        // the centre sits at (0, 1/(2 pi)), which only rotates the phase
        let centre = Complex64::from_polar(1.0, -xi[1]);
        assert!((v.value - centre * common::j0_oracle(rad)).norm() <= 1e-6);
    }
}

#[test]
fn spherical_averages_are_ordered_in_p() {
    let r = CascadeRealization::generate(&lognormal(), 8, 1).unwrap();
    let support = Support::Curve(make_circle_arc(2.0 * PI).unwrap());
    let sig: Vec<f64> = [1.0, 2.0, 4.0, f64::INFINITY]
        .iter()
        .map(|&p| spherical_average(&r, &support, 37.0, p, 32).unwrap())
        .collect();
    assert!(sig.windows(2).all(|w| w[0] <= w[1] * (1.0 + 1e-12)), "{sig:?}");
}

#[test]
fn vdc_statistic_is_bounded_and_stable() {
    let circle = make_circle_arc(2.0 * PI).unwrap();
    let grid = vdc_grid(1024.0, 4);
    let doubled: Vec<[f64; 2]> = grid.iter().map(|x| [2.0 * x[0], 2.0 * x[1]]).collect();
    let a = vdc_statistic(&circle, &grid).unwrap();
    let b = vdc_statistic(&circle, &doubled).unwrap();
    assert!(a <= 3.0 && b <= 3.0);
    assert!(a / b <= 1.2 && b / a <= 1.2, "{a} vs {b}");
    assert!(vdc_statistic(&circle, &[[0.5, 0.0]]).is_err());
}
