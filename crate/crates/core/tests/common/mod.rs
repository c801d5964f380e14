//! Oracles shared by the integration tests. Nothing here calls into the
//! crate's own quadrature code.

#![allow(dead_code)]

use num_complex::Complex64;
use std::f64::consts::PI;

/// Five-point Gauss-Legendre nodes and weights on `[-1, 1]`.
const GL5: [(f64, f64); 5] = [
    (0.0, 0.568_888_888_888_888_9),
    (-0.538_469_310_105_683_1, 0.478_628_670_499_366_5),
    (0.538_469_310_105_683_1, 0.478_628_670_499_366_5),
    (-0.906_179_845_938_664_0, 0.236_926_885_056_189_1),
    (0.906_179_845_938_664_0, 0.236_926_885_056_189_1),
];

/// Composite five-point rule for `f` on `[a, b]` with `panels` panels.
pub fn composite(a: f64, b: f64, panels: usize, f: impl Fn(f64) -> Complex64) -> Complex64 {
    let h = (b - a) / panels as f64;
    let mut sum = Complex64::new(0.0, 0.0);
    for k in 0..panels {
        let mid = a + (k as f64 + 0.5) * h;
        for &(x, w) in &GL5 {
            sum += f(mid + 0.5 * h * x) * w;
        }
    }
    sum * (0.5 * h)
}

/// `int_a^b exp(-2 pi i xi u) du` with panels spanning a tenth of a period.
pub fn oscillatory_1d(a: f64, b: f64, xi: f64) -> Complex64 {
    let panels = ((10.0 * xi.abs() * (b - a)).ceil() as usize).max(4);
    composite(a, b, panels, |u| Complex64::from_polar(1.0, -2.0 * PI * xi * u))
}

/// Tensor rule for `int_Q exp(-2 pi i x . xi) dx` over the square `Q`.
pub fn oscillatory_2d(corner: [f64; 2], h: f64, xi: [f64; 2]) -> Complex64 {
    let panels = |x: f64| ((10.0 * x.abs() * h).ceil() as usize).max(4);
    composite(corner[0], corner[0] + h, panels(xi[0]), |u| {
        composite(corner[1], corner[1] + h, panels(xi[1]), |v| {
            Complex64::from_polar(1.0, -2.0 * PI * (xi[0] * u + xi[1] * v))
        })
    })
}

/// Least-squares slope of `y` against `x`.
pub fn slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

/// `J0(x) = (1/pi) int_0^pi cos(x sin t) dt` by the trapezoid rule, which
/// is spectrally accurate for this periodic integrand once the node count
/// exceeds `|x|` comfortably.
pub fn j0_oracle(x: f64) -> f64 {
    let n = (x.abs() as usize + 64) * 2;
    let h = PI / n as f64;
    let inner: f64 = (1..n).map(|k| (x * (k as f64 * h).sin()).cos()).sum();
    (inner + 1.0) / n as f64
}
