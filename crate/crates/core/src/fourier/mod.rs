//! Fourier transforms of finite-depth cascade measures, flat or pushed onto a
//! curve, with spherical averages and van der Corput diagnostics.
//!
//! Conventions: `hat eta(xi) = int exp(-2 pi i x . xi) d eta(x)`. Level-`n`
//! measures have constant density on each cell.

mod profile;

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cascade::{BadicAddress, CascadeRealization};
use crate::curve::CurveSpec;
use crate::error::{Error, Result};
use crate::numeric::{gauss_legendre_12, sinc, ComplexSum};

pub use profile::{
    decay_profile, decay_profile_with, decay_profiles, DecayRow, DecaySampleSet, DirectionSet,
    FrequencyPlan, ProfileMetadata,
};

/// Default absolute quadrature tolerance per unit of mass.
pub const DEFAULT_TOL: f64 = 1e-10;
const MAX_REFINEMENTS: u32 = 3;

/// Where the cascade lives: the cube `[0,1)^d` itself, or a unit-speed curve
/// carrying the `d = 1` cascade.
#[derive(Debug, Clone)]
pub enum Support {
    Flat,
    Curve(CurveSpec),
}

impl Support {
    pub fn label(&self) -> String {
        match self {
            Support::Flat => "flat".to_string(),
            Support::Curve(c) => c.family().to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrequencySample {
    pub xi: Vec<f64>,
    pub value: Complex64,
    pub magnitude: f64,
}

impl FrequencySample {
    fn new(xi: &[f64], value: Complex64) -> Self {
        FrequencySample { xi: xi.to_vec(), value, magnitude: value.norm() }
    }
}

fn norm(xi: &[f64]) -> f64 {
    xi.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn expect_len(xi: &[f64], d: u32) -> Result<()> {
    if xi.len() == d as usize {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected: d, actual: xi.len() as u32 })
    }
}

/// `int_x^{x+h} exp(-2 pi i xi u) du`.
#[inline]
pub(crate) fn interval_transform(x: f64, h: f64, xi: f64) -> Complex64 {
    let a = PI * xi * h;
    let phase = -2.0 * PI * xi * x - a;
    Complex64::from_polar(h * sinc(a), phase)
}

/// `int_Q exp(-2 pi i x . xi) dx` over the cell `Q` at `address`.
pub fn cell_transform_flat(b: u32, d: u32, address: &BadicAddress, xi: &[f64]) -> Result<Complex64> {
    expect_len(xi, d)?;
    if !address.is_valid(u64::from(b).pow(d)) {
        return Err(Error::BadCell { level: address.level, index: address.index });
    }
    let h = f64::from(b).powi(-(address.level as i32));
    let corner = address.corner(b, d);
    Ok(corner
        .iter()
        .zip(xi)
        .map(|(&c, &x)| interval_transform(c as f64 * h, h, x))
        .product())
}

/// `hat nu_n(xi)` with `xi` of length `d`.
pub fn transform_flat(r: &CascadeRealization, xi: &[f64]) -> Result<FrequencySample> {
    let (b, d, n) = (r.base(), r.dim(), r.depth());
    expect_len(xi, d)?;
    let h = f64::from(b).powi(-(n as i32));
    let side = (b as usize).pow(n);
    let density = h.powi(-(d as i32));
    let factors: Vec<Vec<Complex64>> = xi
        .iter()
        .map(|&x| (0..side).map(|i| interval_transform(i as f64 * h, h, x)).collect())
        .collect();
    let coords = cell_coordinates(b, d, n);
    let mut sum = ComplexSum::default();
    for (i, &m) in r.masses().iter().enumerate() {
        let k: Complex64 = (0..d as usize).map(|c| factors[c][coords[c][i] as usize]).product();
        sum.add(k * (m * density));
    }
    Ok(FrequencySample::new(xi, sum.value()))
}

/// Integer coordinates of every level-`n` cell, one vector per axis.
pub(crate) fn cell_coordinates(b: u32, d: u32, n: u32) -> Vec<Vec<u64>> {
    let count = (b as usize).pow(d * n);
    let mut axes = vec![Vec::with_capacity(count); d as usize];
    for i in 0..count as u64 {
        for (axis, c) in axes.iter_mut().zip(BadicAddress::new(n, i).corner(b, d)) {
            axis.push(c);
        }
    }
    axes
}

fn panel_sum(c: &CurveSpec, t0: f64, t1: f64, panels: usize, xi: [f64; 2]) -> Complex64 {
    let gl = gauss_legendre_12();
    let width = (t1 - t0) / panels as f64;
    let mut sum = ComplexSum::default();
    for k in 0..panels {
        let a = t0 + k as f64 * width;
        let half = 0.5 * width;
        let mid = a + half;
        let mut acc = Complex64::new(0.0, 0.0);
        for (&x, &w) in gl.nodes.iter().zip(&gl.weights) {
            let p = c.position(mid + half * x);
            acc += Complex64::from_polar(w, -2.0 * PI * (p[0] * xi[0] + p[1] * xi[1]));
        }
        sum.add(acc * half);
    }
    sum.value()
}

/// Panels per unit parameter so that each spans at most a quarter period.
fn base_panels(len: f64, xi_norm: f64) -> usize {
    ((4.0 * xi_norm * len).ceil() as usize).max(1)
}

/// `int_{t0}^{t1} exp(-2 pi i gamma(t) . xi) dt`, checked against a run with
/// twice the panels.
pub fn cell_transform_curve(c: &CurveSpec, t_interval: (f64, f64), xi: [f64; 2], tol: f64) -> Result<Complex64> {
    let (t0, t1) = t_interval;
    if !(0.0 <= t0 && t0 <= t1 && t1 <= 1.0) {
        return Err(Error::InvalidParams(format!("interval [{t0}, {t1}] is not inside [0, 1]")));
    }
    if !(tol >= 1e-12) {
        return Err(Error::InvalidParams(format!("tolerance {tol} is below 1e-12")));
    }
    let len = t1 - t0;
    if xi == [0.0, 0.0] || len == 0.0 {
        return Ok(Complex64::new(len, 0.0));
    }
    let mut panels = base_panels(len, norm(&xi));
    let mut coarse = panel_sum(c, t0, t1, panels, xi);
    let mut change = f64::INFINITY;
    for _ in 0..=MAX_REFINEMENTS {
        let fine = panel_sum(c, t0, t1, 2 * panels, xi);
        change = (fine - coarse).norm();
        if change <= tol * len {
            return Ok(fine);
        }
        coarse = fine;
        panels *= 2;
    }
    Err(Error::ToleranceUnachievable { tol, change })
}

fn curve_sum(r: &CascadeRealization, c: &CurveSpec, xi: [f64; 2], panels_per_cell: usize) -> Complex64 {
    let n = r.depth();
    let h = f64::from(r.base()).powi(-(n as i32));
    let cells: Vec<Complex64> = r
        .masses()
        .par_iter()
        .enumerate()
        .map(|(i, &m)| {
            if m == 0.0 {
                Complex64::new(0.0, 0.0)
            } else {
                let t0 = i as f64 * h;
                panel_sum(c, t0, t0 + h, panels_per_cell, xi) * (m / h)
            }
        })
        .collect();
    cells.into_iter().collect::<ComplexSum>().value()
}

/// `hat mu_n(xi)` for the cascade pushed onto `c`; the paneling is doubled
/// until the total moves by at most `tol` times the total mass.
pub fn transform_curve(r: &CascadeRealization, c: &CurveSpec, xi: [f64; 2], tol: f64) -> Result<FrequencySample> {
    if r.dim() != 1 {
        return Err(Error::DimensionMismatch { expected: 1, actual: r.dim() });
    }
    if !(tol >= 1e-12) {
        return Err(Error::InvalidParams(format!("tolerance {tol} is below 1e-12")));
    }
    let mass = r.total_mass();
    if xi == [0.0, 0.0] {
        return Ok(FrequencySample::new(&xi, Complex64::new(mass, 0.0)));
    }
    let h = f64::from(r.base()).powi(-(r.depth() as i32));
    let mut panels = base_panels(h, norm(&xi));
    let mut coarse = curve_sum(r, c, xi, panels);
    let mut change = f64::INFINITY;
    for _ in 0..=MAX_REFINEMENTS {
        let fine = curve_sum(r, c, xi, 2 * panels);
        change = (fine - coarse).norm();
        if change <= tol * mass.max(f64::MIN_POSITIVE) {
            return Ok(FrequencySample::new(&xi, fine));
        }
        coarse = fine;
        panels *= 2;
    }
    Err(Error::ToleranceUnachievable { tol, change })
}

/// Transform at `radius * (cos angle, sin angle)` on either support. For the
/// flat `d = 1` case only the first coordinate is used.
pub fn transform_at(r: &CascadeRealization, support: &Support, radius: f64, angle: f64) -> Result<FrequencySample> {
    let (s, c) = angle.sin_cos();
    match support {
        Support::Flat if r.dim() == 1 => transform_flat(r, &[radius * c]),
        Support::Flat if r.dim() == 2 => transform_flat(r, &[radius * c, radius * s]),
        Support::Flat => Err(Error::DimensionMismatch { expected: 2, actual: r.dim() }),
        Support::Curve(curve) => transform_curve(r, curve, [radius * c, radius * s], DEFAULT_TOL),
    }
}

/// `(mean_theta |hat mu(radius theta)|^p)^(1/p)` over `n_theta` uniform
/// angles, or the max for `p = inf`. The flat `d = 1` sphere is `{-1, 1}`.
pub fn spherical_average(r: &CascadeRealization, support: &Support, radius: f64, p: f64, n_theta: usize) -> Result<f64> {
    if n_theta < 16 {
        return Err(Error::InvalidParams(format!("n_theta = {n_theta} is below 16")));
    }
    if !(radius > 0.0) {
        return Err(Error::InvalidParams(format!("radius {radius} must be positive")));
    }
    if !(p >= 1.0) {
        return Err(Error::InvalidParams(format!("exponent {p} must be >= 1")));
    }
    let angles: Vec<f64> = if matches!(support, Support::Flat) && r.dim() == 1 {
        vec![0.0, PI]
    } else {
        (0..n_theta).map(|k| 2.0 * PI * k as f64 / n_theta as f64).collect()
    };
    let mags: Vec<f64> = angles
        .par_iter()
        .map(|&a| transform_at(r, support, radius, a).map(|s| s.magnitude))
        .collect::<Result<_>>()?;
    Ok(power_mean(&mags, p))
}

/// `(mean x^p)^(1/p)`, max for `p = inf`.
pub fn power_mean(xs: &[f64], p: f64) -> f64 {
    let max = xs.iter().copied().fold(0.0, f64::max);
    if p.is_infinite() || max == 0.0 {
        return max;
    }
    let s: f64 = xs.iter().map(|x| (x / max).powf(p)).sum::<f64>() / xs.len() as f64;
    max * s.powf(1.0 / p)
}

/// Frequencies `2^(k/4) * theta` for `k = 0..=4 log2(max_radius)` and
/// `n_directions` directions spread over a half turn.
pub fn vdc_grid(max_radius: f64, n_directions: usize) -> Vec<[f64; 2]> {
    let kmax = (4.0 * max_radius.log2()).round() as i32;
    let mut out = Vec::new();
    for k in 0..=kmax {
        let r = 2f64.powf(f64::from(k) / 4.0);
        for j in 0..n_directions {
            let (s, c) = (PI * j as f64 / n_directions as f64).sin_cos();
            out.push([r * c, r * s]);
        }
    }
    out
}

/// `max_xi |int_Gamma exp(-2 pi i x . xi) dx| |xi|^(1/2)` over the whole arc.
pub fn vdc_statistic(c: &CurveSpec, xi_set: &[[f64; 2]]) -> Result<f64> {
    if let Some(xi) = xi_set.iter().find(|xi| norm(&xi[..]) < 1.0) {
        return Err(Error::InvalidFrequency(norm(&xi[..])));
    }
    let values: Vec<f64> = xi_set
        .par_iter()
        .map(|&xi| cell_transform_curve(c, (0.0, 1.0), xi, DEFAULT_TOL).map(|v| v.norm() * norm(&xi).sqrt()))
        .collect::<Result<_>>()?;
    Ok(values.into_iter().fold(0.0, f64::max))
}
