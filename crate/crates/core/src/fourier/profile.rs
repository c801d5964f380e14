//! Decay profiles: sup and `L^p` spherical magnitudes over dyadic bands of
//! radii, evaluated for many realizations at once.
//!
//! Each band `[r, ratio * r)` is sampled at `radial_samples` equally spaced
//! radii and reports the largest value seen, so a profile tracks the envelope
//! of `|hat mu|` rather than its value at isolated radii.
//!
//! Cell transforms do not depend on the realization, so for every frequency
//! the per-cell kernel is formed once and contracted against all densities.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{base_panels, cell_coordinates, interval_transform, power_mean, Support};
use crate::cascade::CascadeRealization;
use crate::curve::{CurveDescriptor, CurveSpec};
use crate::error::{Error, Result};
use crate::estimators::fit::{fit_power_law, DecayFit};
use crate::numeric::{gauss_legendre_12, ComplexSum};
use crate::weights::WeightModel;

/// Curve normals are added at parameters `t = m * b^-NORMAL_LEVEL`.
pub const NORMAL_LEVEL: u32 = 8;
const BLOCK: usize = 256;
const SAME_ANGLE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrequencyPlan {
    /// Lower ends of the bands, strictly increasing.
    pub radii: Vec<f64>,
    pub band_ratio: f64,
    pub radial_samples: usize,
    /// Uniform directions on the full circle; must be even.
    pub n_theta: usize,
    pub enrich_normals: bool,
    /// Exponents of the reported spherical averages; `inf` reports the sup.
    pub p_values: Vec<f64>,
}

impl FrequencyPlan {
    /// Bands starting at `b^k0, ..., b^k1`, 256 directions, 32 radii per band,
    /// normal enrichment, `p = 1, 2, 4`.
    pub fn dyadic(base: u32, k0: i32, k1: i32) -> Self {
        let b = f64::from(base);
        FrequencyPlan {
            radii: (k0..=k1).map(|k| b.powi(k)).collect(),
            band_ratio: b,
            radial_samples: 32,
            n_theta: 256,
            enrich_normals: true,
            p_values: vec![1.0, 2.0, 4.0],
        }
    }

    pub fn with_n_theta(mut self, n: usize) -> Self {
        self.n_theta = n;
        self
    }

    pub fn with_radial_samples(mut self, n: usize) -> Self {
        self.radial_samples = n;
        self
    }

    pub fn with_enrich_normals(mut self, on: bool) -> Self {
        self.enrich_normals = on;
        self
    }

    pub fn with_p_values(mut self, ps: Vec<f64>) -> Self {
        self.p_values = ps;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParams(m));
        if self.radii.is_empty() || self.radii.iter().any(|r| !(*r > 0.0 && r.is_finite())) {
            return bad("radii must be positive and finite".into());
        }
        if self.radii.windows(2).any(|w| w[0] >= w[1]) {
            return bad("radii must be strictly increasing".into());
        }
        if !(self.band_ratio >= 1.0) || self.radial_samples == 0 {
            return bad("need band_ratio >= 1 and at least one radial sample".into());
        }
        if self.n_theta < 16 || self.n_theta % 2 != 0 {
            return bad(format!("n_theta = {} must be even and at least 16", self.n_theta));
        }
        if self.p_values.iter().any(|p| !(*p >= 1.0)) {
            return bad("spherical exponents must be >= 1".into());
        }
        Ok(())
    }

    fn step(&self, r: f64) -> f64 {
        r * (self.band_ratio - 1.0) / self.radial_samples as f64
    }

    /// Radii sampled in the band starting at `r`.
    pub fn sub_radii(&self, r: f64) -> Vec<f64> {
        (0..self.radial_samples).map(|s| r + s as f64 * self.step(r)).collect()
    }
}

/// Directions modulo a half turn: `|hat mu(-xi)| = |hat mu(xi)|` for real
/// measures.
#[derive(Debug, Clone, PartialEq)]
pub struct DirectionSet {
    /// Uniform angles in `[0, pi)`, each standing for itself and its opposite.
    pub uniform: Vec<f64>,
    /// Extra angles in `[0, pi)` that only enter the sup.
    pub extra: Vec<f64>,
}

impl DirectionSet {
    pub fn new(support: &Support, dim: u32, plan: &FrequencyPlan) -> Result<Self> {
        if matches!(support, Support::Flat) && dim == 1 {
            return Ok(DirectionSet { uniform: vec![0.0], extra: Vec::new() });
        }
        let half = plan.n_theta / 2;
        let spacing = 2.0 * PI / plan.n_theta as f64;
        let uniform: Vec<f64> = (0..half).map(|k| k as f64 * spacing).collect();
        let mut extra = Vec::new();
        if let (Support::Curve(c), true) = (support, plan.enrich_normals) {
            let count = 2u64.pow(NORMAL_LEVEL);
            for m in 0..=count {
                let a = c.normal_angle(m as f64 / count as f64).rem_euclid(PI);
                let k = (a / spacing).round();
                let on_grid = (a - k * spacing).abs() < SAME_ANGLE || (PI - a) < SAME_ANGLE;
                if !on_grid {
                    extra.push(a);
                }
            }
            extra.sort_by(f64::total_cmp);
            extra.dedup_by(|a, b| (*a - *b).abs() < SAME_ANGLE);
        }
        Ok(DirectionSet { uniform, extra })
    }

    /// Number of directions on the full circle.
    pub fn size(&self) -> usize {
        2 * (self.uniform.len() + self.extra.len())
    }

    fn all(&self) -> impl Iterator<Item = f64> + '_ {
        self.uniform.iter().chain(&self.extra).copied()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayRow {
    pub radius: f64,
    pub n_directions: usize,
    pub sup: f64,
    /// One entry per `p_values` element.
    pub sigma: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileMetadata {
    pub model: WeightModel,
    pub support: String,
    pub curve: Option<CurveDescriptor>,
    pub depth: u32,
    pub seed: u64,
    pub radial_samples: usize,
    pub n_theta: usize,
    pub enrich_normals: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecaySampleSet {
    pub metadata: ProfileMetadata,
    pub p_values: Vec<f64>,
    pub rows: Vec<DecayRow>,
}

impl DecaySampleSet {
    pub fn sup_series(&self) -> Vec<(f64, f64)> {
        self.rows.iter().map(|r| (r.radius, r.sup)).collect()
    }

    /// `(r, sigma_p(r))`; `p = inf` gives the sup column.
    pub fn sigma_series(&self, p: f64) -> Option<Vec<(f64, f64)>> {
        if p.is_infinite() {
            return Some(self.sup_series());
        }
        let col = self.p_values.iter().position(|&q| q == p)?;
        Some(self.rows.iter().map(|r| (r.radius, r.sigma[col])).collect())
    }

    pub fn fit_sup(&self) -> Result<DecayFit> {
        fit_power_law(&self.sup_series(), f64::from(self.metadata.model.base()))
    }

    pub fn fit_sigma(&self, p: f64) -> Result<DecayFit> {
        let series = self
            .sigma_series(p)
            .ok_or_else(|| Error::InvalidParams(format!("profile has no sigma_{p} column")))?;
        fit_power_law(&series, f64::from(self.metadata.model.base()))
    }
}

/// Builds rows from magnitudes laid out as `[band][sub-radius][direction]`,
/// directions ordered uniform first.
fn assemble(plan: &FrequencyPlan, dirs: &DirectionSet, mags: &[Vec<Vec<f64>>]) -> Vec<DecayRow> {
    let nu = dirs.uniform.len();
    plan.radii
        .iter()
        .zip(mags)
        .map(|(&radius, band)| {
            let sup = band.iter().flatten().copied().fold(0.0, f64::max);
            let sigma = plan
                .p_values
                .iter()
                .map(|&p| {
                    if p.is_infinite() {
                        sup
                    } else {
                        band.iter().map(|m| power_mean(&m[..nu], p)).fold(0.0, f64::max)
                    }
                })
                .collect();
            DecayRow { radius, n_directions: dirs.size(), sup, sigma }
        })
        .collect()
}

/// Profile rows from an arbitrary magnitude oracle `f(radius, angle)`.
pub fn decay_profile_with(
    plan: &FrequencyPlan,
    dirs: &DirectionSet,
    f: impl Fn(f64, f64) -> f64,
) -> Result<Vec<DecayRow>> {
    plan.validate()?;
    let mags: Vec<Vec<Vec<f64>>> = plan
        .radii
        .iter()
        .map(|&r| plan.sub_radii(r).iter().map(|&rho| dirs.all().map(|a| f(rho, a)).collect()).collect())
        .collect();
    Ok(assemble(plan, dirs, &mags))
}

pub fn decay_profile(r: &CascadeRealization, support: &Support, plan: &FrequencyPlan) -> Result<DecaySampleSet> {
    let mut out = decay_profiles(std::slice::from_ref(r), support, plan)?;
    Ok(out.remove(0))
}

/// Decay profiles of several realizations of one model at one depth.
pub fn decay_profiles(
    rs: &[CascadeRealization],
    support: &Support,
    plan: &FrequencyPlan,
) -> Result<Vec<DecaySampleSet>> {
    plan.validate()?;
    let first = rs.first().ok_or_else(|| Error::InvalidParams("no realizations".into()))?;
    let (model, depth) = (first.model(), first.depth());
    if rs.iter().any(|r| r.model() != model || r.depth() != depth) {
        return Err(Error::InvalidParams("realizations differ in model or depth".into()));
    }
    let dim = model.dim();
    match support {
        Support::Curve(_) if dim != 1 => return Err(Error::DimensionMismatch { expected: 1, actual: dim }),
        Support::Flat if dim > 2 => return Err(Error::DimensionMismatch { expected: 2, actual: dim }),
        _ => {}
    }
    let dirs = DirectionSet::new(support, dim, plan)?;
    let engine = Engine::new(rs, support);
    let angles: Vec<f64> = dirs.all().collect();
    let tasks: Vec<(usize, usize)> =
        (0..plan.radii.len()).flat_map(|b| (0..angles.len()).map(move |a| (b, a))).collect();
    let layouts = engine.layouts(plan);
    // values[task][sub * seeds + seed]
    let values: Vec<Vec<Complex64>> = tasks
        .par_iter()
        .map(|&(band, a)| engine.band_values(plan, &layouts, band, angles[a]))
        .collect();

    let seeds = rs.len();
    let nb = plan.radii.len();
    let na = angles.len();
    let ns = plan.radial_samples;
    Ok(rs
        .iter()
        .enumerate()
        .map(|(k, r)| {
            let mags: Vec<Vec<Vec<f64>>> = (0..nb)
                .map(|b| (0..ns).map(|s| (0..na).map(|a| values[b * na + a][s * seeds + k].norm()).collect()).collect())
                .collect();
            DecaySampleSet {
                metadata: ProfileMetadata {
                    model: model.clone(),
                    support: support.label(),
                    curve: match support {
                        Support::Curve(c) => c.descriptor(),
                        Support::Flat => None,
                    },
                    depth,
                    seed: r.seed(),
                    radial_samples: plan.radial_samples,
                    n_theta: plan.n_theta,
                    enrich_normals: plan.enrich_normals,
                },
                p_values: plan.p_values.clone(),
                rows: assemble(plan, &dirs, &mags),
            }
        })
        .collect())
}

/// Quadrature nodes of a curve with `panels` panels per cell.
struct Layout {
    panels: usize,
    positions: Vec<[f64; 2]>,
    weights: Vec<f64>,
}

struct Engine<'a> {
    support: &'a Support,
    b: u32,
    d: u32,
    n: u32,
    cells: usize,
    seeds: usize,
    /// `density[cell * seeds + seed]`.
    density: Vec<f64>,
}

impl<'a> Engine<'a> {
    fn new(rs: &[CascadeRealization], support: &'a Support) -> Self {
        let first = &rs[0];
        let (b, d, n) = (first.base(), first.dim(), first.depth());
        let cells = first.masses().len();
        let seeds = rs.len();
        let scale = f64::from(b).powi((d * n) as i32);
        let mut density = vec![0.0; cells * seeds];
        for (k, r) in rs.iter().enumerate() {
            for (i, &m) in r.masses().iter().enumerate() {
                density[i * seeds + k] = m * scale;
            }
        }
        Engine { support, b, d, n, cells, seeds, density }
    }

    fn h(&self) -> f64 {
        f64::from(self.b).powi(-(self.n as i32))
    }

    fn panels_for(&self, plan: &FrequencyPlan, band: usize) -> usize {
        let r = plan.radii[band];
        let top = r + (plan.radial_samples - 1) as f64 * plan.step(r);
        base_panels(self.h(), top)
    }

    fn layouts(&self, plan: &FrequencyPlan) -> Vec<Layout> {
        let Support::Curve(c) = self.support else { return Vec::new() };
        let mut counts: Vec<usize> = (0..plan.radii.len()).map(|b| self.panels_for(plan, b)).collect();
        counts.sort_unstable();
        counts.dedup();
        counts.into_iter().map(|p| self.layout(c, p)).collect()
    }

    fn layout(&self, c: &CurveSpec, panels: usize) -> Layout {
        let gl = gauss_legendre_12();
        let width = self.h() / panels as f64;
        let half = 0.5 * width;
        let weights: Vec<f64> = (0..panels).flat_map(|_| gl.weights.iter().map(move |w| w * half)).collect();
        let positions: Vec<[f64; 2]> = (0..self.cells * panels)
            .into_par_iter()
            .flat_map_iter(|k| {
                let mid = k as f64 * width + half;
                gl.nodes.iter().map(move |x| c.position(mid + half * x))
            })
            .collect();
        Layout { panels, positions, weights }
    }

    /// Transform values for every sub-radius of `band` along `angle`, laid out
    /// as `[sub * seeds + seed]`.
    fn band_values(&self, plan: &FrequencyPlan, layouts: &[Layout], band: usize, angle: f64) -> Vec<Complex64> {
        let r = plan.radii[band];
        let radii = plan.sub_radii(r);
        let (s, c) = angle.sin_cos();
        let h = self.h();
        match self.support {
            Support::Curve(_) => {
                let panels = self.panels_for(plan, band);
                let layout = layouts.iter().find(|l| l.panels == panels).expect("layout prepared");
                self.curve_values(layout, [c, s], r, plan.step(r), radii.len())
            }
            Support::Flat if self.d == 1 => self.contract(radii.len(), |i, out| {
                for (o, &rho) in out.iter_mut().zip(&radii) {
                    *o = interval_transform(i as f64 * h, h, rho);
                }
            }),
            Support::Flat => {
                let side = (self.b as usize).pow(self.n);
                let coords = cell_coordinates(self.b, self.d, self.n);
                let axis = |xi: f64| -> Vec<Complex64> { (0..side).map(|i| interval_transform(i as f64 * h, h, xi)).collect() };
                let fx: Vec<Vec<Complex64>> = radii.iter().map(|&rho| axis(rho * c)).collect();
                let fy: Vec<Vec<Complex64>> = radii.iter().map(|&rho| axis(rho * s)).collect();
                let (cx, cy) = (&coords[0], &coords[1]);
                self.contract(radii.len(), |i, out| {
                    for (k, o) in out.iter_mut().enumerate() {
                        *o = fx[k][cx[i] as usize] * fy[k][cy[i] as usize];
                    }
                })
            }
        }
    }

    /// Cell kernels at the radii `rho0 + k * step`, obtained by rotating each
    /// node's phase; all nodes of a cell advance together.
    fn curve_values(&self, layout: &Layout, dir: [f64; 2], rho0: f64, step: f64, count: usize) -> Vec<Complex64> {
        let per_cell = layout.weights.len();
        let mut zr = vec![0.0; per_cell];
        let mut zi = vec![0.0; per_cell];
        let mut cr = vec![0.0; per_cell];
        let mut sr = vec![0.0; per_cell];
        self.contract(count, |i, out| {
            let nodes = &layout.positions[i * per_cell..(i + 1) * per_cell];
            for (j, (p, w)) in nodes.iter().zip(&layout.weights).enumerate() {
                let x = -2.0 * PI * (p[0] * dir[0] + p[1] * dir[1]);
                let (s0, c0) = (rho0 * x).sin_cos();
                zr[j] = w * c0;
                zi[j] = w * s0;
                (sr[j], cr[j]) = (step * x).sin_cos();
            }
            for o in out.iter_mut() {
                *o = Complex64::new(zr.iter().sum(), zi.iter().sum());
                for j in 0..per_cell {
                    let (a, b) = (zr[j], zi[j]);
                    zr[j] = a * cr[j] - b * sr[j];
                    zi[j] = a * sr[j] + b * cr[j];
                }
            }
        })
    }

    /// `sum_cells kernel_k(cell) * density(cell, seed)` for `count` kernels
    /// and every seed, with plain sums inside fixed blocks of cells and
    /// compensated sums across blocks. `fill(cell, out)` writes the kernels.
    fn contract(&self, count: usize, mut fill: impl FnMut(usize, &mut [Complex64])) -> Vec<Complex64> {
        let s = self.seeds;
        let mut totals = vec![ComplexSum::default(); count * s];
        let mut re = vec![0.0; count * s];
        let mut im = vec![0.0; count * s];
        let mut kernel = vec![Complex64::new(0.0, 0.0); count];
        for start in (0..self.cells).step_by(BLOCK) {
            re.iter_mut().for_each(|x| *x = 0.0);
            im.iter_mut().for_each(|x| *x = 0.0);
            for i in start..(start + BLOCK).min(self.cells) {
                fill(i, &mut kernel);
                let dens = &self.density[i * s..(i + 1) * s];
                for (k, (re, im)) in kernel.iter().zip(re.chunks_exact_mut(s).zip(im.chunks_exact_mut(s))) {
                    for ((r, m), &w) in re.iter_mut().zip(im.iter_mut()).zip(dens) {
                        *r += k.re * w;
                        *m += k.im * w;
                    }
                }
            }
            for (t, (&r, &m)) in totals.iter_mut().zip(re.iter().zip(&im)) {
                t.add(Complex64::new(r, m));
            }
        }
        totals.into_iter().map(|t| t.value()).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::{make_circle_arc, make_parabola_arc};
    use crate::fourier::{transform_at, transform_flat};

    fn small_plan() -> FrequencyPlan {
        FrequencyPlan::dyadic(2, 2, 5).with_n_theta(16).with_radial_samples(4).with_p_values(vec![1.0, 2.0, 4.0, f64::INFINITY])
    }

    #[test]
    fn synthetic_power_law_is_reproduced() {
        let plan = FrequencyPlan::dyadic(2, 4, 11).with_radial_samples(1);
        let dirs = DirectionSet::new(&Support::Flat, 2, &plan).unwrap();
        let rows = decay_profile_with(&plan, &dirs, |r, _| r.powf(-0.25)).unwrap();
        let pts: Vec<(f64, f64)> = rows.iter().map(|r| (r.radius, r.sup)).collect();
        let fit = fit_power_law(&pts, 2.0).unwrap();
        assert!((fit.slope + 0.25).abs() < 1e-12);
        assert!(rows.iter().all(|r| (r.sigma[1] - r.sup).abs() < 1e-15));
    }

    #[test]
    fn circle_normals_coincide_with_uniform_directions() {
        let plan = FrequencyPlan::dyadic(2, 0, 1);
        let c = Support::Curve(make_circle_arc(2.0 * PI).unwrap());
        let dirs = DirectionSet::new(&c, 1, &plan).unwrap();
        assert_eq!(dirs.uniform.len(), 128);
        assert!(dirs.extra.is_empty());
        let p = Support::Curve(make_parabola_arc());
        let dirs = DirectionSet::new(&p, 1, &plan).unwrap();
        assert!(!dirs.extra.is_empty());
        assert!(dirs.extra.iter().all(|&a| (0.0..PI).contains(&a)));
    }

    #[test]
    fn flat_profile_matches_direct_transforms() {
        let m = crate::weights::WeightModel::lognormal(0.09, 2, 1).unwrap();
        let rs: Vec<_> = (0..3).map(|s| CascadeRealization::generate(&m, 8, s).unwrap()).collect();
        let plan = small_plan();
        let profiles = decay_profiles(&rs, &Support::Flat, &plan).unwrap();
        for (r, prof) in rs.iter().zip(&profiles) {
            for row in &prof.rows {
                let best = plan
                    .sub_radii(row.radius)
                    .iter()
                    .map(|&rho| transform_flat(r, &[rho]).unwrap().magnitude)
                    .fold(0.0, f64::max);
                assert!((row.sup - best).abs() < 1e-12);
                assert_eq!(row.n_directions, 2);
                assert!((row.sigma[0] - row.sup).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn curve_profile_matches_validated_transform() {
        let m = crate::weights::WeightModel::lognormal(0.09, 2, 1).unwrap();
        let rs: Vec<_> = (3..4).map(|s| CascadeRealization::generate(&m, 7, s).unwrap()).collect();
        let support = Support::Curve(make_parabola_arc());
        let mut plan = small_plan().with_radial_samples(2);
        plan.radii = vec![5.0, 24.0];
        let dirs = DirectionSet::new(&support, 1, &plan).unwrap();
        let profiles = decay_profiles(&rs, &support, &plan).unwrap();
        for (r, prof) in rs.iter().zip(&profiles) {
            for row in &prof.rows {
                let mut sup: f64 = 0.0;
                let mut sigma2: f64 = 0.0;
                for rho in plan.sub_radii(row.radius) {
                    let mags: Vec<f64> =
                        dirs.all().map(|a| transform_at(r, &support, rho, a).unwrap().magnitude).collect();
                    sup = mags.iter().copied().fold(sup, f64::max);
                    sigma2 = sigma2.max(power_mean(&mags[..dirs.uniform.len()], 2.0));
                }
                assert!((row.sup - sup).abs() < 1e-9, "{} vs {}", row.sup, sup);
                assert!((row.sigma[1] - sigma2).abs() < 1e-9);
                assert!(row.sigma[0] <= row.sigma[1] + 1e-15);
                assert!(row.sigma[1] <= row.sigma[2] + 1e-15);
                assert!(row.sigma[2] <= row.sup + 1e-15);
                assert_eq!(row.sigma[3], row.sup);
            }
        }
    }

    #[test]
    fn enrichment_never_lowers_the_sup() {
        let m = crate::weights::WeightModel::lognormal(0.09, 2, 1).unwrap();
        let r = CascadeRealization::generate(&m, 7, 4).unwrap();
        let support = Support::Curve(make_parabola_arc());
        let plan = small_plan();
        let with = decay_profile(&r, &support, &plan).unwrap();
        let without = decay_profile(&r, &support, &plan.clone().with_enrich_normals(false)).unwrap();
        for (a, b) in with.rows.iter().zip(&without.rows) {
            assert!(a.sup >= b.sup);
            assert_eq!(a.sigma[..3], b.sigma[..3]);
        }
    }

    #[test]
    fn profile_rejects_bad_plans() {
        let m = crate::weights::WeightModel::lognormal(0.09, 2, 1).unwrap();
        let r = CascadeRealization::generate(&m, 4, 0).unwrap();
        let bad = small_plan().with_n_theta(15);
        assert!(decay_profile(&r, &Support::Flat, &bad).is_err());
        let mut bad = small_plan();
        bad.radii = vec![4.0, 2.0, 8.0];
        assert!(decay_profile(&r, &Support::Flat, &bad).is_err());
    }
}
