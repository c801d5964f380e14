//! Projections of curve measures onto lines, binned on a dyadic grid.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::fit::{fit_line, DecayFit};
use crate::cascade::CascadeRealization;
use crate::curve::CurveSpec;
use crate::error::{Error, Result};
use crate::numeric::NeumaierSum;

pub const MAX_OUT_LEVELS: u32 = 24;

/// A measure on `[lo, hi]` given by masses on `2^levels` equal bins.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectedMeasure {
    pub lo: f64,
    pub hi: f64,
    pub levels: u32,
    pub masses: Vec<f64>,
}

impl ProjectedMeasure {
    pub fn total_mass(&self) -> f64 {
        self.masses.iter().copied().collect::<NeumaierSum>().value()
    }

    /// Masses on the `2^level` bins obtained by merging.
    pub fn aggregated(&self, level: u32) -> Result<Vec<f64>> {
        if level > self.levels {
            return Err(Error::BadLevel { level, depth: self.levels });
        }
        let block = 1usize << (self.levels - level);
        Ok(self.masses.chunks(block).map(|c| c.iter().copied().collect::<NeumaierSum>().value()).collect())
    }

    /// Slope of `-log2 sum m^2` against the level over `l_min..=l_max`.
    pub fn dim2_estimate(&self, l_min: u32, l_max: u32) -> Result<DecayFit> {
        if l_max > self.levels || l_min >= l_max {
            return Err(Error::InvalidParams(format!("bad level range [{l_min}, {l_max}]")));
        }
        let points = (l_min..=l_max)
            .map(|l| {
                let energy: NeumaierSum = self.aggregated(l)?.iter().map(|m| m * m).collect();
                if energy.value() <= 0.0 {
                    return Err(Error::AllMassZero);
                }
                Ok((f64::from(l), -energy.value().log2()))
            })
            .collect::<Result<Vec<_>>>()?;
        fit_line(&points)
    }
}

/// Pushes the level-`n` curve measure forward under `x -> x . theta`.
///
/// Each cell is cut into sub-arcs whose projections are at most a quarter of
/// a bin long; a sub-arc's mass is spread uniformly over its projected
/// interval, so every cell deposits exactly its own mass.
pub fn project_measure(
    r: &CascadeRealization,
    c: &CurveSpec,
    theta: [f64; 2],
    out_levels: u32,
) -> Result<ProjectedMeasure> {
    if r.dim() != 1 {
        return Err(Error::DimensionMismatch { expected: 1, actual: r.dim() });
    }
    if out_levels > MAX_OUT_LEVELS {
        return Err(Error::InvalidParams(format!("out_levels {out_levels} exceeds {MAX_OUT_LEVELS}")));
    }
    let len = theta[0].hypot(theta[1]);
    if !(len > 0.0) {
        return Err(Error::InvalidParams("direction must be nonzero".into()));
    }
    let theta = [theta[0] / len, theta[1] / len];
    let cells = r.masses().len();
    let bins = 1usize << out_levels;
    // |d/dt (gamma . theta)| <= 1, so 4 * bins sub-arcs per unit keep every
    // projected piece within a quarter bin of a range at least 1/bins wide.
    let per_cell = (4 * bins).div_ceil(cells).max(1);
    let total = cells * per_cell;
    let u: Vec<f64> = (0..=total)
        .into_par_iter()
        .map(|k| {
            let p = c.position(k as f64 / total as f64);
            p[0] * theta[0] + p[1] * theta[1]
        })
        .collect();
    let lo = u.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = u.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let width = (hi - lo).max(f64::MIN_POSITIVE) / bins as f64;
    let mut masses = vec![0.0; bins];
    for (i, &m) in r.masses().iter().enumerate() {
        if m == 0.0 {
            continue;
        }
        let piece = m / per_cell as f64;
        for k in i * per_cell..(i + 1) * per_cell {
            deposit(&mut masses, lo, width, u[k].min(u[k + 1]), u[k].max(u[k + 1]), piece);
        }
    }
    Ok(ProjectedMeasure { lo, hi, levels: out_levels, masses })
}

/// Spreads `mass` uniformly over `[a, b]` into the bins.
fn deposit(bins: &mut [f64], lo: f64, width: f64, a: f64, b: f64, mass: f64) {
    let last = bins.len() - 1;
    let index = |x: f64| (((x - lo) / width).floor().max(0.0) as usize).min(last);
    let (ia, ib) = (index(a), index(b));
    if ia == ib || b <= a {
        bins[ia] += mass;
        return;
    }
    let density = mass / (b - a);
    let mut placed = 0.0;
    for (k, bin) in bins.iter_mut().enumerate().take(ib).skip(ia) {
        let right = lo + (k + 1) as f64 * width;
        let left = if k == ia { a } else { lo + k as f64 * width };
        let share = density * (right - left);
        *bin += share;
        placed += share;
    }
    bins[ib] += mass - placed;
}
