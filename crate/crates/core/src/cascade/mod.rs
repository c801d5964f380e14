//! Seeded finite-depth cascade realizations `nu_n` on b-adic cells.
//!
//! Masses are stored level-`n` only, in address order: the children of cell
//! `i` at level `l` are cells `i * b^d + c`, `c` in `0..b^d`, so every
//! level-`j` cell owns a contiguous block of the table.

mod stats;

pub use stats::{
    dim2_estimate, epsilon, min_pointwise_dim, moment_sum_s, moment_sums_by_level,
    scale_statistics, subtree_moment, y_statistic, ScaleEntry, ScaleStatistics,
};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::numeric::NeumaierSum;
use crate::rng::NodeKey;
use crate::weights::WeightModel;

/// Largest cell table a realization may allocate.
pub const MAX_CELLS: u64 = 1 << 28;

/// Number of cells `b^(d n)`, or `DepthTooLarge` past [`MAX_CELLS`].
pub fn cell_count(model: &WeightModel, depth: u32) -> Result<usize> {
    let cells = (model.branch_count() as u128).checked_pow(depth).unwrap_or(u128::MAX);
    if cells > u128::from(MAX_CELLS) {
        return Err(Error::DepthTooLarge { depth, cells, limit: MAX_CELLS });
    }
    Ok(cells as usize)
}

/// A cell of the b-adic filtration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct BadicAddress {
    pub level: u32,
    pub index: u64,
}

impl BadicAddress {
    pub fn new(level: u32, index: u64) -> Self {
        Self { level, index }
    }

    pub fn root() -> Self {
        Self { level: 0, index: 0 }
    }

    pub fn is_valid(&self, branch_count: u64) -> bool {
        branch_count.checked_pow(self.level).is_some_and(|n| self.index < n)
    }

    pub fn parent(&self, branch_count: u64) -> Option<Self> {
        (self.level > 0).then(|| Self { level: self.level - 1, index: self.index / branch_count })
    }

    pub fn child(&self, branch_count: u64, digit: u64) -> Self {
        Self { level: self.level + 1, index: self.index * branch_count + digit }
    }

    /// Integer corner coordinates: the cell is `corner * b^-level + [0, b^-level)^d`.
    ///
    /// Digit `c` in `0..b^d` moves coordinate `m` by `(c / b^m) % b`.
    pub fn corner(&self, b: u32, d: u32) -> Vec<u64> {
        let b = u64::from(b);
        let bd = b.pow(d);
        let mut coords = vec![0u64; d as usize];
        let mut idx = self.index;
        let mut scale = 1u64;
        for _ in 0..self.level {
            let digit = idx % bd;
            idx /= bd;
            let mut c = digit;
            for coord in coords.iter_mut() {
                *coord += (c % b) * scale;
                c /= b;
            }
            scale *= b;
        }
        coords
    }
}

/// One realization of `nu_n`: `masses[i] = b^(-d n) * (product of weights on
/// the path to cell i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CascadeRealization {
    model: WeightModel,
    depth: u32,
    seed: u64,
    masses: Vec<f64>,
}

impl CascadeRealization {
    /// Builds `nu_n` level by level from the counter-keyed weights.
    pub fn generate(model: &WeightModel, depth: u32, seed: u64) -> Result<Self> {
        cell_count(model, depth)?;
        let root = Self { model: model.clone(), depth: 0, seed, masses: vec![1.0] };
        root.refine(depth)
    }

    /// Deepens to `depth_new`, reusing the existing levels unchanged; the
    /// result is bit-identical to `generate(model, depth_new, seed)`.
    pub fn refine(mut self, depth_new: u32) -> Result<Self> {
        if depth_new < self.depth {
            return Err(Error::BadLevel { level: depth_new, depth: self.depth });
        }
        cell_count(&self.model, depth_new)?;
        let bd = self.model.branch_count();
        let divisor = bd as f64;
        for level in self.depth..depth_new {
            let mut next = vec![0.0; self.masses.len() * bd];
            let (model, seed) = (&self.model, self.seed);
            next.par_chunks_mut(bd).zip(self.masses.par_iter()).enumerate().for_each(
                |(i, (children, &parent))| {
                    model.sample_into(NodeKey::new(seed, level, i as u64), children);
                    for w in children.iter_mut() {
                        *w = parent * *w / divisor;
                    }
                },
            );
            self.masses = next;
        }
        self.depth = depth_new;
        Ok(self)
    }

    /// Rebuilds a realization from stored masses (e.g. a mass file).
    pub fn from_masses(model: &WeightModel, depth: u32, seed: u64, masses: Vec<f64>) -> Result<Self> {
        let cells = cell_count(model, depth)?;
        if masses.len() != cells {
            return Err(Error::InvalidParams(format!(
                "expected {cells} masses at depth {depth}, got {}",
                masses.len()
            )));
        }
        if masses.iter().any(|m| !(*m >= 0.0)) {
            return Err(Error::InvalidParams("masses must be nonnegative".into()));
        }
        Ok(Self { model: model.clone(), depth, seed, masses })
    }

    pub fn model(&self) -> &WeightModel {
        &self.model
    }

    pub fn depth(&self) -> u32 {
        self.depth
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn base(&self) -> u32 {
        self.model.base()
    }

    pub fn dim(&self) -> u32 {
        self.model.dim()
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn total_mass(&self) -> f64 {
        self.masses.iter().copied().collect::<NeumaierSum>().value()
    }

    /// Level-`level` aggregated masses `nu_n(I)`, `I` in `Q_level`.
    pub fn aggregated(&self, level: u32) -> Result<Vec<f64>> {
        if level > self.depth {
            return Err(Error::BadLevel { level, depth: self.depth });
        }
        let block = self.model.branch_count().pow(self.depth - level);
        Ok(self
            .masses
            .chunks(block)
            .map(|c| c.iter().copied().collect::<NeumaierSum>().value())
            .collect())
    }

    /// `nu_j(I)` for the level-`j` cell `index`, recomputed from the weights
    /// on its ancestor path (independent of the stored table).
    pub fn coarse_mass(&self, level: u32, index: u64) -> Result<f64> {
        let bd = self.model.branch_count() as u64;
        let addr = BadicAddress::new(level, index);
        if !addr.is_valid(bd) {
            return Err(Error::BadCell { level, index });
        }
        let mut path = Vec::with_capacity(level as usize);
        let mut cur = addr;
        while let Some(parent) = cur.parent(bd) {
            path.push((parent, (cur.index % bd) as usize));
            cur = parent;
        }
        let divisor = bd as f64;
        let mut weights = vec![0.0; bd as usize];
        let mut mass = 1.0;
        for (parent, digit) in path.into_iter().rev() {
            self.model.sample_into(NodeKey::new(self.seed, parent.level, parent.index), &mut weights);
            mass = mass * weights[digit] / divisor;
        }
        Ok(mass)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lognormal() -> WeightModel {
        WeightModel::lognormal(0.09, 2, 1).unwrap()
    }

    #[test]
    fn depth_zero_is_unit_mass() {
        let r = CascadeRealization::generate(&lognormal(), 0, 9).unwrap();
        assert_eq!(r.masses(), &[1.0]);
    }

    #[test]
    fn deterministic_is_uniform() {
        let det = WeightModel::deterministic(2, 1).unwrap();
        let r = CascadeRealization::generate(&det, 10, 1).unwrap();
        assert_eq!(r.masses().len(), 1024);
        assert!(r.masses().iter().all(|&m| m == 2f64.powi(-10)));
    }

    #[test]
    fn refine_matches_generate_bitwise() {
        for model in [lognormal(), WeightModel::two_point(1.5, 0.5, 0.5, 2, 1).unwrap()] {
            let shallow = CascadeRealization::generate(&model, 8, 77).unwrap();
            let deep = CascadeRealization::generate(&model, 12, 77).unwrap();
            assert_eq!(shallow.refine(12).unwrap(), deep);
        }
    }

    #[test]
    fn same_seed_same_masses() {
        let a = CascadeRealization::generate(&lognormal(), 9, 5).unwrap();
        let b = CascadeRealization::generate(&lognormal(), 9, 5).unwrap();
        let c = CascadeRealization::generate(&lognormal(), 9, 6).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert!(a.masses().iter().all(|&m| m >= 0.0));
    }

    #[test]
    fn depth_guard() {
        let m = WeightModel::deterministic(2, 2).unwrap();
        assert!(matches!(
            CascadeRealization::generate(&m, 15, 0),
            Err(Error::DepthTooLarge { .. })
        ));
        assert!(cell_count(&m, 14).is_ok());
    }

    #[test]
    fn coarse_mass_matches_shallow_generation() {
        let model = lognormal();
        let deep = CascadeRealization::generate(&model, 10, 3).unwrap();
        let shallow = CascadeRealization::generate(&model, 4, 3).unwrap();
        for (i, &m) in shallow.masses().iter().enumerate() {
            assert_eq!(deep.coarse_mass(4, i as u64).unwrap(), m);
        }
        assert!(deep.coarse_mass(4, 16).is_err());
    }

    #[test]
    fn address_parent_and_corner() {
        let a = BadicAddress::new(3, 5);
        assert_eq!(a.parent(2), Some(BadicAddress::new(2, 2)));
        assert_eq!(a.corner(2, 1), vec![5]);
        assert_eq!(BadicAddress::root().parent(4), None);
        // d = 2, b = 2: digit c -> (c % 2, c / 2)
        let cell = BadicAddress::root().child(4, 3).child(4, 1);
        assert_eq!(cell.corner(2, 2), vec![3, 2]);
        assert_eq!(cell.parent(4).unwrap().index, 3);
    }

    #[test]
    fn aggregated_levels_sum_to_total() {
        let r = CascadeRealization::generate(&lognormal(), 8, 2).unwrap();
        let total = r.total_mass();
        for j in 0..=8 {
            let agg = r.aggregated(j).unwrap();
            assert_eq!(agg.len(), 1 << j);
            let s: f64 = agg.iter().sum();
            assert!((s - total).abs() < 1e-12);
        }
    }
}
