//! Fourier-dimension estimates over an ensemble of seeds.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::fit::DecayFit;
use crate::cascade::CascadeRealization;
use crate::error::{Error, Result};
use crate::fourier::{decay_profiles, DecaySampleSet, FrequencyPlan, Support};
use crate::numeric::NeumaierSum;
use crate::weights::WeightModel;

/// Which profile column is fitted.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecayColumn {
    Sup,
    Sigma(f64),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EnsembleProfiles {
    pub profiles: Vec<DecaySampleSet>,
    /// Seeds whose realization had zero total mass.
    pub discarded: Vec<u64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SeedFit {
    pub seed: u64,
    pub fit: DecayFit,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EnsembleEstimate {
    pub column: DecayColumn,
    pub mean: f64,
    /// Sample standard deviation; 0 for a single surviving seed.
    pub std: f64,
    pub fits: Vec<SeedFit>,
    pub discarded: Vec<u64>,
}

/// Profiles for every surviving seed, in seed-list order.
pub fn ensemble_profiles(
    model: &WeightModel,
    support: &Support,
    depth: u32,
    plan: &FrequencyPlan,
    seeds: &[u64],
) -> Result<EnsembleProfiles> {
    if seeds.len() < 2 {
        return Err(Error::InvalidParams(format!("need at least 2 seeds, got {}", seeds.len())));
    }
    let realizations: Vec<CascadeRealization> = seeds
        .par_iter()
        .map(|&s| CascadeRealization::generate(model, depth, s))
        .collect::<Result<_>>()?;
    profiles_of(realizations, support, plan)
}

/// Profiles of the given realizations after dropping those with zero mass.
pub fn profiles_of(
    realizations: Vec<CascadeRealization>,
    support: &Support,
    plan: &FrequencyPlan,
) -> Result<EnsembleProfiles> {
    let count = realizations.len();
    let (alive, dead): (Vec<_>, Vec<_>) = realizations.into_iter().partition(|r| r.total_mass() > 0.0);
    if alive.is_empty() {
        return Err(Error::AllExtinct(count));
    }
    Ok(EnsembleProfiles {
        profiles: decay_profiles(&alive, support, plan)?,
        discarded: dead.iter().map(|r| r.seed()).collect(),
    })
}

impl EnsembleProfiles {
    pub fn estimate(&self, column: DecayColumn) -> Result<EnsembleEstimate> {
        let fits: Vec<SeedFit> = self
            .profiles
            .iter()
            .map(|p| {
                let fit = match column {
                    DecayColumn::Sup => p.fit_sup()?,
                    DecayColumn::Sigma(q) => p.fit_sigma(q)?,
                };
                Ok(SeedFit { seed: p.metadata.seed, fit })
            })
            .collect::<Result<_>>()?;
        let (mean, std) = mean_std(fits.iter().map(|f| f.fit.fourier_dim_estimate));
        Ok(EnsembleEstimate { column, mean, std, fits, discarded: self.discarded.clone() })
    }
}

/// Mean and sample standard deviation, summed in input order.
pub fn mean_std(xs: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = xs.clone().count() as f64;
    let mean = xs.clone().collect::<NeumaierSum>().value() / n;
    if n < 2.0 {
        return (mean, 0.0);
    }
    let var = xs.map(|x| (x - mean).powi(2)).collect::<NeumaierSum>().value() / (n - 1.0);
    (mean, var.sqrt())
}

/// Ensemble mean and spread of the Fourier-dimension estimate from the sup
/// column.
pub fn ensemble_fourier_dim(
    model: &WeightModel,
    support: &Support,
    depth: u32,
    plan: &FrequencyPlan,
    seeds: &[u64],
) -> Result<EnsembleEstimate> {
    ensemble_profiles(model, support, depth, plan, seeds)?.estimate(DecayColumn::Sup)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn plan() -> FrequencyPlan {
        FrequencyPlan::dyadic(2, 3, 7).with_n_theta(16).with_radial_samples(4)
    }

    #[test]
    fn needs_two_seeds() {
        let m = WeightModel::lognormal(0.09, 2, 1).unwrap();
        assert!(ensemble_fourier_dim(&m, &Support::Flat, 8, &plan(), &[1]).is_err());
    }

    #[test]
    fn extinct_realizations_are_discarded() {
        let m = WeightModel::lognormal(0.09, 2, 1).unwrap();
        let mut rs: Vec<_> = (0..3).map(|s| CascadeRealization::generate(&m, 8, s).unwrap()).collect();
        rs.insert(1, CascadeRealization::from_masses(&m, 8, 99, vec![0.0; 256]).unwrap());
        let prof = profiles_of(rs, &Support::Flat, &plan()).unwrap();
        assert_eq!(prof.discarded, vec![99]);
        assert_eq!(prof.profiles.iter().map(|p| p.metadata.seed).collect::<Vec<_>>(), vec![0, 1, 2]);
        let dead: Vec<_> = (0..2).map(|s| CascadeRealization::from_masses(&m, 8, s, vec![0.0; 256]).unwrap()).collect();
        assert!(matches!(profiles_of(dead, &Support::Flat, &plan()), Err(Error::AllExtinct(2))));
    }

    #[test]
    fn deterministic_given_seed_list() {
        let m = WeightModel::lognormal(0.09, 2, 1).unwrap();
        let a = ensemble_fourier_dim(&m, &Support::Flat, 9, &plan(), &[3, 4, 5]).unwrap();
        let b = ensemble_fourier_dim(&m, &Support::Flat, 9, &plan(), &[3, 4, 5]).unwrap();
        assert_eq!(a.mean.to_bits(), b.mean.to_bits());
        assert_eq!(a.std.to_bits(), b.std.to_bits());
        assert_eq!(a.fits.len(), 3);
    }

    #[test]
    fn mean_std_values() {
        let (m, s) = mean_std([1.0, 2.0, 3.0].into_iter());
        assert_eq!(m, 2.0);
        assert!((s - 1.0).abs() < 1e-15);
    }
}
