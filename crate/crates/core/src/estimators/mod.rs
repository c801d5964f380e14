//! Empirical estimators built on cascades and their transforms.

pub mod concentration;
pub mod ensemble;
pub mod fit;
pub mod projection;

pub use concentration::{
    builtin_scenarios, concentration_bound, concentration_mc, BoundedDistribution, ConcentrationInput, McOutcome,
    Scenario,
};
pub use ensemble::{ensemble_fourier_dim, ensemble_profiles, mean_std, profiles_of, DecayColumn, EnsembleEstimate, EnsembleProfiles, SeedFit};
pub use fit::{fit_line, fit_power_law, DecayFit};
pub use projection::{project_measure, ProjectedMeasure};
