//! Run configuration shared by every subcommand; serialises to JSON and is
//! read back from `--config` files.

use std::path::PathBuf;

use curvecascade::curve::{CurveDescriptor, CurveSpec};
use curvecascade::fourier::{FrequencyPlan, Support};
use curvecascade::verify::Suite;
use curvecascade::weights::WeightModel;
use curvecascade::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Subcommand {
    Profile,
    Simulate,
    Fourier,
    Spherical,
    Dim2,
    Verify,
}

impl Subcommand {
    pub fn name(self) -> &'static str {
        match self {
            Subcommand::Profile => "profile",
            Subcommand::Simulate => "simulate",
            Subcommand::Fourier => "fourier",
            Subcommand::Spherical => "spherical",
            Subcommand::Dim2 => "dim2",
            Subcommand::Verify => "verify",
        }
    }
}

/// `"flat"` or a curve descriptor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SupportConfig {
    Named(String),
    Curve(CurveDescriptor),
}

impl SupportConfig {
    pub fn flat() -> Self {
        SupportConfig::Named("flat".into())
    }

    pub fn build(&self) -> Result<Support> {
        match self {
            SupportConfig::Named(s) if s == "flat" => Ok(Support::Flat),
            SupportConfig::Named(s) => {
                let desc = CurveDescriptor { family: s.clone(), params: Default::default() };
                Ok(Support::Curve(CurveSpec::from_descriptor(&desc)?))
            }
            SupportConfig::Curve(d) => Ok(Support::Curve(CurveSpec::from_descriptor(d)?)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadiiConfig {
    pub k0: i32,
    pub k1: i32,
    pub base: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LevelRange {
    pub n_min: u32,
    pub n_max: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub subcommand: Subcommand,
    pub model: WeightModel,
    pub support: SupportConfig,
    pub depth: u32,
    pub seeds: Vec<u64>,
    pub radii: RadiiConfig,
    pub n_theta: usize,
    pub radial_samples: usize,
    pub enrich_normals: bool,
    /// Finite exponents of the reported spherical averages; the sup column is
    /// always present.
    pub p_values: Vec<f64>,
    pub tol: f64,
    pub dim2_levels: LevelRange,
    pub q_grid: Vec<f64>,
    pub suite: Suite,
    pub output: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            subcommand: Subcommand::Profile,
            model: WeightModel::lognormal(0.09, 2, 1).expect("valid default"),
            support: SupportConfig::flat(),
            depth: 14,
            seeds: vec![0],
            radii: RadiiConfig { k0: 4, k1: 11, base: 2 },
            n_theta: 256,
            radial_samples: 32,
            enrich_normals: true,
            p_values: vec![1.0, 2.0, 4.0],
            tol: 1e-10,
            dim2_levels: LevelRange { n_min: 8, n_max: 16 },
            q_grid: (1..=32).map(|k| f64::from(k) * 0.25).collect(),
            suite: Suite::Trivial,
            output: None,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.seeds.is_empty() {
            return Err(Error::InvalidParams("seed list is empty".into()));
        }
        if self.p_values.iter().any(|p| !(p.is_finite() && *p >= 1.0)) {
            return Err(Error::InvalidParams("p values must be finite and >= 1".into()));
        }
        if self.radii.k0 >= self.radii.k1 || self.radii.base < 2 {
            return Err(Error::InvalidParams("need k0 < k1 and base >= 2".into()));
        }
        if self.q_grid.iter().any(|q| !(*q >= 0.0 && q.is_finite())) {
            return Err(Error::InvalidParams("q grid must be finite and nonnegative".into()));
        }
        if !(self.tol >= 1e-12) {
            return Err(Error::InvalidParams(format!("tolerance {} is below 1e-12", self.tol)));
        }
        self.support.build()?;
        self.plan().validate()
    }

    pub fn plan(&self) -> FrequencyPlan {
        FrequencyPlan::dyadic(self.radii.base, self.radii.k0, self.radii.k1)
            .with_n_theta(self.n_theta)
            .with_radial_samples(self.radial_samples)
            .with_enrich_normals(self.enrich_normals)
            .with_p_values(self.p_values.clone())
    }
}
