//! Tail bound for weighted sums of independent zero-mean variables with a
//! polynomial tail `P(|X| > t) <= c_phi t^-p`, and a Monte Carlo check.
//!
//! The bound is `N c_phi M^-p + exp(-lambda t + K lambda^2 sum a_k^2)` with
//! `lambda = q ln M / (M max a_k)`; `K` stands in for the unspecified
//! second-order constant.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{KeyedRng, NodeKey};

pub const DEFAULT_K: f64 = 8.0;
const CHUNK: usize = 1024;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConcentrationInput {
    pub n: usize,
    pub c_phi: f64,
    pub p: f64,
    pub a: Vec<f64>,
    pub t: f64,
    pub m: f64,
    pub q: f64,
    pub k: f64,
}

impl ConcentrationInput {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidParams(m.to_string()));
        if self.a.len() != self.n || self.n == 0 {
            return bad("coefficient list must have N > 0 entries");
        }
        if self.a.iter().any(|a| !(*a >= 0.0 && a.is_finite())) {
            return bad("coefficients must be finite and nonnegative");
        }
        if self.a.iter().copied().fold(0.0, f64::max) == 0.0 {
            return bad("at least one coefficient must be positive");
        }
        if !(self.p > 4.0) || !(self.c_phi > 0.0) {
            return bad("need p > 4 and c_phi > 0");
        }
        if !(self.m > 1.0) || !(self.t > 0.0) {
            return bad("need M > 1 and t > 0");
        }
        if !(self.q > 0.0 && self.q <= self.p / 2.0 - 1.0) {
            return bad("need 0 < q <= p/2 - 1");
        }
        if !(self.k >= 0.0) {
            return bad("second-moment constant K must be nonnegative");
        }
        Ok(())
    }

    pub fn lambda(&self) -> f64 {
        let max_a = self.a.iter().copied().fold(0.0, f64::max);
        self.q * self.m.ln() / (self.m * max_a)
    }
}

pub fn concentration_bound(input: &ConcentrationInput) -> Result<f64> {
    input.validate()?;
    let lambda = input.lambda();
    let sum_sq: f64 = input.a.iter().map(|a| a * a).sum();
    let truncation = input.n as f64 * input.c_phi * input.m.powf(-input.p);
    Ok(truncation + (-lambda * input.t + input.k * lambda * lambda * sum_sq).exp())
}

/// Bounded zero-mean laws.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BoundedDistribution {
    /// `+-1` with equal probability.
    Rademacher,
    /// `hi` with probability `p_hi`, else `lo`.
    TwoPoint { hi: f64, lo: f64, p_hi: f64 },
    /// Uniform on `[-half_width, half_width]`.
    Uniform { half_width: f64 },
}

impl BoundedDistribution {
    pub fn validate(&self) -> Result<()> {
        match *self {
            BoundedDistribution::Rademacher => Ok(()),
            BoundedDistribution::TwoPoint { hi, lo, p_hi } => {
                if !(0.0..=1.0).contains(&p_hi) || !(lo <= hi) || (p_hi * hi + (1.0 - p_hi) * lo).abs() > 1e-12 {
                    return Err(Error::InvalidParams("two-point law must have zero mean".into()));
                }
                Ok(())
            }
            BoundedDistribution::Uniform { half_width } if half_width > 0.0 => Ok(()),
            BoundedDistribution::Uniform { .. } => Err(Error::InvalidParams("half width must be positive".into())),
        }
    }

    /// `sup |X|`.
    pub fn bound(&self) -> f64 {
        match *self {
            BoundedDistribution::Rademacher => 1.0,
            BoundedDistribution::TwoPoint { hi, lo, .. } => hi.abs().max(lo.abs()),
            BoundedDistribution::Uniform { half_width } => half_width,
        }
    }

    /// Largest value `X` can take.
    pub fn support_max(&self) -> f64 {
        match *self {
            BoundedDistribution::Rademacher => 1.0,
            BoundedDistribution::TwoPoint { hi, .. } => hi,
            BoundedDistribution::Uniform { half_width } => half_width,
        }
    }

    /// Smallest `c` with `P(|X| > t) <= c t^-p` for all `t > 0`.
    pub fn tail_constant(&self, p: f64) -> f64 {
        self.bound().powf(p)
    }

    fn sample(&self, rng: &mut KeyedRng) -> f64 {
        let u = rng.uniform();
        match *self {
            BoundedDistribution::Rademacher => {
                if u < 0.5 {
                    -1.0
                } else {
                    1.0
                }
            }
            BoundedDistribution::TwoPoint { hi, lo, p_hi } => {
                if u < p_hi {
                    hi
                } else {
                    lo
                }
            }
            BoundedDistribution::Uniform { half_width } => half_width * (2.0 * u - 1.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McOutcome {
    pub trials: usize,
    pub exceedances: usize,
    pub empirical: f64,
    pub stderr: f64,
    pub bound: f64,
}

impl McOutcome {
    pub fn holds(&self) -> bool {
        self.empirical <= self.bound
    }
}

/// Estimates `P(sum a_k X_k > t)` over `trials` draws and pairs it with the
/// bound for the same coefficients and threshold.
pub fn concentration_mc(
    dist: &BoundedDistribution,
    input: &ConcentrationInput,
    trials: usize,
    seed: u64,
) -> Result<McOutcome> {
    dist.validate()?;
    let bound = concentration_bound(input)?;
    if trials < 10_000 {
        return Err(Error::InvalidParams(format!("need at least 1e4 trials, got {trials}")));
    }
    let needed = dist.tail_constant(input.p);
    if input.c_phi < needed * (1.0 - 1e-12) {
        return Err(Error::InvalidParams(format!(
            "declared c_phi {} is below the tail constant {needed} of the law",
            input.c_phi
        )));
    }
    let chunks = trials.div_ceil(CHUNK);
    let exceedances: usize = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = KeyedRng::for_node(NodeKey::new(seed, 0, c as u64));
            let count = CHUNK.min(trials - c * CHUNK);
            (0..count)
                .filter(|_| input.a.iter().map(|a| a * dist.sample(&mut rng)).sum::<f64>() > input.t)
                .count()
        })
        .sum();
    let empirical = exceedances as f64 / trials as f64;
    let stderr = (empirical * (1.0 - empirical) / trials as f64).sqrt();
    Ok(McOutcome { trials, exceedances, empirical, stderr, bound })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub name: String,
    pub dist: BoundedDistribution,
    pub input: ConcentrationInput,
    /// Exact tail probability when known in closed form.
    pub exact_tail: Option<f64>,
}

/// Three settings in which the bound must hold: a long Rademacher sum far in
/// its tail, a threshold beyond the support, and a single variable.
pub fn builtin_scenarios() -> Vec<Scenario> {
    let p = 8.0;
    let rademacher = BoundedDistribution::Rademacher;
    let half = BoundedDistribution::TwoPoint { hi: 0.5, lo: -0.5, p_hi: 0.5 };
    vec![
        Scenario {
            name: "rademacher_tail".into(),
            dist: rademacher,
            input: ConcentrationInput {
                n: 256,
                c_phi: 1.0,
                p,
                a: vec![1.0 / 16.0; 256],
                t: 5.0,
                m: 1000.0,
                q: 3.0,
                k: DEFAULT_K,
            },
            exact_tail: None,
        },
        Scenario {
            name: "beyond_support".into(),
            dist: rademacher,
            input: ConcentrationInput { n: 16, c_phi: 1.0, p, a: vec![0.25; 16], t: 4.5, m: 2.0, q: 3.0, k: DEFAULT_K },
            exact_tail: Some(0.0),
        },
        Scenario {
            name: "single_variable".into(),
            dist: half,
            input: ConcentrationInput {
                n: 1,
                c_phi: half.tail_constant(p),
                p,
                a: vec![1.0],
                t: 0.25,
                m: 2.0,
                q: 3.0,
                k: DEFAULT_K,
            },
            exact_tail: Some(0.5),
        },
    ]
}
