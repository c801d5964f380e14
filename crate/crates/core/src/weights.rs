//! Random weight vectors driving the cascade.
//!
//! Every built-in family has i.i.d. unit-mean components, so the normalisation
//! `E(sum_i W_i) = b^d` holds automatically and all moments are finite.

use std::collections::BTreeMap;

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{KeyedRng, NodeKey};

/// Tolerance on the two-point mean constraint `p w+ + (1-p) w- = 1`.
pub const MEAN_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WeightFamily {
    /// `W == 1`; the cascade is Lebesgue measure.
    Deterministic,
    /// `W = exp(sigma N - sigma^2/2)` with `sigma^2 = 2 lambda ln b`, so that
    /// `E(W^q) = b^(lambda q (q-1))`.
    Lognormal { lambda: f64 },
    /// `W = w_plus` with probability `p`, else `w_minus`.
    TwoPoint { w_plus: f64, w_minus: f64, p: f64 },
}

/// A validated weight distribution on base `b` and spatial dimension `d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ModelDescriptor", into = "ModelDescriptor")]
pub struct WeightModel {
    family: WeightFamily,
    b: u32,
    d: u32,
}

impl WeightModel {
    pub fn new(family: WeightFamily, b: u32, d: u32) -> Result<Self> {
        if b < 2 {
            return Err(Error::InvalidParams(format!("base b = {b} must be at least 2")));
        }
        if d < 1 {
            return Err(Error::InvalidParams("spatial dimension d must be at least 1".into()));
        }
        if (b as u64).checked_pow(d).is_none_or(|c| c > u32::MAX as u64) {
            return Err(Error::InvalidParams(format!("branch count {b}^{d} is too large")));
        }
        match family {
            WeightFamily::Deterministic => {}
            WeightFamily::Lognormal { lambda } => {
                if !(lambda > 0.0 && lambda.is_finite()) {
                    return Err(Error::InvalidParams(format!("lambda = {lambda} must be positive")));
                }
            }
            WeightFamily::TwoPoint { w_plus, w_minus, p } => {
                if !(w_minus > 0.0 && w_minus < 1.0 && w_plus > 1.0 && w_plus.is_finite()) {
                    return Err(Error::InvalidParams(format!(
                        "two-point values need w+ > 1 > w- > 0, got w+ = {w_plus}, w- = {w_minus}"
                    )));
                }
                if !(p > 0.0 && p < 1.0) {
                    return Err(Error::InvalidParams(format!("p = {p} must lie in (0, 1)")));
                }
                let mean = p * w_plus + (1.0 - p) * w_minus;
                if (mean - 1.0).abs() > MEAN_TOLERANCE {
                    return Err(Error::InvalidParams(format!("two-point mean is {mean}, not 1")));
                }
            }
        }
        Ok(Self { family, b, d })
    }

    pub fn deterministic(b: u32, d: u32) -> Result<Self> {
        Self::new(WeightFamily::Deterministic, b, d)
    }

    pub fn lognormal(lambda: f64, b: u32, d: u32) -> Result<Self> {
        Self::new(WeightFamily::Lognormal { lambda }, b, d)
    }

    pub fn two_point(w_plus: f64, w_minus: f64, p: f64, b: u32, d: u32) -> Result<Self> {
        Self::new(WeightFamily::TwoPoint { w_plus, w_minus, p }, b, d)
    }

    pub fn family(&self) -> WeightFamily {
        self.family
    }

    pub fn base(&self) -> u32 {
        self.b
    }

    pub fn dim(&self) -> u32 {
        self.d
    }

    /// `b^d`, the number of children per node.
    pub fn branch_count(&self) -> usize {
        (self.b as usize).pow(self.d)
    }

    fn sigma(&self) -> f64 {
        match self.family {
            WeightFamily::Lognormal { lambda } => (2.0 * lambda * f64::from(self.b).ln()).sqrt(),
            _ => 0.0,
        }
    }

    /// Largest value a weight can take, if bounded.
    pub fn max_weight(&self) -> Option<f64> {
        match self.family {
            WeightFamily::Deterministic => Some(1.0),
            WeightFamily::Lognormal { .. } => None,
            WeightFamily::TwoPoint { w_plus, .. } => Some(w_plus),
        }
    }

    /// Fills `out` (length `b^d`) with the weight tuple attached to `key`.
    ///
    /// The tuple depends only on the key, so repeated queries are
    /// bit-identical and distinct keys give independent draws.
    pub fn sample_into(&self, key: NodeKey, out: &mut [f64]) {
        debug_assert_eq!(out.len(), self.branch_count());
        match self.family {
            WeightFamily::Deterministic => out.fill(1.0),
            WeightFamily::Lognormal { .. } => {
                let mut rng = KeyedRng::for_node(key);
                let sigma = self.sigma();
                let shift = 0.5 * sigma * sigma;
                for w in out.iter_mut() {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    *w = (sigma * z - shift).exp();
                }
            }
            WeightFamily::TwoPoint { w_plus, w_minus, p } => {
                let mut rng = KeyedRng::for_node(key);
                for w in out.iter_mut() {
                    *w = if rng.uniform() < p { w_plus } else { w_minus };
                }
            }
        }
    }

    pub fn sample_weights(&self, key: NodeKey) -> Vec<f64> {
        let mut out = vec![0.0; self.branch_count()];
        self.sample_into(key, &mut out);
        out
    }

    /// Exact `E(W_i^q)` for `q >= 0`.
    pub fn marginal_moment(&self, q: f64) -> f64 {
        match self.family {
            WeightFamily::Deterministic => 1.0,
            WeightFamily::Lognormal { lambda } => f64::from(self.b).powf(lambda * q * (q - 1.0)),
            WeightFamily::TwoPoint { w_plus, w_minus, p } => {
                p * w_plus.powf(q) + (1.0 - p) * w_minus.powf(q)
            }
        }
    }

    /// `ln E(W^q)`, evaluated without overflow for large `q`.
    pub fn log_moment(&self, q: f64) -> f64 {
        match self.family {
            WeightFamily::Deterministic => 0.0,
            WeightFamily::Lognormal { lambda } => lambda * q * (q - 1.0) * f64::from(self.b).ln(),
            WeightFamily::TwoPoint { w_plus, w_minus, p } => {
                let ratio = (1.0 - p) / p * (w_minus / w_plus).powf(q);
                p.ln() + q * w_plus.ln() + ratio.ln_1p()
            }
        }
    }

    /// `E(W^q ln W) / E(W^q)`, the derivative of `ln E(W^q)`; `None` when the
    /// family has no closed form.
    pub fn log_moment_derivative(&self, q: f64) -> Option<f64> {
        match self.family {
            WeightFamily::Deterministic => Some(0.0),
            WeightFamily::Lognormal { lambda } => {
                Some(lambda * (2.0 * q - 1.0) * f64::from(self.b).ln())
            }
            WeightFamily::TwoPoint { w_plus, w_minus, p } => {
                let ratio = (1.0 - p) / p * (w_minus / w_plus).powf(q);
                Some(w_plus.ln() + ratio * (w_minus.ln() - w_plus.ln()) / (1.0 + ratio))
            }
        }
    }

    /// Upper bound `Phi(t)` on `P(max_j W_j > t + 1)`.
    ///
    /// Bounded families return the exact probability. Lognormal weights return
    /// `c t^(-p_exponent)`, where `c` is the supremum over `t` of `t^p` times
    /// the union of Gaussian Chernoff bounds `exp(-x^2/2)`.
    pub fn tail_bound(&self, t: f64, p_exponent: f64) -> f64 {
        if !(t > 0.0) {
            return 1.0;
        }
        let branches = self.branch_count() as f64;
        match self.family {
            WeightFamily::Deterministic => 0.0,
            WeightFamily::TwoPoint { w_plus, p, .. } => {
                if w_plus > t + 1.0 {
                    1.0 - (1.0 - p).powf(branches)
                } else {
                    0.0
                }
            }
            WeightFamily::Lognormal { .. } => {
                let sigma = self.sigma();
                let log_chernoff = |s: f64| -> f64 {
                    let x = (s.ln() + 0.5 * sigma * sigma) / sigma;
                    if x <= 0.0 {
                        0.0
                    } else {
                        (branches.ln() - 0.5 * x * x).min(0.0)
                    }
                };
                let objective = |u: f64| p_exponent * u + log_chernoff(u.exp() + 1.0);
                let c = sup_on_line(objective, -30.0, 30.0).max(objective(t.ln())).exp();
                c * (1.0 + 1e-9) * t.powf(-p_exponent)
            }
        }
    }
}

/// Grid search plus golden-section refinement of a unimodal-ish objective.
fn sup_on_line(f: impl Fn(f64) -> f64, lo: f64, hi: f64) -> f64 {
    let steps = 6000;
    let h = (hi - lo) / steps as f64;
    let (mut best_u, mut best) = (lo, f(lo));
    for k in 1..=steps {
        let u = lo + k as f64 * h;
        let v = f(u);
        if v > best {
            best = v;
            best_u = u;
        }
    }
    let (mut a, mut b) = (best_u - h, best_u + h);
    let g = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..80 {
        let c = b - g * (b - a);
        let e = a + g * (b - a);
        if f(c) > f(e) {
            b = e;
        } else {
            a = c;
        }
    }
    best.max(f(0.5 * (a + b)))
}

/// JSON shape `{family, params, b, d}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct ModelDescriptor {
    family: String,
    #[serde(default)]
    params: BTreeMap<String, f64>,
    b: u32,
    d: u32,
}

impl From<WeightModel> for ModelDescriptor {
    fn from(m: WeightModel) -> Self {
        let mut params = BTreeMap::new();
        let family = match m.family {
            WeightFamily::Deterministic => "deterministic",
            WeightFamily::Lognormal { lambda } => {
                params.insert("lambda".to_string(), lambda);
                "lognormal"
            }
            WeightFamily::TwoPoint { w_plus, w_minus, p } => {
                params.insert("w_plus".to_string(), w_plus);
                params.insert("w_minus".to_string(), w_minus);
                params.insert("p".to_string(), p);
                "two_point"
            }
        };
        Self { family: family.to_string(), params, b: m.b, d: m.d }
    }
}

impl TryFrom<ModelDescriptor> for WeightModel {
    type Error = Error;

    fn try_from(desc: ModelDescriptor) -> Result<Self> {
        let get = |name: &str| {
            desc.params.get(name).copied().ok_or_else(|| {
                Error::InvalidParams(format!("{} model needs parameter `{name}`", desc.family))
            })
        };
        let family = match desc.family.as_str() {
            "deterministic" => WeightFamily::Deterministic,
            "lognormal" => WeightFamily::Lognormal { lambda: get("lambda")? },
            "two_point" | "twopoint" => WeightFamily::TwoPoint {
                w_plus: get("w_plus")?,
                w_minus: get("w_minus")?,
                p: get("p")?,
            },
            other => return Err(Error::InvalidParams(format!("unknown weight family `{other}`"))),
        };
        WeightModel::new(family, desc.b, desc.d)
    }
}
