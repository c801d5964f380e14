//! Analytic multifractal quantities of a weight model: `tau`, `tau'`,
//! `tilde tau`, `q_max`, `alpha_min`, and the dimensions they predict.
//!
//! All logarithms are to base `b`.

use std::fmt;

use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::weights::{WeightFamily, WeightModel};

/// Upper end of the `q_max` search interval.
pub const Q_CAP: f64 = 512.0;
/// `g(q) = q tau'(q) - tau(q)` above `-Q_MAX_TOL` on the whole interval means
/// no root, i.e. `q_max = inf`.
pub const Q_MAX_TOL: f64 = 1e-9;

/// `tau(q) = d q - log_b(sum_i E(W_i^q))`, for `q >= 0`.
pub fn tau(model: &WeightModel, q: f64) -> f64 {
    let d = f64::from(model.dim());
    if q == 0.0 {
        return -d;
    }
    let ln_b = f64::from(model.base()).ln();
    d * q - d - model.log_moment(q) / ln_b
}

/// `tau'(q)`: closed form for the built-in families.
pub fn tau_prime(model: &WeightModel, q: f64) -> f64 {
    let d = f64::from(model.dim());
    let ln_b = f64::from(model.base()).ln();
    match model.log_moment_derivative(q) {
        Some(dlog) => d - dlog / ln_b,
        None => tau_prime_numeric(model, q),
    }
}

/// Richardson-extrapolated central difference of [`tau`], halving the step
/// until two successive estimates agree to 1e-10.
pub fn tau_prime_numeric(model: &WeightModel, q: f64) -> f64 {
    let central = |h: f64| (tau(model, q + h) - tau(model, q - h)) / (2.0 * h);
    let mut h = (0.25 * q).min(0.1);
    let richardson = |h: f64| (4.0 * central(0.5 * h) - central(h)) / 3.0;
    let mut prev = richardson(h);
    for _ in 0..30 {
        h *= 0.5;
        let next = richardson(h);
        if (next - prev).abs() < 1e-10 {
            return next;
        }
        prev = next;
    }
    prev
}

/// Kahane-Peyrière subcriticality, read as `tau'(1) > 0`.
pub fn check_subcritical(model: &WeightModel) -> bool {
    tau_prime(model, 1.0) > 0.0
}

fn require_subcritical(model: &WeightModel) -> Result<()> {
    let slope = tau_prime(model, 1.0);
    if slope > 0.0 {
        Ok(())
    } else {
        Err(Error::NotSubcritical { tau_prime_one: slope })
    }
}

/// `g(q) = q tau'(q) - tau(q)`, nonincreasing because `tau` is concave.
pub fn legendre_gap(model: &WeightModel, q: f64) -> f64 {
    q * tau_prime(model, q) - tau(model, q)
}

/// The root of `q tau'(q) = tau(q)` on `(1, Q_CAP]`, or `f64::INFINITY`.
pub fn q_max(model: &WeightModel) -> Result<f64> {
    require_subcritical(model)?;
    if legendre_gap(model, Q_CAP) >= -Q_MAX_TOL {
        return Ok(f64::INFINITY);
    }
    let (mut lo, mut hi) = (1.0, Q_CAP);
    while hi - lo > 1e-12 {
        let mid = 0.5 * (lo + hi);
        if legendre_gap(model, mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// `alpha_min = tau(q_max)/q_max`, or `lim tau'(q)` when `q_max = inf`.
pub fn alpha_min(model: &WeightModel) -> Result<f64> {
    let qm = q_max(model)?;
    if qm.is_finite() {
        return Ok(tau(model, qm) / qm);
    }
    let d = f64::from(model.dim());
    let ln_b = f64::from(model.base()).ln();
    Ok(match model.family() {
        WeightFamily::Deterministic => d,
        WeightFamily::TwoPoint { w_plus, .. } => d - w_plus.ln() / ln_b,
        WeightFamily::Lognormal { .. } => tau_prime(model, Q_CAP),
    })
}

/// `tilde tau(p)`: `tau(p)` up to `q_max`, linear with slope `alpha_min` beyond.
pub fn tau_tilde(model: &WeightModel, p: f64) -> Result<f64> {
    let qm = q_max(model)?;
    if p <= qm {
        Ok(tau(model, p))
    } else {
        Ok(p * tau(model, qm) / qm)
    }
}

/// `tilde tau(p) / p`, with the convention that `p = inf` gives `alpha_min`.
pub fn tau_tilde_rate(model: &WeightModel, p: f64) -> Result<f64> {
    if p.is_infinite() {
        alpha_min(model)
    } else {
        Ok(tau_tilde(model, p)? / p)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct MultifractalProfile {
    pub model: WeightModel,
    #[serde(serialize_with = "finite_or_inf")]
    pub q_max: f64,
    pub alpha_min: f64,
    pub tau_at_2: f64,
    pub tau_tilde_at_2: f64,
    pub dim2_predicted: f64,
    pub dim_f_flat_predicted: f64,
    pub dim_f_curve_predicted: f64,
    pub subcritical: bool,
}

fn finite_or_inf<S: Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if v.is_finite() {
        s.serialize_f64(*v)
    } else {
        s.serialize_str("inf")
    }
}

pub fn predicted_dims(model: &WeightModel) -> Result<MultifractalProfile> {
    require_subcritical(model)?;
    let tilde2 = tau_tilde(model, 2.0)?;
    let alpha = alpha_min(model)?;
    Ok(MultifractalProfile {
        model: model.clone(),
        q_max: q_max(model)?,
        alpha_min: alpha,
        tau_at_2: tau(model, 2.0),
        tau_tilde_at_2: tilde2,
        dim2_predicted: tilde2,
        dim_f_flat_predicted: tilde2.min(2.0),
        dim_f_curve_predicted: alpha,
        subcritical: true,
    })
}

impl fmt::Display for MultifractalProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let q_max = if self.q_max.is_finite() { format!("{:.10}", self.q_max) } else { "inf".into() };
        let rows = [
            ("q_max", q_max),
            ("alpha_min", format!("{:.10}", self.alpha_min)),
            ("tau(2)", format!("{:.10}", self.tau_at_2)),
            ("tilde_tau(2)", format!("{:.10}", self.tau_tilde_at_2)),
            ("dim2 (predicted)", format!("{:.10}", self.dim2_predicted)),
            ("dimF flat (predicted)", format!("{:.10}", self.dim_f_flat_predicted)),
            ("dimF curve (predicted)", format!("{:.10}", self.dim_f_curve_predicted)),
            ("subcritical", self.subcritical.to_string()),
        ];
        for (name, value) in rows {
            writeln!(f, "{name:<24}{value:>16}")?;
        }
        Ok(())
    }
}

/// One row of the `(q, tau, tau', tilde tau)` table.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct TauSample {
    pub q: f64,
    pub tau: f64,
    pub tau_prime: f64,
    pub tau_tilde: f64,
}

pub fn sample_tau(model: &WeightModel, qs: &[f64]) -> Result<Vec<TauSample>> {
    qs.iter()
        .map(|&q| {
            Ok(TauSample {
                q,
                tau: tau(model, q),
                tau_prime: if q > 0.0 { tau_prime(model, q) } else { tau_prime_numeric(model, 1e-6) },
                tau_tilde: if q > 0.0 { tau_tilde(model, q)? } else { tau(model, 0.0) },
            })
        })
        .collect()
}
