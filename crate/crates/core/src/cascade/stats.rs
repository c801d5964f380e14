//! Scale statistics of a realization: the nested norms `S(p,q,j,n)`, the
//! normalised subtree moments `Y_{j,n}(q,I)`, the excess `epsilon_{p,q,n}`,
//! and finite-depth dimension proxies.
//!
//! Exponents `p`, `q` are `>= 1`; `f64::INFINITY` selects the sup norm.

use serde::Serialize;

use super::CascadeRealization;
use crate::error::{Error, Result};
use crate::estimators::fit::{fit_line, DecayFit};
use crate::numeric::NeumaierSum;
use crate::rng::NodeKey;
use crate::structure::tau_tilde_rate;
use crate::weights::WeightModel;

fn check_exponent(p: f64) -> Result<()> {
    if p >= 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParams(format!("norm exponent {p} must be >= 1 or infinite")))
    }
}

/// `(sum x^p)^(1/p)`, or the max for `p = inf`; scaled by the max to avoid
/// underflow of tiny masses raised to large powers.
fn lp_norm(xs: &[f64], p: f64) -> f64 {
    let max = xs.iter().copied().fold(0.0, f64::max);
    if p.is_infinite() {
        return max;
    }
    if p == 1.0 {
        return xs.iter().copied().collect::<NeumaierSum>().value();
    }
    if max == 0.0 {
        return 0.0;
    }
    let s: NeumaierSum = xs.iter().map(|&x| (x / max).powf(p)).collect();
    max * s.value().powf(1.0 / p)
}

/// `S(p, q, j, n)` for one level `j`.
pub fn moment_sum_s(r: &CascadeRealization, p: f64, q: f64, level: u32) -> Result<f64> {
    check_exponent(p)?;
    check_exponent(q)?;
    let n = r.depth();
    if level > n {
        return Err(Error::BadLevel { level, depth: n });
    }
    if p.is_infinite() && q.is_infinite() {
        return Ok(lp_norm(r.masses(), f64::INFINITY));
    }
    let block = r.model().branch_count().pow(n - level);
    let inner: Vec<f64> = r.masses().chunks(block).map(|c| lp_norm(c, q)).collect();
    Ok(lp_norm(&inner, p))
}

/// `S(p, q, j, n)` for `j = 0..=n`.
pub fn moment_sums_by_level(r: &CascadeRealization, p: f64, q: f64) -> Result<Vec<f64>> {
    (0..=r.depth()).map(|j| moment_sum_s(r, p, q, j)).collect()
}

/// `S(q, I, n) = (sum_{J in I} nu_n(J)^q)^(1/q)` for one level-`j` cell.
pub fn subtree_moment(r: &CascadeRealization, q: f64, level: u32, index: u64) -> Result<f64> {
    check_exponent(q)?;
    let n = r.depth();
    if level > n {
        return Err(Error::BadLevel { level, depth: n });
    }
    let block = r.model().branch_count().pow(n - level);
    let start = index as usize * block;
    let cells = r
        .masses()
        .get(start..start + block)
        .ok_or(Error::BadCell { level, index })?;
    Ok(lp_norm(cells, q))
}

/// `Y_{j,n}(q, I)`: the level-`n` total mass of the `W_q` cascade started at
/// cell `I`, rebuilt from the weights strictly below level `j`.
///
/// With `m(J) = b^(-n d) * prod(weights below j)` this is
/// `b^(n d q) (sum_i E W_i^q)^(-(n-j)) sum_J m(J)^q`, which is identically 1
/// for the deterministic model.
pub fn y_statistic(r: &CascadeRealization, q: f64, level: u32, index: u64) -> Result<f64> {
    check_exponent(q)?;
    let n = r.depth();
    if level > n {
        return Err(Error::BadLevel { level, depth: n });
    }
    let model = r.model();
    let bd = model.branch_count();
    if (bd as u128).pow(level) <= u128::from(index) {
        return Err(Error::BadCell { level, index });
    }
    let mut products = vec![1.0];
    let mut weights = vec![0.0; bd];
    for l in level..n {
        let first = index * (bd as u64).pow(l - level);
        let mut next = Vec::with_capacity(products.len() * bd);
        for (k, &prod) in products.iter().enumerate() {
            model.sample_into(NodeKey::new(r.seed(), l, first + k as u64), &mut weights);
            next.extend(weights.iter().map(|w| prod * w));
        }
        products = next;
    }
    let sum: NeumaierSum = products.iter().map(|x| x.powf(q)).collect();
    let ln_branch_moment = f64::from(model.dim()) * f64::from(model.base()).ln() + model.log_moment(q);
    Ok((sum.value().ln() - f64::from(n - level) * ln_branch_moment).exp())
}

/// `epsilon_{p,q,n}`: the largest normalised excess of `log_b S(p,q,j,n)`
/// over `-j tilde tau(p)/p - (n-j) tilde tau(q)/q`.
pub fn epsilon(r: &CascadeRealization, p: f64, q: f64) -> Result<f64> {
    let n = r.depth();
    if n == 0 {
        return Err(Error::BadLevel { level: 0, depth: 0 });
    }
    let sums = moment_sums_by_level(r, p, q)?;
    excess_from_sums(r.model(), &sums, p, q)
}

fn excess_from_sums(model: &WeightModel, sums: &[f64], p: f64, q: f64) -> Result<f64> {
    let n = (sums.len() - 1) as f64;
    let rate_p = tau_tilde_rate(model, p)?;
    let rate_q = tau_tilde_rate(model, q)?;
    let ln_b = f64::from(model.base()).ln();
    let mut best = f64::NEG_INFINITY;
    for (j, &s) in sums.iter().enumerate() {
        if s <= 0.0 {
            return Err(Error::AllMassZero);
        }
        let j = j as f64;
        best = best.max(s.ln() / ln_b + j * rate_p + (n - j) * rate_q);
    }
    Ok(best / n)
}

#[derive(Debug, Clone, Serialize)]
pub struct ScaleEntry {
    pub p: f64,
    pub q: f64,
    /// `S(p, q, j, n)` indexed by `j`.
    pub s: Vec<f64>,
    pub epsilon: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ScaleStatistics {
    pub depth: u32,
    pub entries: Vec<ScaleEntry>,
}

impl ScaleStatistics {
    pub fn get(&self, p: f64, q: f64) -> Option<&ScaleEntry> {
        self.entries.iter().find(|e| e.p == p && e.q == q)
    }
}

pub fn scale_statistics(r: &CascadeRealization, ps: &[f64], qs: &[f64]) -> Result<ScaleStatistics> {
    if r.depth() == 0 {
        return Err(Error::BadLevel { level: 0, depth: 0 });
    }
    let mut entries = Vec::with_capacity(ps.len() * qs.len());
    for &p in ps {
        for &q in qs {
            let s = moment_sums_by_level(r, p, q)?;
            let epsilon = excess_from_sums(r.model(), &s, p, q)?;
            entries.push(ScaleEntry { p, q, s, epsilon });
        }
    }
    Ok(ScaleStatistics { depth: r.depth(), entries })
}

/// Slope of `-log_b sum_I nu_n(I)^2` against `n` over `n_min..=n_max`,
/// deepening a single realization.
pub fn dim2_estimate(model: &WeightModel, seed: u64, n_min: u32, n_max: u32) -> Result<DecayFit> {
    if n_min < 2 || n_min >= n_max {
        return Err(Error::InvalidParams(format!(
            "need 2 <= n_min < n_max, got [{n_min}, {n_max}]"
        )));
    }
    super::cell_count(model, n_max)?;
    let ln_b = f64::from(model.base()).ln();
    let mut r = CascadeRealization::generate(model, n_min, seed)?;
    let mut points = Vec::with_capacity((n_max - n_min + 1) as usize);
    for n in n_min..=n_max {
        if n > r.depth() {
            r = r.refine(n)?;
        }
        let energy: NeumaierSum = r.masses().iter().map(|m| m * m).collect();
        if energy.value() <= 0.0 {
            return Err(Error::AllMassZero);
        }
        points.push((f64::from(n), -energy.value().ln() / ln_b));
    }
    fit_line(&points)
}

/// `min_I log_b nu_n(I) / (-n)` over cells with positive mass.
pub fn min_pointwise_dim(r: &CascadeRealization) -> Result<f64> {
    let n = r.depth();
    if n == 0 {
        return Err(Error::BadLevel { level: 0, depth: 0 });
    }
    let max = r.masses().iter().copied().fold(0.0, f64::max);
    if max <= 0.0 {
        return Err(Error::AllMassZero);
    }
    Ok(-max.ln() / f64::from(r.base()).ln() / f64::from(n))
}
