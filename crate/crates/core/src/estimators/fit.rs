//! Least-squares line and power-law fits.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::NeumaierSum;

/// A fitted line `y = slope * x + intercept`; for power-law fits `x` and `y`
/// are base-`b` logarithms of radius and magnitude.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub points: Vec<(f64, f64)>,
    pub slope: f64,
    pub intercept: f64,
    /// Residual-based standard error of the slope.
    pub stderr: f64,
    /// `-2 * slope`: the Fourier dimension implied by `|hat mu| ~ r^slope`.
    pub fourier_dim_estimate: f64,
}

/// Ordinary least squares on points sorted by `x`, so any permutation of the
/// input yields the same bits.
pub fn fit_line(points: &[(f64, f64)]) -> Result<DecayFit> {
    if points.len() < 3 {
        return Err(Error::TooFewPoints(points.len()));
    }
    let mut pts = points.to_vec();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    if pts.windows(2).any(|w| w[0].0 == w[1].0) {
        return Err(Error::InvalidParams("abscissae must be distinct".into()));
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).collect::<NeumaierSum>().value() / n;
    let my = pts.iter().map(|p| p.1).collect::<NeumaierSum>().value() / n;
    let sxx = pts.iter().map(|p| (p.0 - mx).powi(2)).collect::<NeumaierSum>().value();
    let sxy = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).collect::<NeumaierSum>().value();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ssr = pts
        .iter()
        .map(|p| (p.1 - (slope * p.0 + intercept)).powi(2))
        .collect::<NeumaierSum>()
        .value();
    let stderr = (ssr / (n - 2.0) / sxx).sqrt();
    Ok(DecayFit { points: pts, slope, intercept, stderr, fourier_dim_estimate: -2.0 * slope })
}

fn log_base(x: f64, base: f64) -> f64 {
    if base == 2.0 {
        x.log2()
    } else {
        x.ln() / base.ln()
    }
}

/// Fits `magnitude ~ r^slope` on `(log_b r, log_b magnitude)`.
pub fn fit_power_law(samples: &[(f64, f64)], base: f64) -> Result<DecayFit> {
    if samples.len() < 3 {
        return Err(Error::TooFewPoints(samples.len()));
    }
    if let Some(&(_, m)) = samples.iter().find(|s| !(s.1 > 0.0)) {
        return Err(Error::NonpositiveMagnitude(m));
    }
    if let Some(&(r, _)) = samples.iter().find(|s| !(s.0 > 0.0)) {
        return Err(Error::InvalidParams(format!("radius {r} must be positive")));
    }
    let points: Vec<(f64, f64)> =
        samples.iter().map(|&(r, m)| (log_base(r, base), log_base(m, base))).collect();
    fit_line(&points)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::KeyedRng;
    use proptest::prelude::*;

    #[test]
    fn exact_on_noiseless_power_law() {
        let samples: Vec<(f64, f64)> =
            (0..10).map(|k| 2f64.powi(k)).map(|r| (r, r.powf(-0.25))).collect();
        let fit = fit_power_law(&samples, 2.0).unwrap();
        assert!((fit.slope + 0.25).abs() < 1e-12);
        assert!((fit.fourier_dim_estimate - 0.5).abs() < 1e-12);
        assert!(fit.stderr < 1e-12);
    }

    #[test]
    fn error_cases() {
        assert!(matches!(fit_power_law(&[(1.0, 1.0), (2.0, 0.5)], 2.0), Err(Error::TooFewPoints(2))));
        assert!(matches!(
            fit_power_law(&[(1.0, 1.0), (2.0, 0.0), (4.0, 0.5)], 2.0),
            Err(Error::NonpositiveMagnitude(_))
        ));
        assert!(fit_line(&[(1.0, 1.0), (1.0, 2.0), (3.0, 0.5)]).is_err());
    }

    #[test]
    fn recovers_slope_under_one_percent_noise() {
        let mut rng = KeyedRng::from_seed(3);
        let samples: Vec<(f64, f64)> = (0..200)
            .map(|k| {
                let r = 2f64.powf(4.0 + 7.0 * k as f64 / 199.0);
                let noise = 1.0 + 0.01 * (2.0 * rng.uniform() - 1.0);
                (r, r.powf(-0.3) * noise)
            })
            .collect();
        let fit = fit_power_law(&samples, 2.0).unwrap();
        assert!((fit.slope + 0.3).abs() < 0.02);
        assert!(fit.stderr > 0.0);
    }

    proptest! {
        #[test]
        fn permutation_invariant(seed in 0u64..1000, rot in 0usize..12) {
            let mut rng = KeyedRng::from_seed(seed);
            let pts: Vec<(f64, f64)> = (0..12).map(|k| (k as f64, rng.uniform())).collect();
            let mut shuffled = pts.clone();
            shuffled.rotate_left(rot);
            shuffled.swap(0, 11);
            let a = fit_line(&pts).unwrap();
            let b = fit_line(&shuffled).unwrap();
            prop_assert_eq!(a.slope.to_bits(), b.slope.to_bits());
            prop_assert!(a.stderr >= 0.0);
        }
    }
}
