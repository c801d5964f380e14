//! End-to-end acceptance run. Prints one line per criterion and exits with a
//! nonzero status if any criterion fails.

mod common;

use std::f64::consts::PI;
use std::time::Instant;

use curvecascade::cascade::{
    dim2_estimate, epsilon, moment_sum_s, subtree_moment, y_statistic, BadicAddress, CascadeRealization,
};
use curvecascade::curve::make_circle_arc;
use curvecascade::estimators::{
    builtin_scenarios, concentration_mc, ensemble_profiles, mean_std, DecayColumn, EnsembleProfiles,
};
use curvecascade::fourier::{
    cell_transform_flat, decay_profile, transform_curve, vdc_grid, vdc_statistic, FrequencyPlan, Support,
    DEFAULT_TOL,
};
use curvecascade::rng::KeyedRng;
use curvecascade::structure::{alpha_min, q_max, tau, tau_tilde_rate};
use curvecascade::weights::WeightModel;
use curvecascade::Result;
use num_complex::Complex64;

const LAMBDA: f64 = 0.09;
const SEEDS: u64 = 32;
const DEPTH: u32 = 14;

struct Line {
    pass: bool,
    detail: String,
}

impl Line {
    fn new(pass: bool, detail: String) -> Self {
        Line { pass, detail }
    }
}

fn lognormal() -> WeightModel {
    WeightModel::lognormal(LAMBDA, 2, 1).unwrap()
}

fn two_point() -> WeightModel {
    WeightModel::two_point(1.5, 0.5, 0.5, 2, 1).unwrap()
}

fn circle() -> Support {
    Support::Curve(make_circle_arc(2.0 * PI).unwrap())
}

fn seeds() -> Vec<u64> {
    (0..SEEDS).collect()
}

fn within(x: f64, target: f64, tol: f64) -> bool {
    (x - target).abs() <= tol
}

fn structure_values() -> Result<Line> {
    let ln = lognormal();
    // closed forms: tau(q) = q - 1 - lambda q (q - 1), q_max = lambda^-1/2,
    // alpha_min = tau'(q_max)
    let tau2 = 1.0 - 2.0 * LAMBDA;
    let qm = LAMBDA.powf(-0.5);
    let am = 1.0 - LAMBDA * (2.0 * qm - 1.0);
    let tp_am = 1.0 - 1.5f64.log2();
    let got = [tau(&ln, 2.0), q_max(&ln)?, alpha_min(&ln)?, alpha_min(&two_point())?];
    let want = [tau2, qm, am, tp_am];
    let stated = [0.82, 10.0 / 3.0, 0.49];
    let pass = got.iter().zip(&want).all(|(g, w)| (g - w).abs() <= 1e-9)
        && got.iter().zip(&stated).all(|(g, w)| (g - w).abs() <= 1e-9);
    Ok(Line::new(
        pass,
        format!(
            "tau(2)={:.12} q_max={:.12} alpha_min={:.12} two-point alpha_min={:.12}",
            got[0], got[1], got[2], got[3]
        ),
    ))
}

fn flat_dimension() -> Result<(Line, f64)> {
    let plan = FrequencyPlan::dyadic(2, 4, 11);
    let est = ensemble_profiles(&lognormal(), &Support::Flat, DEPTH, &plan, &seeds())?.estimate(DecayColumn::Sup)?;
    let line = Line::new(
        within(est.mean, 0.82, 0.15),
        format!("flat mean {:.4} (std {:.4}, {} seeds), target 0.82 +- 0.15", est.mean, est.std, est.fits.len()),
    );
    Ok((line, est.mean))
}

fn curve_dimension(profiles: &EnsembleProfiles, flat_mean: f64) -> Result<Line> {
    let est = profiles.estimate(DecayColumn::Sup)?;
    let gap = flat_mean - est.mean;
    Ok(Line::new(
        within(est.mean, 0.49, 0.15) && gap >= 0.2,
        format!(
            "curve mean {:.4} (std {:.4}, {} seeds), target 0.49 +- 0.15; flat - curve = {:.4}, need >= 0.2",
            est.mean,
            est.std,
            est.fits.len(),
            gap
        ),
    ))
}

fn correlation_dimension() -> Result<Line> {
    let mut parts = Vec::new();
    let mut pass = true;
    // tau(2) = 1 - log2 E W^2 for both families; 0.678 for the two-point law
    for (name, m, target) in [("lognormal", lognormal(), 0.82), ("two-point", two_point(), 0.678)] {
        let oracle = 1.0 - (m.marginal_moment(2.0)).log2();
        let slopes: Vec<f64> =
            seeds().iter().map(|&s| dim2_estimate(&m, s, 8, 16).map(|f| f.slope)).collect::<Result<_>>()?;
        let (mean, std) = mean_std(slopes.iter().copied());
        pass &= within(mean, target, 0.05) && within(oracle, target, 5e-4);
        parts.push(format!("{name} {mean:.4} (std {std:.4}, closed form {oracle:.4})"));
    }
    Ok(Line::new(pass, parts.join("; ")))
}

fn moment_bounds() -> Result<Line> {
    let exps = [1.0, 2.0, 4.0, f64::INFINITY];
    let n_max = 12;
    let mut parts = Vec::new();
    let mut pass = true;
    for (name, m) in [("lognormal", lognormal()), ("two-point", two_point())] {
        // sums[n][j][pair]
        let mut sums = vec![vec![vec![0.0; 16]; n_max as usize + 1]; n_max as usize + 1];
        for seed in 0..200 {
            let mut r = CascadeRealization::generate(&m, 0, seed)?;
            for n in 0..=n_max {
                r = r.refine(n)?;
                for j in 0..=n {
                    for (k, (p, q)) in exps.iter().flat_map(|&p| exps.iter().map(move |&q| (p, q))).enumerate() {
                        sums[n as usize][j as usize][k] += moment_sum_s(&r, p, q, j)?;
                    }
                }
            }
        }
        let mut constant: f64 = 0.0;
        for n in 0..=n_max {
            for j in 0..=n {
                for (k, (p, q)) in exps.iter().flat_map(|&p| exps.iter().map(move |&q| (p, q))).enumerate() {
                    let mean = sums[n as usize][j as usize][k] / 200.0;
                    let rate = f64::from(j) * tau_tilde_rate(&m, p)? + f64::from(n - j) * tau_tilde_rate(&m, q)?;
                    constant = constant.max(mean * 2f64.powf(rate));
                }
            }
        }
        pass &= constant <= 10.0;
        parts.push(format!("{name} C = {constant:.4}"));
    }
    Ok(Line::new(pass, format!("{}, need C <= 10", parts.join("; "))))
}

fn excess_decay() -> Result<Line> {
    let mut parts = Vec::new();
    let mut pass = true;
    for (name, m) in [("lognormal", lognormal()), ("two-point", two_point())] {
        let at = |n: u32| -> Result<f64> {
            let eps: Vec<f64> = seeds()
                .iter()
                .map(|&s| epsilon(&CascadeRealization::generate(&m, n, s)?, f64::INFINITY, 1.0))
                .collect::<Result<_>>()?;
            Ok(mean_std(eps.iter().copied()).0)
        };
        let (e8, e16) = (at(8)?, at(16)?);
        pass &= e16 <= 0.12 && e16 <= e8;
        parts.push(format!("{name} eps(16) = {e16:.4}, eps(8) = {e8:.4}"));
    }
    Ok(Line::new(pass, format!("{}, need eps(16) <= min(0.12, eps(8))", parts.join("; "))))
}

fn van_der_corput() -> Result<Line> {
    let c = make_circle_arc(2.0 * PI).unwrap();
    let grid = vdc_grid(4096.0, 8);
    let doubled: Vec<[f64; 2]> = grid.iter().map(|x| [2.0 * x[0], 2.0 * x[1]]).collect();
    let a = vdc_statistic(&c, &grid)?;
    let b = vdc_statistic(&c, &doubled)?;
    let ratio = a.max(b) / a.min(b);
    Ok(Line::new(
        a <= 3.0 && b <= 3.0 && ratio <= 1.2,
        format!("statistic {a:.4}, doubled grid {b:.4}, ratio {ratio:.4}"),
    ))
}

fn bessel() -> Result<Line> {
    let det = WeightModel::deterministic(2, 1).unwrap();
    let Support::Curve(c) = circle() else { unreachable!() };
    let r = CascadeRealization::generate(&det, 10, 0)?;
    // the circle is centred at the mean of its points; shift the phase there
    let centre = (0..4096).fold([0.0, 0.0], |acc, k| {
        let p = c.position(k as f64 / 4096.0);
        [acc[0] + p[0] / 4096.0, acc[1] + p[1] / 4096.0]
    });
    let mut rng = KeyedRng::from_seed(8);
    let mut worst: f64 = 0.0;
    for k in 0..200 {
        let rad = if k == 0 { 200.0 } else { 200.0 * rng.uniform() };
        let angle = 2.0 * PI * rng.uniform();
        let xi = [rad * angle.cos(), rad * angle.sin()];
        let v = transform_curve(&r, &c, xi, DEFAULT_TOL)?.value;
        let shift = Complex64::from_polar(1.0, 2.0 * PI * (xi[0] * centre[0] + xi[1] * centre[1]));
        worst = worst.max((v * shift - common::j0_oracle(rad)).norm());
    }
    let deep = CascadeRealization::generate(&det, DEPTH, 0)?;
    let fit = decay_profile(&deep, &circle(), &FrequencyPlan::dyadic(2, 4, 11))?.fit_sup()?;
    Ok(Line::new(
        worst <= 1e-6 && within(fit.fourier_dim_estimate, 1.0, 0.05),
        format!("max |mu^ - J0| = {worst:.2e}; sup decay estimate {:.4}, target 1.0 +- 0.05", fit.fourier_dim_estimate),
    ))
}

fn concentration() -> Result<Line> {
    let mut parts = Vec::new();
    let mut pass = true;
    for s in builtin_scenarios() {
        let out = concentration_mc(&s.dist, &s.input, 100_000, 2024)?;
        pass &= out.holds();
        parts.push(format!("{} {:.3e} <= {:.3e}", s.name, out.empirical, out.bound));
    }
    Ok(Line::new(pass, parts.join("; ")))
}

fn exactness() -> Result<Line> {
    let mut rng = KeyedRng::from_seed(41);
    let mut flat_err: f64 = 0.0;
    for _ in 0..100 {
        let b = 2 + (rng.uniform() * 3.0) as u32;
        let level = (rng.uniform() * 8.0) as u32;
        let cells = u64::from(b).pow(level);
        let index = ((rng.uniform() * cells as f64) as u64).min(cells - 1);
        let h = f64::from(b).powi(-(level as i32));
        let xi = (2.0 * rng.uniform() - 1.0) * 500.0;
        let got = cell_transform_flat(b, 1, &BadicAddress::new(level, index), &[xi])?;
        let x0 = index as f64 * h;
        flat_err = flat_err.max((got - common::oscillatory_1d(x0, x0 + h, xi)).norm());
    }
    let m = lognormal();
    let n = 10;
    let mut id_err: f64 = 0.0;
    for case in 0..100 {
        let r = CascadeRealization::generate(&m, n, 1000 + case)?;
        let q = 1.0 + 5.0 * rng.uniform();
        let j = (rng.uniform() * f64::from(n + 1)) as u32;
        let index = ((rng.uniform() * 2f64.powi(j as i32)) as u64).min((1 << j) - 1);
        let direct = subtree_moment(&r, q, j, index)?;
        let y = y_statistic(&r, q, j, index)?;
        let rebuilt = 2f64.powf(-f64::from(n - j) * tau(&m, q) / q) * r.coarse_mass(j, index)? * y.powf(1.0 / q);
        id_err = id_err.max((direct - rebuilt).abs() / direct);
    }
    Ok(Line::new(
        flat_err <= 1e-10 && id_err <= 1e-10,
        format!("flat cell max error {flat_err:.2e}; S-Y identity max relative error {id_err:.2e}"),
    ))
}

fn spherical_exponents(profiles: &EnsembleProfiles) -> Result<Line> {
    let ps = [1.0, 2.0, 4.0, f64::INFINITY];
    let dims: Vec<f64> = ps
        .iter()
        .map(|&p| profiles.estimate(DecayColumn::Sigma(p)).map(|e| e.mean))
        .collect::<Result<_>>()?;
    let pass = dims[1] >= dims[3] - 0.05 && dims.windows(2).all(|w| w[1] <= w[0] + 0.05);
    Ok(Line::new(
        pass,
        format!(
            "estimates p=1 {:.4}, p=2 {:.4}, p=4 {:.4}, p=inf {:.4}",
            dims[0], dims[1], dims[2], dims[3]
        ),
    ))
}

fn report(id: usize, title: &str, started: Instant, line: Result<Line>) -> bool {
    let secs = started.elapsed().as_secs_f64();
    let (pass, detail) = match line {
        Ok(l) => (l.pass, l.detail),
        Err(e) => (false, format!("error: {e}")),
    };
    let tag = if pass { "PASS" } else { "FAIL" };
    println!("criterion {id:>2} [{tag}] {title}: {detail} ({secs:.1} s)");
    pass
}

fn main() {
    let mut results = Vec::new();

    let t = Instant::now();
    results.push(report(1, "structure function values", t, structure_values()));

    let t = Instant::now();
    let flat = flat_dimension();
    let flat_mean = flat.as_ref().map(|f| f.1).unwrap_or(f64::NAN);
    results.push(report(2, "flat Fourier dimension", t, flat.map(|f| f.0)));

    let t = Instant::now();
    let curve = ensemble_profiles(&lognormal(), &circle(), DEPTH, &FrequencyPlan::dyadic(2, 4, 11), &seeds());
    let shared = t.elapsed();
    let third = curve.as_ref().map_err(clone_err).and_then(|p| curve_dimension(p, flat_mean));
    results.push(report(3, "curve Fourier dimension and separation", t, third));

    let t = Instant::now();
    results.push(report(4, "correlation dimension", t, correlation_dimension()));

    let t = Instant::now();
    results.push(report(5, "expected moment-sum bounds", t, moment_bounds()));

    let t = Instant::now();
    results.push(report(6, "excess decay", t, excess_decay()));

    let t = Instant::now();
    results.push(report(7, "van der Corput statistic", t, van_der_corput()));

    let t = Instant::now();
    results.push(report(8, "Bessel oracle", t, bessel()));

    let t = Instant::now();
    results.push(report(9, "concentration bound", t, concentration()));

    let t = Instant::now();
    results.push(report(10, "exactness", t, exactness()));

    let t = Instant::now() - shared;
    let eleventh = curve.as_ref().map_err(clone_err).and_then(spherical_exponents);
    results.push(report(11, "spherical average exponents", t, eleventh));

    let passed = results.iter().filter(|&&p| p).count();
    println!("acceptance: {passed}/{} criteria passed", results.len());
    if passed != results.len() {
        std::process::exit(1);
    }
}

fn clone_err(e: &curvecascade::Error) -> curvecascade::Error {
    curvecascade::Error::InvalidParams(e.to_string())
}
