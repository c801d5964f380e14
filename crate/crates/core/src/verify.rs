//! Named self-check suites comparing computed values with closed forms.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::cascade::{
    dim2_estimate, epsilon, min_pointwise_dim, moment_sum_s, subtree_moment, y_statistic, BadicAddress,
    CascadeRealization,
};
use crate::curve::make_circle_arc;
use crate::error::{Error, Result};
use crate::estimators::concentration::{builtin_scenarios, concentration_mc};
use crate::estimators::ensemble::mean_std;
use crate::fourier::{cell_transform_curve, cell_transform_flat, transform_flat, vdc_grid, vdc_statistic};
use crate::numeric::adaptive_integrate;
use crate::rng::KeyedRng;
use crate::special::bessel_j0;
use crate::structure::{alpha_min, check_subcritical, q_max, tau, tau_tilde};
use crate::weights::WeightModel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    Trivial,
    Structure,
    Cascade,
    Fourier,
    Full,
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "trivial" => Ok(Suite::Trivial),
            "structure" => Ok(Suite::Structure),
            "cascade" => Ok(Suite::Cascade),
            "fourier" => Ok(Suite::Fourier),
            "full" => Ok(Suite::Full),
            other => Err(Error::InvalidParams(format!("unknown suite '{other}'"))),
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Suite::Trivial => "trivial",
            Suite::Structure => "structure",
            Suite::Cascade => "cascade",
            Suite::Fourier => "fourier",
            Suite::Full => "full",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub predicted: f64,
    pub observed: f64,
    pub tolerance: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub suite: Suite,
    pub checks: Vec<Check>,
}

impl VerifyReport {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

#[derive(Default)]
struct Checks(Vec<Check>);

impl Checks {
    fn close(&mut self, name: &str, predicted: f64, observed: f64, tolerance: f64) {
        let pass = (observed - predicted).abs() <= tolerance;
        self.0.push(Check { name: name.into(), predicted, observed, tolerance, pass });
    }

    /// `observed <= bound`, reported with zero tolerance.
    fn at_most(&mut self, name: &str, bound: f64, observed: f64) {
        self.0.push(Check { name: name.into(), predicted: bound, observed, tolerance: 0.0, pass: observed <= bound });
    }

    fn flag(&mut self, name: &str, ok: bool) {
        let v = f64::from(u8::from(ok));
        self.0.push(Check { name: name.into(), predicted: 1.0, observed: v, tolerance: 0.0, pass: ok });
    }
}

pub fn run_suite(suite: Suite) -> Result<VerifyReport> {
    let mut c = Checks::default();
    match suite {
        Suite::Trivial => trivial(&mut c)?,
        Suite::Structure => structure(&mut c)?,
        Suite::Cascade => cascade(&mut c)?,
        Suite::Fourier => fourier(&mut c)?,
        Suite::Full => {
            trivial(&mut c)?;
            structure(&mut c)?;
            cascade(&mut c)?;
            fourier(&mut c)?;
            concentration(&mut c)?;
        }
    }
    Ok(VerifyReport { suite, checks: c.0 })
}

fn trivial(c: &mut Checks) -> Result<()> {
    let det = WeightModel::deterministic(2, 1)?;
    c.close("deterministic/tau(2)", 1.0, tau(&det, 2.0), 1e-12);
    c.close("deterministic/alpha_min", 1.0, alpha_min(&det)?, 1e-12);
    c.flag("deterministic/q_max_infinite", q_max(&det)?.is_infinite());
    let r = CascadeRealization::generate(&det, 10, 0)?;
    c.close("deterministic/total_mass", 1.0, r.total_mass(), 1e-12);
    c.close("deterministic/S(2,2,5,10)", 2f64.powf(-5.0), moment_sum_s(&r, 2.0, 2.0, 5)?, 1e-14);
    c.close("deterministic/Y(2,4,3)", 1.0, y_statistic(&r, 2.0, 4, 3)?, 1e-12);
    c.close("deterministic/epsilon(inf,1)", 0.0, epsilon(&r, f64::INFINITY, 1.0)?, 1e-12);
    c.close("deterministic/min_pointwise_dim", 1.0, min_pointwise_dim(&r)?, 1e-12);
    c.close("deterministic/dim2_slope", 1.0, dim2_estimate(&det, 0, 4, 12)?.slope, 1e-12);
    c.close("lebesgue/transform(7)", 0.0, transform_flat(&r, &[7.0])?.magnitude, 1e-12);
    let half = cell_transform_flat(2, 1, &BadicAddress::root(), &[0.5])?.norm();
    c.close("unit_interval/transform(1/2)", 2.0 / PI, half, 1e-14);
    let circle = make_circle_arc(2.0 * PI)?;
    let v = cell_transform_curve(&circle, (0.0, 1.0), [50.0, 0.0], 1e-12)?;
    c.close("circle/transform(50)", bessel_j0(50.0).abs(), v.norm(), 1e-9);
    Ok(())
}

fn structure(c: &mut Checks) -> Result<()> {
    let ln = WeightModel::lognormal(0.09, 2, 1)?;
    c.close("lognormal/tau(2)", 0.82, tau(&ln, 2.0), 1e-9);
    c.close("lognormal/q_max", 10.0 / 3.0, q_max(&ln)?, 1e-9);
    c.close("lognormal/alpha_min", 0.49, alpha_min(&ln)?, 1e-9);
    // beyond q_max the rate is linear with slope alpha_min
    c.close("lognormal/tau_tilde(4)", 4.0 * 0.49, tau_tilde(&ln, 4.0)?, 1e-9);
    c.flag("lognormal/subcritical", check_subcritical(&ln));
    let tp = WeightModel::two_point(1.5, 0.5, 0.5, 2, 1)?;
    c.close("two_point/alpha_min", 1.0 - 1.5f64.log2(), alpha_min(&tp)?, 1e-9);
    c.close("two_point/tau(2)", 1.0 - 1.25f64.log2(), tau(&tp, 2.0), 1e-12);
    c.flag("two_point/subcritical", check_subcritical(&tp));
    Ok(())
}

fn cascade(c: &mut Checks) -> Result<()> {
    let ln = WeightModel::lognormal(0.09, 2, 1)?;
    let mut rng = KeyedRng::from_seed(2024);
    let mut worst: f64 = 0.0;
    for k in 0..20u64 {
        let r = CascadeRealization::generate(&ln, 10, 500 + k)?;
        let j = (rng.uniform() * 11.0) as u32;
        let index = (rng.uniform() * 2f64.powi(j as i32)) as u64;
        let q = 1.0 + 3.0 * rng.uniform();
        let direct = subtree_moment(&r, q, j, index)?;
        let via = (-(f64::from(10 - j)) * tau(&ln, q) / q * 2f64.ln()).exp()
            * r.coarse_mass(j, index)?
            * y_statistic(&r, q, j, index)?.powf(1.0 / q);
        worst = worst.max((direct - via).abs() / direct);
    }
    c.at_most("lognormal/S_Y_identity_relative_error", 1e-10, worst);
    let slopes: Vec<f64> = (0..8).map(|s| dim2_estimate(&ln, s, 8, 14).map(|f| f.slope)).collect::<Result<_>>()?;
    c.close("lognormal/dim2_mean_slope", 0.82, mean_std(slopes.iter().copied()).0, 0.05);
    let masses: Vec<f64> =
        (0..64).map(|s| CascadeRealization::generate(&ln, 8, 1000 + s).map(|r| r.total_mass())).collect::<Result<_>>()?;
    let (mean, std) = mean_std(masses.iter().copied());
    c.close("lognormal/mean_total_mass", 1.0, mean, 4.0 * std / 8.0);
    Ok(())
}

fn fourier(c: &mut Checks) -> Result<()> {
    let circle = make_circle_arc(2.0 * PI)?;
    let mut worst: f64 = 0.0;
    for r in [1.0, 10.0, 37.5, 100.0, 200.0] {
        let v = cell_transform_curve(&circle, (0.0, 1.0), [0.0, r], 1e-12)?;
        worst = worst.max((v.norm() - bessel_j0(r).abs()).abs());
    }
    c.at_most("circle/bessel_max_error", 1e-9, worst);
    c.at_most("circle/vdc_statistic", 3.0, vdc_statistic(&circle, &vdc_grid(1024.0, 2))?);
    let mut rng = KeyedRng::from_seed(77);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let n = 1 + (rng.uniform() * 8.0) as u32;
        let index = (rng.uniform() * 2f64.powi(n as i32)) as u64;
        let xi = 40.0 * (2.0 * rng.uniform() - 1.0);
        let exact = cell_transform_flat(2, 1, &BadicAddress::new(n, index), &[xi])?;
        let h = 2f64.powi(-(n as i32));
        let x0 = index as f64 * h;
        let re = adaptive_integrate(&|u: f64| (2.0 * PI * xi * u).cos(), x0, x0 + h, 1e-15);
        let im = -adaptive_integrate(&|u: f64| (2.0 * PI * xi * u).sin(), x0, x0 + h, 1e-15);
        worst = worst.max((exact.re - re).abs().max((exact.im - im).abs()));
    }
    c.at_most("flat/closed_form_vs_quadrature", 1e-10, worst);
    let ln = WeightModel::lognormal(0.09, 2, 1)?;
    let r = CascadeRealization::generate(&ln, 10, 5)?;
    let a = transform_flat(&r, &[13.3])?.value;
    let b = transform_flat(&r, &[-13.3])?.value;
    c.at_most("flat/conjugate_symmetry", 1e-12, (a - b.conj()).norm());
    Ok(())
}

fn concentration(c: &mut Checks) -> Result<()> {
    for s in builtin_scenarios() {
        let out = concentration_mc(&s.dist, &s.input, 100_000, 31)?;
        c.at_most(&format!("concentration/{}", s.name), out.bound, out.empirical);
    }
    Ok(())
}
