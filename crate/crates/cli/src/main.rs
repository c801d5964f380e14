//! `curvecascade` command-line front end.
//!
//! Exit codes: 0 on success, 1 when a verification suite has failing checks,
//! 2 on usage or input errors. `THREADS=<n>` sets the worker count.

mod config;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser};

use config::{RunConfig, Subcommand, SupportConfig};
use curvecascade::curve::CurveDescriptor;
use curvecascade::weights::{WeightFamily, WeightModel};
use curvecascade::{Error, Result};

#[derive(Parser)]
#[command(name = "curvecascade", version, about = "Mandelbrot cascades on cubes and curves")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Subcommand)]
enum Command {
    /// Print the predicted multifractal profile of a weight model.
    Profile(Flags),
    /// Generate realizations and write binary mass files.
    Simulate(Flags),
    /// Band-envelope Fourier decay profiles.
    Fourier(Flags),
    /// Spherical averages at the band radii themselves.
    Spherical(Flags),
    /// Correlation-dimension slopes across depths.
    Dim2(Flags),
    /// Run a named self-check suite.
    Verify(Flags),
}

/// Flags override `--config`, which overrides the defaults shown.
#[derive(Args, Debug, Default)]
struct Flags {
    /// JSON run configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Weight family [default: lognormal].
    #[arg(long, value_parser = ["deterministic", "lognormal", "two_point"])]
    model: Option<String>,
    /// Lognormal intermittency [default: 0.09].
    #[arg(long)]
    lambda: Option<f64>,
    /// Two-point large value.
    #[arg(long)]
    w_plus: Option<f64>,
    /// Two-point small value.
    #[arg(long)]
    w_minus: Option<f64>,
    /// Two-point probability of the large value.
    #[arg(long)]
    prob: Option<f64>,
    /// Base [default: 2].
    #[arg(long)]
    b: Option<u32>,
    /// Spatial dimension [default: 1].
    #[arg(long)]
    d: Option<u32>,
    /// flat, circle_arc or parabola_arc [default: flat].
    #[arg(long)]
    curve: Option<String>,
    /// Circle curvature [default: 2 pi].
    #[arg(long)]
    curvature: Option<f64>,
    /// Cascade depth [default: 14].
    #[arg(long)]
    depth: Option<u32>,
    /// First seed [default: 0].
    #[arg(long)]
    seed: Option<u64>,
    /// Number of consecutive seeds [default: 1].
    #[arg(long)]
    count: Option<u64>,
    /// Smallest band exponent [default: 4].
    #[arg(long)]
    k0: Option<i32>,
    /// Largest band exponent [default: 11].
    #[arg(long)]
    k1: Option<i32>,
    /// Uniform directions on the circle [default: 256].
    #[arg(long)]
    n_theta: Option<usize>,
    /// Radii sampled per band [default: 32].
    #[arg(long)]
    radial_samples: Option<usize>,
    /// Skip curve-normal directions.
    #[arg(long)]
    no_enrich: bool,
    /// Spherical-average exponents [default: 1,2,4].
    #[arg(long, value_delimiter = ',')]
    p: Option<Vec<f64>>,
    /// Quadrature tolerance [default: 1e-10].
    #[arg(long)]
    tol: Option<f64>,
    /// First depth of the dim2 regression [default: 8].
    #[arg(long)]
    n_min: Option<u32>,
    /// Last depth of the dim2 regression [default: 16].
    #[arg(long)]
    n_max: Option<u32>,
    /// q values for tau.csv [default: 0.25..8 step 0.25].
    #[arg(long, value_delimiter = ',')]
    q_grid: Option<Vec<f64>>,
    /// trivial, structure, cascade, fourier or full [default: trivial].
    #[arg(long)]
    suite: Option<String>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn build_model(flags: &Flags, base: &WeightModel) -> Result<WeightModel> {
    let touched = flags.model.is_some()
        || flags.lambda.is_some()
        || flags.w_plus.is_some()
        || flags.w_minus.is_some()
        || flags.prob.is_some()
        || flags.b.is_some()
        || flags.d.is_some();
    if !touched {
        return Ok(base.clone());
    }
    let b = flags.b.unwrap_or(base.base());
    let d = flags.d.unwrap_or(base.dim());
    let family = flags.model.as_deref().map_or(
        match base.family() {
            WeightFamily::Deterministic => "deterministic",
            WeightFamily::Lognormal { .. } => "lognormal",
            WeightFamily::TwoPoint { .. } => "two_point",
        },
        |s| s,
    );
    let missing = |name: &str| Error::InvalidParams(format!("--{name} is required for this model"));
    match (family, base.family()) {
        ("deterministic", _) => WeightModel::deterministic(b, d),
        ("lognormal", WeightFamily::Lognormal { lambda }) => WeightModel::lognormal(flags.lambda.unwrap_or(lambda), b, d),
        ("lognormal", _) => WeightModel::lognormal(flags.lambda.unwrap_or(0.09), b, d),
        (_, WeightFamily::TwoPoint { w_plus, w_minus, p }) => WeightModel::two_point(
            flags.w_plus.unwrap_or(w_plus),
            flags.w_minus.unwrap_or(w_minus),
            flags.prob.unwrap_or(p),
            b,
            d,
        ),
        _ => WeightModel::two_point(
            flags.w_plus.ok_or_else(|| missing("w-plus"))?,
            flags.w_minus.ok_or_else(|| missing("w-minus"))?,
            flags.prob.ok_or_else(|| missing("prob"))?,
            b,
            d,
        ),
    }
}

fn resolve(sub: Subcommand, flags: &Flags) -> Result<(RunConfig, Option<Vec<u8>>)> {
    let (mut cfg, raw) = match &flags.config {
        Some(path) => {
            let bytes = std::fs::read(path)?;
            (serde_json::from_slice::<RunConfig>(&bytes)?, Some(bytes))
        }
        None => (RunConfig::default(), None),
    };
    cfg.subcommand = sub;
    cfg.model = build_model(flags, &cfg.model)?;
    if let Some(c) = &flags.curve {
        cfg.support = match c.as_str() {
            "flat" => SupportConfig::flat(),
            family => {
                let mut desc = CurveDescriptor { family: family.to_string(), params: Default::default() };
                if let Some(k) = flags.curvature {
                    desc.params.insert("curvature".into(), k);
                }
                SupportConfig::Curve(desc)
            }
        };
    }
    if flags.seed.is_some() || flags.count.is_some() {
        let start = flags.seed.unwrap_or(0);
        let count = flags.count.unwrap_or(1);
        cfg.seeds = (start..start.saturating_add(count)).collect();
    }
    macro_rules! set {
        ($($flag:ident => $($field:ident).+),* $(,)?) => {
            $(if let Some(v) = flags.$flag.clone() { cfg.$($field).+ = v; })*
        };
    }
    set!(depth => depth, k0 => radii.k0, k1 => radii.k1, n_theta => n_theta,
        radial_samples => radial_samples, p => p_values, tol => tol,
        n_min => dim2_levels.n_min, n_max => dim2_levels.n_max, q_grid => q_grid);
    if flags.no_enrich {
        cfg.enrich_normals = false;
    }
    if let Some(s) = &flags.suite {
        cfg.suite = s.parse()?;
    }
    if let Some(o) = &flags.out {
        cfg.output = Some(o.clone());
    }
    cfg.validate()?;
    Ok((cfg, raw))
}

fn configure_threads() -> Result<()> {
    if let Ok(v) = std::env::var("THREADS") {
        let n: usize = v
            .trim()
            .parse()
            .map_err(|_| Error::InvalidParams(format!("THREADS must be a positive integer, got '{v}'")))?;
        if n == 0 {
            return Err(Error::InvalidParams("THREADS must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::InvalidParams(e.to_string()))?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let (sub, flags) = match cli.command {
        Command::Profile(f) => (Subcommand::Profile, f),
        Command::Simulate(f) => (Subcommand::Simulate, f),
        Command::Fourier(f) => (Subcommand::Fourier, f),
        Command::Spherical(f) => (Subcommand::Spherical, f),
        Command::Dim2(f) => (Subcommand::Dim2, f),
        Command::Verify(f) => (Subcommand::Verify, f),
    };
    let outcome = configure_threads().and_then(|_| resolve(sub, &flags)).and_then(|(cfg, raw)| run::execute(&cfg, raw.as_deref()));
    match outcome {
        Ok(run::Outcome::Success) => ExitCode::SUCCESS,
        Ok(run::Outcome::ChecksFailed) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            eprintln!("run `curvecascade {} --help` for usage", sub.name());
            ExitCode::from(2)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_model_parameters() {
        let base = WeightModel::lognormal(0.09, 2, 1).unwrap();
        let flags = Flags { lambda: Some(0.05), ..Flags::default() };
        assert_eq!(build_model(&flags, &base).unwrap(), WeightModel::lognormal(0.05, 2, 1).unwrap());
        let flags = Flags { model: Some("two_point".into()), w_plus: Some(1.5), ..Flags::default() };
        assert!(build_model(&flags, &base).is_err());
        let flags = Flags { model: Some("deterministic".into()), b: Some(3), ..Flags::default() };
        assert_eq!(build_model(&flags, &base).unwrap(), WeightModel::deterministic(3, 1).unwrap());
    }

    #[test]
    fn seeds_from_start_and_count() {
        let flags = Flags { seed: Some(5), count: Some(3), ..Flags::default() };
        let (cfg, _) = resolve(Subcommand::Simulate, &flags).unwrap();
        assert_eq!(cfg.seeds, vec![5, 6, 7]);
    }
}
