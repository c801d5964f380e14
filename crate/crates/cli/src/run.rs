//! Subcommand implementations. Every command that writes files puts them in
//! one output directory together with `manifest.json`.

use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use curvecascade::cascade::{dim2_estimate, CascadeRealization};
use curvecascade::estimators::{mean_std, profiles_of, DecayColumn};
use curvecascade::io::{atomic_write, csv_table, profile_csv, save_realization, sha256_hex};
use curvecascade::structure::{predicted_dims, sample_tau};
use curvecascade::verify::run_suite;
use curvecascade::Result;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{RunConfig, Subcommand};

pub enum Outcome {
    Success,
    ChecksFailed,
}

#[derive(Serialize)]
struct OutputFile {
    file: String,
    sha256: String,
}

#[derive(Serialize)]
struct Manifest<'a> {
    command: &'a str,
    code_version: &'a str,
    config: &'a RunConfig,
    inputs: Value,
    outputs: Vec<OutputFile>,
    threads: usize,
    wall_time_s: f64,
    finished_unix_s: u64,
}

struct OutputDir {
    path: PathBuf,
    written: Vec<OutputFile>,
}

impl OutputDir {
    fn create(cfg: &RunConfig) -> Result<Self> {
        let path = cfg.output.clone().unwrap_or_else(|| PathBuf::from("results").join(cfg.subcommand.name()));
        std::fs::create_dir_all(&path)?;
        Ok(OutputDir { path, written: Vec::new() })
    }

    fn write(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        atomic_write(&self.path.join(name), bytes)?;
        self.record(name, bytes);
        Ok(())
    }

    fn record(&mut self, name: &str, bytes: &[u8]) {
        self.written.push(OutputFile { file: name.to_string(), sha256: sha256_hex(bytes) });
    }

    fn finish(self, cfg: &RunConfig, raw_config: Option<&[u8]>, started: Instant) -> Result<PathBuf> {
        let inputs = match raw_config {
            Some(bytes) => json!({ "config_sha256": sha256_hex(bytes) }),
            None => json!({}),
        };
        let manifest = Manifest {
            command: cfg.subcommand.name(),
            code_version: env!("CARGO_PKG_VERSION"),
            config: cfg,
            inputs,
            outputs: self.written,
            threads: rayon::current_num_threads(),
            wall_time_s: started.elapsed().as_secs_f64(),
            finished_unix_s: SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0),
        };
        atomic_write(&self.path.join("manifest.json"), serde_json::to_string_pretty(&manifest)?.as_bytes())?;
        Ok(self.path)
    }
}

pub fn execute(cfg: &RunConfig, raw_config: Option<&[u8]>) -> Result<Outcome> {
    let started = Instant::now();
    match cfg.subcommand {
        Subcommand::Profile => profile(cfg, raw_config, started),
        Subcommand::Simulate => simulate(cfg, raw_config, started),
        Subcommand::Fourier | Subcommand::Spherical => fourier(cfg, raw_config, started),
        Subcommand::Dim2 => dim2(cfg, raw_config, started),
        Subcommand::Verify => verify(cfg, raw_config, started),
    }
}

fn profile(cfg: &RunConfig, raw: Option<&[u8]>, started: Instant) -> Result<Outcome> {
    let prof = predicted_dims(&cfg.model)?;
    let text = serde_json::to_string_pretty(&prof)?;
    println!("{text}");
    println!("{prof}");
    if cfg.output.is_some() {
        let mut out = OutputDir::create(cfg)?;
        out.write("profile.json", text.as_bytes())?;
        let rows: Vec<Vec<f64>> =
            sample_tau(&cfg.model, &cfg.q_grid)?.iter().map(|s| vec![s.q, s.tau, s.tau_prime, s.tau_tilde]).collect();
        out.write("tau.csv", csv_table(&["q", "tau", "tau_prime", "tau_tilde"], &rows).as_bytes())?;
        let dir = out.finish(cfg, raw, started)?;
        eprintln!("profile: wrote {}", dir.display());
    }
    Ok(Outcome::Success)
}

fn simulate(cfg: &RunConfig, raw: Option<&[u8]>, started: Instant) -> Result<Outcome> {
    let mut out = OutputDir::create(cfg)?;
    let mut total = Vec::with_capacity(cfg.seeds.len());
    for &seed in &cfg.seeds {
        let r = CascadeRealization::generate(&cfg.model, cfg.depth, seed)?;
        let name = format!("cascade_seed{seed}.mcas");
        let side = save_realization(&out.path.join(&name), &r)?;
        out.written.push(OutputFile { file: name.clone(), sha256: side.sha256.clone() });
        let side_name = format!("cascade_seed{seed}.json");
        let side_bytes = std::fs::read(out.path.join(&side_name))?;
        out.record(&side_name, &side_bytes);
        total.push(r.total_mass());
    }
    let dir = out.finish(cfg, raw, started)?;
    let (mean, _) = mean_std(total.iter().copied());
    println!(
        "simulate: {} realization(s) at depth {}, mean total mass {mean:.6}, written to {}",
        cfg.seeds.len(),
        cfg.depth,
        dir.display()
    );
    Ok(Outcome::Success)
}

fn fourier(cfg: &RunConfig, raw: Option<&[u8]>, started: Instant) -> Result<Outcome> {
    let support = cfg.support.build()?;
    let mut plan = cfg.plan();
    if cfg.subcommand == Subcommand::Spherical {
        plan = plan.with_radial_samples(1).with_enrich_normals(false);
    }
    let realizations: Vec<CascadeRealization> = cfg
        .seeds
        .par_iter()
        .map(|&s| CascadeRealization::generate(&cfg.model, cfg.depth, s))
        .collect::<Result<_>>()?;
    let ens = profiles_of(realizations, &support, &plan)?;
    let mut out = OutputDir::create(cfg)?;
    for p in &ens.profiles {
        out.write(&format!("profile_seed{}.csv", p.metadata.seed), profile_csv(p).as_bytes())?;
    }
    let mut columns = vec![DecayColumn::Sup];
    columns.extend(cfg.p_values.iter().map(|&p| DecayColumn::Sigma(p)));
    let mut summary = Vec::new();
    for col in columns {
        let est = ens.estimate(col)?;
        summary.push(json!({
            "column": col,
            "mean": est.mean,
            "std": est.std,
            "per_seed": est.fits.iter().map(|f| json!({"seed": f.seed, "slope": f.fit.slope,
                "stderr": f.fit.stderr, "fourier_dim_estimate": f.fit.fourier_dim_estimate})).collect::<Vec<_>>(),
        }));
    }
    let fits = json!({ "fits": summary, "discarded_seeds": ens.discarded, "tol": cfg.tol });
    out.write("fits.json", serde_json::to_string_pretty(&fits)?.as_bytes())?;
    let sup = ens.estimate(DecayColumn::Sup)?;
    let dir = out.finish(cfg, raw, started)?;
    println!(
        "{}: {} profile(s) on {}, sup-based dimension estimate {:.4} (std {:.4}), {} discarded, written to {}",
        cfg.subcommand.name(),
        ens.profiles.len(),
        support.label(),
        sup.mean,
        sup.std,
        ens.discarded.len(),
        dir.display()
    );
    Ok(Outcome::Success)
}

fn dim2(cfg: &RunConfig, raw: Option<&[u8]>, started: Instant) -> Result<Outcome> {
    let (n_min, n_max) = (cfg.dim2_levels.n_min, cfg.dim2_levels.n_max);
    let fits = cfg
        .seeds
        .par_iter()
        .map(|&s| dim2_estimate(&cfg.model, s, n_min, n_max))
        .collect::<Result<Vec<_>>>()?;
    let rows: Vec<Vec<f64>> = cfg
        .seeds
        .iter()
        .zip(&fits)
        .map(|(&s, f)| vec![s as f64, f.slope, f.intercept, f.stderr])
        .collect();
    let mut out = OutputDir::create(cfg)?;
    out.write("dim2.csv", csv_table(&["seed", "slope", "intercept", "stderr"], &rows).as_bytes())?;
    let slopes: Vec<f64> = fits.iter().map(|f| f.slope).collect();
    let (mean, std) = mean_std(slopes.iter().copied());
    let dir = out.finish(cfg, raw, started)?;
    println!("dim2: {} seed(s), mean slope {mean:.4} (std {std:.4}) over n in [{n_min}, {n_max}], written to {}", slopes.len(), dir.display());
    Ok(Outcome::Success)
}

fn verify(cfg: &RunConfig, raw: Option<&[u8]>, started: Instant) -> Result<Outcome> {
    let report = run_suite(cfg.suite)?;
    let failed: Vec<&str> = report.checks.iter().filter(|c| !c.pass).map(|c| c.name.as_str()).collect();
    let mut out = OutputDir::create(cfg)?;
    out.write("verify_report.json", serde_json::to_string_pretty(&report)?.as_bytes())?;
    let dir: PathBuf = out.finish(cfg, raw, started)?;
    println!(
        "verify {}: {}/{} checks passed, report in {}",
        cfg.suite,
        report.checks.len() - failed.len(),
        report.checks.len(),
        Path::new(&dir).join("verify_report.json").display()
    );
    for name in &failed {
        eprintln!("FAILED {name}");
    }
    Ok(if failed.is_empty() { Outcome::Success } else { Outcome::ChecksFailed })
}
