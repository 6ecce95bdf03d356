use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use serde_json::json;

use fraccal::config::RunConfig;
use fraccal::io::{read_measurements, write_csv, write_measurements, Cell, Manifest};
use fraccal::pipeline::{run_pipeline, run_summary, sample, simulate_data, write_loglik};
use fraccal::quadrature::dn_phi;
use fraccal::rate_study::rate_study;
use fraccal::verify::{run_all, VerifyConfig};

#[derive(Parser)]
#[command(name = "fraccal", version, about = "Bayesian inversion for the 1D fractional Calderón problem")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// TOML run configuration; overrides --preset.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Named preset: paper, desk or smoke.
    #[arg(long, default_value = "desk")]
    preset: String,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory (defaults to the config's `output`).
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Common {
    fn resolve(&self) -> Result<(RunConfig, PathBuf)> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::preset(&self.preset)?,
        };
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(out) = &self.out {
            cfg.output = out.clone();
        }
        cfg.validate()?;
        let out = cfg.output.clone();
        std::fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
        Ok((cfg, out))
    }
}

#[derive(Subcommand)]
enum Command {
    /// Solve for the configured truth; write u on Omega and dn on D.
    Forward(Common),
    /// Generate a synthetic measurement set.
    Simulate(Common),
    /// Run the chain on an existing measurement CSV.
    Sample {
        #[command(flatten)]
        common: Common,
        /// Measurement CSV with columns i, x, y.
        #[arg(long)]
        data: PathBuf,
    },
    /// simulate, sample and average in one go.
    Run(Common),
    /// Median error against N over several seeds.
    RateStudy {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',', default_value = "25,100,400")]
        n_values: Vec<usize>,
        #[arg(long, value_delimiter = ',', default_value = "0,1,2,3,4")]
        seeds: Vec<u64>,
    },
    /// Run the discretization and forward-map property suites.
    Verify {
        #[arg(long, default_value_t = 50)]
        m: usize,
        #[arg(long, default_value_t = 0.5)]
        s: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 200)]
        samples: usize,
        /// Flip the sign of a_1 first (the max-principle suite must fail).
        #[arg(long)]
        corrupt_a1: bool,
    },
    /// Dump the operator symbol and quadrature values of (-Δ)^s phi.
    Oracle {
        #[command(flatten)]
        common: Common,
        /// Points for the quadrature values.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, default_value = "-1.5,1.5,2,2.5")]
        x: Vec<f64>,
    },
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Forward(common) => forward(&common),
        Command::Simulate(common) => {
            let (cfg, out) = common.resolve()?;
            let model = cfg.model()?;
            let (_, data) = simulate_data(&cfg, &model)?;
            write_measurements(&out.join("measurements.csv"), &data)?;
            let summary = json!({ "truth": cfg.truth, "sigma": data.sigma, "n": data.len(), "seed": cfg.seed });
            Manifest::new("simulate", &cfg, summary)?.write(&out.join("manifest.json"))?;
            println!("wrote {} measurements to {}", data.len(), out.display());
            Ok(true)
        }
        Command::Sample { common, data } => {
            let (cfg, out) = common.resolve()?;
            let model = cfg.model()?;
            let data = read_measurements(&data, cfg.observation.sigma, None)?;
            let (trace, f_burn) = sample(&cfg, &model, &data)?;
            write_loglik(&out.join("loglik.csv"), &trace)?;
            let g = model.grid();
            let rows = model
                .regions()
                .omega
                .iter()
                .zip(f_burn.values())
                .map(|(&i, &v)| vec![Cell::Float(g.x(i)), Cell::Float(v)]);
            write_csv(&out.join("f_burn.csv"), &["x", "f_burn"], rows)?;
            let summary = json!({
                "iterations": trace.iterations(),
                "accept_count": trace.accept_count,
                "acceptance_rate": trace.acceptance_rate(),
                "clip_count": trace.clip_count,
                "nan_count": trace.nan_count,
                "final_loglik": trace.loglik_trace.last(),
            });
            Manifest::new("sample", &cfg, summary)?.write(&out.join("manifest.json"))?;
            println!("accepted {} of {} proposals", trace.accept_count, trace.iterations());
            Ok(true)
        }
        Command::Run(common) => {
            let (cfg, out) = common.resolve()?;
            let o = run_pipeline(&cfg, &out)?;
            println!("{}", serde_json::to_string_pretty(&run_summary(&o))?);
            Ok(true)
        }
        Command::RateStudy { common, n_values, seeds } => {
            let (cfg, out) = common.resolve()?;
            let r = rate_study(&cfg, &n_values, &seeds, Some(&out))?;
            println!("{:>8} {:>14} {:>10}", "N", "median error", "delta_N");
            for k in 0..r.n_values.len() {
                println!("{:>8} {:>14.6e} {:>10.4}", r.n_values[k], r.errors[k], r.delta_n[k]);
            }
            println!("fit: C = {:.6e}, mu = {:.6}", r.c, r.mu);
            Ok(true)
        }
        Command::Verify { m, s, seed, samples, corrupt_a1 } => {
            let cfg = VerifyConfig { m, s, seed, samples, corrupt_a1, ..VerifyConfig::default() };
            let results = run_all(&cfg)?;
            let mut ok = true;
            for r in &results {
                ok &= r.passed;
                println!(
                    "{:<14} {:<4} measured {:>12.4e}  threshold {:>10.3e}  {}",
                    r.name,
                    if r.passed { "PASS" } else { "FAIL" },
                    r.measured,
                    r.threshold,
                    r.detail
                );
            }
            Ok(ok)
        }
        Command::Oracle { common, x } => oracle(&common, &x),
    }
}

fn forward(common: &Common) -> Result<bool> {
    let (cfg, out) = common.resolve()?;
    let model = cfg.model()?;
    let truth = cfg.truth.potential(&model)?;
    let sol = model.solve(&truth)?;
    let g = model.grid();
    let rows = model
        .regions()
        .omega
        .iter()
        .map(|&i| vec![Cell::Int(i as u64), Cell::Float(g.x(i)), Cell::Float(sol.u.at(i))]);
    write_csv(&out.join("forward.csv"), &["i", "x", "u"], rows)?;
    let rows = model
        .regions()
        .measurement
        .iter()
        .zip(&sol.dn)
        .map(|(&i, &d)| vec![Cell::Int(i as u64), Cell::Float(g.x(i)), Cell::Float(d)]);
    write_csv(&out.join("dn.csv"), &["i", "x", "dn"], rows)?;
    Manifest::new("forward", &cfg, json!({ "max_u_omega": sol.v.max_abs() }))?.write(&out.join("manifest.json"))?;
    println!("wrote forward.csv and dn.csv to {}", out.display());
    Ok(true)
}

fn oracle(common: &Common, xs: &[f64]) -> Result<bool> {
    let (cfg, out) = common.resolve()?;
    let model = cfg.model()?;
    let symbol = model.operator().symbol();
    write_csv(
        &out.join("symbol.csv"),
        &["k", "a_k"],
        symbol.iter().enumerate().map(|(k, &a)| vec![Cell::Int(k as u64), Cell::Float(a)]),
    )?;
    let mut rows = Vec::new();
    for &x in xs {
        let v = dn_phi(&cfg.phi, cfg.grid.s, x).with_context(|| format!("quadrature at x = {x}"))?;
        rows.push(vec![Cell::Float(x), Cell::Float(v)]);
    }
    write_csv(&out.join("dn_phi.csv"), &["x", "dn_phi"], rows)?;
    println!("wrote {} symbol entries and {} quadrature values to {}", symbol.len(), xs.len(), out.display());
    Ok(true)
}
