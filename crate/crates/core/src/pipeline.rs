//! simulate → sample → burn-in mean, with optional persistence.

use std::path::Path;

use anyhow::{Context, Result};
use serde_json::json;

use crate::config::RunConfig;
use crate::forward::{ForwardModel, Potential};
use crate::io::{write_csv, write_measurements, Cell, Manifest};
use crate::observation::{simulate, Likelihood, MeasurementSet};
use crate::prior::SievePrior;
use crate::rng::Streams;
use crate::sampler::{burn_in_mean, run_chain, ChainTrace};

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub truth: Potential,
    pub data: MeasurementSet,
    pub trace: ChainTrace,
    pub f_burn: Potential,
    /// `‖f_burn - f0‖` over the inner nodes.
    pub error_inner: f64,
    /// `‖1 - f0‖` over the inner nodes.
    pub baseline_inner: f64,
}

/// Max of `|a - b|` over the inner nodes; both vectors follow `omega` order.
pub fn inner_linf(model: &ForwardModel, a: &[f64], b: &[f64]) -> f64 {
    model.regions().inner_in_omega().iter().map(|&p| (a[p] - b[p]).abs()).fold(0.0, f64::max)
}

pub fn simulate_data(cfg: &RunConfig, model: &ForwardModel) -> Result<(Potential, MeasurementSet)> {
    let truth = cfg.truth.potential(model)?;
    let data = simulate(model, &truth, cfg.observation.n, cfg.observation.sigma, &Streams::new(cfg.seed))?;
    Ok((truth, data))
}

pub fn sample(cfg: &RunConfig, model: &ForwardModel, data: &MeasurementSet) -> Result<(ChainTrace, Potential)> {
    let prior = SievePrior::new(&cfg.prior, model)?;
    let lik = Likelihood::new(model, data)?;
    let trace = run_chain(&cfg.sampler, &prior, &lik, &Streams::new(cfg.seed)).context("running the chain")?;
    let f_burn = burn_in_mean(&trace)?;
    Ok((trace, f_burn))
}

/// Runs every stage in memory.
pub fn execute(cfg: &RunConfig) -> Result<RunOutcome> {
    cfg.validate()?;
    let model = cfg.model()?;
    let (truth, data) = simulate_data(cfg, &model)?;
    let (trace, f_burn) = sample(cfg, &model, &data)?;
    let ones = vec![1.0; truth.len()];
    let error_inner = inner_linf(&model, f_burn.values(), truth.values());
    let baseline_inner = inner_linf(&model, &ones, truth.values());
    Ok(RunOutcome { truth, data, trace, f_burn, error_inner, baseline_inner })
}

/// Runs every stage and writes `measurements.csv`, `reconstruction.csv`,
/// `loglik.csv` and `manifest.json` into `out`.
pub fn run_pipeline(cfg: &RunConfig, out: &Path) -> Result<RunOutcome> {
    let outcome = execute(cfg)?;
    std::fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let model = cfg.model()?;
    write_measurements(&out.join("measurements.csv"), &outcome.data)?;
    write_reconstruction(&out.join("reconstruction.csv"), &model, &outcome.truth, &outcome.f_burn)?;
    write_loglik(&out.join("loglik.csv"), &outcome.trace)?;
    Manifest::new("run", cfg, run_summary(&outcome))?.write(&out.join("manifest.json"))?;
    Ok(outcome)
}

pub fn run_summary(o: &RunOutcome) -> serde_json::Value {
    json!({
        "iterations": o.trace.iterations(),
        "accept_count": o.trace.accept_count,
        "acceptance_rate": o.trace.acceptance_rate(),
        "clip_count": o.trace.clip_count,
        "nan_count": o.trace.nan_count,
        "final_loglik": o.trace.loglik_trace.last().copied(),
        "error_inner_linf": o.error_inner,
        "baseline_inner_linf": o.baseline_inner,
    })
}

/// Columns `x, f0, f_burn` over the `omega` nodes.
pub fn write_reconstruction(path: &Path, model: &ForwardModel, truth: &Potential, f_burn: &Potential) -> Result<()> {
    let g = model.grid();
    let rows = model
        .regions()
        .omega
        .iter()
        .zip(truth.values().iter().zip(f_burn.values()))
        .map(|(&i, (&t, &b))| vec![Cell::Float(g.x(i)), Cell::Float(t), Cell::Float(b)]);
    write_csv(path, &["x", "f0", "f_burn"], rows)
}

pub fn write_loglik(path: &Path, trace: &ChainTrace) -> Result<()> {
    let rows = trace.loglik_trace.iter().enumerate().map(|(t, &l)| vec![Cell::Int(t as u64 + 1), Cell::Float(l)]);
    write_csv(path, &["iteration", "loglik"], rows)
}
