//! Empirical contraction study: median reconstruction error against `N`,
//! fitted to `log err = log C - μ log log N`.

use std::path::Path;

use anyhow::{bail, Context, Result};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::io::{write_csv, Cell, Manifest};
use crate::pipeline::execute;
use crate::prior::{truncation_level, PriorFamily};
use crate::stats::{fit_line, median};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateCell {
    pub n: usize,
    pub seed: u64,
    pub error: f64,
    pub accept_count: usize,
    pub final_loglik: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateStudyResult {
    pub n_values: Vec<usize>,
    /// Median error over seeds, per `N`.
    pub errors: Vec<f64>,
    pub c: f64,
    pub mu: f64,
    pub residuals: Vec<f64>,
    /// `N^{-α/(2α+1)}` for reference.
    pub delta_n: Vec<f64>,
    pub cells: Vec<RateCell>,
}

/// `N^{-α/(2α+d)}` with `d = 1`.
pub fn delta_n(n: usize, alpha: f64) -> f64 {
    (n as f64).powf(-alpha / (2.0 * alpha + 1.0))
}

/// Least-squares `(C, μ, residuals)` for `log err = log C - μ log log N`.
pub fn fit_rate(n_values: &[usize], errors: &[f64]) -> Result<(f64, f64, Vec<f64>)> {
    if n_values.len() != errors.len() || n_values.len() < 2 {
        bail!("need matching N and error lists with at least two entries");
    }
    if n_values.iter().any(|&n| n < 3) {
        bail!("log log N needs N >= 3");
    }
    if errors.iter().any(|&e| !(e > 0.0 && e.is_finite())) {
        bail!("errors must be positive and finite to take logarithms");
    }
    let x: Vec<f64> = n_values.iter().map(|&n| (n as f64).ln().ln()).collect();
    let y: Vec<f64> = errors.iter().map(|e| e.ln()).collect();
    let fit = fit_line(&x, &y);
    Ok((fit.intercept.exp(), -fit.slope, fit.residuals))
}

/// Config for one `(N, seed)` cell. A Haar prior gets the sieve level
/// `j(N)` and the `N`-dependent rescaling.
pub fn cell_config(base: &RunConfig, n: usize, seed: u64) -> RunConfig {
    let mut cfg = base.clone();
    cfg.seed = seed;
    cfg.observation.n = n;
    if cfg.prior.family == PriorFamily::Haar {
        cfg.prior.j0 = truncation_level(n, cfg.prior.alpha);
        cfg.prior.rescale_n = Some(n);
    }
    cfg
}

/// Runs every `(N, seed)` cell in parallel. With `out`, each finished cell is
/// written to `out/cells/` as soon as it completes, and the merged tables plus
/// a manifest are written at the end.
pub fn rate_study(base: &RunConfig, n_values: &[usize], seeds: &[u64], out: Option<&Path>) -> Result<RateStudyResult> {
    if n_values.len() < 3 || !n_values.windows(2).all(|w| w[0] < w[1]) {
        bail!("need at least three strictly increasing N values");
    }
    let mut distinct = seeds.to_vec();
    distinct.sort_unstable();
    distinct.dedup();
    if distinct.len() < 3 || distinct.len() != seeds.len() {
        bail!("need at least three distinct seeds");
    }
    base.validate()?;
    if let Some(dir) = out {
        std::fs::create_dir_all(dir.join("cells")).with_context(|| format!("creating {}", dir.display()))?;
    }

    let jobs: Vec<(usize, u64)> = n_values.iter().flat_map(|&n| seeds.iter().map(move |&s| (n, s))).collect();
    let cells: Vec<RateCell> = jobs
        .par_iter()
        .map(|&(n, seed)| -> Result<RateCell> {
            let cfg = cell_config(base, n, seed);
            let o = execute(&cfg).with_context(|| format!("cell N={n} seed={seed}"))?;
            let cell = RateCell {
                n,
                seed,
                error: o.error_inner,
                accept_count: o.trace.accept_count,
                final_loglik: *o.trace.loglik_trace.last().expect("chains have T >= 2"),
            };
            if let Some(dir) = out {
                let path = dir.join("cells").join(format!("n{n}_seed{seed}.json"));
                std::fs::write(&path, serde_json::to_string_pretty(&cell)? + "\n")
                    .with_context(|| format!("writing {}", path.display()))?;
            }
            Ok(cell)
        })
        .collect::<Result<_>>()?;

    let errors: Vec<f64> = n_values
        .iter()
        .map(|&n| median(&cells.iter().filter(|c| c.n == n).map(|c| c.error).collect::<Vec<_>>()))
        .collect();
    let (c, mu, residuals) = fit_rate(n_values, &errors)?;
    let delta = n_values.iter().map(|&n| delta_n(n, base.prior.alpha)).collect();
    let result = RateStudyResult { n_values: n_values.to_vec(), errors, c, mu, residuals, delta_n: delta, cells };
    if let Some(dir) = out {
        write_outputs(dir, base, seeds, &result)?;
    }
    Ok(result)
}

fn write_outputs(dir: &Path, base: &RunConfig, seeds: &[u64], r: &RateStudyResult) -> Result<()> {
    write_csv(
        &dir.join("rate_cells.csv"),
        &["n", "seed", "error", "accept_count", "final_loglik"],
        r.cells.iter().map(|c| {
            vec![
                Cell::Int(c.n as u64),
                Cell::Int(c.seed),
                Cell::Float(c.error),
                Cell::Int(c.accept_count as u64),
                Cell::Float(c.final_loglik),
            ]
        }),
    )?;
    write_csv(
        &dir.join("rate_summary.csv"),
        &["n", "median_error", "delta_n", "fit_residual"],
        (0..r.n_values.len()).map(|k| {
            vec![
                Cell::Int(r.n_values[k] as u64),
                Cell::Float(r.errors[k]),
                Cell::Float(r.delta_n[k]),
                Cell::Float(r.residuals[k]),
            ]
        }),
    )?;
    let summary = serde_json::json!({ "n_values": r.n_values, "seeds": seeds, "c": r.c, "mu": r.mu });
    Manifest::new("rate-study", base, summary)?.write(&dir.join("manifest.json"))
}
