//! Run configuration: a TOML file with one table per stage, named presets and
//! ground-truth potentials.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forward::{ForwardModel, Potential};
use crate::grid::{GridSpec, PhiBump, RegionSpec};
use crate::prior::SievePriorConfig;
use crate::sampler::{AcceptRule, SamplerConfig};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub ell: f64,
    pub m: usize,
    pub s: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self { ell: 3.0, m: 50, s: 0.5 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TruthPreset {
    /// `1 + 0.5 exp(1 - 1/(1 - (2x)^2))` on the inner region, 1 elsewhere.
    Bump,
    /// 1.5 on `(-1/4, 1/4)`, 1 elsewhere.
    Step,
    /// Staircase on the eight cells of width 1/8 inside the inner region.
    PaperLike,
    /// Piecewise constant on equal cells of `Omega`, values from `values`.
    Custom,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TruthConfig {
    pub preset: TruthPreset,
    pub values: Vec<f64>,
}

impl Default for TruthConfig {
    fn default() -> Self {
        Self { preset: TruthPreset::Bump, values: Vec::new() }
    }
}

const PAPER_LIKE: [f64; 8] = [1.25, 1.5, 1.75, 2.0, 2.0, 1.75, 1.5, 1.25];

impl TruthConfig {
    pub fn preset(preset: TruthPreset) -> Self {
        Self { preset, values: Vec::new() }
    }

    pub fn validate(&self) -> Result<()> {
        match self.preset {
            TruthPreset::Custom => {
                if self.values.is_empty() {
                    return Err(Error::InvalidParameter("custom truth needs at least one value".into()));
                }
                if self.values.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
                    return Err(Error::InvalidParameter("truth values must be finite and nonnegative".into()));
                }
            }
            _ if !self.values.is_empty() => {
                return Err(Error::InvalidParameter("truth values are only used by the custom preset".into()))
            }
            _ => {}
        }
        Ok(())
    }

    /// `f0(x)` for `x` in `omega`, with the inner region `inner`.
    pub fn eval(&self, x: f64, regions: &RegionSpec) -> f64 {
        let inner = regions.inner;
        let c = 0.5 * (inner.lo + inner.hi);
        let w = 0.5 * inner.len();
        match self.preset {
            TruthPreset::Bump => {
                let z = (x - c) / w;
                if z.abs() < 1.0 {
                    1.0 + 0.5 * (1.0 - 1.0 / (1.0 - z * z)).exp()
                } else {
                    1.0
                }
            }
            TruthPreset::Step => {
                if ((x - c) / w).abs() < 0.5 {
                    1.5
                } else {
                    1.0
                }
            }
            TruthPreset::PaperLike => {
                if !inner.contains(x) {
                    return 1.0;
                }
                let k = ((x - inner.lo) / inner.len() * PAPER_LIKE.len() as f64).floor() as usize;
                PAPER_LIKE[k.min(PAPER_LIKE.len() - 1)]
            }
            TruthPreset::Custom => {
                let omega = regions.omega;
                let n = self.values.len();
                let k = ((x - omega.lo) / omega.len() * n as f64).floor().clamp(0.0, (n - 1) as f64) as usize;
                self.values[k]
            }
        }
    }

    /// Truth sampled at the `omega` nodes of `model`.
    pub fn potential(&self, model: &ForwardModel) -> Result<Potential> {
        self.validate()?;
        let g = model.grid();
        Potential::new(model.regions().omega.iter().map(|&i| self.eval(g.x(i), model.region_spec())).collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObservationConfig {
    pub n: usize,
    pub sigma: f64,
}

impl Default for ObservationConfig {
    fn default() -> Self {
        Self { n: 150, sigma: 1e-3 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub grid: GridConfig,
    pub regions: RegionSpec,
    pub phi: PhiBump,
    pub truth: TruthConfig,
    pub observation: ObservationConfig,
    pub prior: SievePriorConfig,
    pub sampler: SamplerConfig,
    pub output: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self::preset("paper").expect("paper preset exists")
    }
}

pub const PRESETS: [&str; 3] = ["paper", "desk", "smoke"];

impl RunConfig {
    /// `paper`: the full-scale setting (`M = 50`, `N = 150`, `T = 5e6`, `β = 0.1`).
    /// `desk`: `M = 20`, `N = 100`, `T = 2e5`, `β = 0.01`. `smoke`: seconds-long run.
    pub fn preset(name: &str) -> Result<Self> {
        let (m, n, t, beta) = match name {
            "paper" => (50, 150, 5_000_000, 0.1),
            "desk" => (20, 100, 200_000, 0.01),
            "smoke" => (10, 20, 1_000, 0.1),
            other => {
                return Err(Error::InvalidParameter(format!(
                    "unknown preset '{other}', expected one of {}",
                    PRESETS.join(", ")
                )))
            }
        };
        Ok(Self {
            seed: 0,
            grid: GridConfig { m, ..GridConfig::default() },
            regions: RegionSpec::default(),
            phi: PhiBump::default(),
            truth: TruthConfig::default(),
            observation: ObservationConfig { n, sigma: 1e-3 },
            prior: SievePriorConfig::default(),
            sampler: SamplerConfig {
                step_beta: beta,
                iterations: t,
                accept_rule: AcceptRule::Greedy,
                thinning: 1000.min(t),
                ..SamplerConfig::default()
            },
            output: PathBuf::from("out"),
        })
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: RunConfig =
            toml::from_str(text).map_err(|e| Error::InvalidParameter(format!("config: {}", e.message())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::InvalidParameter(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is always representable")
    }

    pub fn grid_spec(&self) -> Result<GridSpec> {
        GridSpec::new(self.grid.ell, self.grid.m, self.grid.s)
    }

    pub fn validate(&self) -> Result<()> {
        let grid = self.grid_spec()?;
        self.regions.validate(&grid)?;
        let support = self.phi.support();
        let allowed = self.regions.phi_support;
        if !(self.phi.amplitude.is_finite() && self.phi.radius > 0.0) {
            return Err(Error::InvalidParameter("phi needs a finite amplitude and positive radius".into()));
        }
        if support.lo < allowed.lo || support.hi > allowed.hi {
            return Err(Error::InvalidRegions("phi bump leaves the declared phi support".into()));
        }
        self.truth.validate()?;
        if self.observation.n == 0 {
            return Err(Error::InvalidParameter("N must be at least 1".into()));
        }
        if !(self.observation.sigma > 0.0 && self.observation.sigma.is_finite()) {
            return Err(Error::InvalidParameter("sigma must be positive".into()));
        }
        self.prior.validate()?;
        self.sampler.validate()
    }

    pub fn model(&self) -> Result<ForwardModel> {
        ForwardModel::new(&self.grid_spec()?, &self.regions, &self.phi)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets() {
        let paper = RunConfig::preset("paper").unwrap();
        assert_eq!(paper.grid.m, 50);
        assert_eq!(paper.observation.n, 150);
        assert_eq!(paper.observation.sigma, 1e-3);
        assert_eq!(paper.sampler.step_beta, 0.1);
        assert_eq!(paper.prior.j0, 3);
        assert_eq!(paper.sampler.iterations, 5_000_000);
        for name in PRESETS {
            RunConfig::preset(name).unwrap().validate().unwrap();
        }
        assert!(RunConfig::preset("huge").is_err());
    }

    #[test]
    fn toml_round_trip() {
        let cfg = RunConfig::preset("smoke").unwrap();
        let back = RunConfig::from_toml(&cfg.to_toml()).unwrap();
        assert_eq!(cfg, back);
    }

    #[test]
    fn partial_files_fill_defaults() {
        let cfg = RunConfig::from_toml("seed = 7\n[grid]\nell = 3.0\nm = 12\ns = 0.5\n[sampler]\niterations = 50\n")
            .unwrap();
        assert_eq!(cfg.seed, 7);
        assert_eq!(cfg.grid.m, 12);
        assert_eq!(cfg.sampler.iterations, 50);
        assert_eq!(cfg.sampler.step_beta, 0.1);
    }

    #[test]
    fn rejects_bad_files() {
        assert!(RunConfig::from_toml("bogus = 1").is_err());
        assert!(RunConfig::from_toml("[observation]\nn = 0\nsigma = 1e-3").is_err());
        assert!(RunConfig::from_toml("[sampler]\nstep_beta = 2.0").is_err());
        assert!(RunConfig::from_toml("[phi]\namplitude = 1.0\ncenter = 0.0\nradius = 0.5").is_err());
        assert!(RunConfig::from_toml("[truth]\npreset = \"custom\"").is_err());
    }

    #[test]
    fn truth_presets() {
        let r = RegionSpec::default();
        let bump = TruthConfig::preset(TruthPreset::Bump);
        assert_eq!(bump.eval(0.0, &r), 1.5);
        assert_eq!(bump.eval(0.5, &r), 1.0);
        assert_eq!(bump.eval(-0.9, &r), 1.0);
        let step = TruthConfig::preset(TruthPreset::Step);
        assert_eq!(step.eval(0.1, &r), 1.5);
        assert_eq!(step.eval(0.3, &r), 1.0);
        let paper = TruthConfig::preset(TruthPreset::PaperLike);
        assert_eq!(paper.eval(-0.49, &r), 1.25);
        assert_eq!(paper.eval(0.01, &r), 2.0);
        assert_eq!(paper.eval(0.7, &r), 1.0);
        let custom = TruthConfig { preset: TruthPreset::Custom, values: vec![1.0, 2.0, 3.0, 4.0] };
        assert_eq!(custom.eval(-0.75, &r), 1.0);
        assert_eq!(custom.eval(0.25, &r), 3.0);
        assert_eq!(custom.eval(0.99, &r), 4.0);
    }
}
