//! Gaussian sieve priors on the potential perturbation.
//!
//! Two finite-dimensional families are provided:
//!
//! * `piecewise`: iid standard normal values on `2^{J0+1}` equal cells
//!   partitioning `Omega` (the proposal field of the pCN-type sampler);
//! * `haar`: `χ Σ_{-1 <= l <= j, r} 2^{-l t} F_{lr} Ψ_{lr}` with the Haar system
//!   on ℝ, restricted to wavelets whose support meets a compact `K` inside
//!   the inner region, and a smooth cutoff `χ` equal to one on `K' ⊃ K`.
//!
//! Draws can be rescaled by `N^{-1/(4α+6)}` (dimension one).

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forward::ForwardModel;
use crate::grid::{GridFunction, GridSpec, Interval};
use crate::linalg::DenseMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PriorFamily {
    Piecewise,
    Haar,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SievePriorConfig {
    pub family: PriorFamily,
    /// Cell resolution `J0` (piecewise) or truncation level `j >= -1` (haar).
    pub j0: i32,
    /// Decay exponent of the Haar coefficients, `t > 1/2`.
    pub t: f64,
    /// Smoothness used by the `N`-dependent rescaling and the sieve level.
    pub alpha: f64,
    pub rescale_n: Option<usize>,
    /// Piecewise family only: use `χ_(0,1)(2(2^{J0} x - r))` literally, which
    /// covers the left half of every cell and leaves the rest at zero.
    pub half_cell: bool,
}

impl Default for SievePriorConfig {
    fn default() -> Self {
        Self { family: PriorFamily::Piecewise, j0: 3, t: 1.0, alpha: 2.0, rescale_n: None, half_cell: false }
    }
}

impl SievePriorConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        match self.family {
            PriorFamily::Piecewise if !(0..=20).contains(&self.j0) => {
                return bad(format!("piecewise resolution must lie in 0..=20, got {}", self.j0))
            }
            PriorFamily::Haar if !(-1..=20).contains(&self.j0) => {
                return bad(format!("haar truncation level must lie in -1..=20, got {}", self.j0))
            }
            _ => {}
        }
        if !(self.t > 0.5) {
            return bad(format!("decay exponent must exceed 1/2, got {}", self.t));
        }
        if !(self.alpha > 0.0) {
            return bad(format!("smoothness must be positive, got {}", self.alpha));
        }
        if self.rescale_n == Some(0) {
            return bad("rescaling sample size must be at least 1".into());
        }
        Ok(())
    }

    /// Multiplier `N^{-1/(4α+6)}`, or 1 without rescaling.
    pub fn rescale_factor(&self) -> f64 {
        self.rescale_n.map_or(1.0, |n| rescale_factor(n, self.alpha))
    }
}

/// `n^{-d/(4α+4+2d)}` with `d = 1`.
pub fn rescale_factor(n: usize, alpha: f64) -> f64 {
    (n as f64).powf(-1.0 / (4.0 * alpha + 6.0))
}

/// Rescaled draw `n^{-1/(4α+6)} F`.
pub fn rescale_draw(f: &[f64], n: usize, alpha: f64) -> Result<Vec<f64>> {
    if n == 0 || !(alpha > 0.0) {
        return Err(Error::InvalidParameter("rescaling needs n >= 1 and alpha > 0".into()));
    }
    let c = rescale_factor(n, alpha);
    Ok(f.iter().map(|v| c * v).collect())
}

/// Sieve level `j(N) = round(log2(N) / (2α + 1))`, so `2^j ≈ N^{1/(2α+1)}`.
pub fn truncation_level(n: usize, alpha: f64) -> i32 {
    ((n as f64).log2() / (2.0 * alpha + 1.0)).round() as i32
}

/// One basis function of the sieve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BasisTerm {
    /// Level `l` (`-1` for scaling functions); cell index for piecewise.
    pub level: i32,
    pub shift: i64,
    /// Coefficient standard deviation.
    pub weight: f64,
}

/// Smooth cutoff equal to 1 on the middle 80% of `inner`, decaying to 0 at
/// its endpoints.
#[derive(Debug, Clone, Copy)]
pub struct Cutoff {
    center: f64,
    half_width: f64,
}

impl Cutoff {
    pub const PLATEAU: f64 = 0.8;

    pub fn new(inner: &Interval) -> Self {
        Self { center: 0.5 * (inner.lo + inner.hi), half_width: 0.5 * inner.len() }
    }

    pub fn eval(&self, x: f64) -> f64 {
        let d = (self.half_width - (x - self.center).abs()) / ((1.0 - Self::PLATEAU) * self.half_width);
        smooth_step(d)
    }

    /// Compact set `K'` where the cutoff equals 1.
    pub fn plateau(&self) -> Interval {
        let w = Self::PLATEAU * self.half_width;
        Interval::new(self.center - w, self.center + w)
    }

    /// Compact set `K ⊊ K'` selecting the wavelets.
    pub fn core(&self) -> Interval {
        let w = 0.75 * Self::PLATEAU * self.half_width;
        Interval::new(self.center - w, self.center + w)
    }
}

fn smooth_step(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else if t >= 1.0 {
        1.0
    } else {
        let a = (-1.0 / t).exp();
        let b = (-1.0 / (1.0 - t)).exp();
        a / (a + b)
    }
}

fn haar_value(level: i32, shift: i64, x: f64) -> f64 {
    if level < 0 {
        return if (shift as f64) <= x && x < (shift + 1) as f64 { 1.0 } else { 0.0 };
    }
    let scale = 2f64.powi(level);
    let y = scale * x - shift as f64;
    if !(0.0..1.0).contains(&y) {
        0.0
    } else if y < 0.5 {
        scale.sqrt()
    } else {
        -scale.sqrt()
    }
}

/// A sieve prior evaluated on the `omega` nodes of a forward model.
#[derive(Debug, Clone)]
pub struct SievePrior {
    cfg: SievePriorConfig,
    terms: Vec<BasisTerm>,
    /// `omega` nodes × basis terms, weights included.
    basis: DenseMatrix,
    grid: GridSpec,
    omega: Vec<usize>,
}

impl SievePrior {
    pub fn new(cfg: &SievePriorConfig, model: &ForwardModel) -> Result<Self> {
        cfg.validate()?;
        let grid = *model.grid();
        let omega = model.regions().omega.clone();
        let xs: Vec<f64> = omega.iter().map(|&i| grid.x(i)).collect();
        let spec = model.region_spec();
        let (terms, basis) = match cfg.family {
            PriorFamily::Piecewise => piecewise_basis(cfg, &spec.omega, &xs),
            PriorFamily::Haar => haar_basis(cfg, &spec.inner, &xs),
        };
        Ok(Self { cfg: cfg.clone(), terms, basis, grid, omega })
    }

    pub fn config(&self) -> &SievePriorConfig {
        &self.cfg
    }

    pub fn terms(&self) -> &[BasisTerm] {
        &self.terms
    }

    pub fn dim(&self) -> usize {
        self.terms.len()
    }

    /// Number of `omega` nodes a draw covers.
    pub fn nodes(&self) -> usize {
        self.omega.len()
    }

    /// Field value at each `omega` node for the given standard-normal
    /// coefficients.
    pub fn synthesize(&self, coefficients: &[f64]) -> Result<Vec<f64>> {
        if coefficients.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: coefficients.len() });
        }
        let c = self.cfg.rescale_factor();
        let mut out = self.basis.matvec(coefficients)?;
        out.iter_mut().for_each(|v| *v *= c);
        Ok(out)
    }

    /// Draw at the `omega` nodes.
    pub fn draw(&self, rng: &mut impl Rng) -> Vec<f64> {
        let z: Vec<f64> = (0..self.dim()).map(|_| rng.sample(StandardNormal)).collect();
        self.synthesize(&z).expect("coefficient count matches basis")
    }

    /// Draw extended by zero to the whole grid.
    pub fn draw_grid(&self, rng: &mut impl Rng) -> GridFunction {
        let mut g = GridFunction::zeros(&self.grid);
        for (&i, v) in self.omega.iter().zip(self.draw(rng)) {
            g.values_mut()[GridSpec::pos(i)] = v;
        }
        g
    }

    /// Prior variance at every `omega` node.
    pub fn marginal_variance(&self) -> Vec<f64> {
        let c2 = self.cfg.rescale_factor().powi(2);
        (0..self.basis.rows()).map(|r| c2 * self.basis.row(r).iter().map(|b| b * b).sum::<f64>()).collect()
    }
}

fn piecewise_basis(cfg: &SievePriorConfig, omega: &Interval, xs: &[f64]) -> (Vec<BasisTerm>, DenseMatrix) {
    let half = 1i64 << cfg.j0;
    let cells = 2 * half;
    let terms: Vec<BasisTerm> =
        (-half..half).map(|r| BasisTerm { level: cfg.j0, shift: r, weight: 1.0 }).collect();
    let mut basis = DenseMatrix::zeros(xs.len(), terms.len());
    for (row, &x) in xs.iter().enumerate() {
        let t = (x - omega.lo) / omega.len() * cells as f64;
        let cell = t.floor();
        if cell < 0.0 || cell >= cells as f64 {
            continue;
        }
        if cfg.half_cell && t - cell >= 0.5 {
            continue;
        }
        basis.set(row, cell as usize, 1.0);
    }
    (terms, basis)
}

fn haar_basis(cfg: &SievePriorConfig, inner: &Interval, xs: &[f64]) -> (Vec<BasisTerm>, DenseMatrix) {
    let cutoff = Cutoff::new(inner);
    let core = cutoff.core();
    let mut terms = Vec::new();
    for level in -1..=cfg.j0 {
        let scale = if level < 0 { 1.0 } else { 2f64.powi(level) };
        let weight = if level < 0 { 1.0 } else { 2f64.powf(-(level as f64) * cfg.t) };
        let first = (core.lo * scale).floor() as i64;
        let last = (core.hi * scale).floor() as i64;
        for shift in first..=last {
            terms.push(BasisTerm { level, shift, weight });
        }
    }
    let basis = DenseMatrix::from_fn(xs.len(), terms.len(), |row, c| {
        let x = xs[row];
        let term = terms[c];
        cutoff.eval(x) * term.weight * haar_value(term.level, term.shift, x)
    });
    (terms, basis)
}
