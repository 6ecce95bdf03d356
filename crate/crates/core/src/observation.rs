//! Observation model: link function, random design, synthetic data and the
//! Gaussian log-likelihood `-(1/2σ²) Σ (Y_i - G(f)(X_i))²`.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forward::{ForwardModel, Observer, Potential};
use crate::grid::RegionMap;
use crate::rng::{Streams, Substream};

/// Scaled logistic link `Φ(z) = m0 / (1 + (m0 - 1) e^{-k z})`.
///
/// Maps ℝ onto `(0, m0)` with `Φ(0) = 1`, strictly increasing, with bounded
/// derivatives of every order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkFunction {
    pub m0: f64,
    pub steepness: f64,
}

impl Default for LinkFunction {
    fn default() -> Self {
        Self { m0: 10.0, steepness: 1.0 }
    }
}

impl LinkFunction {
    pub fn new(m0: f64, steepness: f64) -> Result<Self> {
        if !(m0 > 1.0 && m0.is_finite()) {
            return Err(Error::InvalidParameter(format!("link cap must exceed 1, got {m0}")));
        }
        if !(steepness > 0.0 && steepness.is_finite()) {
            return Err(Error::InvalidParameter(format!("link steepness must be positive, got {steepness}")));
        }
        Ok(Self { m0, steepness })
    }

    pub fn apply(&self, z: f64) -> f64 {
        self.m0 / (1.0 + (self.m0 - 1.0) * (-self.steepness * z).exp())
    }

    pub fn derivative(&self, z: f64) -> f64 {
        let e = (self.m0 - 1.0) * (-self.steepness * z).exp();
        self.m0 * self.steepness * e / (1.0 + e).powi(2)
    }

    /// `Φ^{-1}(y) = (1/k) ln((m0 - 1) y / (m0 - y))` on `(0, m0)`.
    pub fn inverse(&self, y: f64) -> Result<f64> {
        if !(y > 0.0 && y < self.m0) {
            return Err(Error::InvalidParameter(format!("{y} is outside the link range (0, {})", self.m0)));
        }
        Ok(((self.m0 - 1.0) * y / (self.m0 - y)).ln() / self.steepness)
    }

    /// Potential on the `omega` nodes: `Φ(F)` on the inner nodes, 1 elsewhere.
    /// `inner_values` follows [`RegionMap::inner`] order.
    pub fn link_apply(&self, regions: &RegionMap, inner_values: &[f64]) -> Result<Potential> {
        if inner_values.len() != regions.inner.len() {
            return Err(Error::DimensionMismatch { expected: regions.inner.len(), got: inner_values.len() });
        }
        let mut values = vec![1.0; regions.omega.len()];
        for (&p, &z) in regions.inner_in_omega().iter().zip(inner_values) {
            if !z.is_finite() {
                return Err(Error::InvalidParameter("non-finite link argument".into()));
            }
            values[p] = self.apply(z);
        }
        Potential::new(values)
    }
}

/// Design points `X_i`, observations `Y_i` and the noise level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasurementSet {
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
    pub sigma: f64,
    pub seed: Option<u64>,
}

impl MeasurementSet {
    pub fn new(xs: Vec<f64>, ys: Vec<f64>, sigma: f64, seed: Option<u64>) -> Result<Self> {
        if xs.len() != ys.len() {
            return Err(Error::DimensionMismatch { expected: xs.len(), got: ys.len() });
        }
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::InvalidParameter(format!("noise level must be positive, got {sigma}")));
        }
        Ok(Self { xs, ys, sigma, seed })
    }

    pub fn len(&self) -> usize {
        self.xs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xs.is_empty()
    }
}

/// `n` iid uniform points on the admissible part of the measurement set.
pub fn sample_design(model: &ForwardModel, n: usize, rng: &mut impl Rng) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(Error::InvalidParameter("design size must be at least 1".into()));
    }
    let intervals = model.sampling_intervals();
    let total: f64 = intervals.iter().map(|iv| iv.len()).sum();
    if intervals.is_empty() || total <= 0.0 {
        return Err(Error::InvalidRegions("admissible measurement set is empty".into()));
    }
    let mut xs = Vec::with_capacity(n);
    for _ in 0..n {
        let mut u = rng.gen::<f64>() * total;
        let mut x = intervals[intervals.len() - 1].hi;
        for iv in &intervals {
            if u < iv.len() {
                x = (iv.lo + u).min(iv.hi);
                break;
            }
            u -= iv.len();
        }
        xs.push(x);
    }
    Ok(xs)
}

/// Noise-free forward data `G(f)(x)` at the given points.
pub fn predict(model: &ForwardModel, f: &Potential, xs: &[f64]) -> Result<Vec<f64>> {
    let sol = model.solve(f)?;
    xs.iter().map(|&x| model.eval_g(&sol, x)).collect()
}

/// Draws `Y_i = G(f0)(X_i) + sigma W_i`. Design points come from the
/// `Design` substream and the noise from the `Noise` substream of `streams`.
/// `sigma = 0` yields noiseless data (not usable for a likelihood).
pub fn generate_data(
    model: &ForwardModel,
    f0: &Potential,
    n: usize,
    sigma: f64,
    streams: &Streams,
) -> Result<(Vec<f64>, Vec<f64>)> {
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(Error::InvalidParameter(format!("noise level must be nonnegative, got {sigma}")));
    }
    let xs = sample_design(model, n, &mut streams.stream(Substream::Design))?;
    let clean = predict(model, f0, &xs)?;
    let mut noise = streams.stream(Substream::Noise);
    let ys = clean
        .into_iter()
        .map(|g| {
            let w: f64 = noise.sample(StandardNormal);
            g + sigma * w
        })
        .collect();
    Ok((xs, ys))
}

/// Synthetic [`MeasurementSet`] with a positive noise level.
pub fn simulate(model: &ForwardModel, f0: &Potential, n: usize, sigma: f64, streams: &Streams) -> Result<MeasurementSet> {
    let (xs, ys) = generate_data(model, f0, n, sigma, streams)?;
    MeasurementSet::new(xs, ys, sigma, Some(streams.seed()))
}

/// `-(1/2σ²) Σ r_i²`.
pub fn gaussian_loglik(residuals: impl IntoIterator<Item = f64>, sigma: f64) -> f64 {
    let ss: f64 = residuals.into_iter().map(|r| r * r).sum();
    -ss / (2.0 * sigma * sigma)
}

/// Log-likelihood of `f` through a full forward solve and interpolation.
pub fn log_likelihood(model: &ForwardModel, f: &Potential, data: &MeasurementSet) -> Result<f64> {
    let g = predict(model, f, &data.xs)?;
    Ok(gaussian_loglik(data.ys.iter().zip(g).map(|(y, g)| y - g), data.sigma))
}

/// Log-likelihood bound to a fixed data set, reusing the precomputed
/// observation rows for every evaluation.
#[derive(Debug, Clone)]
pub struct Likelihood<'a> {
    model: &'a ForwardModel,
    observer: Observer,
    ys: Vec<f64>,
    sigma: f64,
}

impl<'a> Likelihood<'a> {
    pub fn new(model: &'a ForwardModel, data: &MeasurementSet) -> Result<Self> {
        let observer = model.observer(&data.xs)?;
        Ok(Self { model, observer, ys: data.ys.clone(), sigma: data.sigma })
    }

    pub fn model(&self) -> &ForwardModel {
        self.model
    }

    pub fn eval(&self, f: &Potential) -> Result<f64> {
        let v = self.model.solve_omega(f)?;
        let g = self.observer.predict(&v);
        Ok(gaussian_loglik(self.ys.iter().zip(g).map(|(y, g)| y - g), self.sigma))
    }
}
