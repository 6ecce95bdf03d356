//! Discretization geometry: the uniform mesh, region membership and grid
//! function containers shared by every other module.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uniform mesh over `(-ell, ell)` with `K = 6M` cells.
///
/// Node `i` (for `0 <= i <= K`) sits at `x_i = -ell + i h` with `h = 2 ell / K`.
/// Only the interior nodes `1..=K-1` carry unknowns; functions are taken to
/// vanish outside `(-ell, ell)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    ell: f64,
    m: usize,
    k: usize,
    h: f64,
    s: f64,
}

impl GridSpec {
    pub fn new(ell: f64, m: usize, s: f64) -> Result<Self> {
        if !(ell.is_finite() && ell > 0.0) {
            return Err(Error::InvalidGrid(format!("half-width must be positive, got {ell}")));
        }
        if m == 0 {
            return Err(Error::InvalidGrid("M must be at least 1".into()));
        }
        if !(s > 0.0 && s < 1.0) {
            return Err(Error::InvalidGrid(format!("fractional order must lie in (0,1), got {s}")));
        }
        let k = 6 * m;
        Ok(Self { ell, m, k, h: 2.0 * ell / k as f64, s })
    }

    pub fn ell(&self) -> f64 {
        self.ell
    }

    pub fn m(&self) -> usize {
        self.m
    }

    /// Number of cells `K` (the mesh has `K + 1` nodes).
    pub fn cells(&self) -> usize {
        self.k
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    /// Number of interior nodes, `K - 1`.
    pub fn interior_len(&self) -> usize {
        self.k - 1
    }

    /// Coordinate of node `i`, `0 <= i <= K`.
    ///
    /// Evaluated as `ell (2i - K) / K`, which equals `-ell + i h` but keeps
    /// mirror nodes exact negatives of each other and leaves shared nodes
    /// bit-identical when `M` is doubled.
    pub fn x(&self, i: usize) -> f64 {
        let num = 2 * i as i64 - self.k as i64;
        self.ell * num as f64 / self.k as f64
    }

    /// Coordinates of the interior nodes `1..=K-1`, in storage order.
    pub fn interior_coords(&self) -> Vec<f64> {
        (1..self.k).map(|i| self.x(i)).collect()
    }

    /// Storage position of interior node `i`.
    #[inline]
    pub fn pos(i: usize) -> usize {
        i - 1
    }
}

/// Open interval `(lo, hi)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub const fn new(lo: f64, hi: f64) -> Self {
        Self { lo, hi }
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo < x && x < self.hi
    }

    pub fn len(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn is_empty(&self) -> bool {
        self.hi <= self.lo
    }

    /// Distance between the closures of two intervals.
    pub fn dist(&self, other: &Interval) -> f64 {
        (other.lo - self.hi).max(self.lo - other.hi).max(0.0)
    }

    fn within(&self, outer: &Interval) -> bool {
        outer.lo <= self.lo && self.hi <= outer.hi
    }
}

/// Continuum layout of the problem: the domain `Omega`, the inner region
/// carrying the unknown part of the potential, the measurement set `D` and
/// the support of the exterior datum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionSpec {
    pub omega: Interval,
    pub inner: Interval,
    pub measurement: Vec<Interval>,
    pub phi_support: Interval,
}

impl Default for RegionSpec {
    fn default() -> Self {
        Self {
            omega: Interval::new(-1.0, 1.0),
            inner: Interval::new(-0.5, 0.5),
            measurement: vec![Interval::new(-3.0, -1.0), Interval::new(1.0, 3.0)],
            phi_support: Interval::new(-3.0, -2.0),
        }
    }
}

impl RegionSpec {
    /// Checks the geometric constraints the forward theory relies on.
    pub fn validate(&self, grid: &GridSpec) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidRegions(msg));
        let whole = Interval::new(-grid.ell(), grid.ell());
        let all = std::iter::once(&self.omega)
            .chain(std::iter::once(&self.inner))
            .chain(self.measurement.iter())
            .chain(std::iter::once(&self.phi_support));
        for iv in all {
            if iv.is_empty() || !iv.lo.is_finite() || !iv.hi.is_finite() {
                return bad(format!("empty or non-finite interval ({}, {})", iv.lo, iv.hi));
            }
            if !iv.within(&whole) {
                return bad(format!("interval ({}, {}) leaves the computational domain", iv.lo, iv.hi));
            }
        }
        if !(self.omega.lo < self.inner.lo && self.inner.hi < self.omega.hi) {
            return bad("closure of the inner region must lie inside omega".into());
        }
        if self.measurement.is_empty() {
            return bad("measurement set is empty".into());
        }
        for (a, d) in self.measurement.iter().enumerate() {
            if d.lo < self.omega.hi && self.omega.lo < d.hi {
                return bad(format!("measurement interval ({}, {}) overlaps omega", d.lo, d.hi));
            }
            for e in &self.measurement[a + 1..] {
                if d.lo < e.hi && e.lo < d.hi {
                    return bad("measurement intervals overlap".into());
                }
            }
        }
        if !self.measurement.iter().any(|d| self.phi_support.within(d)) {
            return bad("support of phi must lie inside the measurement set".into());
        }
        if self.phi_support.dist(&self.omega) <= 0.0 {
            return bad("support of phi must be at positive distance from omega".into());
        }
        Ok(())
    }

    pub fn measurement_len(&self) -> f64 {
        self.measurement.iter().map(Interval::len).sum()
    }
}

/// Node classification of a [`RegionSpec`] on a concrete grid.
///
/// All index lists hold grid node indices `i` in `1..=K-1`, ascending.
/// Nodes sitting exactly on a region boundary belong to no open region.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionMap {
    pub omega: Vec<usize>,
    pub inner: Vec<usize>,
    pub measurement: Vec<usize>,
    pub phi_support: Vec<usize>,
    /// First and last node of each measurement interval that contains nodes.
    pub measurement_runs: Vec<(usize, usize)>,
}

impl RegionMap {
    pub fn classify(grid: &GridSpec, spec: &RegionSpec) -> Self {
        let pick = |iv: &Interval| -> Vec<usize> {
            (1..grid.cells()).filter(|&i| iv.contains(grid.x(i))).collect()
        };
        let mut measurement = Vec::new();
        let mut measurement_runs = Vec::new();
        let mut sorted = spec.measurement.clone();
        sorted.sort_by(|a, b| a.lo.total_cmp(&b.lo));
        for d in &sorted {
            let nodes = pick(d);
            if let (Some(&first), Some(&last)) = (nodes.first(), nodes.last()) {
                measurement_runs.push((first, last));
            }
            measurement.extend(nodes);
        }
        Self {
            omega: pick(&spec.omega),
            inner: pick(&spec.inner),
            measurement,
            phi_support: pick(&spec.phi_support),
            measurement_runs,
        }
    }

    /// Positions of the inner-region nodes within the `omega` list.
    pub fn inner_in_omega(&self) -> Vec<usize> {
        self.inner
            .iter()
            .map(|i| self.omega.binary_search(i).expect("inner nodes lie in omega"))
            .collect()
    }
}

/// Real values at the interior nodes `1..=K-1` of a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    values: Vec<f64>,
}

impl GridFunction {
    pub fn new(grid: &GridSpec, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.interior_len() {
            return Err(Error::DimensionMismatch { expected: grid.interior_len(), got: values.len() });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("grid function has non-finite entries".into()));
        }
        Ok(Self { values })
    }

    pub fn zeros(grid: &GridSpec) -> Self {
        Self { values: vec![0.0; grid.interior_len()] }
    }

    /// Samples `f` at every interior node.
    pub fn from_fn(grid: &GridSpec, f: impl Fn(f64) -> f64) -> Self {
        Self { values: (1..grid.cells()).map(|i| f(grid.x(i))).collect() }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Value at grid node `i`.
    pub fn at(&self, i: usize) -> f64 {
        self.values[GridSpec::pos(i)]
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Smooth bump `amplitude * exp(1 / ((x - center)^2 - radius^2))` on
/// `(center - radius, center + radius)`, zero elsewhere.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhiBump {
    pub amplitude: f64,
    pub center: f64,
    pub radius: f64,
}

impl Default for PhiBump {
    fn default() -> Self {
        Self { amplitude: 10000.0, center: -2.5, radius: 0.5 }
    }
}

impl PhiBump {
    pub fn eval(&self, x: f64) -> f64 {
        let q = (x - self.center).powi(2) - self.radius * self.radius;
        if q < 0.0 {
            self.amplitude * (1.0 / q).exp()
        } else {
            0.0
        }
    }

    pub fn support(&self) -> Interval {
        Interval::new(self.center - self.radius, self.center + self.radius)
    }

    /// Peak value, attained at the center.
    pub fn max(&self) -> f64 {
        self.amplitude * (-1.0 / (self.radius * self.radius)).exp()
    }

    pub fn sample(&self, grid: &GridSpec) -> GridFunction {
        GridFunction::from_fn(grid, |x| self.eval(x))
    }
}
