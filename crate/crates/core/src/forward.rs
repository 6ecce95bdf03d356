//! Forward problem: `((-Δ)^s + f) u = 0` in `Omega`, `u = phi` outside, and
//! the exterior data `G(f) = (-Δ)^s u` on the measurement set.
//!
//! With `v = u - phi` the discrete system reads
//! `(A_ΩΩ + diag(f)) v_Ω = -(A phi)_Ω`, `v = 0` off `Omega`.

use crate::error::{Error, Result};
use crate::grid::{GridFunction, GridSpec, Interval, PhiBump, RegionMap, RegionSpec};
use crate::linalg::{dot, norm2, Cholesky, DenseMatrix};
use crate::operator::FracOperator;

/// Nonnegative potential at the `omega` nodes, in [`RegionMap::omega`] order.
#[derive(Debug, Clone, PartialEq)]
pub struct Potential {
    values: Vec<f64>,
}

impl Potential {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(v) = values.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(Error::InvalidPotential(format!("entry {v} is negative or not finite")));
        }
        Ok(Self { values })
    }

    /// Like [`Potential::new`] but also enforces the upper cap `values < m0`.
    pub fn with_cap(values: Vec<f64>, m0: f64) -> Result<Self> {
        if let Some(v) = values.iter().find(|v| **v >= m0) {
            return Err(Error::InvalidPotential(format!("entry {v} reaches the cap {m0}")));
        }
        Self::new(values)
    }

    pub fn constant(len: usize, value: f64) -> Result<Self> {
        Self::new(vec![value; len])
    }

    /// Replaces negative entries by zero and reports how many were clipped.
    /// Non-finite entries are still rejected.
    pub fn clipped(mut values: Vec<f64>) -> Result<(Self, usize)> {
        let mut clipped = 0;
        for v in values.iter_mut() {
            if *v < 0.0 {
                *v = 0.0;
                clipped += 1;
            }
        }
        Ok((Self::new(values)?, clipped))
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }
}

/// Output of a forward solve.
#[derive(Debug, Clone, PartialEq)]
pub struct ForwardSolution {
    /// Full solution `u = v + datum` on the interior nodes.
    pub u: GridFunction,
    /// Correction `v`, supported on `omega`.
    pub v: GridFunction,
    /// `(A u)_i` for the measurement nodes, in [`RegionMap::measurement`] order.
    pub dn: Vec<f64>,
}

/// Discretized forward model: operator, regions and exterior datum, with the
/// `Omega` block of the operator cached for repeated solves.
#[derive(Debug, Clone)]
pub struct ForwardModel {
    grid: GridSpec,
    spec: RegionSpec,
    regions: RegionMap,
    op: FracOperator,
    phi: GridFunction,
    a_omega: DenseMatrix,
    phi_image: Vec<f64>,
    rhs: Vec<f64>,
    dn_index: Vec<Option<usize>>,
}

/// Relative residual tolerance `||r|| <= RESIDUAL_TOL (1 + ||rhs||)`.
pub const RESIDUAL_TOL: f64 = 1e-10;

impl ForwardModel {
    /// Builds the model for the bump datum on the given layout.
    pub fn new(grid: &GridSpec, spec: &RegionSpec, phi: &PhiBump) -> Result<Self> {
        spec.validate(grid)?;
        let sup = phi.support();
        if !(spec.phi_support.lo <= sup.lo && sup.hi <= spec.phi_support.hi) {
            return Err(Error::InvalidRegions("bump support leaves the configured phi support".into()));
        }
        Self::with_operator(FracOperator::build(grid), spec, phi.sample(grid))
    }

    /// Builds the model around an explicit operator and sampled datum. The
    /// datum must vanish on the `omega` nodes.
    pub fn with_operator(op: FracOperator, spec: &RegionSpec, phi: GridFunction) -> Result<Self> {
        let grid = *op.grid();
        if phi.len() != grid.interior_len() {
            return Err(Error::DimensionMismatch { expected: grid.interior_len(), got: phi.len() });
        }
        let regions = RegionMap::classify(&grid, spec);
        if regions.omega.is_empty() {
            return Err(Error::InvalidRegions("omega contains no grid nodes".into()));
        }
        if regions.omega.iter().any(|&i| phi.at(i) != 0.0) {
            return Err(Error::InvalidRegions("exterior datum does not vanish on omega".into()));
        }
        let omega_pos: Vec<usize> = regions.omega.iter().map(|&i| GridSpec::pos(i)).collect();
        let a_omega = DenseMatrix::from_fn(omega_pos.len(), omega_pos.len(), |a, b| {
            op.entry(omega_pos[a], omega_pos[b])
        });
        let phi_image = op.apply_slice(phi.values())?;
        let rhs = omega_pos.iter().map(|&p| -phi_image[p]).collect();
        let mut dn_index = vec![None; grid.interior_len()];
        for (k, &i) in regions.measurement.iter().enumerate() {
            dn_index[GridSpec::pos(i)] = Some(k);
        }
        Ok(Self { grid, spec: spec.clone(), regions, op, phi, a_omega, phi_image, rhs, dn_index })
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn region_spec(&self) -> &RegionSpec {
        &self.spec
    }

    pub fn regions(&self) -> &RegionMap {
        &self.regions
    }

    pub fn operator(&self) -> &FracOperator {
        &self.op
    }

    pub fn phi(&self) -> &GridFunction {
        &self.phi
    }

    /// `A phi` on all interior nodes.
    pub fn phi_image(&self) -> &[f64] {
        &self.phi_image
    }

    pub fn omega_len(&self) -> usize {
        self.regions.omega.len()
    }

    fn solve_block(&self, f: &Potential, rhs: &[f64]) -> Result<Vec<f64>> {
        let n = self.omega_len();
        if f.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: f.len() });
        }
        let chol = Cholesky::factor_shifted(&self.a_omega, f.values())?;
        let v = chol.solve(rhs)?;
        let mut res = self.a_omega.matvec(&v)?;
        for ((r, b), (vi, fi)) in res.iter_mut().zip(rhs).zip(v.iter().zip(f.values())) {
            *r += fi * vi - b;
        }
        let residual = norm2(&res);
        let tolerance = RESIDUAL_TOL * (1.0 + norm2(rhs));
        if !(residual <= tolerance) {
            return Err(Error::Residual { residual, tolerance });
        }
        Ok(v)
    }

    /// Solves for `v` on the `omega` nodes only (the cheap path used by the
    /// likelihood).
    pub fn solve_omega(&self, f: &Potential) -> Result<Vec<f64>> {
        self.solve_block(f, &self.rhs)
    }

    pub fn solve(&self, f: &Potential) -> Result<ForwardSolution> {
        let v = self.solve_omega(f)?;
        self.assemble(v, &self.phi)
    }

    /// Solves with an arbitrary exterior datum in place of `phi`.
    pub fn solve_with_datum(&self, f: &Potential, datum: &GridFunction) -> Result<ForwardSolution> {
        if datum.len() != self.grid.interior_len() {
            return Err(Error::DimensionMismatch { expected: self.grid.interior_len(), got: datum.len() });
        }
        if self.regions.omega.iter().any(|&i| datum.at(i) != 0.0) {
            return Err(Error::InvalidParameter("exterior datum does not vanish on omega".into()));
        }
        let image = self.op.apply_slice(datum.values())?;
        let rhs: Vec<f64> = self.regions.omega.iter().map(|&i| -image[GridSpec::pos(i)]).collect();
        let v = self.solve_block(f, &rhs)?;
        self.assemble(v, datum)
    }

    fn assemble(&self, v_omega: Vec<f64>, datum: &GridFunction) -> Result<ForwardSolution> {
        let mut v = vec![0.0; self.grid.interior_len()];
        for (&i, vi) in self.regions.omega.iter().zip(v_omega) {
            v[GridSpec::pos(i)] = vi;
        }
        let u: Vec<f64> = v.iter().zip(datum.values()).map(|(a, b)| a + b).collect();
        let v = GridFunction::new(&self.grid, v)?;
        let u = GridFunction::new(&self.grid, u)?;
        let mut sol = ForwardSolution { u, v, dn: Vec::new() };
        sol.dn = self.dn_on_grid(&sol);
        Ok(sol)
    }

    /// `(A u)_i` for every measurement node.
    pub fn dn_on_grid(&self, sol: &ForwardSolution) -> Vec<f64> {
        let u = sol.u.values();
        self.regions.measurement.iter().map(|&i| self.op.apply_at(u, GridSpec::pos(i))).collect()
    }

    /// Closed intervals `[x_first, x_last]` spanned by each run of measurement
    /// nodes. Linear interpolation between measurement nodes is defined
    /// exactly on their union; points are sampled uniformly from it.
    pub fn sampling_intervals(&self) -> Vec<Interval> {
        self.regions
            .measurement_runs
            .iter()
            .filter(|(a, b)| b > a)
            .map(|&(a, b)| Interval::new(self.grid.x(a), self.grid.x(b)))
            .collect()
    }

    /// Bracketing measurement-node indices (into `dn`) and interpolation
    /// weights for `x`.
    fn stencil(&self, x: f64) -> Result<[(usize, f64); 2]> {
        let h = self.grid.h();
        for &(first, last) in &self.regions.measurement_runs {
            let (lo, hi) = (self.grid.x(first), self.grid.x(last));
            if !(lo <= x && x <= hi) || last == first {
                continue;
            }
            let offset = ((x - lo) / h).floor() as usize;
            let i0 = (first + offset).min(last - 1);
            let t = ((x - self.grid.x(i0)) / h).clamp(0.0, 1.0);
            let k0 = self.dn_index[GridSpec::pos(i0)].expect("run nodes are measurement nodes");
            let k1 = self.dn_index[GridSpec::pos(i0 + 1)].expect("run nodes are measurement nodes");
            return Ok([(k0, 1.0 - t), (k1, t)]);
        }
        Err(Error::InadmissiblePoint { x, reason: "outside the admissible measurement set" })
    }

    /// `G(f)(x)` by linear interpolation of `dn` between measurement nodes.
    pub fn eval_g(&self, sol: &ForwardSolution, x: f64) -> Result<f64> {
        let [(k0, w0), (k1, w1)] = self.stencil(x)?;
        Ok(w0 * sol.dn[k0] + w1 * sol.dn[k1])
    }

    /// Precomputes the linear map `v_Ω -> (G(f)(x_k))_k` for fixed design
    /// points, so repeated likelihood evaluations avoid the full product.
    pub fn observer(&self, xs: &[f64]) -> Result<Observer> {
        let n = self.omega_len();
        let mut rows = DenseMatrix::zeros(xs.len(), n);
        let mut offsets = Vec::with_capacity(xs.len());
        for (r, &x) in xs.iter().enumerate() {
            let mut offset = 0.0;
            for (k, w) in self.stencil(x)? {
                let p = GridSpec::pos(self.regions.measurement[k]);
                offset += w * self.phi_image[p];
                for (c, &j) in self.regions.omega.iter().enumerate() {
                    let cur = rows.get(r, c);
                    rows.set(r, c, cur + w * self.op.entry(p, GridSpec::pos(j)));
                }
            }
            offsets.push(offset);
        }
        Ok(Observer { rows, offsets })
    }
}

/// Affine observation map `G(f)(x_k) = offset_k + row_k · v_Ω`.
#[derive(Debug, Clone)]
pub struct Observer {
    rows: DenseMatrix,
    offsets: Vec<f64>,
}

impl Observer {
    pub fn len(&self) -> usize {
        self.offsets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.offsets.is_empty()
    }

    pub fn predict(&self, v_omega: &[f64]) -> Vec<f64> {
        self.offsets.iter().enumerate().map(|(r, o)| o + dot(self.rows.row(r), v_omega)).collect()
    }
}

/// Discrete `L²` norm with node weight `h`.
pub fn h_norm(values: &[f64], h: f64) -> f64 {
    (h * dot(values, values)).sqrt()
}
