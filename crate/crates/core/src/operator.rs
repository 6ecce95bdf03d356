//! Discrete fractional Laplacian `(-Δ)_h^s` as a symmetric Toeplitz matrix.
//!
//! For a function vanishing outside `(-ell, ell)`, `(-Δ)_h^s v(x_i) = (A v)_i`
//! over the interior nodes, where `A_{ij} = a_{|i-j|}` and
//!
//! ```text
//! scale = c_{1,2s} / ((1-s) h^{2s})
//! a_0   = scale [ Σ_{k=2}^{K} ((k+1)^{1-s} - (k-1)^{1-s}) / k^{1+s}
//!                 + (K^{1-s} - (K-1)^{1-s}) / K^{1+s} + 2^{1-s} + (1-s) / (s K^{2s}) ]
//! a_1   = -scale 2^{-s}
//! a_m   = -scale ((m+1)^{1-s} - (m-1)^{1-s}) / (2 m^{1+s}),   m >= 2
//! ```

use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::grid::{GridFunction, GridSpec};
use crate::linalg::DenseMatrix;
use crate::special::stencil_constant;

/// Upper bound on the dimension accepted by [`FracOperator::assemble_dense`].
pub const DENSE_LIMIT: usize = 2000;

#[derive(Debug, Clone, PartialEq)]
pub struct FracOperator {
    grid: GridSpec,
    scale: f64,
    symbol: Vec<f64>,
}

impl FracOperator {
    pub fn build(grid: &GridSpec) -> Self {
        let s = grid.s();
        let k = grid.cells();
        let kf = k as f64;
        let scale = stencil_constant(s) / ((1.0 - s) * grid.h().powf(2.0 * s));
        let p = 1.0 - s;
        let q = 1.0 + s;

        let mut series = KahanSum::default();
        for j in 2..=k {
            let j = j as f64;
            series.add(((j + 1.0).powf(p) - (j - 1.0).powf(p)) / j.powf(q));
        }
        series.add((kf.powf(p) - (kf - 1.0).powf(p)) / kf.powf(q));
        series.add(2f64.powf(p));
        series.add(p / (s * kf.powf(2.0 * s)));

        let n = k - 1;
        let mut symbol = Vec::with_capacity(n);
        symbol.push(scale * series.value());
        if n > 1 {
            symbol.push(-scale * 2f64.powf(-s));
        }
        for m in 2..n {
            let m = m as f64;
            symbol.push(-scale * ((m + 1.0).powf(p) - (m - 1.0).powf(p)) / (2.0 * m.powf(q)));
        }
        Self { grid: *grid, scale, symbol }
    }

    /// Wraps an explicit symbol `a_0..a_{K-2}`; used for fault injection and
    /// for operators assembled elsewhere.
    pub fn from_symbol(grid: &GridSpec, symbol: Vec<f64>) -> Result<Self> {
        if symbol.len() != grid.interior_len() {
            return Err(Error::DimensionMismatch { expected: grid.interior_len(), got: symbol.len() });
        }
        let s = grid.s();
        let scale = stencil_constant(s) / ((1.0 - s) * grid.h().powf(2.0 * s));
        Ok(Self { grid: *grid, scale, symbol })
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn symbol(&self) -> &[f64] {
        &self.symbol
    }

    /// Dimension `K - 1` of the matrix.
    pub fn dim(&self) -> usize {
        self.symbol.len()
    }

    /// Entry `(p, q)` in storage positions (`p = i - 1`).
    #[inline]
    pub fn entry(&self, p: usize, q: usize) -> f64 {
        self.symbol[p.abs_diff(q)]
    }

    /// Row sums of `A`.
    pub fn row_sums(&self) -> Vec<f64> {
        let n = self.dim();
        (0..n).map(|p| (0..n).map(|q| self.entry(p, q)).sum()).collect()
    }

    /// Reference `O(n^2)` matrix-vector product.
    pub fn apply_slice(&self, v: &[f64]) -> Result<Vec<f64>> {
        let n = self.dim();
        if v.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: v.len() });
        }
        let a = &self.symbol;
        let mut w = vec![0.0; n];
        for (p, wp) in w.iter_mut().enumerate() {
            // left part uses a_{p-q} for q <= p, right part a_{q-p} for q > p
            let mut acc = 0.0;
            for q in 0..=p {
                acc += a[p - q] * v[q];
            }
            for q in p + 1..n {
                acc += a[q - p] * v[q];
            }
            *wp = acc;
        }
        Ok(w)
    }

    pub fn apply(&self, v: &GridFunction) -> Result<GridFunction> {
        let w = self.apply_slice(v.values())?;
        GridFunction::new(&self.grid, w)
    }

    /// `(A v)_p` for a single storage position.
    pub fn apply_at(&self, v: &[f64], p: usize) -> f64 {
        v.iter().enumerate().map(|(q, vq)| self.entry(p, q) * vq).sum()
    }

    /// Builds the circulant-embedding FFT path for repeated products.
    pub fn fast(&self) -> FastToeplitz {
        FastToeplitz::new(&self.symbol)
    }

    pub fn assemble_dense(&self) -> Result<DenseMatrix> {
        let n = self.dim();
        if n > DENSE_LIMIT {
            return Err(Error::TooLarge { size: n, limit: DENSE_LIMIT });
        }
        Ok(DenseMatrix::from_fn(n, n, |p, q| self.entry(p, q)))
    }
}

#[derive(Default)]
struct KahanSum {
    sum: f64,
    carry: f64,
}

impl KahanSum {
    fn add(&mut self, x: f64) {
        let y = x - self.carry;
        let t = self.sum + y;
        self.carry = (t - self.sum) - y;
        self.sum = t;
    }

    fn value(&self) -> f64 {
        self.sum
    }
}

/// Symmetric Toeplitz product through a circulant embedding of size
/// `L >= 2n - 1` (power of two) and a pair of FFTs.
pub struct FastToeplitz {
    n: usize,
    len: usize,
    spectrum: Vec<Complex64>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl FastToeplitz {
    pub fn new(symbol: &[f64]) -> Self {
        let n = symbol.len();
        let len = (2 * n).max(2).next_power_of_two();
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(len);
        let inverse = planner.plan_fft_inverse(len);
        // first column of the circulant: a_0..a_{n-1}, zeros, a_{n-1}..a_1
        let mut col = vec![Complex64::new(0.0, 0.0); len];
        for (m, &a) in symbol.iter().enumerate() {
            col[m] = Complex64::new(a, 0.0);
            if m > 0 {
                col[len - m] = Complex64::new(a, 0.0);
            }
        }
        forward.process(&mut col);
        Self { n, len, spectrum: col, forward, inverse }
    }

    pub fn apply(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, got: v.len() });
        }
        let mut buf = vec![Complex64::new(0.0, 0.0); self.len];
        for (b, &x) in buf.iter_mut().zip(v) {
            b.re = x;
        }
        self.forward.process(&mut buf);
        for (b, s) in buf.iter_mut().zip(&self.spectrum) {
            *b *= s;
        }
        self.inverse.process(&mut buf);
        let norm = 1.0 / self.len as f64;
        Ok(buf[..self.n].iter().map(|c| c.re * norm).collect())
    }
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::linalg::{dot, norm2};

    fn op(m: usize, s: f64) -> FracOperator {
        FracOperator::build(&GridSpec::new(3.0, m, s).unwrap())
    }

    #[test]
    fn half_order_entries() {
        for m in [1, 5, 50] {
            let o = op(m, 0.5);
            let h = o.grid().h();
            assert!(((o.scale() - 2.0 / (PI * h)) / o.scale()).abs() < 1e-14);
            if o.dim() > 1 {
                let a1 = -2f64.sqrt() / (PI * h);
                assert!(((o.symbol()[1] - a1) / a1).abs() < 1e-14);
                assert!((o.symbol()[1] * h + 0.450_158_158_078_553).abs() < 1e-12);
            }
            if o.dim() > 2 {
                let a2 = -(3f64.sqrt() - 1.0) / (2.0 * 2f64.powf(1.5)) * 2.0 / (PI * h);
                assert!(((o.symbol()[2] - a2) / a2).abs() < 1e-14);
                assert!((o.symbol()[2] * h + 0.082_385).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn diagonal_matches_naive_sum() {
        // independent f64 evaluation in descending order, no compensation
        for (m, s) in [(3, 0.5), (20, 0.25), (50, 0.75)] {
            let o = op(m, s);
            let k = o.grid().cells() as f64;
            let mut sum = 0.0;
            for j in (2..=o.grid().cells()).rev() {
                let j = j as f64;
                sum += ((j + 1.0).powf(1.0 - s) - (j - 1.0).powf(1.0 - s)) / j.powf(1.0 + s);
            }
            sum += (k.powf(1.0 - s) - (k - 1.0).powf(1.0 - s)) / k.powf(1.0 + s);
            sum += 2f64.powf(1.0 - s) + (1.0 - s) / (s * k.powf(2.0 * s));
            let a0 = o.scale() * sum;
            assert!(((o.symbol()[0] - a0) / a0).abs() < 1e-13);
        }
    }

    #[test]
    fn sign_structure_and_row_sums() {
        for s in [0.1, 0.25, 0.5, 0.75, 0.9] {
            for m in [1, 2, 10, 40] {
                let o = op(m, s);
                assert!(o.symbol()[0] > 0.0);
                assert!(o.symbol()[1..].iter().all(|&a| a < 0.0));
                assert!(o.row_sums().iter().all(|&r| r > 0.0), "s={s} m={m}");
            }
        }
    }

    #[test]
    fn zero_and_unit_vectors() {
        let o = op(4, 0.5);
        let n = o.dim();
        assert!(o.apply_slice(&vec![0.0; n]).unwrap().iter().all(|&w| w == 0.0));
        for k in [0, 3, n - 1] {
            let mut e = vec![0.0; n];
            e[k] = 1.0;
            let w = o.apply_slice(&e).unwrap();
            for (p, wp) in w.iter().enumerate() {
                assert_eq!(*wp, o.symbol()[p.abs_diff(k)]);
            }
        }
    }

    #[test]
    fn dimension_mismatch() {
        let o = op(2, 0.5);
        assert!(matches!(o.apply_slice(&[1.0; 3]), Err(Error::DimensionMismatch { .. })));
        assert!(o.fast().apply(&[1.0; 3]).is_err());
        let g = GridSpec::new(3.0, 2, 0.5).unwrap();
        assert!(FracOperator::from_symbol(&g, vec![1.0; 4]).is_err());
    }

    #[test]
    fn dense_assembly() {
        let o = op(1, 0.5);
        let a = o.assemble_dense().unwrap();
        assert_eq!((a.rows(), a.cols()), (5, 5));
        assert_eq!(a.get(0, 4), o.symbol()[4]);
        assert_eq!(a, a.transpose());
        let big = op(400, 0.5);
        assert!(matches!(big.assemble_dense(), Err(Error::TooLarge { .. })));
    }

    #[test]
    fn fast_path_matches_reference() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for m in [1, 2, 3, 17, 50, 100] {
            let o = op(m, 0.37);
            let fast = o.fast();
            for _ in 0..5 {
                let v: Vec<f64> = (0..o.dim()).map(|_| rng.gen_range(-1.0..1.0)).collect();
                let slow = o.apply_slice(&v).unwrap();
                let quick = fast.apply(&v).unwrap();
                let diff: Vec<f64> = slow.iter().zip(&quick).map(|(a, b)| a - b).collect();
                assert!(norm2(&diff) <= 1e-12 * norm2(&slow));
            }
        }
    }

    #[test]
    fn self_adjoint() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let o = op(30, 0.6);
        for _ in 0..10 {
            let u: Vec<f64> = (0..o.dim()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let v: Vec<f64> = (0..o.dim()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let l = dot(&o.apply_slice(&u).unwrap(), &v);
            let r = dot(&u, &o.apply_slice(&v).unwrap());
            assert!((l - r).abs() <= 1e-12 * l.abs().max(r.abs()));
        }
    }

    #[test]
    fn getoor_profile_converges() {
        let mut prev = f64::INFINITY;
        for m in [25, 50, 100, 200] {
            let o = op(m, 0.5);
            let g = *o.grid();
            let v = GridFunction::from_fn(&g, |x| (1.0 - x * x).max(0.0).sqrt());
            let w = o.apply(&v).unwrap();
            let err = (1..g.cells())
                .filter(|&i| g.x(i).abs() <= 0.5)
                .map(|i| (w.at(i) - 1.0).abs())
                .fold(0.0, f64::max);
            assert!(err < prev);
            prev = err;
        }
        assert!(prev <= 0.02);
    }
}
