//! Adaptive Gauss–Kronrod quadrature and the singular-integral evaluation of
//! `(-Δ)^s phi` at points away from the support of `phi`.

use std::collections::BinaryHeap;

use crate::error::{Error, Result};
use crate::grid::PhiBump;
use crate::special::singular_integral_constant;

// 15-point Kronrod nodes (non-negative half) with the embedded 7-point Gauss rule.
const XK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

#[derive(Debug, Clone, Copy)]
pub struct QuadResult {
    pub value: f64,
    pub error: f64,
    pub evaluations: usize,
}

struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn gk15(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> Panel {
    let c = 0.5 * (a + b);
    let r = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = WK[7] * fc;
    let mut gauss = WG[3] * fc;
    for j in 0..7 {
        let dx = r * XK[j];
        let pair = f(c - dx) + f(c + dx);
        kronrod += WK[j] * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    Panel { a, b, value: kronrod * r, error: ((kronrod - gauss) * r).abs() }
}

/// Globally adaptive G7–K15 integration of `f` over `[a, b]`, bisecting the
/// panel with the largest error estimate until the summed estimate drops
/// below `abs_tol`.
pub fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, abs_tol: f64, max_panels: usize) -> QuadResult {
    let mut heap = BinaryHeap::new();
    let first = gk15(&f, a, b);
    let mut error = first.error;
    heap.push(first);
    let mut evaluations = 15;
    while error > abs_tol && heap.len() < max_panels {
        let worst = heap.pop().expect("heap is never empty");
        let mid = 0.5 * (worst.a + worst.b);
        let left = gk15(&f, worst.a, mid);
        let right = gk15(&f, mid, worst.b);
        evaluations += 30;
        error += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
    }
    // re-sum rather than trust the running error updates
    let value = heap.iter().map(|p| p.value).sum::<f64>();
    let error = heap.iter().map(|p| p.error).sum::<f64>();
    QuadResult { value, error, evaluations }
}

/// Absolute tolerance used by [`dn_phi`].
pub const DN_PHI_TOL: f64 = 1e-8;

/// `(-Δ)^s phi (x) = -C_{1,s} ∫_{supp phi} phi(y) / |x - y|^{1+2s} dy` for a
/// point `x` outside the closed support of `phi`.
pub fn dn_phi(phi: &PhiBump, s: f64, x: f64) -> Result<f64> {
    let support = phi.support();
    if !x.is_finite() || (support.lo <= x && x <= support.hi) {
        return Err(Error::InadmissiblePoint { x, reason: "inside or touching the support of phi" });
    }
    let c = singular_integral_constant(1, s);
    let q = integrate(
        |y| phi.eval(y) / (x - y).abs().powf(1.0 + 2.0 * s),
        support.lo,
        support.hi,
        DN_PHI_TOL / c,
        4096,
    );
    Ok(-c * q.value)
}
