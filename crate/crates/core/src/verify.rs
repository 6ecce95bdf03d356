//! Property suites for the discretization and the forward map, each returning
//! the measured quantity next to its threshold.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::Result;
use crate::forward::{h_norm, ForwardModel, Potential};
use crate::grid::{GridFunction, GridSpec, Interval, PhiBump, RegionSpec};
use crate::linalg::{lu_solve, norm2, DenseMatrix};
use crate::operator::{FracOperator, FastToeplitz};
use crate::quadrature::dn_phi;
use crate::special::{gamma, singular_integral_constant};

#[derive(Debug, Clone, Serialize)]
pub struct SuiteResult {
    pub name: &'static str,
    pub passed: bool,
    pub measured: f64,
    pub threshold: f64,
    pub detail: String,
}

impl SuiteResult {
    fn at_most(name: &'static str, measured: f64, threshold: f64, detail: String) -> Self {
        Self { name, passed: measured <= threshold, measured, threshold, detail }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyConfig {
    pub ell: f64,
    pub m: usize,
    pub s: f64,
    pub seed: u64,
    /// Random draws per suite.
    pub samples: usize,
    /// Flip the sign of `a_1` before running (fault injection).
    pub corrupt_a1: bool,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self { ell: 3.0, m: 50, s: 0.5, seed: 0, samples: 200, corrupt_a1: false }
    }
}

pub fn corrupt_a1(op: &FracOperator) -> Result<FracOperator> {
    let mut symbol = op.symbol().to_vec();
    if symbol.len() > 1 {
        symbol[1] = -symbol[1];
    }
    FracOperator::from_symbol(op.grid(), symbol)
}

/// Forward model on the default layout around an explicit operator.
pub fn model_with(op: FracOperator) -> Result<ForwardModel> {
    let phi = PhiBump::default().sample(op.grid());
    ForwardModel::with_operator(op, &RegionSpec::default(), phi)
}

pub fn default_model(m: usize) -> Result<ForwardModel> {
    let g = GridSpec::new(3.0, m, 0.5)?;
    ForwardModel::new(&g, &RegionSpec::default(), &PhiBump::default())
}

/// Nonnegative potential spanning several orders of magnitude.
pub fn random_potential(n: usize, rng: &mut impl Rng) -> Potential {
    let scale = 10f64.powf(rng.gen_range(-2.0..3.0));
    let zero_prob: f64 = rng.gen_range(0.0..0.3);
    let values = (0..n).map(|_| if rng.gen::<f64>() < zero_prob { 0.0 } else { scale * rng.gen::<f64>() }).collect();
    Potential::new(values).expect("draws are finite and nonnegative")
}

/// Piecewise-constant potential on 16 equal cells of `omega`, values in
/// `[0, 3)`; the same draw gives the same continuum function on every grid.
pub fn random_cell_potential(model: &ForwardModel, rng: &mut impl Rng) -> Potential {
    let cells: Vec<f64> = (0..16).map(|_| 3.0 * rng.gen::<f64>()).collect();
    let omega = model.region_spec().omega;
    let g = model.grid();
    let values = model
        .regions()
        .omega
        .iter()
        .map(|&i| {
            let k = ((g.x(i) - omega.lo) / omega.len() * 16.0).floor().clamp(0.0, 15.0) as usize;
            cells[k]
        })
        .collect();
    Potential::new(values).expect("draws are finite and nonnegative")
}

/// `max |(A w)_i - c_s|` over `|x_i| <= 1/2` for `w = (1 - x²)_+^s`, where
/// `c_s = 4^s Γ(1+s) Γ(1/2+s) / Γ(1/2)`.
pub fn getoor_error(op: &FracOperator) -> Result<f64> {
    let g = *op.grid();
    let s = g.s();
    let exact = 4f64.powf(s) * gamma(1.0 + s) * gamma(0.5 + s) / gamma(0.5);
    let w = GridFunction::from_fn(&g, |x| (1.0 - x * x).max(0.0).powf(s));
    let aw = op.apply(&w)?;
    Ok((1..g.cells()).filter(|&i| g.x(i).abs() <= 0.5).map(|i| (aw.at(i) - exact).abs()).fold(0.0, f64::max))
}

/// Largest relative difference between the dense product and both
/// symbol-based products over `count` random vectors.
pub fn dense_fast_error(op: &FracOperator, count: usize, rng: &mut impl Rng) -> Result<f64> {
    let dense = op.assemble_dense()?;
    let fast = FastToeplitz::new(op.symbol());
    let mut worst: f64 = 0.0;
    for _ in 0..count {
        let v: Vec<f64> = (0..op.dim()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let reference = dense.matvec(&v)?;
        let denom = norm2(&reference);
        for other in [fast.apply(&v)?, op.apply_slice(&v)?] {
            let diff: Vec<f64> = other.iter().zip(&reference).map(|(a, b)| a - b).collect();
            worst = worst.max(norm2(&diff) / denom);
        }
    }
    Ok(worst)
}

#[derive(Debug, Clone, Copy)]
pub struct MaxPrincipleReport {
    /// Potentials with `‖u‖_{∞,Ω} > ‖φ‖_∞ (1 + 1e-12)`.
    pub phi_failures: usize,
    /// Largest `‖u‖_{∞,Ω} / ‖φ‖_∞` seen.
    pub phi_ratio: f64,
    /// Random-datum solves violating `0 <= u <= max ψ` on `omega`.
    pub datum_failures: usize,
    /// Most negative `u / max ψ` seen with random data.
    pub datum_min: f64,
}

/// `count` random potentials against `phi`, then `count` random nonnegative
/// exterior data (covering every node outside `omega`) against the
/// two-sided bound `0 <= u <= max ψ`.
pub fn max_principle(model: &ForwardModel, count: usize, rng: &mut impl Rng) -> Result<MaxPrincipleReport> {
    let n = model.omega_len();
    let phi_max = model.phi().max_abs();
    let mut r = MaxPrincipleReport { phi_failures: 0, phi_ratio: 0.0, datum_failures: 0, datum_min: 0.0 };
    for _ in 0..count {
        let f = random_potential(n, rng);
        let v = model.solve_omega(&f)?;
        let u_max = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        r.phi_ratio = r.phi_ratio.max(u_max / phi_max);
        if u_max > phi_max * (1.0 + 1e-12) {
            r.phi_failures += 1;
        }
    }
    let g = *model.grid();
    let omega = &model.regions().omega;
    for _ in 0..count {
        let f = random_potential(n, rng);
        let mut datum = GridFunction::zeros(&g);
        for i in 1..g.cells() {
            if omega.binary_search(&i).is_err() {
                datum.values_mut()[GridSpec::pos(i)] = rng.gen::<f64>();
            }
        }
        let top = datum.max_abs();
        let sol = model.solve_with_datum(&f, &datum)?;
        let mut bad = false;
        for &i in omega {
            let u = sol.u.at(i) / top;
            r.datum_min = r.datum_min.min(u);
            bad |= !(-1e-12..=1.0 + 1e-12).contains(&u);
        }
        if bad {
            r.datum_failures += 1;
        }
    }
    Ok(r)
}

/// Measurement nodes at distance at least `min_dist` from `omega`, as
/// positions into `dn`.
pub fn measurement_positions(model: &ForwardModel, min_dist: f64) -> Vec<usize> {
    let g = model.grid();
    let omega = model.region_spec().omega;
    model
        .regions()
        .measurement
        .iter()
        .enumerate()
        .filter(|(_, &i)| omega.dist(&Interval::new(g.x(i), g.x(i))) >= min_dist)
        .map(|(k, _)| k)
        .collect()
}

/// Largest `‖G(f1) - G(f2)‖_{L²(D'),h} / ‖f1 - f2‖_{L²(Ω),h}` over `pairs`
/// random pairs, with `D'` the measurement nodes at distance `>= min_dist`
/// from `omega` (`min_dist = 0` is the whole set).
pub fn lipschitz_ratio(model: &ForwardModel, pairs: usize, min_dist: f64, rng: &mut impl Rng) -> Result<f64> {
    let keep = measurement_positions(model, min_dist);
    let h = model.grid().h();
    let mut worst: f64 = 0.0;
    for _ in 0..pairs {
        let f1 = random_cell_potential(model, rng);
        let f2 = random_cell_potential(model, rng);
        let d1 = model.solve(&f1)?.dn;
        let d2 = model.solve(&f2)?.dn;
        let dg: Vec<f64> = keep.iter().map(|&k| d1[k] - d2[k]).collect();
        let df: Vec<f64> = f1.values().iter().zip(f2.values()).map(|(a, b)| a - b).collect();
        let denom = h_norm(&df, h);
        if denom > 0.0 {
            worst = worst.max(h_norm(&dg, h) / denom);
        }
    }
    Ok(worst)
}

/// `max |G(f)(x_i)|` over random potentials and the measurement nodes at
/// distance `>= min_dist`, against
/// `3 C_{1,s} |Ω| ‖φ‖_∞ / min_dist^{1+2s} + max |(A φ)_i|`.
pub fn uniform_bound(model: &ForwardModel, count: usize, min_dist: f64, rng: &mut impl Rng) -> Result<(f64, f64)> {
    let keep = measurement_positions(model, min_dist);
    let s = model.grid().s();
    let c = singular_integral_constant(1, s);
    let omega_len = model.region_spec().omega.len();
    let phi_part = keep
        .iter()
        .map(|&k| model.phi_image()[GridSpec::pos(model.regions().measurement[k])].abs())
        .fold(0.0, f64::max);
    let bound = 3.0 * c * omega_len * model.phi().max_abs() / min_dist.powf(1.0 + 2.0 * s) + phi_part;
    let mut worst: f64 = 0.0;
    for _ in 0..count {
        let f = random_potential(model.omega_len(), rng);
        let dn = model.solve(&f)?.dn;
        worst = keep.iter().map(|&k| dn[k].abs()).fold(worst, f64::max);
    }
    Ok((worst, bound))
}

/// Largest relative gap in `h Σ_D ψ (A(u1 - u2)) = h Σ_Ω (f1 - f2) u1 ũ2`,
/// where `ũ2` solves with datum `ψ` and potential `f2`. `ψ` is a random
/// nonnegative weight times `A(u1 - u2)` on the measurement nodes.
pub fn alessandrini_gap(model: &ForwardModel, triples: usize, rng: &mut impl Rng) -> Result<f64> {
    let g = *model.grid();
    let h = g.h();
    let regions = model.regions();
    let mut worst: f64 = 0.0;
    for _ in 0..triples {
        let f1 = random_potential(model.omega_len(), rng);
        let f2 = random_potential(model.omega_len(), rng);
        let s1 = model.solve(&f1)?;
        let s2 = model.solve(&f2)?;
        let mut psi = GridFunction::zeros(&g);
        for (k, &i) in regions.measurement.iter().enumerate() {
            psi.values_mut()[GridSpec::pos(i)] = rng.gen::<f64>() * (s1.dn[k] - s2.dn[k]);
        }
        let t2 = model.solve_with_datum(&f2, &psi)?;
        let lhs: f64 =
            h * regions.measurement.iter().enumerate().map(|(k, &i)| psi.at(i) * (s1.dn[k] - s2.dn[k])).sum::<f64>();
        let rhs: f64 = h * regions
            .omega
            .iter()
            .enumerate()
            .map(|(p, &i)| (f1.values()[p] - f2.values()[p]) * s1.u.at(i) * t2.u.at(i))
            .sum::<f64>();
        let scale = lhs.abs().max(rhs.abs());
        if scale > 0.0 {
            worst = worst.max((lhs - rhs).abs() / scale);
        }
    }
    Ok(worst)
}

/// Relative error of discrete `(A φ)_i` against the quadrature value at the
/// `count` measurement nodes nearest `x0`.
pub fn quadrature_gap(model: &ForwardModel, phi: &PhiBump, x0: f64, count: usize) -> Result<f64> {
    let g = *model.grid();
    let mut nodes = model.regions().measurement.clone();
    nodes.retain(|&i| !phi.support().contains(g.x(i)) && g.x(i) != phi.support().lo && g.x(i) != phi.support().hi);
    nodes.sort_by(|&a, &b| (g.x(a) - x0).abs().total_cmp(&(g.x(b) - x0).abs()).then(a.cmp(&b)));
    nodes.truncate(count);
    let mut worst: f64 = 0.0;
    for i in nodes {
        let discrete = model.phi_image()[GridSpec::pos(i)];
        let reference = dn_phi(phi, g.s(), g.x(i))?;
        worst = worst.max(((discrete - reference) / reference).abs());
    }
    Ok(worst)
}

/// Largest `|A_pq - A_qp|` of the assembled matrix.
pub fn asymmetry(op: &FracOperator) -> Result<f64> {
    let d = op.assemble_dense()?;
    let n = d.rows();
    let mut worst: f64 = 0.0;
    for p in 0..n {
        for q in 0..p {
            worst = worst.max((d.get(p, q) - d.get(q, p)).abs());
        }
    }
    Ok(worst)
}

/// Solves the `omega` system by LU decomposition of the assembled dense
/// matrix and returns the relative difference to the
/// forward solver.
pub fn dense_oracle_gap(model: &ForwardModel, f: &Potential) -> Result<f64> {
    let dense = model.operator().assemble_dense()?;
    let omega = &model.regions().omega;
    let n = omega.len();
    let phi = model.phi().values();
    let mut a = DenseMatrix::from_fn(n, n, |r, c| dense.get(GridSpec::pos(omega[r]), GridSpec::pos(omega[c])));
    for (r, fr) in f.values().iter().enumerate() {
        a.set(r, r, a.get(r, r) + fr);
    }
    let b: Vec<f64> = omega.iter().map(|&i| -dense.row(GridSpec::pos(i)).iter().zip(phi).map(|(x, y)| x * y).sum::<f64>()).collect();
    let oracle = lu_solve(&a, &b)?;
    let v = model.solve_omega(f)?;
    let diff: Vec<f64> = v.iter().zip(&oracle).map(|(a, b)| a - b).collect();
    Ok(norm2(&diff) / norm2(&oracle).max(f64::MIN_POSITIVE))
}

/// Runs every suite on one grid and returns the pass/fail table.
pub fn run_all(cfg: &VerifyConfig) -> Result<Vec<SuiteResult>> {
    let grid = GridSpec::new(cfg.ell, cfg.m, cfg.s)?;
    let mut op = FracOperator::build(&grid);
    if cfg.corrupt_a1 {
        op = corrupt_a1(&op)?;
    }
    let model = model_with(op.clone())?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut out = Vec::new();

    let asym = asymmetry(&op)?;
    out.push(SuiteResult::at_most("symmetry", asym, 0.0, "max |A_pq - A_qp|".into()));

    let g = getoor_error(&op)?;
    out.push(SuiteResult::at_most("getoor", g, 0.02, "max |A w - c_s| on |x| <= 1/2".into()));

    let df = dense_fast_error(&op, 50, &mut rng)?;
    out.push(SuiteResult::at_most("dense-fast", df, 1e-12, "relative, 50 random vectors".into()));

    let worst_oracle = (0..cfg.samples.min(20))
        .map(|_| dense_oracle_gap(&model, &random_potential(model.omega_len(), &mut rng)))
        .try_fold(0.0f64, |m, r| r.map(|v| m.max(v)))?;
    out.push(SuiteResult::at_most("dense-oracle", worst_oracle, 1e-10, "relative, against a dense LU solve".into()));

    let mp = max_principle(&model, cfg.samples, &mut rng)?;
    let failures = (mp.phi_failures + mp.datum_failures) as f64;
    out.push(SuiteResult::at_most(
        "max-principle",
        failures,
        0.0,
        format!(
            "failures: {} with phi (max ratio {:.6}), {} with random data (min u/max psi {:.3e})",
            mp.phi_failures, mp.phi_ratio, mp.datum_failures, mp.datum_min
        ),
    ));

    let far = 0.5;
    let (worst, bound) = uniform_bound(&model, cfg.samples, far, &mut rng)?;
    out.push(SuiteResult::at_most("uniform-bound", worst, bound, format!("max |G(f)| at distance >= {far}")));

    let lip = lipschitz_ratio(&model, cfg.samples, far, &mut rng)?;
    out.push(SuiteResult {
        name: "lipschitz",
        passed: lip.is_finite(),
        measured: lip,
        threshold: f64::INFINITY,
        detail: format!("max ratio at distance >= {far}"),
    });

    let al = alessandrini_gap(&model, cfg.samples.min(50), &mut rng)?;
    out.push(SuiteResult::at_most("alessandrini", al, 1e-9, "relative gap".into()));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rng() -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(5)
    }

    #[test]
    fn default_suites_pass_on_small_grid() {
        let cfg = VerifyConfig { m: 10, samples: 20, ..Default::default() };
        for r in run_all(&cfg).unwrap() {
            assert!(r.passed, "{r:?}");
        }
    }

    #[test]
    fn flipped_a1_breaks_only_the_max_principle() {
        let cfg = VerifyConfig { m: 10, samples: 20, corrupt_a1: true, ..Default::default() };
        let results = run_all(&cfg).unwrap();
        let by_name = |n: &str| results.iter().find(|r| r.name == n).unwrap().passed;
        assert!(by_name("symmetry"));
        assert!(!by_name("max-principle"));
    }

    #[test]
    fn tiny_grid_dense_oracle() {
        let model = default_model(2).unwrap();
        let f = Potential::constant(model.omega_len(), 0.7).unwrap();
        assert!(dense_oracle_gap(&model, &f).unwrap() < 1e-12);
    }

    #[test]
    fn alessandrini_on_small_grid() {
        let model = default_model(8).unwrap();
        assert!(alessandrini_gap(&model, 10, &mut rng()).unwrap() < 1e-9);
    }

    #[test]
    fn far_positions_exclude_near_nodes() {
        let model = default_model(10).unwrap();
        let g = *model.grid();
        for k in measurement_positions(&model, 0.5) {
            let x = g.x(model.regions().measurement[k]);
            assert!(x.abs() >= 1.5);
        }
        assert_eq!(measurement_positions(&model, 0.0).len(), model.regions().measurement.len());
    }
}
