use fraccal::forward::{ForwardModel, Potential};
use fraccal::grid::{GridSpec, PhiBump, RegionSpec};
use fraccal::observation::LinkFunction;
use fraccal::operator::FracOperator;
use fraccal::prior::rescale_draw;
use fraccal::sampler::pcn_propose;
use nalgebra::DMatrix;
use proptest::prelude::*;

fn model(m: usize) -> ForwardModel {
    ForwardModel::new(&GridSpec::new(3.0, m, 0.5).unwrap(), &RegionSpec::default(), &PhiBump::default()).unwrap()
}

fn dense(op: &FracOperator) -> DMatrix<f64> {
    let n = op.dim();
    DMatrix::from_fn(n, n, |p, q| op.entry(p, q))
}

#[test]
fn operator_is_positive_definite_at_k12() {
    for s in [0.1, 0.5, 0.9] {
        let op = FracOperator::build(&GridSpec::new(3.0, 2, s).unwrap());
        assert_eq!(op.grid().cells(), 12);
        let a = dense(&op);
        assert_eq!(a, a.transpose());
        let eig = a.symmetric_eigenvalues();
        let min = eig.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!(min > 0.0, "s = {s}: smallest eigenvalue {min}");
    }
}

#[test]
fn omega_block_stays_positive_definite_with_zero_potential() {
    let m = model(4);
    let a = dense(m.operator());
    let idx: Vec<usize> = m.regions().omega.iter().map(|&i| GridSpec::pos(i)).collect();
    let block = DMatrix::from_fn(idx.len(), idx.len(), |r, c| a[(idx[r], idx[c])]);
    assert!(block.cholesky().is_some());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn solutions_obey_the_maximum_principle(vals in prop::collection::vec(0.0f64..50.0, 1..8)) {
        let m = model(5);
        let n = m.omega_len();
        // piecewise constant potential built from the random cell values
        let f: Vec<f64> = (0..n).map(|k| vals[k * vals.len() / n]).collect();
        let sol = m.solve(&Potential::new(f).unwrap()).unwrap();
        let phi_max = m.phi().values().iter().cloned().fold(0.0, f64::max);
        for &i in &m.regions().omega {
            let u = sol.u.at(i);
            prop_assert!(u >= -1e-12 * phi_max && u <= phi_max * (1.0 + 1e-12));
        }
    }

    #[test]
    fn operator_is_linear(a in -10.0f64..10.0, seed in 0u64..1000) {
        let op = FracOperator::build(&GridSpec::new(3.0, 4, 0.5).unwrap());
        let n = op.dim();
        let v: Vec<f64> = (0..n).map(|k| ((k as u64 * 7919 + seed) % 101) as f64 / 50.0 - 1.0).collect();
        let w: Vec<f64> = (0..n).map(|k| ((k as u64 * 104729 + seed * 3) % 97) as f64 / 48.0 - 1.0).collect();
        let combo: Vec<f64> = v.iter().zip(&w).map(|(x, y)| a * x + y).collect();
        let lhs = op.apply_slice(&combo).unwrap();
        let (av, aw) = (op.apply_slice(&v).unwrap(), op.apply_slice(&w).unwrap());
        let scale = op.symbol()[0] * (1.0 + a.abs());
        for k in 0..n {
            prop_assert!((lhs[k] - (a * av[k] + aw[k])).abs() <= 1e-12 * scale * n as f64);
        }
    }

    #[test]
    fn link_round_trip(z in -20.0f64..20.0, m0 in 1.5f64..100.0, k in 0.1f64..5.0) {
        let link = LinkFunction::new(m0, k).unwrap();
        let y = link.apply(z);
        prop_assert!(y > 0.0 && y <= m0);
        // rounds to m0 in floating point once e^{-kz} drops below ulp
        if (k * z).abs() < 15.0 {
            prop_assert!(y < m0);
            prop_assert!(link.derivative(z) > 0.0);
            let back = link.inverse(y).unwrap();
            prop_assert!((back - z).abs() < 1e-8 * (1.0 + z.abs()));
        }
    }

    #[test]
    fn zero_step_proposal_is_the_current_state(cur in prop::collection::vec(-5.0f64..5.0, 1..20), bg in 0.0f64..2.0) {
        let draw: Vec<f64> = cur.iter().map(|x| x * 3.0 + 1.0).collect();
        prop_assert_eq!(pcn_propose(&cur, &draw, 0.0, bg).unwrap(), cur.clone());
        let full = pcn_propose(&cur, &draw, 1.0, bg).unwrap();
        for (p, d) in full.iter().zip(&draw) {
            prop_assert_eq!(*p, bg + d);
        }
    }

    #[test]
    fn rescaling_scales_every_norm(f in prop::collection::vec(-5.0f64..5.0, 1..30), n in 1usize..100_000, alpha in 0.5f64..4.0) {
        let g = rescale_draw(&f, n, alpha).unwrap();
        let factor = (n as f64).powf(-1.0 / (4.0 * alpha + 6.0));
        let sup = |v: &[f64]| v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        prop_assert!((sup(&g) - factor * sup(&f)).abs() <= 1e-14 * sup(&f).max(1.0));
        let doubled: Vec<f64> = f.iter().map(|x| 2.0 * x).collect();
        let g2 = rescale_draw(&doubled, n, alpha).unwrap();
        for (a, b) in g2.iter().zip(&g) {
            prop_assert_eq!(*a, 2.0 * b);
        }
    }
}
