use fraccal::config::{TruthConfig, TruthPreset};
use fraccal::forward::ForwardModel;
use fraccal::grid::{GridSpec, PhiBump, RegionSpec};
use fraccal::observation::{log_likelihood, simulate, MeasurementSet};
use fraccal::prior::{SievePrior, SievePriorConfig};
use fraccal::rng::{Streams, Substream};
use fraccal::stats::{excess_kurtosis, mean, skewness, variance};

fn model(m: usize) -> ForwardModel {
    ForwardModel::new(&GridSpec::new(3.0, m, 0.5).unwrap(), &RegionSpec::default(), &PhiBump::default()).unwrap()
}

/// At the true potential the residuals are pure noise, so `-2 ℓ / N` is a
/// chi-square mean with expectation 1 and standard deviation `sqrt(2/N)`.
#[test]
fn loglik_at_truth_is_chi_square() {
    let m = model(10);
    let f0 = TruthConfig::preset(TruthPreset::Bump).potential(&m).unwrap();
    let n = 50;
    let values: Vec<f64> = (0..200)
        .map(|seed| {
            let data = simulate(&m, &f0, n, 1e-3, &Streams::new(seed)).unwrap();
            -2.0 * log_likelihood(&m, &f0, &data).unwrap() / n as f64
        })
        .collect();
    let avg = mean(&values);
    let se = (2.0 / n as f64).sqrt() / (values.len() as f64).sqrt();
    assert!((avg - 1.0).abs() < 4.0 * se, "mean {avg}, s.e. {se}");
    assert!((variance(&values) / (2.0 / n as f64) - 1.0).abs() < 0.3);
}

#[test]
fn loglik_ignores_measurement_order() {
    let m = model(10);
    let f0 = TruthConfig::preset(TruthPreset::Step).potential(&m).unwrap();
    let data = simulate(&m, &f0, 40, 1e-3, &Streams::new(9)).unwrap();
    let f = TruthConfig::preset(TruthPreset::Bump).potential(&m).unwrap();
    let l = log_likelihood(&m, &f, &data).unwrap();
    let mut order: Vec<usize> = (0..data.len()).collect();
    order.reverse();
    order.swap(3, 17);
    let permuted = MeasurementSet::new(
        order.iter().map(|&k| data.xs[k]).collect(),
        order.iter().map(|&k| data.ys[k]).collect(),
        data.sigma,
        None,
    )
    .unwrap();
    let lp = log_likelihood(&m, &f, &permuted).unwrap();
    assert!((l - lp).abs() <= 1e-12 * l.abs(), "{l} vs {lp}");
}

#[test]
fn piecewise_cell_values_are_standard_normal() {
    let m = model(20);
    let prior = SievePrior::new(&SievePriorConfig::default(), &m).unwrap();
    assert_eq!(prior.dim(), 16);
    // one representative node per cell
    let reps: Vec<usize> = (0..prior.dim())
        .map(|r| {
            let mut e = vec![0.0; prior.dim()];
            e[r] = 1.0;
            prior.synthesize(&e).unwrap().iter().position(|&v| v == 1.0).expect("every cell holds a node")
        })
        .collect();
    let mut rng = Streams::new(11).stream(Substream::Prior);
    let draws = 100_000;
    let mut cells = vec![Vec::with_capacity(draws); reps.len()];
    for _ in 0..draws {
        let d = prior.draw(&mut rng);
        for (c, &p) in cells.iter_mut().zip(&reps) {
            c.push(d[p]);
        }
    }
    for (r, c) in cells.iter().enumerate() {
        assert!(mean(c).abs() < 4.0 / (draws as f64).sqrt(), "cell {r}: mean {}", mean(c));
        assert!((variance(c) - 1.0).abs() < 0.05, "cell {r}: variance {}", variance(c));
        assert!(skewness(c).abs() < 0.1, "cell {r}: skewness {}", skewness(c));
        assert!(excess_kurtosis(c).abs() < 0.2, "cell {r}: excess kurtosis {}", excess_kurtosis(c));
    }
}
