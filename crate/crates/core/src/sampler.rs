//! pCN-type Markov chains over the potential.
//!
//! The chain state is a field on the `omega` nodes. Proposals follow
//! `c + sqrt(1 - β²)(f - c) + β ξ` with `ξ` a fresh prior draw and `c` the
//! background (1 for the direct parametrization, 0 in link mode). The state
//! itself is never clipped; the potential handed to the forward solver is
//! `max(f, 0)` (direct) or `Φ(f)` (link).

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forward::Potential;
use crate::observation::{Likelihood, LinkFunction};
use crate::prior::SievePrior;
use crate::rng::{Streams, Substream};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AcceptRule {
    /// Accept only a strictly larger log-likelihood.
    Greedy,
    /// Metropolis rule for the pCN proposal, `ln U < Δℓ`.
    Pcn,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "kind")]
pub enum Parametrization {
    Direct,
    Link(LinkFunction),
}

impl Parametrization {
    pub fn background(&self) -> f64 {
        match self {
            Parametrization::Direct => 1.0,
            Parametrization::Link(_) => 0.0,
        }
    }

    /// Potential seen by the forward solver, plus the number of clipped nodes.
    pub fn potential(&self, state: &[f64]) -> Result<(Potential, usize)> {
        match self {
            Parametrization::Direct => Potential::clipped(state.to_vec()),
            Parametrization::Link(link) => {
                if state.iter().any(|z| !z.is_finite()) {
                    return Err(Error::InvalidPotential("non-finite chain state".into()));
                }
                Ok((Potential::new(state.iter().map(|&z| link.apply(z)).collect())?, 0))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SamplerConfig {
    pub step_beta: f64,
    pub iterations: usize,
    pub accept_rule: AcceptRule,
    /// Keep every `thinning`-th accepted state as a snapshot.
    pub thinning: usize,
    pub parametrization: Parametrization,
    /// Positions in `omega` order whose full state series is recorded.
    pub track: Vec<usize>,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self {
            step_beta: 0.1,
            iterations: 1000,
            accept_rule: AcceptRule::Greedy,
            thinning: 1,
            parametrization: Parametrization::Direct,
            track: Vec::new(),
        }
    }
}

impl SamplerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.step_beta >= 0.0 && self.step_beta <= 1.0) {
            return Err(Error::InvalidParameter(format!("step size must lie in [0, 1], got {}", self.step_beta)));
        }
        if self.iterations < 2 {
            return Err(Error::InvalidParameter("a chain needs at least 2 iterations".into()));
        }
        if self.thinning == 0 {
            return Err(Error::InvalidParameter("thinning must be at least 1".into()));
        }
        Ok(())
    }
}

/// Log-likelihood seen by the chain.
pub trait Target {
    fn log_likelihood(&self, f: &Potential) -> Result<f64>;
}

impl Target for Likelihood<'_> {
    fn log_likelihood(&self, f: &Potential) -> Result<f64> {
        self.eval(f)
    }
}

/// Constant log-likelihood (infinite noise level). Under the `pcn` rule the
/// chain then samples the prior.
#[derive(Debug, Clone, Copy, Default)]
pub struct FlatTarget;

impl Target for FlatTarget {
    fn log_likelihood(&self, _f: &Potential) -> Result<f64> {
        Ok(0.0)
    }
}

/// `c + sqrt(1 - β²)(current - c) + β draw`.
pub fn pcn_propose(current: &[f64], draw: &[f64], step_beta: f64, background: f64) -> Result<Vec<f64>> {
    if current.len() != draw.len() {
        return Err(Error::DimensionMismatch { expected: current.len(), got: draw.len() });
    }
    let rho = (1.0 - step_beta * step_beta).sqrt();
    Ok(current.iter().zip(draw).map(|(&f, &xi)| rho * f + (1.0 - rho) * background + step_beta * xi).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Decision {
    Accept,
    Reject,
    /// Rejected because a log-likelihood was NaN.
    RejectNan,
}

impl Decision {
    pub fn accepted(self) -> bool {
        self == Decision::Accept
    }
}

/// Accept/reject one proposal. The `pcn` rule consumes exactly one uniform
/// per call, the greedy rule none.
pub fn accept_step(l_current: f64, l_proposal: f64, rule: AcceptRule, rng: &mut impl Rng) -> Decision {
    let u: Option<f64> = match rule {
        AcceptRule::Greedy => None,
        AcceptRule::Pcn => Some(rng.gen()),
    };
    if l_current.is_nan() || l_proposal.is_nan() {
        return Decision::RejectNan;
    }
    let accept = match u {
        None => l_proposal > l_current,
        Some(u) => u.ln() < l_proposal - l_current,
    };
    if accept {
        Decision::Accept
    } else {
        Decision::Reject
    }
}

#[derive(Debug, Clone)]
pub struct ChainTrace {
    /// `ℓ_current` after each iteration `τ = 1..T`.
    pub loglik_trace: Vec<f64>,
    /// Thinned accepted states with their iteration index.
    pub accepted: Vec<(usize, Vec<f64>)>,
    pub accept_count: usize,
    /// Iterations whose proposal needed clipping.
    pub clip_count: usize,
    pub nan_count: usize,
    pub final_state: Vec<f64>,
    /// State series at the tracked positions, one entry per iteration.
    pub tracked: Vec<Vec<f64>>,
    burn_sum: Vec<f64>,
    burn_count: usize,
}

impl ChainTrace {
    pub fn iterations(&self) -> usize {
        self.loglik_trace.len()
    }

    pub fn acceptance_rate(&self) -> f64 {
        self.accept_count as f64 / self.iterations().max(1) as f64
    }
}

/// Mean of the potentials `f^{(τ)}` for `τ = ⌊T/2⌋+1 ..= T`, counting
/// repeated states after rejections.
pub fn burn_in_mean(trace: &ChainTrace) -> Result<Potential> {
    if trace.burn_count == 0 {
        return Err(Error::InvalidParameter("chain has an empty second half".into()));
    }
    let n = trace.burn_count as f64;
    Potential::new(trace.burn_sum.iter().map(|s| s / n).collect())
}

/// Same average for an explicit list of states `f^{(1)}, ..., f^{(T)}`.
pub fn burn_in_mean_of(states: &[Vec<f64>]) -> Result<Vec<f64>> {
    let t = states.len();
    if t < 2 {
        return Err(Error::InvalidParameter("chain has an empty second half".into()));
    }
    let tail = &states[t / 2..];
    let dim = tail[0].len();
    let mut mean = vec![0.0; dim];
    for s in tail {
        if s.len() != dim {
            return Err(Error::DimensionMismatch { expected: dim, got: s.len() });
        }
        mean.iter_mut().zip(s).for_each(|(m, v)| *m += v);
    }
    mean.iter_mut().for_each(|m| *m /= tail.len() as f64);
    Ok(mean)
}

/// Run `cfg.iterations` steps from the constant background state.
pub fn run_chain(cfg: &SamplerConfig, prior: &SievePrior, target: &impl Target, streams: &Streams) -> Result<ChainTrace> {
    let init = vec![cfg.parametrization.background(); prior.nodes()];
    run_chain_from(cfg, prior, target, streams, init)
}

pub fn run_chain_from(
    cfg: &SamplerConfig,
    prior: &SievePrior,
    target: &impl Target,
    streams: &Streams,
    init: Vec<f64>,
) -> Result<ChainTrace> {
    cfg.validate()?;
    let wrap = |iteration: usize| move |e: Error| Error::Chain { iteration, source: Box::new(e) };
    for &p in &cfg.track {
        if p >= init.len() {
            return Err(Error::InvalidParameter(format!("tracked position {p} is outside the state")));
        }
    }
    let mut prior_rng = streams.stream(Substream::Prior);
    let mut accept_rng = streams.stream(Substream::Proposal);
    let param = cfg.parametrization;
    let background = param.background();

    let mut state = init;
    let (mut potential, _) = param.potential(&state).map_err(wrap(0))?;
    let mut l_current = target.log_likelihood(&potential).map_err(wrap(0))?;

    let t_total = cfg.iterations;
    let half = t_total / 2;
    let mut trace = ChainTrace {
        loglik_trace: Vec::with_capacity(t_total),
        accepted: Vec::new(),
        accept_count: 0,
        clip_count: 0,
        nan_count: 0,
        final_state: Vec::new(),
        tracked: vec![Vec::with_capacity(t_total); cfg.track.len()],
        burn_sum: vec![0.0; state.len()],
        burn_count: 0,
    };

    for tau in 1..=t_total {
        let xi = prior.draw(&mut prior_rng);
        if xi.len() != state.len() {
            return Err(wrap(tau)(Error::DimensionMismatch { expected: state.len(), got: xi.len() }));
        }
        let proposal = pcn_propose(&state, &xi, cfg.step_beta, background).map_err(wrap(tau))?;
        let (prop_potential, clipped) = param.potential(&proposal).map_err(wrap(tau))?;
        if clipped > 0 {
            trace.clip_count += 1;
        }
        let l_proposal = target.log_likelihood(&prop_potential).map_err(wrap(tau))?;
        match accept_step(l_current, l_proposal, cfg.accept_rule, &mut accept_rng) {
            Decision::Accept => {
                state = proposal;
                potential = prop_potential;
                l_current = l_proposal;
                trace.accept_count += 1;
                if trace.accept_count % cfg.thinning == 0 {
                    trace.accepted.push((tau, state.clone()));
                }
            }
            Decision::RejectNan => trace.nan_count += 1,
            Decision::Reject => {}
        }
        trace.loglik_trace.push(l_current);
        for (series, &p) in trace.tracked.iter_mut().zip(&cfg.track) {
            series.push(state[p]);
        }
        if tau > half {
            trace.burn_sum.iter_mut().zip(potential.values()).for_each(|(s, v)| *s += v);
            trace.burn_count += 1;
        }
    }
    trace.final_state = state;
    Ok(trace)
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::forward::ForwardModel;
    use crate::grid::{GridSpec, PhiBump, RegionSpec};
    use crate::observation::{simulate, MeasurementSet};
    use crate::prior::SievePriorConfig;

    fn setup(m: usize) -> (ForwardModel, SievePrior) {
        let g = GridSpec::new(3.0, m, 0.5).unwrap();
        let model = ForwardModel::new(&g, &RegionSpec::default(), &PhiBump::default()).unwrap();
        let prior = SievePrior::new(&SievePriorConfig::default(), &model).unwrap();
        (model, prior)
    }

    fn data(model: &ForwardModel, seed: u64) -> MeasurementSet {
        let f0 = Potential::constant(model.omega_len(), 1.5).unwrap();
        simulate(model, &f0, 20, 1e-3, &Streams::new(seed)).unwrap()
    }

    #[test]
    fn proposal_limits() {
        let cur = [0.2, 1.7, 3.0];
        let draw = [0.5, -0.5, 2.0];
        assert_eq!(pcn_propose(&cur, &draw, 0.0, 1.0).unwrap(), cur.to_vec());
        assert_eq!(pcn_propose(&cur, &draw, 1.0, 1.0).unwrap(), vec![1.5, 0.5, 3.0]);
        let p = pcn_propose(&[1.0], &[0.0], 0.1, 1.0).unwrap();
        assert_eq!(p, vec![1.0]);
        assert!(pcn_propose(&cur, &draw[..2], 0.5, 1.0).is_err());
    }

    #[test]
    fn accept_rules() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(accept_step(-1.0, -1.0, AcceptRule::Greedy, &mut rng), Decision::Reject);
        assert_eq!(accept_step(-1.0, -0.5, AcceptRule::Greedy, &mut rng), Decision::Accept);
        for _ in 0..100 {
            assert_eq!(accept_step(-3.0, -3.0, AcceptRule::Pcn, &mut rng), Decision::Accept);
        }
        assert_eq!(accept_step(f64::NAN, -1.0, AcceptRule::Greedy, &mut rng), Decision::RejectNan);
        assert_eq!(accept_step(-1.0, f64::NAN, AcceptRule::Pcn, &mut rng), Decision::RejectNan);
    }

    #[test]
    fn half_acceptance_rate() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 100_000;
        let hits =
            (0..n).filter(|_| accept_step(0.0, -std::f64::consts::LN_2, AcceptRule::Pcn, &mut rng).accepted()).count();
        let rate = hits as f64 / n as f64;
        let se = (0.25 / n as f64).sqrt();
        assert!((rate - 0.5).abs() < 3.0 * se, "{rate}");
    }

    #[test]
    fn zero_step_chain_is_constant() {
        let (model, prior) = setup(6);
        let d = data(&model, 1);
        let lik = Likelihood::new(&model, &d).unwrap();
        let cfg = SamplerConfig { step_beta: 0.0, iterations: 2, ..Default::default() };
        let trace = run_chain(&cfg, &prior, &lik, &Streams::new(3)).unwrap();
        assert_eq!(trace.accept_count, 0);
        assert_eq!(trace.loglik_trace.len(), 2);
        assert_eq!(trace.loglik_trace[0], trace.loglik_trace[1]);
        let fb = burn_in_mean(&trace).unwrap();
        assert!(fb.values().iter().all(|&v| v == 1.0));
    }

    #[test]
    fn greedy_trace_is_monotone_and_deterministic() {
        let (model, prior) = setup(6);
        let d = data(&model, 2);
        let lik = Likelihood::new(&model, &d).unwrap();
        let cfg = SamplerConfig { step_beta: 0.3, iterations: 300, thinning: 2, ..Default::default() };
        let a = run_chain(&cfg, &prior, &lik, &Streams::new(5)).unwrap();
        let b = run_chain(&cfg, &prior, &lik, &Streams::new(5)).unwrap();
        assert_eq!(a.loglik_trace, b.loglik_trace);
        assert_eq!(a.final_state, b.final_state);
        assert!(a.accept_count > 0);
        assert!(a.loglik_trace.windows(2).all(|w| w[1] >= w[0]));
        assert_eq!(a.accepted.len(), a.accept_count / 2);
        // snapshots are taken at strictly increasing likelihood
        let ls: Vec<f64> = a.accepted.iter().map(|(tau, _)| a.loglik_trace[tau - 1]).collect();
        assert!(ls.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn burn_in_examples() {
        let states = vec![vec![1.0], vec![2.0], vec![3.0], vec![5.0]];
        assert_eq!(burn_in_mean_of(&states).unwrap(), vec![4.0]);
        let alt: Vec<Vec<f64>> = (0..8).map(|k| vec![if k % 2 == 0 { 0.5 } else { 2.5 }]).collect();
        assert_eq!(burn_in_mean_of(&alt).unwrap(), vec![1.5]);
        assert!(burn_in_mean_of(&states[..1]).is_err());
    }

    #[test]
    fn flat_target_accepts_everything_under_pcn() {
        let (_, prior) = setup(6);
        let cfg = SamplerConfig {
            step_beta: 0.5,
            iterations: 50,
            accept_rule: AcceptRule::Pcn,
            track: vec![0, 3],
            ..Default::default()
        };
        let trace = run_chain(&cfg, &prior, &FlatTarget, &Streams::new(9)).unwrap();
        assert_eq!(trace.accept_count, 50);
        assert_eq!(trace.tracked.len(), 2);
        assert_eq!(trace.tracked[0].len(), 50);
    }

    #[test]
    fn link_mode_never_clips() {
        let (model, prior) = setup(6);
        let d = data(&model, 4);
        let lik = Likelihood::new(&model, &d).unwrap();
        let cfg = SamplerConfig {
            step_beta: 1.0,
            iterations: 40,
            accept_rule: AcceptRule::Pcn,
            parametrization: Parametrization::Link(LinkFunction::default()),
            ..Default::default()
        };
        let trace = run_chain(&cfg, &prior, &lik, &Streams::new(1)).unwrap();
        assert_eq!(trace.clip_count, 0);
        let direct = SamplerConfig { parametrization: Parametrization::Direct, ..cfg };
        let trace = run_chain(&direct, &prior, &lik, &Streams::new(1)).unwrap();
        assert!(trace.clip_count > 0);
    }

    #[test]
    fn config_validation() {
        assert!(SamplerConfig { step_beta: 1.5, ..Default::default() }.validate().is_err());
        assert!(SamplerConfig { iterations: 1, ..Default::default() }.validate().is_err());
        assert!(SamplerConfig { thinning: 0, ..Default::default() }.validate().is_err());
    }

    #[test]
    fn solver_errors_carry_the_iteration() {
        struct FailAfter(std::cell::Cell<usize>);
        impl Target for FailAfter {
            fn log_likelihood(&self, _f: &Potential) -> Result<f64> {
                let n = self.0.get();
                self.0.set(n + 1);
                if n == 3 {
                    Err(Error::Residual { residual: 1.0, tolerance: 0.0 })
                } else {
                    Ok(0.0)
                }
            }
        }
        let (_, prior) = setup(6);
        let cfg = SamplerConfig { iterations: 10, ..Default::default() };
        let err = run_chain(&cfg, &prior, &FailAfter(0.into()), &Streams::new(0)).unwrap_err();
        assert!(matches!(err, Error::Chain { iteration: 3, .. }), "{err:?}");
    }
}
