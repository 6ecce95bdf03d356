//! Bayesian inversion for the single-measurement fractional Calderón problem
//! on a one-dimensional grid.
//!
//! The pipeline is layered bottom-up:
//!
//! * [`grid`]: uniform mesh over `(-ell, ell)`, region classification and the
//!   exterior datum `phi`.
//! * [`operator`]: the discrete fractional Laplacian as a symmetric Toeplitz
//!   matrix, with dense and FFT application paths, plus the
//!   [`quadrature`] oracle for `(-Δ)^s phi` away from its support.
//! * [`forward`]: the Dirichlet solver for `((-Δ)^s + f) u = 0` on `Omega`
//!   with `u = phi` outside, and the exterior Dirichlet-to-Neumann data.
//! * [`observation`]: link function, measurement design, synthetic data and
//!   the Gaussian log-likelihood.
//! * [`prior`]: piecewise-constant and Haar sieve priors.
//! * [`sampler`]: pCN-type chains with the greedy and Metropolis accept rules.
//! * [`config`], [`pipeline`], [`rate_study`], [`verify`]: experiment
//!   orchestration used by the `fraccal` binary.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod forward;
pub mod grid;
pub mod io;
pub mod linalg;
pub mod observation;
pub mod operator;
pub mod pipeline;
pub mod prior;
pub mod quadrature;
pub mod rate_study;
pub mod rng;
pub mod sampler;
pub mod special;
pub mod stats;
pub mod verify;

pub use error::{Error, Result};
pub use forward::{ForwardModel, ForwardSolution, Potential};
pub use grid::{GridFunction, GridSpec, PhiBump, RegionMap, RegionSpec};
pub use operator::FracOperator;
