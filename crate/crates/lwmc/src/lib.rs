//! Locally weighted Markov chain Monte Carlo.
//!
//! Multi-proposal MCMC in which every proposed point of an iteration,
//! including rejected ones, receives a weight that feeds the estimator
//! `(1/n) sum_j sum_i w(x_i^j) h(x_i^j)`. Weighting a chain's proposals
//! costs nothing extra and typically lowers estimator variance; the same
//! machinery generalizes a per-iteration resampling sampler, of which the
//! weighted estimator is the Rao-Blackwellization.
//!
//! The crate provides:
//!
//! * pairwise nu-power weights and the multi-proposal version-1 / version-2
//!   schemes ([`weights`]);
//! * a Gaussian random-walk kernel and an HMC leapfrog-trajectory kernel
//!   with a randomly placed start index ([`kernels`]);
//! * pi-invariant propagation rules: MH step, weighted draw, and the
//!   trajectory endpoint rule ([`propagation`]);
//! * the chain drivers for the weighted and resampling algorithms
//!   ([`sampler`]);
//! * the matching effective-sample-size diagnostic built on the
//!   iteration-mean series ([`diagnostics`]);
//! * brute-force oracles and invariance test harnesses ([`verify`]);
//! * chain persistence and the built-in experiments ([`io`],
//!   [`experiments`]).
//!
//! # Example
//!
//! ```
//! use lwmc::config::SamplerConfig;
//! use lwmc::core::{estimate_mean, EstimandFunction};
//! use lwmc::kernels::KernelSpec;
//! use lwmc::propagation::PropagationKind;
//! use lwmc::sampler::run_lwmcmc;
//! use lwmc::targets::TargetSpec;
//!
//! let config = SamplerConfig::new(
//!     TargetSpec::StdNormal { dim: 2 },
//!     KernelSpec::RandomWalk { lambda: 1.2 },
//!     PropagationKind::MhStep,
//!     2000,
//!     1,
//!     42,
//! );
//! let target = config.target.build().unwrap();
//! let chain = run_lwmcmc(&config, &target).unwrap();
//! let h = EstimandFunction::coord(0);
//! let mean = estimate_mean(&chain, &h).unwrap();
//! assert!(mean.abs() < 0.5);
//! ```

pub mod config;
pub mod core;
pub mod diagnostics;
mod error;
pub mod experiments;
pub mod io;
pub mod kernels;
pub mod propagation;
pub mod rng;
pub mod sampler;
pub mod targets;
pub mod verify;
pub mod weights;

pub use error::{Error, Result};
