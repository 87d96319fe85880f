//! Chain drivers: the locally weighted sampler and its resampling
//! generalization, sharing kernels, weighting schemes, and propagation
//! rules.
//!
//! Both drivers are deterministic functions of `(config, seed)`: every
//! random decision draws from the substream keyed by its iteration and role
//! (see [`crate::rng`]), so runs are bit-reproducible and the resampling
//! driver's propagating chain is identical to the weighted driver's under
//! the same seed.

use crate::config::{Algorithm, SamplerConfig};
use crate::core::{ChainOutput, HmcAux, IterationRecord, StateVector, WeightedPoint};
use crate::error::{Error, Result};
use crate::kernels::{
    gaussian_rw_propose, hmc_trajectory_propose, hmc_trajectory_with_start, KernelSpec,
    MassMatrix, ProposalSet, TrajectoryProposal,
};
use crate::propagation::{
    cumulative, hmc_endpoint_select, mh_select, select_index, weighted_draw, PropagationKind,
    Selected,
};
use crate::rng::{make_rng_stream, StreamRole};
use crate::targets::Target;
use crate::weights::{WeightScheme, WeightVector};

/// One iteration's resampling outcome: how many of the `N` draws landed on
/// each proposal, along with the iteration it came from.
#[derive(Clone, Debug)]
pub struct ResampleRecord {
    /// Counts per slot; sums to N. The induced weights are `N_i / N`.
    pub multiplicities: Vec<u64>,
    pub base: IterationRecord,
}

impl ResampleRecord {
    pub fn total(&self) -> u64 {
        self.multiplicities.iter().sum()
    }

    /// The induced weight vector `N_i / N`.
    pub fn induced_weights(&self) -> Result<WeightVector> {
        let n = self.total() as f64;
        WeightVector::new(self.multiplicities.iter().map(|&c| c as f64 / n).collect())
    }
}

/// Run the locally weighted chain: per iteration the kernel proposes, the
/// configured scheme computes the stored weights, and the propagation rule
/// selects the next state.
pub fn run_lwmcmc(config: &SamplerConfig, target: &dyn Target) -> Result<ChainOutput> {
    let (chain, _) = run_chain(config, target, false)?;
    Ok(chain)
}

/// Run the resampling driver: identical chain mechanics, plus a per-iteration
/// multinomial resample of N points with the stored weights.
pub fn run_resampled(
    config: &SamplerConfig,
    target: &dyn Target,
) -> Result<(ChainOutput, Vec<ResampleRecord>)> {
    let (chain, resamples) = run_chain(config, target, true)?;
    Ok((chain, resamples.expect("resampling requested")))
}

fn run_chain(
    config: &SamplerConfig,
    target: &dyn Target,
    force_resample: bool,
) -> Result<(ChainOutput, Option<Vec<ResampleRecord>>)> {
    config.validate()?;
    let resample = force_resample || config.algorithm == Algorithm::Resampled;
    if config.target.dim() != target.dim() {
        return Err(Error::DimensionMismatch {
            expected: config.target.dim(),
            got: target.dim(),
        });
    }
    if matches!(config.kernel, KernelSpec::Hmc { .. }) {
        let probe = StateVector::new(config.initial_state()?);
        if target.grad_log_density(&probe).is_none() {
            return Err(Error::MissingGradient);
        }
    }

    let mass = MassMatrix::identity(target.dim());
    let mut current = StateVector::new(config.initial_state()?);
    let total = config.burnin + config.n;
    let mut records = Vec::with_capacity(config.n);
    let mut resamples = if resample {
        Some(Vec::with_capacity(config.n))
    } else {
        None
    };

    for j in 0..total {
        let iter = j as u64;
        let (pset, traj) = propose(config, target, &mass, &current, iter)?;
        for point in &pset.points {
            if !point.is_finite() {
                return Err(Error::NonFiniteState { iteration: j });
            }
        }

        let mut select_rng = make_rng_stream(config.seed, iter, StreamRole::Select);
        let selected = match config.propagation {
            PropagationKind::MhStep => {
                match mh_select(pset.log_scores[0], pset.log_scores[1], &mut select_rng) {
                    Selected::Current => 0,
                    Selected::Candidate => 1,
                }
            }
            PropagationKind::WeightedDraw => {
                let draw_weights = config
                    .draw_scheme()
                    .compute(&pset.log_scores, pset.current_slot)?;
                weighted_draw(&draw_weights, &mut select_rng)
            }
            PropagationKind::HmcEndpoint => {
                let traj = traj.as_ref().expect("hmc kernel produced a trajectory");
                hmc_endpoint_select(traj, &mass, target, &mut select_rng)?
            }
        };

        let next_state = pset.points[selected].clone();
        let accepted = next_state != pset.points[pset.current_slot];

        if j >= config.burnin {
            let stored = match config.nu {
                WeightScheme::OneHot => WeightVector::one_hot(pset.points.len(), selected)?,
                scheme => scheme.compute(&pset.log_scores, pset.current_slot)?,
            };
            let points: Vec<WeightedPoint> = pset
                .points
                .iter()
                .zip(stored.as_slice())
                .zip(&pset.log_scores)
                .map(|((state, &weight), &log_score)| WeightedPoint {
                    state: state.clone(),
                    weight,
                    log_score,
                })
                .collect();
            let record = IterationRecord {
                points,
                next_state: next_state.clone(),
                accepted,
                selected_slot: selected,
                aux: traj.as_ref().map(|t| HmcAux {
                    momenta: t.phase_points.iter().map(|p| p.momentum.clone()).collect(),
                    start_index: t.start_index,
                    endpoint_index: t.endpoint_index,
                }),
            };
            if let Some(resamples) = resamples.as_mut() {
                let mut resample_rng = make_rng_stream(config.seed, iter, StreamRole::Resample);
                let multiplicities = multinomial_counts(
                    record.points.iter().map(|p| p.weight),
                    config.resample_n,
                    &mut resample_rng,
                );
                resamples.push(ResampleRecord {
                    multiplicities,
                    base: record.clone(),
                });
            }
            records.push(record);
        }
        current = next_state;
    }

    Ok((
        ChainOutput {
            records,
            config_echo: config.clone(),
            seed: config.seed,
        },
        resamples,
    ))
}

fn propose(
    config: &SamplerConfig,
    target: &dyn Target,
    mass: &MassMatrix,
    current: &StateVector,
    iter: u64,
) -> Result<(ProposalSet, Option<TrajectoryProposal>)> {
    match config.kernel {
        KernelSpec::RandomWalk { lambda } => {
            let mut rng = make_rng_stream(config.seed, iter, StreamRole::Propose);
            let pset = gaussian_rw_propose(current, lambda, config.m, target, &mut rng)?;
            Ok((pset, None))
        }
        KernelSpec::Hmc {
            delta,
            jitter_start,
        } => {
            let mut momentum_rng = make_rng_stream(config.seed, iter, StreamRole::Momentum);
            let (pset, traj) = if jitter_start {
                let mut index_rng = make_rng_stream(config.seed, iter, StreamRole::Index);
                hmc_trajectory_propose(
                    current,
                    delta,
                    config.m,
                    mass,
                    target,
                    &mut momentum_rng,
                    &mut index_rng,
                )?
            } else {
                let p = mass.sample_momentum(&mut momentum_rng);
                hmc_trajectory_with_start(current, p, 0, delta, config.m, mass, target)?
            };
            Ok((pset, Some(traj)))
        }
    }
}

/// `N` independent inverse-CDF draws with the given probabilities, returned
/// as per-slot counts.
pub fn multinomial_counts<R: rand::Rng>(
    weights: impl Iterator<Item = f64>,
    n: usize,
    rng: &mut R,
) -> Vec<u64> {
    let w: Vec<f64> = weights.collect();
    let cumsum = cumulative(&w);
    let mut counts = vec![0u64; w.len()];
    for _ in 0..n {
        let u: f64 = rng.random();
        counts[select_index(&cumsum, &w, u)] += 1;
    }
    counts
}

/// Re-derive the stored weights of a saved chain under a different scheme.
///
/// Raw log scores are kept in every record precisely so the same chain can
/// be re-weighted offline; `OneHot` places all weight on the selected slot.
pub fn reweight_chain(chain: &ChainOutput, scheme: WeightScheme) -> Result<ChainOutput> {
    let mut out = chain.clone();
    out.config_echo.nu = scheme;
    for record in &mut out.records {
        let weights = match scheme {
            WeightScheme::OneHot => {
                WeightVector::one_hot(record.points.len(), record.selected_slot)?
            }
            other => {
                let scores = record.log_scores();
                other.compute(&scores, record.current_slot())?
            }
        };
        for (point, &w) in record.points.iter_mut().zip(weights.as_slice()) {
            point.weight = w;
        }
    }
    Ok(out)
}

/// Replace each record's weights with the multiplicities `N_i / N` induced
/// by the resampling step, yielding the chain the resampling estimator and
/// its diagnostics operate on.
pub fn induced_weight_chain(
    chain: &ChainOutput,
    resamples: &[ResampleRecord],
) -> Result<ChainOutput> {
    if chain.records.len() != resamples.len() {
        return Err(Error::Config(format!(
            "chain has {} records but {} resample records",
            chain.records.len(),
            resamples.len()
        )));
    }
    let mut out = chain.clone();
    for (record, resample) in out.records.iter_mut().zip(resamples) {
        let induced = resample.induced_weights()?;
        for (point, &w) in record.points.iter_mut().zip(induced.as_slice()) {
            point.weight = w;
        }
    }
    Ok(out)
}
