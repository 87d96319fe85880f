//! Domain types shared by all modules: states, weighted points, iteration
//! records, chain output, and estimand functions.

use std::fmt;
use std::sync::Arc;

use crate::config::SamplerConfig;
use crate::error::{Error, Result};

/// A point in the sample space, as a dense coordinate vector.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector(pub Vec<f64>);

impl StateVector {
    pub fn new(coords: Vec<f64>) -> Self {
        StateVector(coords)
    }

    pub fn zeros(dim: usize) -> Self {
        StateVector(vec![0.0; dim])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    /// True when every coordinate is finite (no NaN or infinities).
    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|c| c.is_finite())
    }
}

impl std::ops::Index<usize> for StateVector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

/// A named scalar function of the state, used as the estimand `h`.
///
/// Evaluators must be pure: the same input always yields the same output.
#[derive(Clone)]
pub struct EstimandFunction {
    name: String,
    eval: Arc<dyn Fn(&StateVector) -> f64 + Send + Sync>,
}

impl EstimandFunction {
    pub fn new(
        name: impl Into<String>,
        f: impl Fn(&StateVector) -> f64 + Send + Sync + 'static,
    ) -> Self {
        EstimandFunction {
            name: name.into(),
            eval: Arc::new(f),
        }
    }

    /// The i-th coordinate, named `coord:i`.
    pub fn coord(i: usize) -> Self {
        Self::new(format!("coord:{i}"), move |x: &StateVector| x[i])
    }

    /// The average of all coordinates, named `mean`.
    pub fn coord_mean() -> Self {
        Self::new("mean", |x: &StateVector| {
            x.coords().iter().sum::<f64>() / x.dim() as f64
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn eval(&self, x: &StateVector) -> f64 {
        (self.eval)(x)
    }
}

impl fmt::Debug for EstimandFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("EstimandFunction")
            .field("name", &self.name)
            .finish()
    }
}

/// One proposed (or current) point together with its normalized weight and
/// the raw log forward score it was derived from.
///
/// Keeping the raw scores alongside the weights lets any weighting scheme be
/// re-derived offline from a saved chain.
#[derive(Clone, Debug)]
pub struct WeightedPoint {
    pub state: StateVector,
    /// Normalized weight in `[0, 1]`; weights sum to 1 within each iteration.
    pub weight: f64,
    /// `log { pi(x_i) k(x_{-i}; x_i) }` for this point (for HMC trajectories,
    /// the negative Hamiltonian).
    pub log_score: f64,
}

/// Per-point auxiliary data for HMC trajectory iterations.
#[derive(Clone, Debug)]
pub struct HmcAux {
    /// Forward-time momentum attached to each trajectory index.
    pub momenta: Vec<Vec<f64>>,
    /// The random index `l` at which the chain's current state sits.
    pub start_index: usize,
    /// The endpoint index `a` the propagation rule compares against.
    pub endpoint_index: usize,
}

/// One iteration of a locally weighted chain: the `M + 1` weighted points,
/// the propagated state, and bookkeeping for diagnostics.
///
/// For random-walk kernels the current state occupies slot 0; for HMC
/// trajectories the points are stored in leapfrog time order and the current
/// slot is `aux.start_index`.
#[derive(Clone, Debug)]
pub struct IterationRecord {
    pub points: Vec<WeightedPoint>,
    /// Output of the propagation rule `T`.
    pub next_state: StateVector,
    /// Whether `next_state` differs from the current state (exact equality of
    /// coordinates; proposals are continuous, so ties have probability zero).
    pub accepted: bool,
    /// The slot `next_state` was selected from.
    pub selected_slot: usize,
    pub aux: Option<HmcAux>,
}

impl IterationRecord {
    /// Slot of the chain's current state within `points`.
    pub fn current_slot(&self) -> usize {
        self.aux.as_ref().map_or(0, |a| a.start_index)
    }

    pub fn weight_sum(&self) -> f64 {
        self.points.iter().map(|p| p.weight).sum()
    }

    pub fn log_scores(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.log_score).collect()
    }

    /// The within-iteration weighted mean of `h` over all points.
    pub fn weighted_mean(&self, h: &EstimandFunction) -> f64 {
        self.points
            .iter()
            .map(|p| p.weight * h.eval(&p.state))
            .sum()
    }

    /// The within-iteration weighted mean of `h^2` (same summation order as
    /// `weighted_mean`, so one-hot weights give bit-identical moments).
    pub fn weighted_mean_sq(&self, h: &EstimandFunction) -> f64 {
        self.points
            .iter()
            .map(|p| {
                let v = h.eval(&p.state);
                p.weight * v * v
            })
            .sum()
    }
}

/// The full output of a sampler run: `n` iteration records plus the exact
/// configuration and seed that produced them.
#[derive(Clone, Debug)]
pub struct ChainOutput {
    pub records: Vec<IterationRecord>,
    pub config_echo: SamplerConfig,
    pub seed: u64,
}

impl ChainOutput {
    pub fn n(&self) -> usize {
        self.records.len()
    }

    pub fn dim(&self) -> usize {
        self.records
            .first()
            .map_or(0, |r| r.next_state.dim())
    }

    /// The propagating chain: the sequence of `next_state`s.
    pub fn propagating_states(&self) -> impl Iterator<Item = &StateVector> {
        self.records.iter().map(|r| &r.next_state)
    }
}

/// The LWMCMC estimator: `(1/n) sum_j sum_i w(x_i^j) h(x_i^j)`.
///
/// Equals the mean of the per-iteration weighted means exactly.
pub fn estimate_mean(chain: &ChainOutput, h: &EstimandFunction) -> Result<f64> {
    if chain.records.is_empty() {
        return Err(Error::EmptyChain);
    }
    let sum: f64 = chain.records.iter().map(|r| r.weighted_mean(h)).sum();
    Ok(sum / chain.n() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::SamplerConfig;
    use crate::weights::WeightVector;

    pub(crate) fn record_from_states(
        states: Vec<Vec<f64>>,
        weights: &[f64],
        selected: usize,
    ) -> IterationRecord {
        let points = states
            .into_iter()
            .zip(weights)
            .map(|(s, &w)| WeightedPoint {
                state: StateVector::new(s),
                weight: w,
                log_score: 0.0,
            })
            .collect::<Vec<_>>();
        let next_state = points[selected].state.clone();
        let accepted = next_state != points[0].state;
        IterationRecord {
            points,
            next_state,
            accepted,
            selected_slot: selected,
            aux: None,
        }
    }

    fn dummy_chain(records: Vec<IterationRecord>) -> ChainOutput {
        ChainOutput {
            records,
            config_echo: SamplerConfig::test_default(),
            seed: 0,
        }
    }

    #[test]
    fn estimate_mean_simple_arithmetic() {
        // one iteration, weights (0.5, 0.5), h = identity on 1-d states (2, 4) -> 3
        let rec = record_from_states(vec![vec![2.0], vec![4.0]], &[0.5, 0.5], 1);
        let chain = dummy_chain(vec![rec]);
        let h = EstimandFunction::coord(0);
        assert_eq!(estimate_mean(&chain, &h).unwrap(), 3.0);
    }

    #[test]
    fn estimate_mean_one_hot_reduces_to_slot_average() {
        // one-hot weights (1,0,...) -> plain average of the slot-0 states
        let recs = vec![
            record_from_states(vec![vec![1.0], vec![9.0]], &[1.0, 0.0], 0),
            record_from_states(vec![vec![3.0], vec![-7.0]], &[1.0, 0.0], 0),
        ];
        let chain = dummy_chain(recs);
        let h = EstimandFunction::coord(0);
        assert_eq!(estimate_mean(&chain, &h).unwrap(), 2.0);
    }

    #[test]
    fn estimate_mean_empty_chain_errors() {
        let chain = dummy_chain(vec![]);
        let h = EstimandFunction::coord(0);
        assert!(estimate_mean(&chain, &h).is_err());
    }

    #[test]
    fn one_hot_weight_vector_is_accepted_downstream() {
        let w = WeightVector::one_hot(4, 2).unwrap();
        let rec = record_from_states(
            vec![vec![0.0], vec![1.0], vec![2.0], vec![3.0]],
            w.as_slice(),
            2,
        );
        let chain = dummy_chain(vec![rec]);
        let h = EstimandFunction::coord(0);
        assert_eq!(estimate_mean(&chain, &h).unwrap(), 2.0);
    }
}
