//! Propagation rules `T`: the standard MH acceptance step, the weighted
//! Dirac-mixture draw, and the HMC endpoint rule. Each leaves the target
//! invariant; the empirical check lives in the `verify` module.

use rand::Rng;

use crate::error::Result;
use crate::kernels::{hamiltonian, MassMatrix, TrajectoryProposal};
use crate::targets::Target;
use crate::weights::{accept_ratio, WeightVector};

/// Which propagation rule drives the chain.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PropagationKind {
    /// Standard MH accept/reject between the current state and the single
    /// proposal (`M = 1`).
    MhStep,
    /// Draw the next state from the proposal set with a chosen weighting
    /// scheme (which may differ from the stored one).
    WeightedDraw,
    /// The trajectory endpoint Metropolis test on the Hamiltonian difference.
    HmcEndpoint,
}

impl PropagationKind {
    pub fn label(&self) -> &'static str {
        match self {
            PropagationKind::MhStep => "mh",
            PropagationKind::WeightedDraw => "weighted_draw",
            PropagationKind::HmcEndpoint => "hmc_endpoint",
        }
    }
}

/// Outcome of an MH comparison.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Selected {
    Current,
    Candidate,
}

/// Accept the candidate with probability `min{1, exp(s_cand - s_cur)}`,
/// consuming one uniform.
pub fn mh_select<R: Rng>(
    log_score_current: f64,
    log_score_candidate: f64,
    rng: &mut R,
) -> Selected {
    debug_assert!(log_score_current.is_finite());
    let r = accept_ratio(log_score_candidate - log_score_current);
    let u: f64 = rng.random();
    if u < r {
        Selected::Candidate
    } else {
        Selected::Current
    }
}

/// Inverse-CDF selection shared by the single draw and the resampler:
/// the smallest index `i` with `u <= cumsum[i]` and `weights[i] > 0`.
/// Ties on a boundary resolve to the lower positive-weight index.
pub(crate) fn select_index(cumsum: &[f64], weights: &[f64], u: f64) -> usize {
    let mut idx = cumsum.partition_point(|&c| c < u);
    while idx < weights.len() && weights[idx] == 0.0 {
        idx += 1;
    }
    if idx >= weights.len() {
        // u landed above the last cumulative value by roundoff; take the
        // last positive-weight slot.
        idx = weights.iter().rposition(|&w| w > 0.0).unwrap_or(0);
    }
    idx
}

pub(crate) fn cumulative(weights: &[f64]) -> Vec<f64> {
    let mut acc = 0.0;
    weights
        .iter()
        .map(|&w| {
            acc += w;
            acc
        })
        .collect()
}

/// Draw an index with the given probabilities via inverse CDF, consuming one
/// uniform.
pub fn weighted_draw<R: Rng>(weights: &WeightVector, rng: &mut R) -> usize {
    let cumsum = cumulative(weights.as_slice());
    let u: f64 = rng.random();
    select_index(&cumsum, weights.as_slice(), u)
}

/// The HMC endpoint rule: accept the trajectory endpoint `a` with
/// probability `min{1, exp(-H_a + H_l)}`, otherwise stay at `l`.
pub fn hmc_endpoint_select<R: Rng>(
    traj: &TrajectoryProposal,
    mass: &MassMatrix,
    target: &dyn Target,
    rng: &mut R,
) -> Result<usize> {
    let l = traj.start_index;
    let a = traj.endpoint_index;
    let h_l = hamiltonian(&traj.phase_points[l], mass, target)?;
    let h_a = hamiltonian(&traj.phase_points[a], mass, target)?;
    let r = accept_ratio(h_l - h_a);
    let u: f64 = rng.random();
    Ok(if u < r { a } else { l })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::core::StateVector;
    use crate::kernels::hmc_trajectory_with_start;
    use crate::rng::{make_rng_stream, StreamRole};
    use crate::targets::std_normal_target;
    use crate::weights::version2_weights;

    #[test]
    fn mh_always_accepts_uphill() {
        for j in 0..200 {
            let mut rng = make_rng_stream(2, j, StreamRole::Select);
            assert_eq!(mh_select(-1.0, -0.5, &mut rng), Selected::Candidate);
        }
    }

    #[test]
    fn mh_never_accepts_zero_density() {
        for j in 0..200 {
            let mut rng = make_rng_stream(2, j, StreamRole::Select);
            assert_eq!(
                mh_select(-1.0, f64::NEG_INFINITY, &mut rng),
                Selected::Current
            );
        }
    }

    #[test]
    fn mh_acceptance_frequency_matches_ratio() {
        // score gap log 0.3: empirical acceptance within 3 sigma of 0.3
        let n = 100_000;
        let gap = 0.3f64.ln();
        let mut accepted = 0usize;
        for j in 0..n {
            let mut rng = make_rng_stream(17, j, StreamRole::Select);
            if mh_select(0.0, gap, &mut rng) == Selected::Candidate {
                accepted += 1;
            }
        }
        let freq = accepted as f64 / n as f64;
        let sigma = (0.3 * 0.7 / n as f64).sqrt();
        assert!((freq - 0.3).abs() <= 3.0 * sigma, "freq {freq}");
    }

    #[test]
    fn weighted_draw_one_hot_is_deterministic() {
        let w = WeightVector::one_hot(5, 3).unwrap();
        for j in 0..100 {
            let mut rng = make_rng_stream(4, j, StreamRole::Select);
            assert_eq!(weighted_draw(&w, &mut rng), 3);
        }
    }

    #[test]
    fn weighted_draw_uniform_frequencies() {
        let w = WeightVector::new(vec![1.0 / 3.0; 3]).unwrap();
        let n = 100_000;
        let mut counts = [0usize; 3];
        for j in 0..n {
            let mut rng = make_rng_stream(8, j, StreamRole::Select);
            counts[weighted_draw(&w, &mut rng)] += 1;
        }
        let p = 1.0 / 3.0;
        let sigma = (p * (1.0 - p) / n as f64).sqrt();
        for &c in &counts {
            let freq = c as f64 / n as f64;
            assert!((freq - p).abs() <= 3.0 * sigma, "freq {freq}");
        }
    }

    #[test]
    fn weighted_draw_single_proposal_matches_barker_rule() {
        // M = 1 with version-2 weights moves with the Barker probability
        // pi1 k / (pi0 k + pi1 k).
        let (s0, s1) = (-0.2, -1.1);
        let w = version2_weights(&[s0, s1]).unwrap();
        let barker = (s1 - s0).exp() / (1.0 + (s1 - s0).exp());
        let n = 100_000;
        let mut moved = 0usize;
        for j in 0..n {
            let mut rng = make_rng_stream(19, j, StreamRole::Select);
            if weighted_draw(&w, &mut rng) == 1 {
                moved += 1;
            }
        }
        let freq = moved as f64 / n as f64;
        let sigma = (barker * (1.0 - barker) / n as f64).sqrt();
        assert!((freq - barker).abs() <= 3.0 * sigma, "freq {freq} vs {barker}");
    }

    #[test]
    fn select_index_boundary_ties_go_low_and_skip_zeros() {
        let w = [0.0, 0.5, 0.5, 0.0];
        let c = cumulative(&w);
        assert_eq!(select_index(&c, &w, 0.0), 1); // never the zero-weight slot
        assert_eq!(select_index(&c, &w, 0.5), 1); // tie resolves low
        assert_eq!(select_index(&c, &w, 0.6), 2);
        assert_eq!(select_index(&c, &w, 1.0 - 1e-16), 2);
    }

    #[test]
    fn endpoint_select_always_accepts_energy_decrease() {
        let target = std_normal_target(2).unwrap();
        let mass = MassMatrix::identity(2);
        let x = StateVector::new(vec![1.4, -0.7]);
        // downhill trajectories: endpoint H below start H gets accepted
        let (_, traj) =
            hmc_trajectory_with_start(&x, vec![0.9, 0.4], 0, 0.05, 6, &mass, &target).unwrap();
        let h_l = hamiltonian(&traj.phase_points[0], &mass, &target).unwrap();
        let h_a = hamiltonian(&traj.phase_points[6], &mass, &target).unwrap();
        if h_a <= h_l {
            for j in 0..100 {
                let mut rng = make_rng_stream(5, j, StreamRole::Select);
                assert_eq!(
                    hmc_endpoint_select(&traj, &mass, &target, &mut rng).unwrap(),
                    6
                );
            }
        }
    }

    #[test]
    fn endpoint_select_with_maximal_backward_start_compares_endpoints() {
        // l = M gives a = 0: the comparison runs between the two trajectory
        // endpoints, and the returned index is one of them.
        let target = std_normal_target(2).unwrap();
        let mass = MassMatrix::identity(2);
        let x = StateVector::new(vec![0.3, 0.3]);
        let (_, traj) =
            hmc_trajectory_with_start(&x, vec![0.2, -0.1], 4, 0.05, 4, &mass, &target).unwrap();
        assert_eq!(traj.endpoint_index, 0);
        let mut rng = make_rng_stream(6, 0, StreamRole::Select);
        let sel = hmc_endpoint_select(&traj, &mass, &target, &mut rng).unwrap();
        assert!(sel == 0 || sel == 4);
    }

    #[test]
    fn endpoint_acceptance_approaches_one_for_small_steps() {
        // delta -> 0 makes H_a -> H_l; at delta = 0.01 on the standard
        // normal the empirical acceptance is at least 0.99.
        let target = std_normal_target(2).unwrap();
        let mass = MassMatrix::identity(2);
        let n = 2_000u64;
        let mut accepted = 0usize;
        let mut x = StateVector::new(vec![0.0, 0.0]);
        for j in 0..n {
            let mut mom = make_rng_stream(31, j, StreamRole::Momentum);
            let mut idx = make_rng_stream(31, j, StreamRole::Index);
            let mut sel_rng = make_rng_stream(31, j, StreamRole::Select);
            let (ps, traj) = crate::kernels::hmc_trajectory_propose(
                &x, 0.01, 10, &mass, &target, &mut mom, &mut idx,
            )
            .unwrap();
            let sel = hmc_endpoint_select(&traj, &mass, &target, &mut sel_rng).unwrap();
            if sel == traj.endpoint_index && traj.endpoint_index != traj.start_index {
                accepted += 1;
            }
            x = ps.points[sel].clone();
        }
        let rate = accepted as f64 / n as f64;
        assert!(rate >= 0.99, "acceptance {rate}");
    }
}
