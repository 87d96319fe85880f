//! One-to-M proposal kernels: the Gaussian random walk and the HMC
//! leapfrog-trajectory kernel, each returning the proposal set together with
//! all log forward scores the weighting schemes need.

use nalgebra::{Cholesky, DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::core::StateVector;
use crate::error::{Error, Result};
use crate::targets::Target;

/// Score evaluation switches to rayon above this many points.
const PAR_THRESHOLD: usize = 16;

/// One iteration's `M + 1` points with per-point log forward scores
/// `log { pi(x_i) k(x_{-i}; x_i) }` (for HMC trajectories, `-H(x_i, p_i)`).
#[derive(Clone, Debug)]
pub struct ProposalSet {
    /// For the random walk, slot 0 is the current state; for HMC the
    /// trajectory is in leapfrog time order.
    pub points: Vec<StateVector>,
    pub log_scores: Vec<f64>,
    /// Index of the chain's current state within `points`.
    pub current_slot: usize,
}

/// A position/momentum pair in phase space.
#[derive(Clone, Debug)]
pub struct HmcPhasePoint {
    pub position: StateVector,
    pub momentum: Vec<f64>,
}

/// A full leapfrog trajectory proposal with its bookkeeping indices.
#[derive(Clone, Debug)]
pub struct TrajectoryProposal {
    /// Phase points at leapfrog indices `0..=M`, each carrying its
    /// forward-time momentum.
    pub phase_points: Vec<HmcPhasePoint>,
    /// Start index `l`, uniform on `{0..M}`; `phase_points[l].position` is
    /// the chain's current state.
    pub start_index: usize,
    /// Endpoint index for the propagation rule: 0 if `l > M - l`, else `M`.
    pub endpoint_index: usize,
}

/// A symmetric positive-definite mass matrix `W`, with its Cholesky factor
/// for momentum sampling and solves for `W^{-1} p`.
///
/// Experiments only ever use the identity; general `W` is accepted through
/// this API.
#[derive(Clone, Debug)]
pub struct MassMatrix {
    dim: usize,
    identity: bool,
    chol: Option<Cholesky<f64, nalgebra::Dyn>>,
}

impl MassMatrix {
    pub fn identity(dim: usize) -> Self {
        MassMatrix {
            dim,
            identity: true,
            chol: None,
        }
    }

    /// Build from a dense matrix, verifying symmetry and positive
    /// definiteness via the Cholesky factorization.
    pub fn new(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.len();
        if rows.iter().any(|r| r.len() != dim) {
            return Err(Error::MassNotPd);
        }
        for i in 0..dim {
            for j in 0..i {
                if (rows[i][j] - rows[j][i]).abs() > 1e-12 {
                    return Err(Error::MassNotPd);
                }
            }
        }
        let mat = DMatrix::from_fn(dim, dim, |i, j| rows[i][j]);
        let chol = Cholesky::new(mat).ok_or(Error::MassNotPd)?;
        Ok(MassMatrix {
            dim,
            identity: false,
            chol: Some(chol),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `W^{-1} p`.
    pub fn inv_mul(&self, p: &[f64]) -> Vec<f64> {
        if self.identity {
            return p.to_vec();
        }
        let chol = self.chol.as_ref().expect("non-identity mass has chol");
        let v = DVector::from_column_slice(p);
        chol.solve(&v).as_slice().to_vec()
    }

    /// The kinetic energy `p^T W^{-1} p / 2`.
    pub fn kinetic(&self, p: &[f64]) -> f64 {
        let winv_p = self.inv_mul(p);
        0.5 * p.iter().zip(&winv_p).map(|(a, b)| a * b).sum::<f64>()
    }

    /// Draw `p ~ N(0, W)` as `L z` with `z` standard normal, consuming `dim`
    /// draws in coordinate order.
    pub fn sample_momentum<R: Rng>(&self, rng: &mut R) -> Vec<f64> {
        let z: Vec<f64> = (0..self.dim).map(|_| rng.sample(StandardNormal)).collect();
        if self.identity {
            return z;
        }
        let l = self.chol.as_ref().expect("non-identity mass has chol").l();
        (&l * DVector::from_vec(z)).as_slice().to_vec()
    }
}

/// Log density of `N(0, lambda^2 I_d)` at `u = a - b`.
fn log_gauss_step(a: &[f64], b: &[f64], lambda: f64) -> f64 {
    let d = a.len() as f64;
    let ss: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    -0.5 * d * (2.0 * std::f64::consts::PI * lambda * lambda).ln()
        - ss / (2.0 * lambda * lambda)
}

/// Draw `M` i.i.d. proposals from `N(x0, lambda^2 I)` and score all `M + 1`
/// points.
///
/// The joint kernel density `k(x_{-i}; x_i)` is the product of marginals, so
/// `log_scores[i] = log pi(x_i) + sum_{j != i} log phi_lambda(x_j - x_i)`;
/// scoring is parallel across points for large `M`.
pub fn gaussian_rw_propose<R: Rng>(
    x0: &StateVector,
    lambda: f64,
    m: usize,
    target: &dyn Target,
    rng: &mut R,
) -> Result<ProposalSet> {
    if !(lambda > 0.0) {
        return Err(Error::Config("rw kernel requires lambda > 0".into()));
    }
    let d = x0.dim();
    let mut points = Vec::with_capacity(m + 1);
    points.push(x0.clone());
    for _ in 0..m {
        let coords: Vec<f64> = x0
            .coords()
            .iter()
            .map(|&c| c + lambda * rng.sample::<f64, _>(StandardNormal))
            .collect();
        points.push(StateVector::new(coords));
    }
    debug_assert!(points.iter().all(|p| p.dim() == d));

    let score_one = |i: usize| -> f64 {
        let mut s = target.log_density(&points[i]);
        for (j, other) in points.iter().enumerate() {
            if j != i {
                s += log_gauss_step(other.coords(), points[i].coords(), lambda);
            }
        }
        s
    };
    let log_scores: Vec<f64> = if points.len() >= PAR_THRESHOLD {
        (0..points.len()).into_par_iter().map(score_one).collect()
    } else {
        (0..points.len()).map(score_one).collect()
    };

    Ok(ProposalSet {
        points,
        log_scores,
        current_slot: 0,
    })
}

/// The Hamiltonian `H(x, p) = -log pi(x) + p^T W^{-1} p / 2`.
pub fn hamiltonian(phase: &HmcPhasePoint, mass: &MassMatrix, target: &dyn Target) -> Result<f64> {
    if phase.position.dim() != phase.momentum.len() || phase.position.dim() != mass.dim() {
        return Err(Error::DimensionMismatch {
            expected: mass.dim(),
            got: phase.position.dim(),
        });
    }
    Ok(-target.log_density(&phase.position) + mass.kinetic(&phase.momentum))
}

/// One position-Verlet leapfrog step of size `delta`:
///
/// ```text
/// x_half = x + (delta/2) W^{-1} p
/// p'     = p + delta * grad log pi(x_half)
/// x'     = x_half + (delta/2) W^{-1} p'
/// ```
///
/// Reversible: a step of `-delta` from `(x', p')` returns `(x, p)` up to
/// roundoff. One gradient evaluation per step.
pub fn leapfrog_step(
    phase: &HmcPhasePoint,
    delta: f64,
    mass: &MassMatrix,
    target: &dyn Target,
) -> Result<HmcPhasePoint> {
    let half = delta / 2.0;
    let winv_p = mass.inv_mul(&phase.momentum);
    let x_half: Vec<f64> = phase
        .position
        .coords()
        .iter()
        .zip(&winv_p)
        .map(|(x, v)| x + half * v)
        .collect();
    let x_half = StateVector::new(x_half);
    let grad = target
        .grad_log_density(&x_half)
        .ok_or(Error::MissingGradient)?;
    let momentum: Vec<f64> = phase
        .momentum
        .iter()
        .zip(&grad)
        .map(|(p, g)| p + delta * g)
        .collect();
    let winv_p2 = mass.inv_mul(&momentum);
    let position: Vec<f64> = x_half
        .coords()
        .iter()
        .zip(&winv_p2)
        .map(|(x, v)| x + half * v)
        .collect();
    Ok(HmcPhasePoint {
        position: StateVector::new(position),
        momentum,
    })
}

/// Integrate a trajectory around a given start index `l`: `l` steps backward
/// in time and `M - l` forward, both from `(x, p_l)`.
///
/// Backward integration runs the same leapfrog update with step `-delta`,
/// which yields each point's forward-time momentum directly, so forward
/// integration from index 0 reproduces the whole trajectory (up to
/// roundoff). The two segments run as independent tasks for long
/// trajectories.
pub fn hmc_trajectory_with_start(
    x: &StateVector,
    p_l: Vec<f64>,
    l: usize,
    delta: f64,
    m: usize,
    mass: &MassMatrix,
    target: &dyn Target,
) -> Result<(ProposalSet, TrajectoryProposal)> {
    if m < 1 {
        return Err(Error::Config("hmc kernel requires M >= 1".into()));
    }
    if l > m {
        return Err(Error::Config(format!("start index {l} > M = {m}")));
    }
    let start = HmcPhasePoint {
        position: x.clone(),
        momentum: p_l,
    };

    let integrate = |steps: usize, step_delta: f64| -> Result<Vec<HmcPhasePoint>> {
        let mut out = Vec::with_capacity(steps);
        let mut cur = start.clone();
        for _ in 0..steps {
            cur = leapfrog_step(&cur, step_delta, mass, target)?;
            out.push(cur.clone());
        }
        Ok(out)
    };

    let (backward, forward) = if m >= 32 {
        rayon::join(|| integrate(l, -delta), || integrate(m - l, delta))
    } else {
        (integrate(l, -delta), integrate(m - l, delta))
    };
    let backward = backward?;
    let forward = forward?;

    let mut phase_points = Vec::with_capacity(m + 1);
    phase_points.extend(backward.into_iter().rev());
    phase_points.push(start);
    phase_points.extend(forward);

    let score_one = |i: usize| -> Result<f64> { Ok(-hamiltonian(&phase_points[i], mass, target)?) };
    let log_scores: Vec<f64> = if phase_points.len() >= PAR_THRESHOLD {
        (0..phase_points.len())
            .into_par_iter()
            .map(score_one)
            .collect::<Result<_>>()?
    } else {
        (0..phase_points.len())
            .map(score_one)
            .collect::<Result<_>>()?
    };

    let a = if l > m - l { 0 } else { m };
    let points: Vec<StateVector> = phase_points.iter().map(|p| p.position.clone()).collect();
    Ok((
        ProposalSet {
            points,
            log_scores,
            current_slot: l,
        },
        TrajectoryProposal {
            phase_points,
            start_index: l,
            endpoint_index: a,
        },
    ))
}

/// The full HMC trajectory kernel: draw `p_l ~ N(0, W)`, draw `l` uniform on
/// `{0..M}`, and integrate backward `l` and forward `M - l` steps.
pub fn hmc_trajectory_propose<R: Rng, S: Rng>(
    x: &StateVector,
    delta: f64,
    m: usize,
    mass: &MassMatrix,
    target: &dyn Target,
    momentum_rng: &mut R,
    index_rng: &mut S,
) -> Result<(ProposalSet, TrajectoryProposal)> {
    let p_l = mass.sample_momentum(momentum_rng);
    let l = index_rng.random_range(0..=m);
    hmc_trajectory_with_start(x, p_l, l, delta, m, mass, target)
}

/// Config-level description of a proposal kernel.
#[derive(Clone, Debug, PartialEq)]
pub enum KernelSpec {
    RandomWalk {
        lambda: f64,
    },
    Hmc {
        delta: f64,
        /// When false, the start index is pinned to `l = 0` (all steps
        /// forward), which together with one-hot weights and the endpoint
        /// rule is the classic HMC baseline.
        jitter_start: bool,
    },
}

impl std::fmt::Display for KernelSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            KernelSpec::RandomWalk { lambda } => write!(f, "rw(lambda={lambda})"),
            KernelSpec::Hmc { delta, jitter_start } => {
                if *jitter_start {
                    write!(f, "hmc(delta={delta},mass=identity)")
                } else {
                    write!(f, "hmc(delta={delta},mass=identity,jitter=false)")
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{make_rng_stream, StreamRole};
    use crate::targets::{indirect_obs_target, std_normal_target, IndirectObsParams};
    use approx::assert_abs_diff_eq;

    fn phase(pos: &[f64], mom: &[f64]) -> HmcPhasePoint {
        HmcPhasePoint {
            position: StateVector::new(pos.to_vec()),
            momentum: mom.to_vec(),
        }
    }

    #[test]
    fn rw_scores_symmetric_kernel_single_proposal() {
        // For M = 1 the Gaussian kernel is symmetric, so the scores differ
        // only by the log pi terms.
        let target = std_normal_target(2).unwrap();
        let mut rng = make_rng_stream(3, 0, StreamRole::Propose);
        let x0 = StateVector::new(vec![0.4, -1.0]);
        let ps = gaussian_rw_propose(&x0, 0.7, 1, &target, &mut rng).unwrap();
        let k01 = log_gauss_step(ps.points[1].coords(), ps.points[0].coords(), 0.7);
        let k10 = log_gauss_step(ps.points[0].coords(), ps.points[1].coords(), 0.7);
        assert_eq!(k01, k10);
        let gap = ps.log_scores[1] - ps.log_scores[0];
        let pi_gap = target.log_density(&ps.points[1]) - target.log_density(&ps.points[0]);
        assert_abs_diff_eq!(gap, pi_gap, epsilon = 1e-12);
    }

    #[test]
    fn rw_proposal_sample_mean_matches_center() {
        // Monte-Carlo moment check: mean of 1e5 proposals stays within
        // 3 lambda / sqrt(1e5) of the center per coordinate.
        let target = std_normal_target(2).unwrap();
        let lambda = 0.45;
        let n = 100_000;
        let x0 = StateVector::new(vec![0.0, 0.0]);
        let mut sums = [0.0f64; 2];
        for j in 0..n {
            let mut rng = make_rng_stream(12, j, StreamRole::Propose);
            let ps = gaussian_rw_propose(&x0, lambda, 1, &target, &mut rng).unwrap();
            sums[0] += ps.points[1][0];
            sums[1] += ps.points[1][1];
        }
        let tol = 3.0 * lambda / (n as f64).sqrt();
        assert!((sums[0] / n as f64).abs() < tol);
        assert!((sums[1] / n as f64).abs() < tol);
    }

    #[test]
    fn rw_scores_match_brute_force_density_product() {
        let target = std_normal_target(2).unwrap();
        let lambda = 0.9;
        let mut rng = make_rng_stream(7, 5, StreamRole::Propose);
        let x0 = StateVector::new(vec![0.3, 0.1]);
        let ps = gaussian_rw_propose(&x0, lambda, 3, &target, &mut rng).unwrap();
        // brute-force oracle for slot 2: log pi(x_2) + sum over the others
        let mut expect = target.log_density(&ps.points[2]);
        for j in [0usize, 1, 3] {
            expect += log_gauss_step(ps.points[j].coords(), ps.points[2].coords(), lambda);
        }
        assert_abs_diff_eq!(ps.log_scores[2], expect, epsilon = 1e-12);
    }

    #[test]
    fn rw_rejects_nonpositive_lambda() {
        let target = std_normal_target(1).unwrap();
        let mut rng = make_rng_stream(1, 0, StreamRole::Propose);
        let x0 = StateVector::new(vec![0.0]);
        assert!(gaussian_rw_propose(&x0, 0.0, 1, &target, &mut rng).is_err());
    }

    #[test]
    fn hamiltonian_at_origin_is_zero() {
        let target = std_normal_target(2).unwrap();
        let mass = MassMatrix::identity(2);
        let h = hamiltonian(&phase(&[0.0, 0.0], &[0.0, 0.0]), &mass, &target).unwrap();
        assert_eq!(h, 0.0);
    }

    #[test]
    fn hamiltonian_kinetic_term_only() {
        let target = std_normal_target(2).unwrap();
        let mass = MassMatrix::identity(2);
        let h = hamiltonian(&phase(&[0.0, 0.0], &[2.0, 0.0]), &mass, &target).unwrap();
        assert_eq!(h, 2.0);
    }

    #[test]
    fn hamiltonian_decomposes_into_potential_plus_kinetic() {
        let target = indirect_obs_target(IndirectObsParams { y_obs: 1.0, sigma: 0.1 }).unwrap();
        let mass = MassMatrix::identity(2);
        let mut rng = make_rng_stream(4, 0, StreamRole::Momentum);
        for _ in 0..20 {
            let x = StateVector::new(vec![
                rng.random::<f64>() * 2.0,
                rng.random::<f64>() * 2.0,
            ]);
            let p = vec![rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5];
            let h = hamiltonian(
                &HmcPhasePoint { position: x.clone(), momentum: p.clone() },
                &mass,
                &target,
            )
            .unwrap();
            let potential = -target.log_density(&x);
            let kinetic = 0.5 * (p[0] * p[0] + p[1] * p[1]);
            assert_abs_diff_eq!(h, potential + kinetic, epsilon = 1e-12);
        }
    }

    #[test]
    fn hamiltonian_rejects_dimension_mismatch() {
        let target = std_normal_target(2).unwrap();
        let mass = MassMatrix::identity(2);
        assert!(hamiltonian(&phase(&[0.0, 0.0], &[1.0]), &mass, &target).is_err());
    }

    #[test]
    fn leapfrog_free_particle() {
        // flat gradient: p unchanged, x advances by delta * W^{-1} p
        struct Flat;
        impl Target for Flat {
            fn dim(&self) -> usize {
                2
            }
            fn log_density(&self, _x: &StateVector) -> f64 {
                0.0
            }
            fn grad_log_density(&self, _x: &StateVector) -> Option<Vec<f64>> {
                Some(vec![0.0, 0.0])
            }
        }
        let mass = MassMatrix::identity(2);
        let out = leapfrog_step(&phase(&[1.0, 2.0], &[0.5, -1.0]), 0.1, &mass, &Flat).unwrap();
        assert_eq!(out.momentum, vec![0.5, -1.0]);
        assert_abs_diff_eq!(out.position[0], 1.05, epsilon = 1e-15);
        assert_abs_diff_eq!(out.position[1], 1.9, epsilon = 1e-15);
    }

    #[test]
    fn leapfrog_free_particle_general_mass() {
        struct Flat;
        impl Target for Flat {
            fn dim(&self) -> usize {
                2
            }
            fn log_density(&self, _x: &StateVector) -> f64 {
                0.0
            }
            fn grad_log_density(&self, _x: &StateVector) -> Option<Vec<f64>> {
                Some(vec![0.0, 0.0])
            }
        }
        let mass = MassMatrix::new(&[vec![4.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let out = leapfrog_step(&phase(&[0.0, 0.0], &[2.0, 1.0]), 1.0, &mass, &Flat).unwrap();
        // W^{-1} p = (0.5, 1.0)
        assert_abs_diff_eq!(out.position[0], 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(out.position[1], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn mass_matrix_rejects_non_pd() {
        assert!(MassMatrix::new(&[vec![1.0, 2.0], vec![2.0, 1.0]]).is_err());
        assert!(MassMatrix::new(&[vec![1.0, 0.5], vec![0.0, 1.0]]).is_err());
    }

    #[test]
    fn leapfrog_single_step_reversibility() {
        let target = std_normal_target(2).unwrap();
        let mass = MassMatrix::identity(2);
        let start = phase(&[1.0, -0.3], &[0.2, 0.8]);
        let fwd = leapfrog_step(&start, 0.05, &mass, &target).unwrap();
        let back = leapfrog_step(&fwd, -0.05, &mass, &target).unwrap();
        assert_abs_diff_eq!(back.position[0], start.position[0], epsilon = 1e-12);
        assert_abs_diff_eq!(back.position[1], start.position[1], epsilon = 1e-12);
        assert_abs_diff_eq!(back.momentum[0], start.momentum[0], epsilon = 1e-12);
        assert_abs_diff_eq!(back.momentum[1], start.momentum[1], epsilon = 1e-12);
    }

    #[test]
    fn leapfrog_energy_error_scales_quadratically() {
        let target = std_normal_target(2).unwrap();
        let mass = MassMatrix::identity(2);
        // asymmetric amplitudes so the per-coordinate error terms cannot
        // cancel each other
        let start = phase(&[1.2, 0.4], &[-0.3, 0.8]);
        let h0 = hamiltonian(&start, &mass, &target).unwrap();
        let max_drift = |delta: f64, steps: usize| -> f64 {
            let mut cur = start.clone();
            let mut worst = 0.0f64;
            for _ in 0..steps {
                cur = leapfrog_step(&cur, delta, &mass, &target).unwrap();
                let h = hamiltonian(&cur, &mass, &target).unwrap();
                worst = worst.max((h - h0).abs());
            }
            worst
        };
        let coarse = max_drift(0.01, 100);
        let fine = max_drift(0.005, 200);
        let ratio = coarse / fine;
        assert!(
            (3.5..=4.5).contains(&ratio),
            "energy error ratio {ratio} outside [3.5, 4.5]"
        );
    }

    #[test]
    fn trajectory_start_index_frequencies_are_uniform() {
        // l ~ uniform over {0..M}: each index within 3 sigma of 1/(M+1)
        let m = 4;
        let n = 100_000usize;
        let mut counts = vec![0usize; m + 1];
        for j in 0..n {
            let mut rng = make_rng_stream(9, j as u64, StreamRole::Index);
            counts[rng.random_range(0..=m)] += 1;
        }
        let p = 1.0 / (m as f64 + 1.0);
        let sigma = (p * (1.0 - p) / n as f64).sqrt();
        for &c in &counts {
            let freq = c as f64 / n as f64;
            assert!(
                (freq - p).abs() <= 3.0 * sigma,
                "frequency {freq} too far from {p}"
            );
        }
    }

    #[test]
    fn trajectory_stitches_under_forward_integration() {
        // Integrating forward M steps from index 0 reproduces the whole
        // trajectory within 1e-10.
        let target = indirect_obs_target(IndirectObsParams { y_obs: 1.0, sigma: 0.1 }).unwrap();
        let mass = MassMatrix::identity(2);
        let x = StateVector::new(vec![1.0, 1.0]);
        let m = 12;
        for l in [0usize, 3, 7, 12] {
            let mut mom = make_rng_stream(21, l as u64, StreamRole::Momentum);
            let p_l = mass.sample_momentum(&mut mom);
            let (_, traj) =
                hmc_trajectory_with_start(&x, p_l, l, 0.03, m, &mass, &target).unwrap();
            assert_eq!(traj.phase_points[l].position, x);
            let mut cur = traj.phase_points[0].clone();
            for i in 1..=m {
                cur = leapfrog_step(&cur, 0.03, &mass, &target).unwrap();
                for k in 0..2 {
                    assert_abs_diff_eq!(
                        cur.position[k],
                        traj.phase_points[i].position[k],
                        epsilon = 1e-10
                    );
                    assert_abs_diff_eq!(
                        cur.momentum[k],
                        traj.phase_points[i].momentum[k],
                        epsilon = 1e-10
                    );
                }
            }
        }
    }

    #[test]
    fn trajectory_endpoint_rule() {
        let target = std_normal_target(2).unwrap();
        let mass = MassMatrix::identity(2);
        let x = StateVector::new(vec![0.5, 0.5]);
        for (l, m, expect_a) in [(0usize, 4usize, 4usize), (3, 4, 0), (2, 4, 4), (1, 1, 0)] {
            let (_, traj) =
                hmc_trajectory_with_start(&x, vec![0.1, 0.2], l, 0.05, m, &mass, &target)
                    .unwrap();
            assert_eq!(traj.endpoint_index, expect_a, "l={l} m={m}");
        }
    }

    #[test]
    fn single_step_trajectory_is_one_forward_leapfrog() {
        // M = 1, l = 0: the Metropolis-adjusted Langevin structure.
        let target = std_normal_target(2).unwrap();
        let mass = MassMatrix::identity(2);
        let x = StateVector::new(vec![0.2, -0.4]);
        let p = vec![0.3, 0.9];
        let (ps, traj) =
            hmc_trajectory_with_start(&x, p.clone(), 0, 0.05, 1, &mass, &target).unwrap();
        let manual = leapfrog_step(
            &HmcPhasePoint { position: x.clone(), momentum: p },
            0.05,
            &mass,
            &target,
        )
        .unwrap();
        assert_eq!(ps.points.len(), 2);
        assert_eq!(ps.current_slot, 0);
        assert_eq!(traj.phase_points[1].position, manual.position);
        assert_eq!(traj.endpoint_index, 1);
    }

    #[test]
    fn trajectory_scores_are_negative_hamiltonians() {
        let target = std_normal_target(2).unwrap();
        let mass = MassMatrix::identity(2);
        let x = StateVector::new(vec![0.8, 0.1]);
        let (ps, traj) =
            hmc_trajectory_with_start(&x, vec![0.4, -0.2], 2, 0.05, 5, &mass, &target).unwrap();
        for i in 0..=5 {
            let h = hamiltonian(&traj.phase_points[i], &mass, &target).unwrap();
            assert_abs_diff_eq!(ps.log_scores[i], -h, epsilon = 1e-14);
        }
    }

    #[test]
    fn version2_weights_ignore_start_relabeling() {
        // The H-softmax depends on the trajectory only through the per-point
        // Hamiltonians, not on which index is the current one.
        use crate::weights::version2_weights;
        let target = std_normal_target(2).unwrap();
        let mass = MassMatrix::identity(2);
        let x = StateVector::new(vec![0.8, 0.1]);
        let (ps, _) =
            hmc_trajectory_with_start(&x, vec![0.4, -0.2], 2, 0.05, 5, &mass, &target).unwrap();
        let w = version2_weights(&ps.log_scores).unwrap();
        let again = version2_weights(&ps.log_scores).unwrap();
        assert_eq!(w, again); // formula never reads current_slot
    }
}
