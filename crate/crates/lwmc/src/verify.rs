//! Independent brute-force oracles used by the test suites and the CLI:
//! finite-difference gradients, naive matrix powers, the DKW bound, and the
//! chi-square / two-sample invariance harnesses.

use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::core::StateVector;
use crate::error::{Error, Result};
use crate::targets::Target;

/// Default step for central differences; balances truncation against
/// roundoff at double precision.
pub const DEFAULT_FD_EPS: f64 = 1e-5;

/// Outcome of an empirical invariance test.
#[derive(Clone, Debug)]
pub struct InvarianceTestResult {
    /// Worst per-marginal statistic (chi-square) or max CDF distance
    /// (two-sample).
    pub statistic: f64,
    /// Degrees of freedom of the reference distribution (0 for the
    /// two-sample distance check).
    pub dof: usize,
    pub threshold: f64,
    pub pass: bool,
    /// The effective-sample correction factor that scaled the statistic.
    pub ess_correction: f64,
}

/// Central finite differences of `f` at `x`, one coordinate at a time.
pub fn finite_diff_gradient<F>(f: F, x: &StateVector, eps: f64) -> Vec<f64>
where
    F: Fn(&StateVector) -> f64,
{
    let d = x.dim();
    let mut grad = Vec::with_capacity(d);
    for i in 0..d {
        let mut hi = x.clone();
        let mut lo = x.clone();
        hi.0[i] += eps;
        lo.0[i] -= eps;
        grad.push((f(&hi) - f(&lo)) / (2.0 * eps));
    }
    grad
}

/// `P^nu` by `nu - 1` sequential naive multiplications; the oracle for the
/// repeated-squaring implementation. Takes a raw matrix so the oracle stays
/// independent of the weights module.
pub fn brute_matrix_power(p: &[[f64; 2]; 2], nu: u64) -> Result<[[f64; 2]; 2]> {
    if nu < 1 {
        return Err(Error::InvalidNu);
    }
    let base = *p;
    let mut acc = base;
    for _ in 1..nu {
        let mut next = [[0.0; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                next[i][j] = acc[i][0] * base[0][j] + acc[i][1] * base[1][j];
            }
        }
        acc = next;
    }
    Ok(acc)
}

/// The Dvoretzky-Kiefer-Wolfowitz bound: with probability at least
/// `1 - alpha`, the empirical CDF of `N` i.i.d. draws deviates from the true
/// CDF by at most `sqrt(ln(2/alpha) / (2N))` uniformly.
pub fn dkw_epsilon(n: usize, alpha: f64) -> Result<f64> {
    if n < 1 {
        return Err(Error::Config("dkw_epsilon requires N >= 1".into()));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Config("dkw_epsilon requires alpha in (0, 1)".into()));
    }
    Ok(((2.0 / alpha).ln() / (2.0 * n as f64)).sqrt())
}

/// Per-marginal equiprobable-bin chi-square test of `samples` against the
/// target's exact marginals, with the Pearson statistic scaled by
/// `ess_hint / samples.len()` to correct for autocorrelation.
///
/// The reported statistic is the worst marginal; it is compared against the
/// chi-square 0.999 quantile with `bins - 1` degrees of freedom. Targets
/// without closed-form marginals must use [`invariance_two_sample`] instead.
pub fn invariance_chisq(
    samples: &[StateVector],
    target: &dyn Target,
    bins: usize,
    ess_hint: f64,
) -> Result<InvarianceTestResult> {
    if bins < 5 {
        return Err(Error::Config("invariance_chisq requires bins >= 5".into()));
    }
    if !(ess_hint > 0.0) {
        return Err(Error::Config("ess_hint must be > 0".into()));
    }
    let min = bins * 10;
    if samples.len() < min {
        return Err(Error::InsufficientSamples {
            got: samples.len(),
            min,
        });
    }
    let d = target.dim();
    let n = samples.len() as f64;
    let correction = (ess_hint / n).min(1.0);

    let mut worst = 0.0f64;
    for coord in 0..d {
        let edges: Vec<f64> = (1..bins)
            .map(|b| {
                target
                    .marginal_quantile(coord, b as f64 / bins as f64)
                    .ok_or(Error::NoMarginalQuantiles)
            })
            .collect::<Result<_>>()?;
        let mut counts = vec![0usize; bins];
        for s in samples {
            let v = s[coord];
            let bin = edges.partition_point(|&e| e < v);
            counts[bin] += 1;
        }
        let expected = n / bins as f64;
        let stat: f64 = counts
            .iter()
            .map(|&c| {
                let diff = c as f64 - expected;
                diff * diff / expected
            })
            .sum();
        worst = worst.max(stat * correction);
    }

    let dof = bins - 1;
    let threshold = ChiSquared::new(dof as f64)
        .expect("dof >= 4")
        .inverse_cdf(0.999);
    Ok(InvarianceTestResult {
        statistic: worst,
        dof,
        threshold,
        pass: worst <= threshold,
        ess_correction: correction,
    })
}

/// Max per-marginal two-sample CDF distance between `samples` and a
/// reference sample, with a DKW threshold at the effective sample counts.
///
/// Used for targets without closed-form marginals: the reference comes from
/// an independent, much longer chain. With confidence `1 - alpha` the
/// distance between the two empirical CDFs stays below
/// `eps(n_eff_a, alpha/2) + eps(n_eff_b, alpha/2)` when both draw from the
/// same law.
pub fn invariance_two_sample(
    samples: &[StateVector],
    reference: &[StateVector],
    ess_samples: f64,
    ess_reference: f64,
    alpha: f64,
) -> Result<InvarianceTestResult> {
    if samples.is_empty() || reference.is_empty() {
        return Err(Error::InsufficientSamples {
            got: samples.len().min(reference.len()),
            min: 1,
        });
    }
    let d = samples[0].dim();
    if reference[0].dim() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: reference[0].dim(),
        });
    }
    if !(ess_samples > 0.0) || !(ess_reference > 0.0) {
        return Err(Error::Config("effective sample sizes must be > 0".into()));
    }

    let mut worst = 0.0f64;
    for coord in 0..d {
        let mut a: Vec<f64> = samples.iter().map(|s| s[coord]).collect();
        let mut b: Vec<f64> = reference.iter().map(|s| s[coord]).collect();
        a.sort_by(|x, y| x.partial_cmp(y).expect("finite sample values"));
        b.sort_by(|x, y| x.partial_cmp(y).expect("finite sample values"));
        worst = worst.max(two_sample_ks_distance(&a, &b));
    }

    let n_a = (ess_samples.floor() as usize).max(1);
    let n_b = (ess_reference.floor() as usize).max(1);
    let threshold = dkw_epsilon(n_a, alpha / 2.0)? + dkw_epsilon(n_b, alpha / 2.0)?;
    Ok(InvarianceTestResult {
        statistic: worst,
        dof: 0,
        threshold,
        pass: worst <= threshold,
        ess_correction: ess_samples / samples.len() as f64,
    })
}

/// Kolmogorov-Smirnov sup distance between two sorted samples.
fn two_sample_ks_distance(a: &[f64], b: &[f64]) -> f64 {
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let mut i = 0usize;
    let mut j = 0usize;
    let mut max = 0.0f64;
    while i < a.len() && j < b.len() {
        if a[i] <= b[j] {
            i += 1;
        } else {
            j += 1;
        }
        let diff = (i as f64 / na - j as f64 / nb).abs();
        max = max.max(diff);
    }
    max
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{make_rng_stream, StreamRole};
    use crate::targets::{indirect_obs_target, std_normal_target, IndirectObsParams};
    use crate::weights::pair_transition_matrix;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    #[test]
    fn finite_diff_exact_for_quadratics() {
        let f = |x: &StateVector| -0.5 * x.coords().iter().map(|c| c * c).sum::<f64>();
        let x = StateVector::new(vec![0.7, -2.3, 1.1]);
        let grad = finite_diff_gradient(f, &x, DEFAULT_FD_EPS);
        for (g, c) in grad.iter().zip(x.coords()) {
            assert_abs_diff_eq!(*g, -c, epsilon = 1e-9);
        }
    }

    #[test]
    fn finite_diff_constant_is_zero() {
        let f = |_: &StateVector| 4.2;
        let x = StateVector::new(vec![1.0, 2.0]);
        assert_eq!(finite_diff_gradient(f, &x, DEFAULT_FD_EPS), vec![0.0, 0.0]);
    }

    fn check_grad(target: &dyn Target, points: &[StateVector]) {
        for x in points {
            let analytic = target.grad_log_density(x).unwrap();
            let numeric =
                finite_diff_gradient(|p| target.log_density(p), x, DEFAULT_FD_EPS);
            for (a, n) in analytic.iter().zip(&numeric) {
                let scale = a.abs().max(1.0);
                assert!(
                    (a - n).abs() / scale <= 1e-5,
                    "analytic {a} vs numeric {n} at {x:?}"
                );
            }
        }
    }

    #[test]
    fn gradients_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let pts: Vec<StateVector> = (0..20)
            .map(|_| {
                StateVector::new(vec![
                    rng.random::<f64>() * 4.0 - 2.0,
                    rng.random::<f64>() * 4.0 - 2.0,
                ])
            })
            .collect();
        check_grad(&std_normal_target(2).unwrap(), &pts);
        check_grad(
            &indirect_obs_target(IndirectObsParams { y_obs: 1.0, sigma: 0.1 }).unwrap(),
            &pts,
        );
    }

    #[test]
    fn brute_power_identity_cases() {
        let p = *pair_transition_matrix(0.0, -0.4).unwrap().entries();
        assert_eq!(brute_matrix_power(&p, 1).unwrap(), p);
        let id = [[1.0, 0.0], [0.0, 1.0]];
        for nu in [1u64, 5, 17] {
            assert_eq!(brute_matrix_power(&id, nu).unwrap(), id);
        }
        assert!(brute_matrix_power(&p, 0).is_err());
    }

    #[test]
    fn dkw_algebraic_simplification() {
        // alpha = 2/e^2 makes ln(2/alpha) = 2, so eps = 1/sqrt(N)
        let alpha = 2.0 * (-2.0f64).exp();
        for n in [1usize, 10, 1000] {
            let eps = dkw_epsilon(n, alpha).unwrap();
            assert_abs_diff_eq!(eps, 1.0 / (n as f64).sqrt(), epsilon = 1e-12);
        }
    }

    #[test]
    fn dkw_formula_value() {
        let eps = dkw_epsilon(1000, 0.05).unwrap();
        assert_abs_diff_eq!(eps, 0.04294695, epsilon = 1e-6);
    }

    #[test]
    fn dkw_strictly_decreasing_in_n() {
        let mut last = f64::INFINITY;
        for n in [1usize, 2, 5, 50, 500, 5000] {
            let eps = dkw_epsilon(n, 0.05).unwrap();
            assert!(eps < last);
            last = eps;
        }
    }

    #[test]
    fn chisq_positive_and_negative_controls() {
        let target = std_normal_target(2).unwrap();
        for seed in 0..10u64 {
            let mut rng = make_rng_stream(seed, 0, StreamRole::Propose);
            let exact: Vec<StateVector> = (0..100_000)
                .map(|_| {
                    StateVector::new(vec![rng.sample(StandardNormal), rng.sample(StandardNormal)])
                })
                .collect();
            let res = invariance_chisq(&exact, &target, 20, exact.len() as f64).unwrap();
            assert!(res.pass, "seed {seed}: exact draws failed ({})", res.statistic);

            let shifted: Vec<StateVector> = exact
                .iter()
                .map(|s| StateVector::new(vec![s[0] + 0.5, s[1] + 0.5]))
                .collect();
            let res = invariance_chisq(&shifted, &target, 20, shifted.len() as f64).unwrap();
            assert!(!res.pass, "seed {seed}: shifted draws passed");
        }
    }

    #[test]
    fn chisq_minimum_sample_boundary() {
        let target = std_normal_target(1).unwrap();
        let mut rng = make_rng_stream(2, 0, StreamRole::Propose);
        let mut make = |k: usize| -> Vec<StateVector> {
            (0..k)
                .map(|_| StateVector::new(vec![rng.sample(StandardNormal)]))
                .collect()
        };
        let just_enough = make(50);
        assert!(invariance_chisq(&just_enough, &target, 5, 50.0).is_ok());
        let too_few = make(49);
        assert!(invariance_chisq(&too_few, &target, 5, 49.0).is_err());
        assert!(invariance_chisq(&just_enough, &target, 4, 50.0).is_err());
    }

    #[test]
    fn chisq_requires_marginal_quantiles() {
        let target = indirect_obs_target(IndirectObsParams { y_obs: 1.0, sigma: 0.1 }).unwrap();
        let samples: Vec<StateVector> =
            (0..100).map(|i| StateVector::new(vec![i as f64, i as f64])).collect();
        assert!(matches!(
            invariance_chisq(&samples, &target, 5, 100.0),
            Err(Error::NoMarginalQuantiles)
        ));
    }

    #[test]
    fn two_sample_controls() {
        let mut rng = make_rng_stream(4, 0, StreamRole::Propose);
        let draw = |rng: &mut ChaCha8Rng, n: usize, shift: f64| -> Vec<StateVector> {
            (0..n)
                .map(|_| StateVector::new(vec![rng.sample::<f64, _>(StandardNormal) + shift]))
                .collect()
        };
        let a = draw(&mut rng, 20_000, 0.0);
        let b = draw(&mut rng, 20_000, 0.0);
        let same = invariance_two_sample(&a, &b, 20_000.0, 20_000.0, 0.001).unwrap();
        assert!(same.pass, "same-law samples failed: {}", same.statistic);
        let c = draw(&mut rng, 20_000, 0.25);
        let diff = invariance_two_sample(&a, &c, 20_000.0, 20_000.0, 0.001).unwrap();
        assert!(!diff.pass, "shifted samples passed: {}", diff.statistic);
    }

    #[test]
    fn ks_distance_on_disjoint_samples_is_one() {
        let a = vec![1.0, 2.0, 3.0];
        let b = vec![10.0, 11.0];
        assert_eq!(two_sample_ks_distance(&a, &b), 1.0);
    }
}
