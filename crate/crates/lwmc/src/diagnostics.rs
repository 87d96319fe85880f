//! Effective sample size for weighted chains: the iteration-mean series, the
//! long-run variance via the spectral density at frequency zero, and the
//! moment estimator of the target variance.
//!
//! For one-hot weights the ESS reduces exactly to the classic
//! `n / (1 + 2 sum rho_k)` of the propagating chain: both variance moments
//! are computed in raw-moment form over identical summation orders, so the
//! variance ratio is bit-exactly 1 in that case.

use crate::core::{ChainOutput, EstimandFunction};
use crate::error::{Error, Result};

/// How the spectral density at frequency zero is estimated.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SpectralMethod {
    /// Bartlett lag window with bandwidth B (default `floor(n^(1/3))`).
    Bartlett,
    /// Geyer-style initial positive sequence truncation; robust on
    /// super-efficient (negatively correlated) chains.
    InitialSequence,
}

impl SpectralMethod {
    pub fn label(&self) -> &'static str {
        match self {
            SpectralMethod::Bartlett => "bartlett",
            SpectralMethod::InitialSequence => "initseq",
        }
    }
}

/// The ESS report for one estimand.
#[derive(Clone, Debug)]
pub struct EssReport {
    pub n: usize,
    /// The per-iteration weighted means the estimator averages.
    pub bar_series: Vec<f64>,
    /// Moment estimate of `Var(bar x)`.
    pub var_bar: f64,
    /// Moment estimate of the target variance of `h` under pi.
    pub sigma2: f64,
    /// Estimate of `1 + 2 sum gamma_k`; may fall below 1 when the series is
    /// negatively correlated (super-efficiency).
    pub iact: f64,
    pub ess: f64,
    pub method: SpectralMethod,
    /// Bartlett bandwidth, or the truncation lag the initial sequence
    /// stopped at.
    pub bandwidth: usize,
}

/// The series `bar h^(j) = sum_i w(x_i^j) h(x_i^j)`.
///
/// Its mean equals [`crate::core::estimate_mean`] exactly.
pub fn iteration_means(chain: &ChainOutput, h: &EstimandFunction) -> Vec<f64> {
    chain.records.iter().map(|r| r.weighted_mean(h)).collect()
}

/// Integer cube root (largest k with k^3 <= n), used for the default
/// Bartlett bandwidth without trusting float rounding.
fn icbrt(n: usize) -> usize {
    let mut k = (n as f64).cbrt().round() as usize;
    while k.pow(3) > n {
        k -= 1;
    }
    while (k + 1).pow(3) <= n {
        k += 1;
    }
    k
}

/// Biased autocovariance at lag `k` (normalized by n).
fn autocovariance(series: &[f64], mean: f64, k: usize) -> f64 {
    let n = series.len();
    let mut acc = 0.0;
    for t in 0..n - k {
        acc += (series[t] - mean) * (series[t + k] - mean);
    }
    acc / n as f64
}

/// Estimate the integrated autocorrelation `1 + 2 sum gamma_k` of a series
/// from its spectral density at frequency zero. Returns the estimate and the
/// bandwidth / truncation lag used.
pub fn spectral_zero_with_bandwidth(
    series: &[f64],
    method: SpectralMethod,
    bandwidth: Option<usize>,
) -> Result<(f64, usize)> {
    let n = series.len();
    if n < 10 {
        return Err(Error::SeriesTooShort { len: n, min: 10 });
    }
    let mean = series.iter().sum::<f64>() / n as f64;
    let gamma0 = autocovariance(series, mean, 0);
    if gamma0 <= 0.0 {
        return Err(Error::DegenerateSeries);
    }
    match method {
        SpectralMethod::Bartlett => {
            let b = bandwidth.unwrap_or_else(|| icbrt(n)).clamp(1, n - 2);
            let bf = (b + 1) as f64;
            let mut acc = 0.0;
            for k in 1..=b {
                let taper = 1.0 - k as f64 / bf;
                acc += taper * autocovariance(series, mean, k);
            }
            let iact = 1.0 + 2.0 * acc / gamma0;
            if iact <= 0.0 {
                return Err(Error::NonPositiveVariance(iact));
            }
            Ok((iact, b))
        }
        SpectralMethod::InitialSequence => {
            // Sum adjacent-pair autocovariances while positive:
            // sigma^2 = -gamma_0 + 2 * sum_m (gamma_{2m} + gamma_{2m+1}).
            let mut total = -gamma0;
            let mut m = 0usize;
            let mut lag_used = 0usize;
            loop {
                let k_even = 2 * m;
                if k_even >= n - 1 {
                    break;
                }
                let g_even = autocovariance(series, mean, k_even);
                let k_odd = 2 * m + 1;
                let g_odd = if k_odd <= n - 2 {
                    autocovariance(series, mean, k_odd)
                } else {
                    0.0
                };
                let pair = g_even + g_odd;
                if pair <= 0.0 {
                    break;
                }
                total += 2.0 * pair;
                lag_used = k_odd.min(n - 2);
                m += 1;
            }
            let iact = total / gamma0;
            if iact <= 0.0 {
                return Err(Error::NonPositiveVariance(iact));
            }
            Ok((iact, lag_used))
        }
    }
}

/// [`spectral_zero_with_bandwidth`] returning just the estimate.
pub fn spectral_zero(
    series: &[f64],
    method: SpectralMethod,
    bandwidth: Option<usize>,
) -> Result<f64> {
    spectral_zero_with_bandwidth(series, method, bandwidth).map(|(iact, _)| iact)
}

/// The ESS of a weighted chain for the estimand `h`:
///
/// `ess = n / ((var_bar / sigma2) * iact)`
///
/// with `var_bar` the moment variance of the iteration-mean series, `sigma2`
/// the weighted all-points moment estimate of the target variance, and
/// `iact` from [`spectral_zero`] on the iteration-mean series.
pub fn ess_with_bandwidth(
    chain: &ChainOutput,
    h: &EstimandFunction,
    method: SpectralMethod,
    bandwidth: Option<usize>,
) -> Result<EssReport> {
    let n = chain.n();
    if n < 100 {
        return Err(Error::SeriesTooShort { len: n, min: 100 });
    }
    let bar_series = iteration_means(chain, h);
    let nf = n as f64;
    let mu = bar_series.iter().sum::<f64>() / nf;

    // Raw-moment forms on identical summation orders: with one-hot weights
    // the two sums coincide term by term, making var_bar == sigma2 exactly.
    let var_bar = bar_series.iter().map(|b| b * b).sum::<f64>() / nf - mu * mu;
    let sigma2 =
        chain.records.iter().map(|r| r.weighted_mean_sq(h)).sum::<f64>() / nf - mu * mu;
    if sigma2 <= 0.0 {
        return Err(Error::NonPositiveVariance(sigma2));
    }

    let (iact, used_bandwidth) = spectral_zero_with_bandwidth(&bar_series, method, bandwidth)?;
    let ess = nf / ((var_bar / sigma2) * iact);
    Ok(EssReport {
        n,
        bar_series,
        var_bar,
        sigma2,
        iact,
        ess,
        method,
        bandwidth: used_bandwidth,
    })
}

/// [`ess_with_bandwidth`] with the method's default bandwidth.
pub fn ess(chain: &ChainOutput, h: &EstimandFunction, method: SpectralMethod) -> Result<EssReport> {
    ess_with_bandwidth(chain, h, method, None)
}

/// Fraction of iterations whose propagated state differs from the current
/// state. Returns NaN on an empty chain.
pub fn acceptance_rate(chain: &ChainOutput) -> f64 {
    if chain.records.is_empty() {
        return f64::NAN;
    }
    let accepted = chain.records.iter().filter(|r| r.accepted).count();
    accepted as f64 / chain.n() as f64
}
