//! Built-in target distributions: a d-dimensional standard normal and the
//! indirect-observation conditional density, each with an analytic gradient.
//!
//! Log-densities are unnormalized; all downstream code works purely with
//! log-density differences.

use statrs::distribution::{ContinuousCDF, Normal};

use crate::core::StateVector;
use crate::error::{Error, Result};

/// An unnormalized log-density on the sample space, with an optional
/// gradient (required by the HMC kernel).
///
/// Evaluators are pure and callable concurrently from many threads.
pub trait Target: Sync {
    fn dim(&self) -> usize;

    /// Unnormalized log pi(x).
    fn log_density(&self, x: &StateVector) -> f64;

    /// Gradient of `log_density`, if available.
    fn grad_log_density(&self, _x: &StateVector) -> Option<Vec<f64>> {
        None
    }

    /// Exact marginal quantile of coordinate `coord` at probability `p`,
    /// when known in closed form. Used by the invariance test harness.
    fn marginal_quantile(&self, _coord: usize, _p: f64) -> Option<f64> {
        None
    }
}

/// The d-dimensional standard normal: `log pi(x) = -||x||^2 / 2`.
#[derive(Clone, Debug)]
pub struct StdNormal {
    dim: usize,
}

pub fn std_normal_target(dim: usize) -> Result<StdNormal> {
    if dim < 1 {
        return Err(Error::Config("std_normal requires dim >= 1".into()));
    }
    Ok(StdNormal { dim })
}

impl Target for StdNormal {
    fn dim(&self) -> usize {
        self.dim
    }

    fn log_density(&self, x: &StateVector) -> f64 {
        -0.5 * x.coords().iter().map(|c| c * c).sum::<f64>()
    }

    fn grad_log_density(&self, x: &StateVector) -> Option<Vec<f64>> {
        Some(x.coords().iter().map(|c| -c).collect())
    }

    fn marginal_quantile(&self, _coord: usize, p: f64) -> Option<f64> {
        let n = Normal::new(0.0, 1.0).expect("unit normal");
        Some(n.inverse_cdf(p))
    }
}

/// Parameters of the indirect observation model `y = theta z + eps`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IndirectObsParams {
    /// Observed value of y.
    pub y_obs: f64,
    /// Observation noise standard deviation, > 0.
    pub sigma: f64,
}

/// The conditional density `pi(z, theta | y)` of the indirect observation
/// model under a flat prior on theta:
///
/// `log pi(z, theta) = -(y - theta z)^2 / (2 sigma^2) - (z - theta)^2 / 2`
///
/// For small sigma most of the mass concentrates around the curve
/// `y = theta z`, which makes sampling hard. The state is `(z, theta)`.
#[derive(Clone, Debug)]
pub struct IndirectObs {
    params: IndirectObsParams,
}

pub fn indirect_obs_target(params: IndirectObsParams) -> Result<IndirectObs> {
    if !(params.sigma > 0.0) {
        return Err(Error::Config("indirect_obs requires sigma > 0".into()));
    }
    Ok(IndirectObs { params })
}

impl IndirectObs {
    pub fn params(&self) -> IndirectObsParams {
        self.params
    }
}

impl Target for IndirectObs {
    fn dim(&self) -> usize {
        2
    }

    fn log_density(&self, x: &StateVector) -> f64 {
        let (z, theta) = (x[0], x[1]);
        let IndirectObsParams { y_obs, sigma } = self.params;
        let resid = y_obs - theta * z;
        -resid * resid / (2.0 * sigma * sigma) - (z - theta) * (z - theta) / 2.0
    }

    fn grad_log_density(&self, x: &StateVector) -> Option<Vec<f64>> {
        let (z, theta) = (x[0], x[1]);
        let IndirectObsParams { y_obs, sigma } = self.params;
        let s2 = sigma * sigma;
        let resid = y_obs - theta * z;
        let dz = theta * resid / s2 - (z - theta);
        let dtheta = z * resid / s2 + (z - theta);
        Some(vec![dz, dtheta])
    }
}

/// Compile-time set of targets selectable from a config.
#[derive(Clone, Debug)]
pub enum BuiltinTarget {
    StdNormal(StdNormal),
    IndirectObs(IndirectObs),
}

impl Target for BuiltinTarget {
    fn dim(&self) -> usize {
        match self {
            BuiltinTarget::StdNormal(t) => t.dim(),
            BuiltinTarget::IndirectObs(t) => t.dim(),
        }
    }

    fn log_density(&self, x: &StateVector) -> f64 {
        match self {
            BuiltinTarget::StdNormal(t) => t.log_density(x),
            BuiltinTarget::IndirectObs(t) => t.log_density(x),
        }
    }

    fn grad_log_density(&self, x: &StateVector) -> Option<Vec<f64>> {
        match self {
            BuiltinTarget::StdNormal(t) => t.grad_log_density(x),
            BuiltinTarget::IndirectObs(t) => t.grad_log_density(x),
        }
    }

    fn marginal_quantile(&self, coord: usize, p: f64) -> Option<f64> {
        match self {
            BuiltinTarget::StdNormal(t) => t.marginal_quantile(coord, p),
            BuiltinTarget::IndirectObs(t) => t.marginal_quantile(coord, p),
        }
    }
}

/// Config-level description of a target.
#[derive(Clone, Debug, PartialEq)]
pub enum TargetSpec {
    StdNormal { dim: usize },
    IndirectObs { y: f64, sigma: f64 },
}

impl TargetSpec {
    pub fn build(&self) -> Result<BuiltinTarget> {
        match *self {
            TargetSpec::StdNormal { dim } => {
                Ok(BuiltinTarget::StdNormal(std_normal_target(dim)?))
            }
            TargetSpec::IndirectObs { y, sigma } => Ok(BuiltinTarget::IndirectObs(
                indirect_obs_target(IndirectObsParams { y_obs: y, sigma })?,
            )),
        }
    }

    pub fn dim(&self) -> usize {
        match *self {
            TargetSpec::StdNormal { dim } => dim,
            TargetSpec::IndirectObs { .. } => 2,
        }
    }
}

impl std::fmt::Display for TargetSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            TargetSpec::StdNormal { dim } => write!(f, "std_normal(dim={dim})"),
            TargetSpec::IndirectObs { y, sigma } => {
                write!(f, "indirect_obs(y={y},sigma={sigma})")
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn std_normal_at_origin() {
        let t = std_normal_target(2).unwrap();
        let x = StateVector::new(vec![0.0, 0.0]);
        assert_eq!(t.log_density(&x), 0.0);
        assert_eq!(t.grad_log_density(&x).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn std_normal_unit_point() {
        let t = std_normal_target(2).unwrap();
        let x = StateVector::new(vec![1.0, 0.0]);
        assert_eq!(t.log_density(&x), -0.5);
        assert_eq!(t.grad_log_density(&x).unwrap(), vec![-1.0, 0.0]);
    }

    #[test]
    fn std_normal_rejects_dim_zero() {
        assert!(std_normal_target(0).is_err());
    }

    #[test]
    fn std_normal_symmetries() {
        let t = std_normal_target(3).unwrap();
        let a = StateVector::new(vec![0.3, -1.2, 2.0]);
        let perm = StateVector::new(vec![2.0, 0.3, -1.2]);
        let flip = StateVector::new(vec![-0.3, 1.2, -2.0]);
        // permutation changes summation order, so compare up to roundoff;
        // sign flips square away exactly
        assert_relative_eq!(t.log_density(&a), t.log_density(&perm), epsilon = 1e-14);
        assert_eq!(t.log_density(&a), t.log_density(&flip));
    }

    #[test]
    fn indirect_obs_zero_residual_point() {
        let t = indirect_obs_target(IndirectObsParams { y_obs: 1.0, sigma: 0.1 }).unwrap();
        let x = StateVector::new(vec![1.0, 1.0]);
        assert_eq!(t.log_density(&x), 0.0);
        assert_eq!(t.grad_log_density(&x).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn indirect_obs_mass_concentrates_on_curve() {
        // On-curve beats off-curve at matched z: (2, 0.5) lies on y = theta z,
        // (2, 0.9) does not.
        let t = indirect_obs_target(IndirectObsParams { y_obs: 1.0, sigma: 0.1 }).unwrap();
        let on = StateVector::new(vec![2.0, 0.5]);
        let off = StateVector::new(vec![2.0, 0.9]);
        assert!(t.log_density(&on) - t.log_density(&off) > 0.0);
    }

    #[test]
    fn indirect_obs_rejects_bad_sigma() {
        assert!(indirect_obs_target(IndirectObsParams { y_obs: 1.0, sigma: 0.0 }).is_err());
        assert!(indirect_obs_target(IndirectObsParams { y_obs: 1.0, sigma: -1.0 }).is_err());
    }

    #[test]
    fn std_normal_quantiles_are_symmetric() {
        let t = std_normal_target(2).unwrap();
        let q1 = t.marginal_quantile(0, 0.975).unwrap();
        let q2 = t.marginal_quantile(0, 0.025).unwrap();
        assert_relative_eq!(q1, -q2, epsilon = 1e-12);
        assert_relative_eq!(q1, 1.959963984540054, epsilon = 1e-9);
    }

    #[test]
    fn spec_builds_and_displays() {
        let spec = TargetSpec::IndirectObs { y: 1.0, sigma: 0.1 };
        assert_eq!(spec.to_string(), "indirect_obs(y=1,sigma=0.1)");
        assert_eq!(spec.build().unwrap().dim(), 2);
    }
}
