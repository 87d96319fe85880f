//! Sampler configuration: the full set of run parameters, validation rules,
//! and the flat `key = value` config-file format used by the CLI.

use crate::error::{Error, Result};
use crate::kernels::KernelSpec;
use crate::propagation::PropagationKind;
use crate::targets::TargetSpec;
use crate::weights::WeightScheme;

/// Which chain driver to run.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Algorithm {
    /// Weighted estimator over all proposed points.
    Lwmcmc,
    /// The resampling baseline: N points drawn per iteration with the stored
    /// weights.
    Resampled,
}

impl Algorithm {
    pub fn label(&self) -> &'static str {
        match self {
            Algorithm::Lwmcmc => "lwmcmc",
            Algorithm::Resampled => "resampled",
        }
    }
}

/// Where the chain starts.
#[derive(Clone, Debug, PartialEq)]
pub enum InitSpec {
    /// The origin; default for the standard normal target.
    Origin,
    /// The point (1, 1) on the ridge `y = theta z`; default for the
    /// indirect-observation target.
    Ridge,
    /// Explicit coordinates.
    Coords(Vec<f64>),
}

/// Full configuration of one sampler run.
#[derive(Clone, Debug)]
pub struct SamplerConfig {
    /// Kept iterations.
    pub n: usize,
    /// Proposals per iteration (leapfrog steps for the HMC kernel).
    pub m: usize,
    /// Stored weighting scheme.
    pub nu: WeightScheme,
    /// Scheme used by the weighted draw, when it differs from `nu`.
    pub propagate_nu: Option<WeightScheme>,
    pub kernel: KernelSpec,
    pub propagation: PropagationKind,
    /// Resample count N (resampled algorithm only).
    pub resample_n: usize,
    pub target: TargetSpec,
    pub seed: u64,
    /// Iterations discarded before records are kept.
    pub burnin: usize,
    /// Initial state; `None` resolves to the target's default.
    pub init: Option<InitSpec>,
    pub algorithm: Algorithm,
}

impl SamplerConfig {
    /// A config with conventional defaults: burn-in n/10, version-2 stored
    /// weights, the LWMCMC driver, and the target's default initial state.
    pub fn new(
        target: TargetSpec,
        kernel: KernelSpec,
        propagation: PropagationKind,
        n: usize,
        m: usize,
        seed: u64,
    ) -> Self {
        SamplerConfig {
            n,
            m,
            nu: WeightScheme::NuInf,
            propagate_nu: None,
            kernel,
            propagation,
            resample_n: 1,
            target,
            seed,
            burnin: n / 10,
            init: None,
            algorithm: Algorithm::Lwmcmc,
        }
    }

    #[cfg(test)]
    pub(crate) fn test_default() -> Self {
        SamplerConfig::new(
            TargetSpec::StdNormal { dim: 1 },
            KernelSpec::RandomWalk { lambda: 1.0 },
            PropagationKind::MhStep,
            10,
            1,
            0,
        )
    }

    /// The scheme the weighted draw uses: `propagate_nu` if set, otherwise
    /// the stored scheme.
    pub fn draw_scheme(&self) -> WeightScheme {
        self.propagate_nu.unwrap_or(self.nu)
    }

    /// Resolve the initial state for the configured target.
    pub fn initial_state(&self) -> Result<Vec<f64>> {
        let dim = self.target.dim();
        let init = self.init.clone().unwrap_or(match self.target {
            TargetSpec::StdNormal { .. } => InitSpec::Origin,
            TargetSpec::IndirectObs { .. } => InitSpec::Ridge,
        });
        match init {
            InitSpec::Origin => Ok(vec![0.0; dim]),
            InitSpec::Ridge => match self.target {
                TargetSpec::IndirectObs { .. } => Ok(vec![1.0, 1.0]),
                _ => Err(Error::Config(
                    "init = ridge is only defined for the indirect_obs target".into(),
                )),
            },
            InitSpec::Coords(c) => {
                if c.len() != dim {
                    return Err(Error::Config(format!(
                        "init has {} coordinates, target dimension is {dim}",
                        c.len()
                    )));
                }
                Ok(c)
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 1 {
            return Err(Error::Config("n must be >= 1".into()));
        }
        if self.m < 1 {
            return Err(Error::Config("M must be >= 1".into()));
        }
        if self.resample_n < 1 {
            return Err(Error::Config("N must be >= 1".into()));
        }
        match self.kernel {
            KernelSpec::RandomWalk { lambda } => {
                if !(lambda > 0.0) {
                    return Err(Error::Config("lambda must be > 0".into()));
                }
            }
            KernelSpec::Hmc { delta, .. } => {
                if !(delta > 0.0) {
                    return Err(Error::Config("delta must be > 0".into()));
                }
            }
        }
        match self.target {
            TargetSpec::StdNormal { dim } => {
                if dim < 1 {
                    return Err(Error::Config("dim must be >= 1".into()));
                }
            }
            TargetSpec::IndirectObs { sigma, .. } => {
                if !(sigma > 0.0) {
                    return Err(Error::Config("sigma must be > 0".into()));
                }
            }
        }
        if let WeightScheme::Nu(nu) = self.nu {
            if nu < 1 {
                return Err(Error::Config("nu must be >= 1".into()));
            }
            if nu >= 2 && self.m != 1 {
                return Err(Error::Config(
                    "nu >= 2 is only defined for M = 1 (pairwise weights)".into(),
                ));
            }
        }
        match self.propagation {
            PropagationKind::MhStep => {
                if self.m != 1 || !matches!(self.kernel, KernelSpec::RandomWalk { .. }) {
                    return Err(Error::Config(
                        "propagation = mh requires kernel = rw with M = 1".into(),
                    ));
                }
            }
            PropagationKind::HmcEndpoint => {
                if !matches!(self.kernel, KernelSpec::Hmc { .. }) {
                    return Err(Error::Config(
                        "propagation = hmc_endpoint requires kernel = hmc".into(),
                    ));
                }
            }
            PropagationKind::WeightedDraw => {
                if self.draw_scheme() == WeightScheme::OneHot {
                    return Err(Error::Config(
                        "weighted_draw needs a score-based scheme (set propagate_nu)".into(),
                    ));
                }
            }
        }
        if self.propagate_nu.is_some() && self.propagation != PropagationKind::WeightedDraw {
            return Err(Error::Config(
                "propagate_nu only applies to propagation = weighted_draw".into(),
            ));
        }
        if let Some(WeightScheme::Nu(nu)) = self.propagate_nu {
            if nu != 1 {
                return Err(Error::Config("propagate_nu must be 1 or inf".into()));
            }
        }
        if let Some(WeightScheme::OneHot) = self.propagate_nu {
            return Err(Error::Config("propagate_nu must be 1 or inf".into()));
        }
        Ok(())
    }

    /// Parse the flat `key = value` config format (one pair per line, `#`
    /// comments). Unknown keys are rejected with the offending name.
    pub fn parse_kv(text: &str, path: &str) -> Result<Self> {
        let mut kv = std::collections::BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
                path: path.into(),
                line: idx + 1,
                msg: format!("expected key = value, got `{line}`"),
            })?;
            kv.insert(key.trim().to_string(), (value.trim().to_string(), idx + 1));
        }

        let lookup = |key: &str| kv.get(key).map(|(v, _)| v.clone());
        let parse_f64 = |key: &str| -> Result<Option<f64>> {
            match kv.get(key) {
                None => Ok(None),
                Some((v, line)) => v.parse::<f64>().map(Some).map_err(|_| Error::Parse {
                    path: path.into(),
                    line: *line,
                    msg: format!("key `{key}`: invalid number `{v}`"),
                }),
            }
        };
        let parse_usize = |key: &str| -> Result<Option<usize>> {
            match kv.get(key) {
                None => Ok(None),
                Some((v, line)) => v.parse::<usize>().map(Some).map_err(|_| Error::Parse {
                    path: path.into(),
                    line: *line,
                    msg: format!("key `{key}`: invalid integer `{v}`"),
                }),
            }
        };

        let known = [
            "target", "dim", "y", "sigma", "kernel", "lambda", "delta", "steps", "mass",
            "jitter", "M", "nu", "propagation", "propagate_nu", "n", "seed", "burnin", "init",
            "algorithm", "N",
        ];
        for (key, (_, line)) in &kv {
            if !known.contains(&key.as_str()) {
                return Err(Error::Parse {
                    path: path.into(),
                    line: *line,
                    msg: format!("unknown key `{key}`"),
                });
            }
        }

        let target = match lookup("target").as_deref() {
            Some("std_normal") => TargetSpec::StdNormal {
                dim: parse_usize("dim")?.unwrap_or(2),
            },
            Some("indirect_obs") => TargetSpec::IndirectObs {
                y: parse_f64("y")?.unwrap_or(1.0),
                sigma: parse_f64("sigma")?
                    .ok_or_else(|| Error::Config("indirect_obs requires key `sigma`".into()))?,
            },
            Some(other) => return Err(Error::Config(format!("unknown target `{other}`"))),
            None => return Err(Error::Config("missing key `target`".into())),
        };

        let jitter = match lookup("jitter").as_deref() {
            None | Some("true") => true,
            Some("false") => false,
            Some(other) => {
                return Err(Error::Config(format!(
                    "key `jitter`: expected true or false, got `{other}`"
                )))
            }
        };
        let (kernel, m) = match lookup("kernel").as_deref() {
            Some("rw") => {
                let lambda = parse_f64("lambda")?
                    .ok_or_else(|| Error::Config("kernel = rw requires key `lambda`".into()))?;
                let m = parse_usize("M")?.unwrap_or(1);
                (KernelSpec::RandomWalk { lambda }, m)
            }
            Some("hmc") => {
                let delta = parse_f64("delta")?
                    .ok_or_else(|| Error::Config("kernel = hmc requires key `delta`".into()))?;
                let steps = parse_usize("steps")?
                    .ok_or_else(|| Error::Config("kernel = hmc requires key `steps`".into()))?;
                if let Some(mass) = lookup("mass") {
                    if mass != "identity" {
                        return Err(Error::Config(
                            "only mass = identity is configurable".into(),
                        ));
                    }
                }
                (
                    KernelSpec::Hmc {
                        delta,
                        jitter_start: jitter,
                    },
                    steps,
                )
            }
            Some(other) => return Err(Error::Config(format!("unknown kernel `{other}`"))),
            None => return Err(Error::Config("missing key `kernel`".into())),
        };

        let nu = match lookup("nu") {
            Some(v) => WeightScheme::parse(&v)?,
            None => WeightScheme::NuInf,
        };
        let propagate_nu = match lookup("propagate_nu") {
            Some(v) => Some(WeightScheme::parse(&v)?),
            None => None,
        };

        let propagation = match lookup("propagation").as_deref() {
            Some("mh") => PropagationKind::MhStep,
            Some("weighted_draw") => PropagationKind::WeightedDraw,
            Some("hmc_endpoint") => PropagationKind::HmcEndpoint,
            Some(other) => {
                return Err(Error::Config(format!("unknown propagation `{other}`")))
            }
            None => return Err(Error::Config("missing key `propagation`".into())),
        };

        let algorithm = match lookup("algorithm").as_deref() {
            None | Some("lwmcmc") => Algorithm::Lwmcmc,
            Some("resampled") => Algorithm::Resampled,
            Some(other) => return Err(Error::Config(format!("unknown algorithm `{other}`"))),
        };

        let n = parse_usize("n")?.ok_or_else(|| Error::Config("missing key `n`".into()))?;
        let init = match lookup("init").as_deref() {
            None => None,
            Some("origin") => Some(InitSpec::Origin),
            Some("ridge") => Some(InitSpec::Ridge),
            Some(coords) => {
                let parsed: std::result::Result<Vec<f64>, _> =
                    coords.split(',').map(|c| c.trim().parse::<f64>()).collect();
                Some(InitSpec::Coords(parsed.map_err(|_| {
                    Error::Config(format!("key `init`: invalid coordinates `{coords}`"))
                })?))
            }
        };

        let config = SamplerConfig {
            n,
            m,
            nu,
            propagate_nu,
            kernel,
            propagation,
            resample_n: parse_usize("N")?.unwrap_or(1),
            target,
            seed: parse_usize("seed")?.unwrap_or(0) as u64,
            burnin: parse_usize("burnin")?.unwrap_or(n / 10),
            init,
            algorithm,
        };
        config.validate()?;
        Ok(config)
    }
}
