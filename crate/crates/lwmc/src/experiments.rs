//! The three built-in experiments behind the CLI: the intro normal-target
//! comparison, the random-walk run on the indirect-observation target, and
//! the HMC trajectory-length table with its resampling baseline.
//!
//! Each experiment re-weights a single propagating chain under several
//! schemes where possible, mirroring how the method is meant to be
//! evaluated: same samples, different weights. ESS uses the initial-sequence
//! spectral estimator, which stays reliable both for slow-mixing random-walk
//! chains and for the negatively correlated (super-efficient) HMC chains.

use rayon::prelude::*;

use crate::config::{Algorithm, SamplerConfig};
use crate::core::{ChainOutput, EstimandFunction};
use crate::diagnostics::{acceptance_rate, ess, EssReport, SpectralMethod};
use crate::error::Result;
use crate::kernels::KernelSpec;
use crate::propagation::PropagationKind;
use crate::sampler::{induced_weight_chain, reweight_chain, run_lwmcmc, run_resampled};
use crate::targets::TargetSpec;
use crate::weights::WeightScheme;

pub const TABLE1_M_GRID: [usize; 5] = [5, 30, 60, 90, 240];
pub const TABLE1_N_GRID: [usize; 5] = [1, 10, 50, 200, 1000];

/// Which experiment to run.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExperimentName {
    /// 2-d standard normal, RW MH with proposal covariance 1.2^2 I, n = 10000;
    /// one chain per seed re-weighted as one-hot / version 1 / version 2.
    IntroNormal,
    /// Indirect-observation target, RW MH with lambda = 0.45, n = 10000;
    /// same three re-weightings.
    RwIndirect,
    /// Indirect-observation target, HMC trajectories with delta = 0.05 and
    /// identity mass, n = 1000, over the trajectory-length grid, against
    /// plain HMC and the resampling baseline over its N grid.
    HmcTable1,
}

impl ExperimentName {
    pub fn label(&self) -> &'static str {
        match self {
            ExperimentName::IntroNormal => "intro",
            ExperimentName::RwIndirect => "rw",
            ExperimentName::HmcTable1 => "table1",
        }
    }
}

/// Optional overrides applied to every run of an experiment.
#[derive(Clone, Copy, Debug, Default)]
pub struct ConfigOverrides {
    pub n: Option<usize>,
    pub burnin: Option<usize>,
}

/// A fully specified experiment: name, replication seeds, and overrides.
#[derive(Clone, Debug)]
pub struct ExperimentSpec {
    pub name: ExperimentName,
    pub replications: usize,
    pub seeds: Vec<u64>,
    pub overrides: ConfigOverrides,
}

impl ExperimentSpec {
    /// `replications` seeds counting up from `seed_base`.
    pub fn new(name: ExperimentName, replications: usize, seed_base: u64) -> Self {
        ExperimentSpec {
            name,
            replications,
            seeds: (0..replications as u64).map(|k| seed_base + k).collect(),
            overrides: ConfigOverrides::default(),
        }
    }
}

/// One output row of an experiment run.
#[derive(Clone, Debug)]
pub struct ExperimentRow {
    pub experiment: &'static str,
    pub m: usize,
    /// Resample count for baseline rows; 0 when not applicable.
    pub n_resample: usize,
    pub scheme: String,
    pub seed: u64,
    pub ess_coord0: f64,
    pub ess_coord1: f64,
    pub ess_mean: f64,
    pub acceptance: f64,
}

impl ExperimentRow {
    pub const CSV_HEADER: &'static str =
        "experiment,M,N,scheme,seed,ess_coord0,ess_coord1,ess_mean,acceptance";

    pub fn to_csv(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{}",
            self.experiment,
            self.m,
            self.n_resample,
            self.scheme,
            self.seed,
            self.ess_coord0,
            self.ess_coord1,
            self.ess_mean,
            self.acceptance
        )
    }
}

/// Three ESS reports: per coordinate and for the coordinate-mean estimand.
pub fn ess_triple(chain: &ChainOutput) -> Result<(EssReport, EssReport, EssReport)> {
    let method = SpectralMethod::InitialSequence;
    Ok((
        ess(chain, &EstimandFunction::coord(0), method)?,
        ess(chain, &EstimandFunction::coord(1), method)?,
        ess(chain, &EstimandFunction::coord_mean(), method)?,
    ))
}

fn row(
    experiment: &'static str,
    m: usize,
    n_resample: usize,
    scheme: &str,
    seed: u64,
    chain: &ChainOutput,
) -> Result<ExperimentRow> {
    let (c0, c1, cm) = ess_triple(chain)?;
    Ok(ExperimentRow {
        experiment,
        m,
        n_resample,
        scheme: scheme.to_string(),
        seed,
        ess_coord0: c0.ess,
        ess_coord1: c1.ess,
        ess_mean: cm.ess,
        acceptance: acceptance_rate(chain),
    })
}

fn apply_overrides(cfg: &mut SamplerConfig, ov: &ConfigOverrides) {
    if let Some(n) = ov.n {
        cfg.n = n;
        cfg.burnin = n / 10;
    }
    if let Some(burnin) = ov.burnin {
        cfg.burnin = burnin;
    }
}

/// One seed of the intro or rw experiment: run the MH chain once, re-weight
/// it three ways, and report ESS for each scheme on the same chain.
fn reweighted_mh_rows(
    experiment: &'static str,
    target: TargetSpec,
    lambda: f64,
    seed: u64,
    ov: &ConfigOverrides,
) -> Result<Vec<ExperimentRow>> {
    let mut cfg = SamplerConfig::new(
        target,
        KernelSpec::RandomWalk { lambda },
        PropagationKind::MhStep,
        10_000,
        1,
        seed,
    );
    cfg.nu = WeightScheme::Nu(1);
    apply_overrides(&mut cfg, ov);
    let target = cfg.target.build()?;
    let chain = run_lwmcmc(&cfg, &target)?;
    let mut rows = Vec::new();
    for (scheme, label) in [
        (WeightScheme::OneHot, "mh"),
        (WeightScheme::Nu(1), "v1"),
        (WeightScheme::NuInf, "vinf"),
    ] {
        let reweighted = reweight_chain(&chain, scheme)?;
        rows.push(row(experiment, 1, 0, label, seed, &reweighted)?);
    }
    Ok(rows)
}

/// One seed of the trajectory-length table as four row families per M:
/// the weighted sampler (both schemes on the same chain), plain HMC, the
/// matched weighted-draw sampler, and the resampling baseline over its N
/// grid.
fn table1_rows(seed: u64, ov: &ConfigOverrides) -> Result<Vec<ExperimentRow>> {
    let target_spec = TargetSpec::IndirectObs { y: 1.0, sigma: 0.1 };
    let target = target_spec.build()?;
    let mut rows = Vec::new();
    for &m in &TABLE1_M_GRID {
        // LWMCMC HMC: endpoint propagation, one chain re-weighted both ways.
        let mut cfg = SamplerConfig::new(
            target_spec.clone(),
            KernelSpec::Hmc { delta: 0.05, jitter_start: true },
            PropagationKind::HmcEndpoint,
            1_000,
            m,
            seed,
        );
        apply_overrides(&mut cfg, ov);
        let lw = run_lwmcmc(&cfg, &target)?;
        let v1 = reweight_chain(&lw, WeightScheme::Nu(1))?;
        rows.push(row("table1", m, 0, "lwmcmc_v1", seed, &v1)?);
        rows.push(row("table1", m, 0, "lwmcmc_vinf", seed, &lw)?);

        // Plain HMC: forward-only trajectories, one-hot weights.
        let mut plain = cfg.clone();
        plain.kernel = KernelSpec::Hmc { delta: 0.05, jitter_start: false };
        plain.nu = WeightScheme::OneHot;
        let hmc = run_lwmcmc(&plain, &target)?;
        rows.push(row("table1", m, 0, "hmc", seed, &hmc)?);

        // Matched-T weighted sampler: same propagation as the baseline.
        let mut drawn = cfg.clone();
        drawn.propagation = PropagationKind::WeightedDraw;
        let lw_draw = run_lwmcmc(&drawn, &target)?;
        rows.push(row("table1", m, 0, "lwmcmc_vinf_draw", seed, &lw_draw)?);

        // Resampling baseline: ESS on the induced multiplicity weights.
        for &n_res in &TABLE1_N_GRID {
            let mut cal = drawn.clone();
            cal.algorithm = Algorithm::Resampled;
            cal.resample_n = n_res;
            let (chain, resamples) = run_resampled(&cal, &target)?;
            let induced = induced_weight_chain(&chain, &resamples)?;
            rows.push(row("table1", m, n_res, "calderhead", seed, &induced)?);
        }
    }
    Ok(rows)
}

/// Run every replication of the experiment, in parallel across seeds, and
/// return rows in deterministic sorted order.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<Vec<ExperimentRow>> {
    let per_seed = |&seed: &u64| -> Result<Vec<ExperimentRow>> {
        match spec.name {
            ExperimentName::IntroNormal => reweighted_mh_rows(
                "intro",
                TargetSpec::StdNormal { dim: 2 },
                1.2,
                seed,
                &spec.overrides,
            ),
            ExperimentName::RwIndirect => reweighted_mh_rows(
                "rw",
                TargetSpec::IndirectObs { y: 1.0, sigma: 0.1 },
                0.45,
                seed,
                &spec.overrides,
            ),
            ExperimentName::HmcTable1 => table1_rows(seed, &spec.overrides),
        }
    };
    let nested: Vec<Vec<ExperimentRow>> = spec
        .seeds
        .par_iter()
        .map(per_seed)
        .collect::<Result<_>>()?;
    let mut rows: Vec<ExperimentRow> = nested.into_iter().flatten().collect();
    rows.sort_by(|a, b| {
        (a.experiment, a.m, a.n_resample, &a.scheme, a.seed).cmp(&(
            b.experiment,
            b.m,
            b.n_resample,
            &b.scheme,
            b.seed,
        ))
    });
    Ok(rows)
}
