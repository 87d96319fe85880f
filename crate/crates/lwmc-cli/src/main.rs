//! `lwmc`: run locally weighted MCMC chains, compute ESS diagnostics,
//! reproduce the built-in experiments, render scatter plots, and check
//! gradients / invariance against independent oracles.
//!
//! Exit codes: 0 success, 2 configuration or validation error, 1 I/O or
//! runtime error. `LWMC_THREADS` caps the worker-thread count.

mod plot;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use lwmc::config::SamplerConfig;
use lwmc::core::{EstimandFunction, StateVector};
use lwmc::diagnostics::{ess_with_bandwidth, SpectralMethod};
use lwmc::experiments::{run_experiment, ExperimentName, ExperimentRow, ExperimentSpec};
use lwmc::io::{read_chain_csv, write_chain_csv};
use lwmc::sampler::{run_lwmcmc, run_resampled};
use lwmc::targets::{Target, TargetSpec};
use lwmc::verify::{
    finite_diff_gradient, invariance_chisq, invariance_two_sample, DEFAULT_FD_EPS,
};
use lwmc::Error;

#[derive(Parser)]
#[command(name = "lwmc", version, about = "Locally weighted MCMC experiment runner")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a sampler from a key=value config file and write the chain CSV.
    Run {
        /// Config file path.
        #[arg(long)]
        config: PathBuf,
        /// Output chain CSV (metadata sidecar written alongside).
        #[arg(long)]
        out: PathBuf,
    },
    /// Compute ESS reports from a saved chain.
    Ess {
        /// Input chain CSV.
        #[arg(long = "in")]
        input: PathBuf,
        /// Estimand: coord:<i> or mean. Repeatable; defaults to every
        /// coordinate plus mean.
        #[arg(long = "h")]
        estimands: Vec<String>,
        /// Spectral estimator at frequency zero.
        #[arg(long, default_value = "bartlett")]
        method: String,
        /// Bartlett bandwidth override.
        #[arg(long)]
        bandwidth: Option<usize>,
        /// Output CSV path (stdout when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Reproduce a built-in experiment and write its results CSV.
    Experiment {
        /// intro | rw | table1
        name: String,
        /// Replications (one seed each).
        #[arg(long, default_value_t = 10)]
        reps: usize,
        /// First seed; replication k uses seed_base + k.
        #[arg(long, default_value_t = 1)]
        seed_base: u64,
        /// Override the per-run iteration count.
        #[arg(long)]
        n: Option<usize>,
        /// Override the per-run burn-in.
        #[arg(long)]
        burnin: Option<usize>,
        /// Output CSV path.
        #[arg(long)]
        out: PathBuf,
    },
    /// Render a saved chain as an SVG scatter plot (black = weighted points,
    /// red = propagating chain).
    Plot {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Independent checks: gradients and invariance.
    Verify {
        #[command(subcommand)]
        check: VerifyCommand,
    },
}

#[derive(Args)]
struct TargetArgs {
    /// std_normal | indirect_obs
    #[arg(long)]
    target: String,
    /// Dimension (std_normal).
    #[arg(long, default_value_t = 2)]
    dim: usize,
    /// Observed y (indirect_obs).
    #[arg(long, default_value_t = 1.0)]
    y: f64,
    /// Observation noise (indirect_obs).
    #[arg(long, default_value_t = 0.1)]
    sigma: f64,
}

impl TargetArgs {
    fn spec(&self) -> Result<TargetSpec, Error> {
        match self.target.as_str() {
            "std_normal" => Ok(TargetSpec::StdNormal { dim: self.dim }),
            "indirect_obs" => Ok(TargetSpec::IndirectObs {
                y: self.y,
                sigma: self.sigma,
            }),
            other => Err(Error::Config(format!("unknown target `{other}`"))),
        }
    }
}

#[derive(Subcommand)]
enum VerifyCommand {
    /// Compare analytic gradients against central finite differences at
    /// random points.
    Grad {
        #[command(flatten)]
        target: TargetArgs,
        /// Number of random evaluation points.
        #[arg(long, default_value_t = 20)]
        points: usize,
        #[arg(long, default_value_t = 7)]
        seed: u64,
    },
    /// Chi-square (std_normal) or two-sample DKW (indirect_obs) invariance
    /// check of a saved chain's propagating states.
    Invariance {
        #[arg(long = "in")]
        input: PathBuf,
        #[command(flatten)]
        target: TargetArgs,
        /// Reference chain CSV (required for targets without closed-form
        /// marginals).
        #[arg(long = "ref")]
        reference: Option<PathBuf>,
        #[arg(long, default_value_t = 20)]
        bins: usize,
    },
}

fn exit_code(err: &anyhow::Error) -> ExitCode {
    if let Some(e) = err.downcast_ref::<Error>() {
        match e {
            Error::Config(_) | Error::Parse { .. } | Error::InvalidNu => ExitCode::from(2),
            _ => ExitCode::from(1),
        }
    } else {
        ExitCode::from(1)
    }
}

fn main() -> ExitCode {
    if let Ok(threads) = std::env::var("LWMC_THREADS") {
        if let Ok(k) = threads.parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new()
                .num_threads(k.max(1))
                .build_global();
        }
    }
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("lwmc: {err}");
            exit_code(&err)
        }
    }
}

fn dispatch(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Run { config, out } => cmd_run(&config, &out),
        Command::Ess {
            input,
            estimands,
            method,
            bandwidth,
            out,
        } => cmd_ess(&input, &estimands, &method, bandwidth, out.as_deref()),
        Command::Experiment {
            name,
            reps,
            seed_base,
            n,
            burnin,
            out,
        } => cmd_experiment(&name, reps, seed_base, n, burnin, &out),
        Command::Plot { input, out } => cmd_plot(&input, &out),
        Command::Verify { check } => match check {
            VerifyCommand::Grad {
                target,
                points,
                seed,
            } => cmd_verify_grad(&target, points, seed),
            VerifyCommand::Invariance {
                input,
                target,
                reference,
                bins,
            } => cmd_verify_invariance(&input, &target, reference.as_deref(), bins),
        },
    }
}

fn cmd_run(config_path: &Path, out: &Path) -> anyhow::Result<()> {
    let text = std::fs::read_to_string(config_path).map_err(Error::Io)?;
    let config = SamplerConfig::parse_kv(&text, &config_path.display().to_string())?;
    let target = config.target.build()?;
    let chain = match config.algorithm {
        lwmc::config::Algorithm::Lwmcmc => run_lwmcmc(&config, &target)?,
        lwmc::config::Algorithm::Resampled => run_resampled(&config, &target)?.0,
    };
    write_chain_csv(&chain, out)?;
    eprintln!(
        "wrote {} iterations x {} points to {}",
        chain.n(),
        config.m + 1,
        out.display()
    );
    Ok(())
}

fn parse_estimand(text: &str, dim: usize) -> Result<EstimandFunction, Error> {
    if text == "mean" {
        return Ok(EstimandFunction::coord_mean());
    }
    if let Some(idx) = text.strip_prefix("coord:") {
        let i: usize = idx
            .parse()
            .map_err(|_| Error::Config(format!("invalid estimand `{text}`")))?;
        if i >= dim {
            return Err(Error::Config(format!(
                "estimand coordinate {i} out of range for dimension {dim}"
            )));
        }
        return Ok(EstimandFunction::coord(i));
    }
    Err(Error::Config(format!(
        "invalid estimand `{text}` (expected coord:<i> or mean)"
    )))
}

fn parse_method(text: &str) -> Result<SpectralMethod, Error> {
    match text {
        "bartlett" => Ok(SpectralMethod::Bartlett),
        "initseq" => Ok(SpectralMethod::InitialSequence),
        other => Err(Error::Config(format!(
            "unknown method `{other}` (expected bartlett or initseq)"
        ))),
    }
}

fn cmd_ess(
    input: &Path,
    estimands: &[String],
    method: &str,
    bandwidth: Option<usize>,
    out: Option<&Path>,
) -> anyhow::Result<()> {
    let chain = read_chain_csv(input)?;
    let method = parse_method(method)?;
    let names: Vec<String> = if estimands.is_empty() {
        (0..chain.dim())
            .map(|i| format!("coord:{i}"))
            .chain(std::iter::once("mean".to_string()))
            .collect()
    } else {
        estimands.to_vec()
    };
    let mut csv = String::from("h,n,var_bar,sigma2,iact,ess\n");
    for name in &names {
        let h = parse_estimand(name, chain.dim())?;
        let report = ess_with_bandwidth(&chain, &h, method, bandwidth)?;
        csv.push_str(&format!(
            "{},{},{},{},{},{}\n",
            h.name(),
            report.n,
            report.var_bar,
            report.sigma2,
            report.iact,
            report.ess
        ));
    }
    match out {
        Some(path) => std::fs::write(path, csv).map_err(Error::Io)?,
        None => print!("{csv}"),
    }
    Ok(())
}

fn cmd_experiment(
    name: &str,
    reps: usize,
    seed_base: u64,
    n: Option<usize>,
    burnin: Option<usize>,
    out: &Path,
) -> anyhow::Result<()> {
    if reps < 1 {
        return Err(Error::Config("reps must be >= 1".into()).into());
    }
    let name = match name {
        "intro" => ExperimentName::IntroNormal,
        "rw" => ExperimentName::RwIndirect,
        "table1" => ExperimentName::HmcTable1,
        other => {
            return Err(Error::Config(format!(
                "unknown experiment `{other}` (expected intro, rw, or table1)"
            ))
            .into())
        }
    };
    let mut spec = ExperimentSpec::new(name, reps, seed_base);
    spec.overrides.n = n;
    spec.overrides.burnin = burnin;
    let rows = run_experiment(&spec)?;
    let mut csv = String::from(ExperimentRow::CSV_HEADER);
    csv.push('\n');
    for row in &rows {
        csv.push_str(&row.to_csv());
        csv.push('\n');
    }
    std::fs::write(out, csv).map_err(Error::Io)?;
    eprintln!("wrote {} rows to {}", rows.len(), out.display());
    Ok(())
}

fn cmd_plot(input: &Path, out: &Path) -> anyhow::Result<()> {
    let chain = read_chain_csv(input)?;
    let svg = plot::render_svg(&chain)?;
    std::fs::write(out, svg).map_err(Error::Io)?;
    Ok(())
}

fn cmd_verify_grad(target_args: &TargetArgs, points: usize, seed: u64) -> anyhow::Result<()> {
    let spec = target_args.spec()?;
    let target = spec.build()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..points {
        let x = StateVector::new(
            (0..target.dim())
                .map(|_| rng.random::<f64>() * 4.0 - 2.0)
                .collect(),
        );
        let analytic = target
            .grad_log_density(&x)
            .ok_or(Error::MissingGradient)?;
        let numeric = finite_diff_gradient(|p| target.log_density(p), &x, DEFAULT_FD_EPS);
        for (a, n) in analytic.iter().zip(&numeric) {
            let rel = (a - n).abs() / a.abs().max(1.0);
            worst = worst.max(rel);
        }
    }
    println!("target={spec} points={points} max_rel_err={worst:.3e}");
    if worst > 1e-5 {
        return Err(Error::Config(format!(
            "gradient mismatch: max relative error {worst:.3e} > 1e-5"
        ))
        .into());
    }
    Ok(())
}

fn cmd_verify_invariance(
    input: &Path,
    target_args: &TargetArgs,
    reference: Option<&Path>,
    bins: usize,
) -> anyhow::Result<()> {
    let spec = target_args.spec()?;
    let target = spec.build()?;
    let chain = read_chain_csv(input)?;
    let states: Vec<StateVector> = chain.propagating_states().cloned().collect();
    let ess_hint = min_coord_ess(&chain)?;

    let result = match spec {
        TargetSpec::StdNormal { .. } => invariance_chisq(&states, &target, bins, ess_hint)?,
        TargetSpec::IndirectObs { .. } => {
            let ref_path = reference.ok_or_else(|| {
                Error::Config(
                    "indirect_obs has no closed-form marginals; pass --ref <chain.csv>".into(),
                )
            })?;
            let ref_chain = read_chain_csv(ref_path)?;
            let ref_states: Vec<StateVector> =
                ref_chain.propagating_states().cloned().collect();
            let ref_ess = min_coord_ess(&ref_chain)?;
            invariance_two_sample(&states, &ref_states, ess_hint, ref_ess, 0.001)?
        }
    };
    println!(
        "statistic={:.4} threshold={:.4} dof={} ess_correction={:.5} pass={}",
        result.statistic, result.threshold, result.dof, result.pass, result.ess_correction
    );
    if !result.pass {
        return Err(Error::Config("invariance check failed".into()).into());
    }
    Ok(())
}

/// Conservative effective-sample hint: the smallest per-coordinate ESS of
/// the propagating (one-hot) chain.
fn min_coord_ess(chain: &lwmc::core::ChainOutput) -> anyhow::Result<f64> {
    let onehot = lwmc::sampler::reweight_chain(chain, lwmc::weights::WeightScheme::OneHot)?;
    let mut min = f64::INFINITY;
    for i in 0..chain.dim() {
        let report = lwmc::diagnostics::ess(
            &onehot,
            &EstimandFunction::coord(i),
            SpectralMethod::InitialSequence,
        )?;
        min = min.min(report.ess);
    }
    Ok(min)
}
