//! Chain persistence: CSV rows
//! `iter,slot,weight,log_score,coord_0..coord_{d-1},is_next_state` plus a
//! sidecar metadata file of `key=value` lines (seed, n, M, nu, kernel,
//! propagation, target).
//!
//! Floats are written in shortest round-trip form, so save/load preserves
//! values bit-exactly.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use crate::config::SamplerConfig;
use crate::core::{ChainOutput, IterationRecord, StateVector, WeightedPoint};
use crate::error::{Error, Result};
use crate::kernels::KernelSpec;
use crate::propagation::PropagationKind;
use crate::targets::TargetSpec;
use crate::weights::WeightScheme;

/// Path of the metadata sidecar for a chain CSV.
pub fn meta_path(csv_path: &Path) -> PathBuf {
    let mut os = csv_path.as_os_str().to_owned();
    os.push(".meta");
    PathBuf::from(os)
}

/// Write the chain CSV and its metadata sidecar.
pub fn write_chain_csv(chain: &ChainOutput, csv_path: &Path) -> Result<()> {
    let mut out = String::new();
    let d = chain.dim();
    out.push_str("iter,slot,weight,log_score");
    for k in 0..d {
        out.push_str(&format!(",coord_{k}"));
    }
    out.push_str(",is_next_state\n");
    for (j, record) in chain.records.iter().enumerate() {
        for (slot, point) in record.points.iter().enumerate() {
            out.push_str(&format!("{j},{slot},{},{}", point.weight, point.log_score));
            for c in point.state.coords() {
                out.push_str(&format!(",{c}"));
            }
            let marker = if slot == record.selected_slot { 1 } else { 0 };
            out.push_str(&format!(",{marker}\n"));
        }
    }
    fs::write(csv_path, out)?;

    let cfg = &chain.config_echo;
    let meta = format!(
        "seed={}\nn={}\nM={}\nnu={}\nkernel={}\npropagation={}\ntarget={}\n",
        chain.seed,
        cfg.n,
        cfg.m,
        cfg.nu.label(),
        cfg.kernel,
        cfg.propagation.label(),
        cfg.target,
    );
    let mut f = fs::File::create(meta_path(csv_path))?;
    f.write_all(meta.as_bytes())?;
    Ok(())
}

fn parse_meta(path: &Path) -> Result<SamplerConfig> {
    let text = fs::read_to_string(path)?;
    let display = path.display().to_string();
    let mut kv = std::collections::BTreeMap::new();
    for (idx, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| Error::Parse {
            path: display.clone(),
            line: idx + 1,
            msg: format!("expected key=value, got `{line}`"),
        })?;
        kv.insert(k.trim().to_string(), v.trim().to_string());
    }
    let get = |key: &str| -> Result<String> {
        kv.get(key)
            .cloned()
            .ok_or_else(|| Error::Config(format!("metadata missing key `{key}`")))
    };

    let target = parse_target(&get("target")?)?;
    let kernel = parse_kernel(&get("kernel")?)?;
    let propagation = match get("propagation")?.as_str() {
        "mh" => PropagationKind::MhStep,
        "weighted_draw" => PropagationKind::WeightedDraw,
        "hmc_endpoint" => PropagationKind::HmcEndpoint,
        other => return Err(Error::Config(format!("unknown propagation `{other}`"))),
    };
    let n: usize = get("n")?
        .parse()
        .map_err(|_| Error::Config("metadata: invalid n".into()))?;
    let m: usize = get("M")?
        .parse()
        .map_err(|_| Error::Config("metadata: invalid M".into()))?;
    let seed: u64 = get("seed")?
        .parse()
        .map_err(|_| Error::Config("metadata: invalid seed".into()))?;
    let nu = WeightScheme::parse(&get("nu")?)?;

    let mut cfg = SamplerConfig::new(target, kernel, propagation, n, m, seed);
    cfg.nu = nu;
    Ok(cfg)
}

fn parse_args(body: &str) -> Result<Vec<(String, String)>> {
    body.split(',')
        .filter(|s| !s.is_empty())
        .map(|pair| {
            pair.split_once('=')
                .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
                .ok_or_else(|| Error::Config(format!("bad argument `{pair}`")))
        })
        .collect()
}

fn parse_target(text: &str) -> Result<TargetSpec> {
    let (name, body) = text
        .split_once('(')
        .map(|(n, b)| (n, b.trim_end_matches(')')))
        .unwrap_or((text, ""));
    let args = parse_args(body)?;
    let lookup = |key: &str| args.iter().find(|(k, _)| k == key).map(|(_, v)| v.clone());
    match name {
        "std_normal" => {
            let dim = lookup("dim")
                .ok_or_else(|| Error::Config("std_normal needs dim".into()))?
                .parse()
                .map_err(|_| Error::Config("invalid dim".into()))?;
            Ok(TargetSpec::StdNormal { dim })
        }
        "indirect_obs" => {
            let y = lookup("y")
                .ok_or_else(|| Error::Config("indirect_obs needs y".into()))?
                .parse()
                .map_err(|_| Error::Config("invalid y".into()))?;
            let sigma = lookup("sigma")
                .ok_or_else(|| Error::Config("indirect_obs needs sigma".into()))?
                .parse()
                .map_err(|_| Error::Config("invalid sigma".into()))?;
            Ok(TargetSpec::IndirectObs { y, sigma })
        }
        other => Err(Error::Config(format!("unknown target `{other}`"))),
    }
}

fn parse_kernel(text: &str) -> Result<KernelSpec> {
    let (name, body) = text
        .split_once('(')
        .map(|(n, b)| (n, b.trim_end_matches(')')))
        .unwrap_or((text, ""));
    let args = parse_args(body)?;
    let lookup = |key: &str| args.iter().find(|(k, _)| k == key).map(|(_, v)| v.clone());
    match name {
        "rw" => {
            let lambda = lookup("lambda")
                .ok_or_else(|| Error::Config("rw needs lambda".into()))?
                .parse()
                .map_err(|_| Error::Config("invalid lambda".into()))?;
            Ok(KernelSpec::RandomWalk { lambda })
        }
        "hmc" => {
            let delta = lookup("delta")
                .ok_or_else(|| Error::Config("hmc needs delta".into()))?
                .parse()
                .map_err(|_| Error::Config("invalid delta".into()))?;
            let jitter_start = lookup("jitter").map_or(true, |v| v != "false");
            Ok(KernelSpec::Hmc {
                delta,
                jitter_start,
            })
        }
        other => Err(Error::Config(format!("unknown kernel `{other}`"))),
    }
}

/// Read a chain CSV and its sidecar back into a [`ChainOutput`].
///
/// HMC auxiliary data (momenta, start index) is not persisted; the current
/// slot of read-back HMC records is located by matching the previous
/// iteration's propagated state, and the first record's `accepted` flag is
/// reconstructed best-effort.
pub fn read_chain_csv(csv_path: &Path) -> Result<ChainOutput> {
    let text = fs::read_to_string(csv_path)?;
    let display = csv_path.display().to_string();
    let config = parse_meta(&meta_path(csv_path))?;

    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or_else(|| Error::Parse {
        path: display.clone(),
        line: 1,
        msg: "empty file".into(),
    })?;
    let cols: Vec<&str> = header.split(',').collect();
    if cols.len() < 6 || cols[0] != "iter" || *cols.last().unwrap() != "is_next_state" {
        return Err(Error::Parse {
            path: display.clone(),
            line: 1,
            msg: format!("unexpected header `{header}`"),
        });
    }
    let d = cols.len() - 5;

    struct Row {
        iter: usize,
        weight: f64,
        log_score: f64,
        coords: Vec<f64>,
        is_next: bool,
    }
    let mut rows: Vec<Row> = Vec::new();
    for (idx, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != cols.len() {
            return Err(Error::Parse {
                path: display.clone(),
                line: idx + 1,
                msg: format!("expected {} fields, got {}", cols.len(), fields.len()),
            });
        }
        let parse_f = |s: &str| -> Result<f64> {
            s.parse().map_err(|_| Error::Parse {
                path: display.clone(),
                line: idx + 1,
                msg: format!("invalid number `{s}`"),
            })
        };
        rows.push(Row {
            iter: fields[0].parse().map_err(|_| Error::Parse {
                path: display.clone(),
                line: idx + 1,
                msg: format!("invalid iteration `{}`", fields[0]),
            })?,
            weight: parse_f(fields[2])?,
            log_score: parse_f(fields[3])?,
            coords: fields[4..4 + d]
                .iter()
                .map(|s| parse_f(s))
                .collect::<Result<_>>()?,
            is_next: *fields.last().unwrap() == "1",
        });
    }
    if rows.is_empty() {
        return Err(Error::EmptyChain);
    }

    let n_iters = rows.iter().map(|r| r.iter).max().unwrap() + 1;
    let mut records: Vec<IterationRecord> = Vec::with_capacity(n_iters);
    let mut start = 0usize;
    for j in 0..n_iters {
        let end = rows[start..]
            .iter()
            .position(|r| r.iter != j)
            .map_or(rows.len(), |p| start + p);
        let group = &rows[start..end];
        start = end;
        if group.is_empty() {
            return Err(Error::Parse {
                path: display.clone(),
                line: 0,
                msg: format!("no rows for iteration {j}"),
            });
        }
        let points: Vec<WeightedPoint> = group
            .iter()
            .map(|r| WeightedPoint {
                state: StateVector::new(r.coords.clone()),
                weight: r.weight,
                log_score: r.log_score,
            })
            .collect();
        let selected_slot = group.iter().position(|r| r.is_next).ok_or(Error::Parse {
            path: display.clone(),
            line: 0,
            msg: format!("iteration {j} has no is_next_state marker"),
        })?;
        let next_state = points[selected_slot].state.clone();
        let accepted = match records.last() {
            Some(prev) => next_state != prev.next_state,
            None => selected_slot != 0,
        };
        records.push(IterationRecord {
            points,
            next_state,
            accepted,
            selected_slot,
            aux: None,
        });
    }

    let seed = config.seed;
    Ok(ChainOutput {
        records,
        config_echo: config,
        seed,
    })
}
