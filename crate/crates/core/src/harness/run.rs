use std::io::Write;
use std::path::Path;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{build_instance, ExperimentConfig};
use super::HarnessError;
use crate::optim::{Deadline, Registry};
use crate::privacy::{stream_seed, NoiseSource};

pub const CSV_HEADER: &str =
    "trial,algo,n,d,rho,kappa,gamma,excess_risk,final_grad_norm,iters,rho_spent,stop_reason,wall_ms,seed";

/// One result row. `kappa`, `gamma` and `excess_risk` are empty when the
/// instance does not declare them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub trial: usize,
    pub algo: String,
    pub n: usize,
    pub d: usize,
    pub rho: f64,
    pub kappa: Option<f64>,
    pub gamma: Option<f64>,
    pub excess_risk: Option<f64>,
    pub final_grad_norm: f64,
    pub iters: u64,
    pub rho_spent: f64,
    pub stop_reason: String,
    pub wall_ms: u64,
    pub seed: u64,
}

/// One point of the sweep grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cell {
    pub index: usize,
    pub n: usize,
    pub d: usize,
    pub rho: f64,
    pub kappa: Option<f64>,
}

fn cells(cfg: &ExperimentConfig) -> Result<Vec<Cell>, HarnessError> {
    let mut ns = cfg.n_axis();
    let mut ds = cfg.d_axis();
    if ns.contains(&None) || ds.contains(&None) {
        // only reachable for saved instances; their shape fills the gaps
        let probe = build_instance_shape(cfg)?;
        for v in ns.iter_mut().filter(|v| v.is_none()) {
            *v = Some(probe.0);
        }
        for v in ds.iter_mut().filter(|v| v.is_none()) {
            *v = Some(probe.1);
        }
    }
    let mut out = Vec::new();
    for n in &ns {
        for d in &ds {
            for rho in cfg.rho_axis() {
                for kappa in cfg.kappa_axis() {
                    out.push(Cell {
                        index: out.len(),
                        n: n.unwrap(),
                        d: d.unwrap(),
                        rho,
                        kappa,
                    });
                }
            }
        }
    }
    Ok(out)
}

fn build_instance_shape(cfg: &ExperimentConfig) -> Result<(usize, usize), HarnessError> {
    fn file_of(spec: &super::InstanceSpec) -> Option<&Path> {
        match spec {
            super::InstanceSpec::File { path } => Some(path),
            super::InstanceSpec::Prox { inner, .. } => file_of(inner),
            _ => None,
        }
    }
    let path = file_of(&cfg.instance)
        .ok_or_else(|| HarnessError::config("sweep.n and sweep.d are required"))?;
    let obj = crate::loss::load_instance(path)?;
    Ok((obj.n(), obj.dim()))
}

fn thread_count() -> Option<usize> {
    let raw = std::env::var("DPKL_THREADS").ok()?;
    match raw.trim().parse::<usize>() {
        Ok(0) | Err(_) => {
            log::warn!("ignoring DPKL_THREADS={raw:?}");
            None
        }
        Ok(k) => Some(k),
    }
}

fn run_one(
    cfg: &ExperimentConfig,
    registry: &Registry,
    cell: &Cell,
    trial: usize,
    started: &OnceLock<Instant>,
) -> Result<ResultRow, HarnessError> {
    let seed = stream_seed(cfg.master_seed, &[cell.index as u64, trial as u64]);
    let obj = build_instance(&cfg.instance, cell.n, cell.d, stream_seed(seed, &[0]))?;
    let mut opt_cfg = cfg.optimizer.clone();
    opt_cfg.n = Some(cell.n);
    opt_cfg.d = Some(cell.d);
    opt_cfg.rho = cell.rho;
    opt_cfg.kappa = cell.kappa.or(opt_cfg.kappa);
    opt_cfg.seed = seed;
    opt_cfg.record_iterates = false;
    opt_cfg.timing = cfg.timing;
    let optimizer = registry.get(&opt_cfg.algo)?;
    let start = *started.get_or_init(Instant::now);
    let limit = Duration::from_secs_f64(cfg.timeout_secs);
    let deadline = start
        .checked_add(limit)
        .map_or(Deadline::none(), Deadline::at);
    let mut noise = NoiseSource::new(seed, opt_cfg.noiseless);
    let report = optimizer.run(&obj, &opt_cfg, &mut noise, deadline)?;
    let (gamma, kappa) = match opt_cfg.gamma_kappa(&obj) {
        Ok((g, k)) => (Some(g), Some(k)),
        Err(_) => (None, opt_cfg.kappa),
    };
    Ok(ResultRow {
        trial,
        algo: report.algo.clone(),
        n: cell.n,
        d: cell.d,
        rho: cell.rho,
        kappa,
        gamma,
        excess_risk: report.final_excess,
        final_grad_norm: report.final_grad_norm,
        iters: report.iters,
        rho_spent: report.ledger.spent(),
        stop_reason: report.stop_reason.as_str().to_string(),
        wall_ms: report.wall_ms,
        seed,
    })
}

/// Runs every `(cell, trial)` pair and returns the rows ordered by cell,
/// then trial. The worker count follows `DPKL_THREADS` when set.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<ResultRow>, HarnessError> {
    run_with_registry(cfg, &Registry::builtin())
}

pub fn run_with_registry(
    cfg: &ExperimentConfig,
    registry: &Registry,
) -> Result<Vec<ResultRow>, HarnessError> {
    cfg.validate()?;
    registry.get(&cfg.optimizer.algo)?;
    let grid = cells(cfg)?;
    let starts: Vec<OnceLock<Instant>> = grid.iter().map(|_| OnceLock::new()).collect();
    let jobs: Vec<(usize, usize)> = (0..grid.len())
        .flat_map(|c| (0..cfg.trials).map(move |t| (c, t)))
        .collect();
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(k) = thread_count() {
        builder = builder.num_threads(k);
    }
    let pool = builder
        .build()
        .map_err(|e| HarnessError::config(format!("cannot start worker pool: {e}")))?;
    let mut rows: Vec<(usize, ResultRow)> = pool.install(|| {
        jobs.par_iter()
            .map(|&(c, t)| run_one(cfg, registry, &grid[c], t, &starts[c]).map(|r| (c, r)))
            .collect::<Result<_, _>>()
    })?;
    rows.sort_by_key(|(c, r)| (*c, r.trial));
    let timeouts = rows.iter().filter(|(_, r)| r.stop_reason == "timeout").count();
    if timeouts > 0 {
        log::warn!("{timeouts} run(s) hit the per-cell timeout");
    }
    Ok(rows.into_iter().map(|(_, r)| r).collect())
}

/// Writes `rows` to `path` through a temporary file in the same directory
/// and a rename, so `path` never holds a partial table.
pub fn write_results(path: &Path, rows: &[ResultRow]) -> Result<(), HarnessError> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| HarnessError::io(path, e))?;
    {
        let mut wtr = csv::Writer::from_writer(tmp.as_file());
        if rows.is_empty() {
            wtr.write_record(CSV_HEADER.split(','))
                .map_err(|e| HarnessError::io(path, e.into()))?;
        }
        for r in rows {
            wtr.serialize(r).map_err(|e| HarnessError::io(path, e.into()))?;
        }
        wtr.flush().map_err(|e| HarnessError::io(path, e))?;
    }
    tmp.as_file().sync_all().map_err(|e| HarnessError::io(path, e))?;
    tmp.persist(path).map_err(|e| HarnessError::io(path, e.error))?;
    Ok(())
}

/// Runs the experiment and writes the table to `cfg.output`.
pub fn run_to_file(cfg: &ExperimentConfig) -> Result<Vec<ResultRow>, HarnessError> {
    let rows = run_experiment(cfg)?;
    write_results(&cfg.output, &rows)?;
    Ok(rows)
}

pub fn read_results(path: &Path) -> Result<Vec<ResultRow>, HarnessError> {
    let file = std::fs::File::open(path).map_err(|e| HarnessError::io(path, e))?;
    let bad = |message: String| HarnessError::Results {
        path: path.display().to_string(),
        message,
    };
    let mut rdr = csv::Reader::from_reader(file);
    let header = rdr.headers().map_err(|e| bad(e.to_string()))?;
    if header.iter().collect::<Vec<_>>().join(",") != CSV_HEADER {
        return Err(bad(format!("unexpected header, want {CSV_HEADER}")));
    }
    rdr.deserialize()
        .map(|r| r.map_err(|e| bad(e.to_string())))
        .collect()
}

/// Renders rows as CSV text (used for stdout output).
pub fn rows_to_csv<W: Write>(out: W, rows: &[ResultRow]) -> Result<(), csv::Error> {
    let mut wtr = csv::Writer::from_writer(out);
    for r in rows {
        wtr.serialize(r)?;
    }
    wtr.flush()?;
    Ok(())
}
