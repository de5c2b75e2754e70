use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::json;

use dpkl::harness::{
    build_instance, certify_files, rate_fit, read_results, run_to_file, Axis, ExperimentConfig,
    HarnessError, InstanceSpec, RateFit, ResultRow, Statistic,
};
use dpkl::loss::save_instance;

#[derive(Parser)]
#[command(name = "dpkl", version, about = "Private optimization experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct RunArgs {
    /// Experiment config (TOML, or JSON).
    #[arg(long)]
    config: PathBuf,
    /// Overrides `master_seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides `output`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Zero every noise draw; accounting is unchanged.
    #[arg(long)]
    noiseless: bool,
    /// Print a JSON summary instead of text.
    #[arg(long)]
    json: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Run every cell and trial of a config and write the results CSV.
    Run(RunArgs),
    /// Like `run`, then fit the rate exponent along `--axis`.
    Sweep {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, default_value = "n")]
        axis: String,
        #[arg(long, default_value = "median")]
        statistic: String,
    },
    /// Log-log least-squares fit of excess risk against one axis.
    Fit {
        #[arg(long)]
        results: PathBuf,
        #[arg(long)]
        axis: String,
        #[arg(long, default_value = "median")]
        statistic: String,
        #[arg(long)]
        json: bool,
    },
    /// Check a KL and/or growth certificate on a saved instance.
    Certify {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Generate an instance and save it as JSON plus a sibling CSV.
    MakeInstance {
        /// Instance description (TOML, or JSON).
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        d: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

fn load_config(args: &RunArgs) -> Result<ExperimentConfig, HarnessError> {
    let mut cfg = ExperimentConfig::load(&args.config)?;
    if let Some(s) = args.seed {
        cfg.master_seed = s;
    }
    if let Some(o) = &args.out {
        cfg.output = o.clone();
    }
    if args.noiseless {
        cfg.optimizer.noiseless = true;
    }
    Ok(cfg)
}

fn median(mut v: Vec<f64>) -> Option<f64> {
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    Some(if v.len() % 2 == 1 { v[m] } else { 0.5 * (v[m - 1] + v[m]) })
}

fn summary(cfg: &ExperimentConfig, rows: &[ResultRow]) -> serde_json::Value {
    let mut cells: Vec<serde_json::Value> = Vec::new();
    let mut start = 0;
    while start < rows.len() {
        let r0 = &rows[start];
        let end = start
            + rows[start..]
                .iter()
                .take_while(|r| (r.n, r.d, r.rho, r.kappa) == (r0.n, r0.d, r0.rho, r0.kappa))
                .count();
        let cell = &rows[start..end];
        cells.push(json!({
            "n": r0.n,
            "d": r0.d,
            "rho": r0.rho,
            "kappa": r0.kappa,
            "trials": cell.len(),
            "median_excess_risk": median(cell.iter().filter_map(|r| r.excess_risk).collect()),
            "max_rho_spent": cell.iter().map(|r| r.rho_spent).fold(0.0, f64::max),
            "timeouts": cell.iter().filter(|r| r.stop_reason == "timeout").count(),
        }));
        start = end;
    }
    json!({
        "algo": cfg.optimizer.algo,
        "output": cfg.output.display().to_string(),
        "rows": rows.len(),
        "cells": cells,
    })
}

fn print_fit(fit: &RateFit, as_json: bool) {
    if as_json {
        println!("{}", serde_json::to_string_pretty(fit).unwrap());
        return;
    }
    println!(
        "slope {:.6}  intercept {:.6}  r2 {:.6}  ({} points, {} dropped)",
        fit.slope,
        fit.intercept,
        fit.r2,
        fit.points.len(),
        fit.dropped
    );
    for p in &fit.points {
        println!("  {}={}  {:?}={:.6e}  (m={})", fit.axis, p.x, fit.statistic, p.value, p.count);
    }
}

fn run(args: &RunArgs) -> Result<(ExperimentConfig, Vec<ResultRow>), HarnessError> {
    let cfg = load_config(args)?;
    let rows = run_to_file(&cfg)?;
    if args.json {
        println!("{}", serde_json::to_string_pretty(&summary(&cfg, &rows)).unwrap());
    } else {
        println!("wrote {} rows to {}", rows.len(), cfg.output.display());
    }
    Ok((cfg, rows))
}

fn load_instance_spec(path: &PathBuf) -> Result<InstanceSpec, HarnessError> {
    let text = std::fs::read_to_string(path).map_err(|e| HarnessError::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    let parsed = if text.trim_start().starts_with('{') {
        serde_json::from_str(&text).map_err(|e| e.to_string())
    } else {
        toml::from_str(&text).map_err(|e| e.to_string())
    };
    parsed.map_err(|e| HarnessError::config(format!("{}: {e}", path.display())))
}

fn dispatch(cmd: Command) -> Result<ExitCode, HarnessError> {
    match cmd {
        Command::Run(args) => {
            run(&args)?;
        }
        Command::Sweep {
            run: args,
            axis,
            statistic,
        } => {
            let axis: Axis = axis.parse()?;
            let statistic: Statistic = statistic.parse()?;
            let (_, rows) = run(&args)?;
            print_fit(&rate_fit(&rows, axis, statistic)?, args.json);
        }
        Command::Fit {
            results,
            axis,
            statistic,
            json,
        } => {
            let axis: Axis = axis.parse()?;
            let statistic: Statistic = statistic.parse()?;
            let rows = read_results(&results)?;
            print_fit(&rate_fit(&rows, axis, statistic)?, json);
        }
        Command::Certify {
            instance,
            spec,
            json,
        } => {
            let out = certify_files(&instance, &spec)?;
            if json {
                println!("{}", serde_json::to_string_pretty(&out).unwrap());
            } else {
                for (name, rep) in [("kl", &out.kl), ("growth", &out.growth)] {
                    if let Some(r) = rep {
                        println!(
                            "{name}: {} (max violation {:.3e}, tol {:.1e}, worst sample {})",
                            if r.pass { "pass" } else { "FAIL" },
                            r.max_violation,
                            r.tol,
                            r.worst_index
                        );
                    }
                }
            }
            if !out.pass {
                return Ok(ExitCode::from(1));
            }
        }
        Command::MakeInstance {
            spec,
            n,
            d,
            seed,
            out,
        } => {
            let spec = load_instance_spec(&spec)?;
            let obj = build_instance(&spec, n, d, seed)?;
            save_instance(&obj, &out)?;
            println!("wrote {}", out.display());
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
