use std::fs;

use dpkl::harness::{
    build_instance, read_results, run_to_file, rate_fit, Axis, ExperimentConfig, InstanceSpec,
    ResultRow, Statistic, CSV_HEADER,
};
use dpkl::loss::save_instance;

const CONFIG: &str = r#"
trials = 2
master_seed = 5
output = "out/results.csv"

[instance]
type = "quadratic"
mu = 1.0

[optimizer]
algo = "adaptive_noisy_gd"
rho = 1.0

[sweep]
n = [200, 400]
d = [3]
rho = [0.5, 1.0]
"#;

#[test]
fn rerun_is_bitwise_identical() {
    let dir = tempfile::tempdir().unwrap();
    fs::create_dir(dir.path().join("out")).unwrap();
    let path = dir.path().join("exp.toml");
    fs::write(&path, CONFIG).unwrap();
    let cfg = ExperimentConfig::load(&path).unwrap();
    assert_eq!(cfg.output, dir.path().join("out/results.csv"));
    let rows = run_to_file(&cfg).unwrap();
    assert_eq!(rows.len(), 8);
    let first = fs::read(&cfg.output).unwrap();
    run_to_file(&cfg).unwrap();
    assert_eq!(fs::read(&cfg.output).unwrap(), first);
    let text = String::from_utf8(first).unwrap();
    assert_eq!(text.lines().next().unwrap(), CSV_HEADER);
    for r in read_results(&cfg.output).unwrap() {
        assert!(r.rho_spent <= r.rho);
    }
}

#[test]
fn worker_count_does_not_change_output() {
    let cfg = ExperimentConfig::parse(CONFIG).unwrap();
    let a = dpkl::harness::run_experiment(&cfg).unwrap();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
    let b = pool.install(|| dpkl::harness::run_experiment(&cfg)).unwrap();
    assert_eq!(a, b);
}

#[test]
fn saved_instance_config() {
    let dir = tempfile::tempdir().unwrap();
    let spec = InstanceSpec::Quadratic {
        mu: 2.0,
        scale: 1.0,
        shift: 1.0,
        centers: Default::default(),
        region_radius: None,
    };
    let obj = build_instance(&spec, 60, 2, 3).unwrap();
    save_instance(&obj, &dir.path().join("inst.json")).unwrap();
    let cfg_path = dir.path().join("exp.json");
    fs::write(
        &cfg_path,
        r#"{"instance": {"type": "file", "path": "inst.json"},
            "optimizer": {"algo": "kl_spider", "rho": 2.0},
            "trials": 3}"#,
    )
    .unwrap();
    let cfg = ExperimentConfig::load(&cfg_path).unwrap();
    let rows = dpkl::harness::run_experiment(&cfg).unwrap();
    assert_eq!(rows.len(), 3);
    assert!(rows.iter().all(|r| r.n == 60 && r.d == 2));
}

#[test]
fn fit_fixture_from_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("fixture.csv");
    let rows: Vec<ResultRow> = [100usize, 200, 400, 800]
        .iter()
        .enumerate()
        .map(|(i, &n)| ResultRow {
            trial: i,
            algo: "kl_spider".into(),
            n,
            d: 10,
            rho: 1.0,
            kappa: Some(2.0),
            gamma: None,
            excess_risk: Some(7.0 / (n * n) as f64),
            final_grad_norm: 0.1,
            iters: 10,
            rho_spent: 1.0,
            stop_reason: "schedule_complete".into(),
            wall_ms: 0,
            seed: i as u64,
        })
        .collect();
    dpkl::harness::write_results(&path, &rows).unwrap();
    let back = read_results(&path).unwrap();
    assert_eq!(back, rows);
    let fit = rate_fit(&back, Axis::N, Statistic::Median).unwrap();
    assert!((fit.slope + 2.0).abs() <= 1e-9);
}

#[test]
fn wrong_header_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.csv");
    fs::write(&path, "n,excess\n1,2\n").unwrap();
    let err = read_results(&path).unwrap_err();
    assert_eq!(err.exit_code(), 2);
    assert_eq!(read_results(&dir.path().join("missing.csv")).unwrap_err().exit_code(), 3);
}

#[test]
fn failed_run_leaves_previous_results() {
    let dir = tempfile::tempdir().unwrap();
    let target = dir.path().join("results.csv");
    fs::write(&target, "previous").unwrap();
    let mut cfg = ExperimentConfig::parse(CONFIG).unwrap();
    cfg.output = target.clone();
    cfg.optimizer.algo = "no_such_algo".into();
    assert!(run_to_file(&cfg).is_err());
    assert_eq!(fs::read_to_string(&target).unwrap(), "previous");
    assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 1);
}
