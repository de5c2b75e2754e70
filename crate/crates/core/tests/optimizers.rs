use dpkl::harness::{build_instance, CenterDist, InstanceSpec};
use dpkl::loss::EmpiricalObjective;
use dpkl::optim::{
    run_noiseless, select_stationary, AlgoDetails, Deadline, OptimConfig, OptimError, Optimizer,
    Registry, RunReport, StopReason,
};
use dpkl::privacy::NoiseSource;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn quad(n: usize, d: usize, seed: u64) -> EmpiricalObjective {
    let spec = InstanceSpec::Quadratic {
        mu: 1.0,
        scale: 1.0,
        shift: 1.0,
        centers: CenterDist::Sign,
        region_radius: None,
    };
    build_instance(&spec, n, d, seed).unwrap()
}

fn config(algo: &str, rho: f64, seed: u64) -> OptimConfig {
    let mut cfg = OptimConfig::new(algo, rho);
    cfg.seed = seed;
    cfg.ltilde1 = Some(1.0);
    cfg
}

fn run(reg: &Registry, obj: &EmpiricalObjective, cfg: &OptimConfig) -> RunReport {
    let mut noise = NoiseSource::new(cfg.seed, cfg.noiseless);
    reg.get(&cfg.algo)
        .unwrap()
        .run(obj, cfg, &mut noise, Deadline::none())
        .unwrap()
}

#[test]
fn builtin_names() {
    let reg = Registry::builtin();
    let names: Vec<_> = reg.names().collect();
    assert_eq!(names, ["adaptive_noisy_gd", "kl_spider", "prox_point", "sc_noisy_gd"]);
    assert!(matches!(reg.get("sgd"), Err(OptimError::UnknownAlgo(_))));
}

struct StayPut;

impl Optimizer for StayPut {
    fn name(&self) -> &'static str {
        "stay_put"
    }

    fn run(
        &self,
        obj: &EmpiricalObjective,
        cfg: &OptimConfig,
        _noise: &mut NoiseSource,
        _deadline: Deadline,
    ) -> Result<RunReport, OptimError> {
        let w0 = cfg.start(obj)?;
        let ledger = dpkl::privacy::BudgetLedger::new(cfg.rho)?;
        let g = dpkl::linalg::norm(&obj.gradient(&w0)?);
        let mut rec = dpkl::optim::Recorder::new(true, false);
        rec.push(&w0, g);
        let trace = dpkl::optim::ScTrace {
            schedule: dpkl::optim::sc_schedule(obj.n(), obj.dim(), cfg.rho, cfg.beta, 1.0, 1.0, 1 << 40)?,
            steps: 0,
            projections: 0,
            max_radius: 0.0,
            timed_out: false,
        };
        rec.finish(
            "stay_put",
            obj,
            w0,
            ledger,
            0,
            StopReason::ScheduleComplete,
            AlgoDetails::ScNoisyGd(trace),
        )
    }
}

#[test]
fn custom_strategy_registers() {
    let mut reg = Registry::builtin();
    reg.register(Box::new(StayPut));
    let obj = quad(20, 2, 0);
    let r = run(&reg, &obj, &config("stay_put", 1.0, 0));
    assert_eq!(r.algo, "stay_put");
    assert_eq!(r.ledger.spent(), 0.0);
    assert_eq!(r.iters, 0);
}

#[test]
fn every_builtin_reduces_excess_without_noise() {
    let reg = Registry::builtin();
    let obj = quad(200, 3, 1);
    let start = obj.excess(&[0.0; 3]).unwrap().unwrap();
    for name in reg.names() {
        let cfg = config(name, 4.0, 1);
        let r = run_noiseless(reg.get(name).unwrap(), &obj, &cfg).unwrap();
        assert!(r.final_excess.unwrap() < start, "{name}: {:?} vs {start}", r.final_excess);
        assert!(r.ledger.spent() <= 4.0 * (1.0 + 1e-12), "{name}");
    }
}

#[test]
fn reports_serialize() {
    let reg = Registry::builtin();
    let obj = quad(50, 2, 2);
    for name in reg.names() {
        let r = run(&reg, &obj, &config(name, 1.0, 3));
        let text = serde_json::to_string(&r).unwrap();
        let back: RunReport = serde_json::from_str(&text).unwrap();
        assert_eq!(back.final_point, r.final_point);
        assert_eq!(back.ledger.spent(), r.ledger.spent());
    }
}

#[test]
fn selection_over_trajectory_charges_extra_half() {
    let reg = Registry::builtin();
    let obj = quad(300, 4, 5);
    let cfg = config("kl_spider", 1.0, 9);
    let r = run(&reg, &obj, &cfg);
    let mut ledger = r.ledger.clone();
    let before = ledger.spent();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let i = select_stationary(&r.grad_norms, obj.n(), 1.0, obj.lipschitz(), &mut ledger, &mut rng)
        .unwrap();
    assert!(i < r.iterates.len());
    assert!((ledger.spent() - before - 0.5).abs() < 1e-15);
}

#[test]
fn same_seed_same_report() {
    let reg = Registry::builtin();
    let obj = quad(100, 3, 4);
    for name in reg.names() {
        let cfg = config(name, 1.0, 42);
        assert_eq!(run(&reg, &obj, &cfg), run(&reg, &obj, &cfg), "{name}");
    }
}

#[test]
fn vacuous_spider_regime_is_config_error() {
    let reg = Registry::builtin();
    let obj = quad(5, 50, 0);
    let err = reg
        .get("kl_spider")
        .unwrap()
        .run(&obj, &config("kl_spider", 0.01, 0), &mut NoiseSource::new(0, false), Deadline::none())
        .unwrap_err();
    assert!(err.to_string().contains("ln(F0)"), "{err}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]
    #[test]
    fn no_run_overspends(seed in 0u64..1000, rho in 0.2f64..8.0, which in 0usize..4) {
        let reg = Registry::builtin();
        let name = reg.names().nth(which).unwrap();
        let obj = quad(150, 3, seed);
        let r = run(&reg, &obj, &config(name, rho, seed));
        prop_assert!(r.ledger.spent() <= rho * (1.0 + 1e-12));
        prop_assert!(r.final_excess.unwrap() >= -1e-9);
        prop_assert!(r.final_point.iter().all(|x| x.is_finite()));
    }
}
