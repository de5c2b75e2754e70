//! End-to-end acceptance checks. Every criterion runs, prints one line, and
//! the test fails afterwards if any of them did not pass.

use std::time::{Duration, Instant};

use dpkl::harness::{
    build_instance, rate_fit, run_experiment, Axis, CenterDist, ExperimentConfig, InstanceSpec,
    Statistic,
};
use dpkl::linalg;
use dpkl::loss::{
    certify_growth, certify_kl, gradient_sensitivity_probe, halton_ball, linear_huber_from_rows,
    make_growth_instance, make_huberized_quadratic, make_linear, make_linear_huber, region_sample,
    sign_vectors, spider_difference_probe, DataPoint, Dataset, EmpiricalObjective, GrowthSpec,
    KLSpec, Region,
};
use dpkl::optim::{
    adaptive_noisy_gd, kl_spider, spider_schedule, AdaptiveParams, AlgoDetails, OptimConfig,
    RunOptions, SpiderScheduleInput,
};
use dpkl::privacy::{exponential_mechanism, stream_seed, NoiseSource, PrivacyParams};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn quad_spec(mu: f64) -> InstanceSpec {
    InstanceSpec::Quadratic {
        mu,
        scale: 1.0,
        shift: 1.0,
        centers: CenterDist::Sign,
        region_radius: None,
    }
}

fn sweep_config(instance: InstanceSpec, algo: &str, ns: &[usize], ds: &[usize], seed: u64) -> ExperimentConfig {
    let mut optimizer = OptimConfig::new(algo, 1.0);
    optimizer.record_iterates = false;
    ExperimentConfig {
        instance,
        optimizer,
        sweep: dpkl::harness::Sweep {
            n: Some(ns.to_vec()),
            d: Some(ds.to_vec()),
            rho: None,
            kappa: None,
        },
        trials: 20,
        master_seed: seed,
        output: "unused.csv".into(),
        timeout_secs: 120.0,
        timing: false,
    }
}

fn slope_check(cfg: &ExperimentConfig, axis: Axis, lo: f64, hi: f64) -> Outcome {
    let rows = match run_experiment(cfg) {
        Ok(r) => r,
        Err(e) => return outcome(false, format!("run failed: {e}")),
    };
    let budget_ok = rows.iter().all(|r| r.rho_spent <= r.rho * (1.0 + 1e-12));
    match rate_fit(&rows, axis, Statistic::Median) {
        Ok(fit) => {
            let pts: Vec<String> = fit
                .points
                .iter()
                .map(|p| format!("{}={}:{:.3e}", axis, p.x, p.value))
                .collect();
            outcome(
                budget_ok && fit.slope >= lo && fit.slope <= hi,
                format!(
                    "slope {:.3} (want [{lo}, {hi}]), r2 {:.3}, medians [{}]",
                    fit.slope,
                    fit.r2,
                    pts.join(", ")
                ),
            )
        }
        Err(e) => outcome(false, format!("fit failed: {e}")),
    }
}

fn ledger_exactness() -> Outcome {
    let mut checked = 0;
    let mut worst = 0.0f64;
    for &n in &[3usize, 5, 10] {
        for &d in &[1usize, 2] {
            for &rho in &[0.5, 4.0, 16.0] {
                for &kappa in &[1.2, 1.5, 2.0] {
                    for &l1 in &[0.01, 0.1] {
                        for &f0 in &[0.5, 0.9] {
                            let input = SpiderScheduleInput {
                                n,
                                d,
                                rho,
                                beta: 0.1,
                                f0,
                                gamma: 1.0,
                                kappa,
                                l0: 1.0,
                                l1,
                            };
                            let Ok(sched) = spider_schedule(&input) else { continue };
                            if sched.k > 20 || sched.total_steps() > 200_000 {
                                continue;
                            }
                            // identical rows: the gradient never shrinks, so no round
                            // ends early and every planned charge is made
                            let mut row = vec![0.0; d];
                            row[0] = 1.0;
                            let obj = make_linear(Dataset::from_vectors(vec![row; n]).unwrap()).unwrap();
                            let mut noise = NoiseSource::new(checked as u64, true);
                            let r = kl_spider(
                                &obj,
                                &sched,
                                PrivacyParams::new(rho, 0.1).unwrap(),
                                &vec![0.0; d],
                                &mut noise,
                                RunOptions {
                                    record_iterates: false,
                                    ..RunOptions::default()
                                },
                            )
                            .unwrap();
                            if r.iters != sched.total_steps() {
                                return outcome(false, format!("run ended early for {input:?}"));
                            }
                            worst = worst.max((r.ledger.spent() - rho).abs() / rho);
                            checked += 1;
                        }
                    }
                }
            }
        }
    }
    outcome(
        checked >= 10 && worst <= 1e-12,
        format!("{checked} schedules with K <= 20, worst relative gap {worst:.2e}"),
    )
}

fn adaptive_ledger() -> Outcome {
    let rho = 1.0;
    let mut worst_before = 0.0f64;
    let mut worst_total = 0.0f64;
    for trial in 0..100u64 {
        let seed = stream_seed(77, &[trial]);
        let obj = build_instance(&quad_spec(1.0), 200, 5, stream_seed(seed, &[0])).unwrap();
        let mut noise = NoiseSource::new(seed, false);
        let r = adaptive_noisy_gd(
            &obj,
            AdaptiveParams {
                l0: obj.lipschitz(),
                l1: 1.0,
            },
            PrivacyParams::new(rho, 0.1).unwrap(),
            &[0.0; 5],
            &mut noise,
            RunOptions {
                record_iterates: false,
                ..RunOptions::default()
            },
        )
        .unwrap();
        let AlgoDetails::AdaptiveNoisyGd(tr) = &r.details else { unreachable!() };
        // replay the stopping rule from the recorded charges
        let mut running = 0.0;
        let last = tr.steps.len() - 1;
        for (i, s) in tr.steps.iter().enumerate() {
            let fits = running + s.rho_t <= rho / 2.0;
            if fits != (i < last) {
                return outcome(false, format!("trial {trial}: step {i} broke the stopping rule"));
            }
            running += s.charged;
        }
        worst_before = worst_before.max(tr.charged_before_final);
        worst_total = worst_total.max(r.ledger.spent());
        if (running - r.ledger.spent()).abs() > 1e-12 {
            return outcome(false, format!("trial {trial}: ledger disagrees with steps"));
        }
    }
    outcome(
        worst_before <= rho / 2.0 && worst_total <= rho,
        format!("100 runs: max before-final {worst_before:.6}, max total {worst_total:.6}"),
    )
}

fn noiseless_oracle() -> Outcome {
    // rho = 1e4 keeps the floor below F0, so the rounds do contract
    let obj = build_instance(&quad_spec(1.0), 1000, 10, 3).unwrap();
    let cfg = OptimConfig::new("kl_spider", 1e4);
    let w0 = vec![0.0; 10];
    let sched = spider_schedule(&cfg.spider_input(&obj, &w0).unwrap()).unwrap();
    let mut noise = NoiseSource::new(5, true);
    let r = kl_spider(
        &obj,
        &sched,
        cfg.privacy().unwrap(),
        &w0,
        &mut noise,
        RunOptions::default(),
    )
    .unwrap();
    let AlgoDetails::KlSpider(tr) = &r.details else { unreachable!() };
    let l0 = sched.input.l0;
    let max_err = tr.points.iter().map(|p| p.est_error).fold(0.0, f64::max);
    let target = sched.input.f0 * (1.0 / sched.c).powi(sched.k as i32);
    let excess = r.final_excess.unwrap();
    outcome(
        max_err <= 1e-8 * l0 && excess <= target,
        format!(
            "max estimator error {max_err:.2e} (limit {:.2e}); excess {excess:.3e} vs (1/c)^K F0 = {target:.3e} \
             (K = {}, floor {:.3e}, F0 {:.3e})",
            1e-8 * l0,
            sched.k,
            sched.phi_floor,
            sched.input.f0
        ),
    )
}

fn sensitivity_probes() -> Outcome {
    let (n, d, mu, clip) = (50usize, 4usize, 1.0, 0.8);
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let rows: Vec<Vec<f64>> = (0..n).map(|_| sign_vectors(d, 1.0, &mut rng)).collect();
    let obj = make_huberized_quadratic(mu, clip, Dataset::from_vectors(rows).unwrap()).unwrap();
    let draw = |r: &mut ChaCha8Rng| DataPoint::Vector(sign_vectors(d, 1.0, r));
    let grad_bound = 2.0 * clip / n as f64;
    let mut worst_grad = 0.0f64;
    let mut worst_diff = 0.0f64;
    let (gamma, kappa) = (1.0 / (2.0 * mu).sqrt(), 2.0);
    let phis = [1.0, 0.3, 0.05, 1e-3];
    for (i, w) in halton_ball(&vec![0.0; d], 2.0, 10).into_iter().enumerate() {
        let g = gradient_sensitivity_probe(&obj, &w, 100, draw, &mut rng).unwrap();
        worst_grad = worst_grad.max(g / grad_bound);
        let phi: f64 = phis[i % phis.len()];
        let len = phi.powf(1.0 / kappa) / (4.0 * gamma * mu);
        let mut dir: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
        let nrm = linalg::norm(&dir);
        linalg::scale(&mut dir, len / nrm);
        let s = spider_difference_probe(&obj, &w, &dir, 100, draw, &mut rng).unwrap();
        worst_diff = worst_diff.max(s / (phi.powf(1.0 / kappa) / (2.0 * gamma * n as f64)));
    }
    let tol = 1.0 + 1e-6;
    outcome(
        worst_grad <= tol && worst_diff <= tol,
        format!(
            "10^3 neighbour pairs each: gradient ratio {worst_grad:.4}, difference ratio {worst_diff:.4} (limit 1)"
        ),
    )
}

/// Share of `runs` seeded KL Spider runs in which some estimate misses the
/// gradient by more than `Φ̂_k^{1/κ}/(8γ)`, with the worst error/bound ratio
/// and whether the unclamped floor stays below `F0` (the bound's premise).
fn spider_error_violations(rho: f64, beta: f64, runs: u64, master: u64) -> (usize, f64, bool) {
    let mut violations = 0;
    let mut worst = 0.0f64;
    let mut premise = true;
    for trial in 0..runs {
        let seed = stream_seed(master, &[trial]);
        let obj = build_instance(&quad_spec(1.0), 1000, 10, stream_seed(seed, &[0])).unwrap();
        let mut cfg = OptimConfig::new("kl_spider", rho);
        cfg.beta = beta;
        let w0 = vec![0.0; 10];
        let sched = spider_schedule(&cfg.spider_input(&obj, &w0).unwrap()).unwrap();
        let p = &sched.input;
        let unclamped = (32.0 * p.gamma * p.l0 * (sched.k as f64 * p.d as f64 * (1.0 / sched.beta_prime).ln()).sqrt()
            / (p.n as f64 * p.rho.sqrt()))
        .powf(p.kappa);
        premise &= unclamped <= p.f0;
        let mut noise = NoiseSource::new(seed, false);
        let r = kl_spider(&obj, &sched, cfg.privacy().unwrap(), &w0, &mut noise, RunOptions::default())
            .unwrap();
        let AlgoDetails::KlSpider(tr) = &r.details else { unreachable!() };
        let ratio = tr
            .points
            .iter()
            .map(|q| q.est_error / (sched.rounds[q.round].phi.powf(1.0 / p.kappa) / (8.0 * p.gamma)))
            .fold(0.0, f64::max);
        worst = worst.max(ratio);
        if ratio > 1.0 {
            violations += 1;
        }
    }
    (violations, worst, premise)
}

fn gradient_error_concentration() -> Outcome {
    let beta = 0.05;
    let runs = 200;
    // n = 1000, d = 10; at rho = 1e4 the floor sits below F0 as the bound requires
    let (v, worst, premise) = spider_error_violations(1e4, beta, runs, 99);
    let rate = v as f64 / runs as f64;
    let (v1, worst1, premise1) = spider_error_violations(1.0, beta, 20, 98);
    outcome(
        premise && rate <= 2.0 * beta,
        format!(
            "rho=1e4: {v}/{runs} runs violated (rate {rate:.3}, limit {}), worst error/bound {worst:.3}, \
             floor below F0: {premise}; rho=1: {v1}/20 violated, worst {worst1:.3}, floor below F0: {premise1}",
            2.0 * beta
        ),
    )
}

fn exponential_mechanism_distribution() -> Outcome {
    let scores = [0.0, -0.4, -1.1, 0.25, -2.0];
    let (sens, eps) = (0.5, 1.3);
    // independent softmax with explicit max subtraction
    let logits: Vec<f64> = scores.iter().map(|s| eps * s / (2.0 * sens)).collect();
    let m = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let z: f64 = logits.iter().map(|l| (l - m).exp()).sum();
    let p: Vec<f64> = logits.iter().map(|l| (l - m).exp() / z).collect();
    let draws = 100_000;
    let mut counts = [0usize; 5];
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for _ in 0..draws {
        counts[exponential_mechanism(&scores, sens, eps, &mut rng).unwrap()] += 1;
    }
    let tv: f64 = 0.5
        * counts
            .iter()
            .zip(&p)
            .map(|(c, q)| (*c as f64 / draws as f64 - q).abs())
            .sum::<f64>();
    outcome(tv <= 0.02, format!("TV distance {tv:.5} over 10^5 draws"))
}

fn certifier_correctness() -> Outcome {
    let mut notes = Vec::new();
    let mut pass = true;
    let mu = 1.5;
    let quad = build_instance(&quad_spec(mu), 60, 3, 12).unwrap();
    let f_star = quad.f_star().unwrap();
    let w_star = quad.w_star().unwrap().to_vec();
    let gamma = 1.0 / (2.0 * mu).sqrt();
    let ball = Region::Ball {
        center: w_star.clone(),
        radius: 3.0,
    };
    let sample = region_sample(&ball, &w_star, Some(&w_star), 512);
    let tight = KLSpec::new(gamma, 2.0, ball.clone()).unwrap();
    let half = KLSpec::new(gamma / 2.0, 2.0, ball.clone()).unwrap();
    let a = certify_kl(&quad, &tight, &sample, f_star).unwrap();
    let b = certify_kl(&quad, &half, &sample, f_star).unwrap();
    pass &= a.pass && !b.pass;
    notes.push(format!("quadratic tight {} / halved {}", a.pass, b.pass));

    let growth = make_growth_instance(0.25, 2.0, 0.5, 200, false).unwrap();
    let gw = growth.w_star().unwrap().to_vec();
    let gsample = region_sample(
        &Region::Ball {
            center: gw.clone(),
            radius: 0.2,
        },
        &gw,
        Some(&gw),
        512,
    );
    let g = certify_growth(&growth, &GrowthSpec::new(1.0, 2.0).unwrap(), &gsample).unwrap();
    pass &= g.pass;
    notes.push(format!("sign-token growth {}", g.pass));

    let convex: Vec<(&str, EmpiricalObjective)> = vec![
        ("quadratic", quad.clone()),
        ("linear-huber", {
            let mut rng = ChaCha8Rng::seed_from_u64(3);
            make_linear_huber(3, 40, 1.0, 1.0, 30, &mut rng).unwrap()
        }),
    ];
    for (name, obj) in convex {
        let gs = obj.meta().growth_spec.unwrap();
        let ws = obj.w_star().unwrap().to_vec();
        let region = Region::Ball {
            center: ws.clone(),
            radius: 1.0,
        };
        let kl = gs.to_kl(region.clone());
        let pts = region_sample(&region, &ws, Some(&ws), 512);
        let r = certify_kl(&obj, &kl, &pts, obj.f_star().unwrap()).unwrap();
        pass &= r.pass;
        notes.push(format!("{name} converted KL {}", r.pass));
    }
    outcome(pass, notes.join(", "))
}

fn huber_instance() -> Outcome {
    let mut worst = 0.0f64;
    let mut inside = true;
    for seed in 0..5u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (d, n, l0, radius) = (4usize, 64usize, 1.0, 0.5);
        let nonzero = 16 + 8 * seed as usize;
        let mut rows: Vec<Vec<f64>> = (0..nonzero).map(|_| sign_vectors(d, l0, &mut rng)).collect();
        rows.extend((nonzero..n).map(|_| vec![0.0; d]));
        let obj = linear_huber_from_rows(rows.clone(), l0, radius).unwrap();
        let lambda = nonzero as f64 * l0 / (2.0 * n as f64 * radius);
        // minimizer from the raw rows, not from the instance
        let mut w_star = vec![0.0; d];
        for r in &rows {
            linalg::axpy(-1.0 / (2.0 * n as f64 * lambda), r, &mut w_star);
        }
        inside &= linalg::norm(&w_star) <= radius;
        let f = |w: &[f64]| {
            let h = linalg::norm(w).powi(2);
            rows.iter().map(|x| linalg::dot(w, x) + lambda * h).sum::<f64>() / n as f64
        };
        for w in halton_ball(&vec![0.0; d], 4.0 * radius, 200) {
            let lhs = obj.value(&w).unwrap() - obj.value(&w_star).unwrap();
            let direct = f(&w) - f(&w_star);
            let rhs = lambda * linalg::dist(&w, &w_star).powi(2);
            let scale = rhs.abs().max(1e-300);
            worst = worst.max((lhs - rhs).abs() / scale).max((direct - rhs).abs() / scale);
        }
        let declared = obj.w_star().unwrap();
        worst = worst.max(linalg::dist(declared, &w_star) / linalg::norm(&w_star).max(1e-300));
    }
    outcome(
        inside && worst <= 1e-10,
        format!("minimizer inside B(0, D): {inside}; worst relative identity gap {worst:.2e}"),
    )
}

#[test]
fn acceptance_suite() {
    type Check = fn() -> Outcome;
    let criteria: Vec<(u32, &str, Duration, Check)> = vec![
        (1, "ledger exactness (KL Spider, K <= 20)", Duration::from_secs(1), ledger_exactness),
        (2, "ledger bound (adaptive noisy GD)", Duration::from_secs(10), adaptive_ledger),
        (3, "noiseless oracle equivalence", Duration::from_secs(5), noiseless_oracle),
        (4, "rate exponent in n (KL Spider)", Duration::from_secs(300), || {
            slope_check(
                &sweep_config(quad_spec(1.0), "kl_spider", &[500, 1000, 2000, 4000], &[10], 401),
                Axis::N,
                -2.6,
                -1.4,
            )
        }),
        (5, "rate exponent in d (KL Spider)", Duration::from_secs(300), || {
            slope_check(
                &sweep_config(quad_spec(1.0), "kl_spider", &[2000], &[4, 16, 64], 501),
                Axis::D,
                0.4,
                1.6,
            )
        }),
        (6, "rate exponent in n (adaptive noisy GD)", Duration::from_secs(300), || {
            slope_check(
                &sweep_config(quad_spec(1.0), "adaptive_noisy_gd", &[500, 1000, 2000, 4000], &[10], 601),
                Axis::N,
                -2.6,
                -1.2,
            )
        }),
        (7, "subsolver rate in n (strongly convex noisy GD)", Duration::from_secs(180), || {
            let instance = InstanceSpec::Prox {
                inner: Box::new(quad_spec(1.0)),
                weight: 0.5,
                center: None,
            };
            let mut cfg = sweep_config(instance, "sc_noisy_gd", &[250, 500, 1000], &[10], 701);
            cfg.optimizer.ltilde1 = Some(0.5);
            slope_check(&cfg, Axis::N, -2.6, -1.4)
        }),
        (8, "sensitivity probes", Duration::from_secs(30), sensitivity_probes),
        (9, "gradient-error concentration", Duration::from_secs(120), gradient_error_concentration),
        (10, "exponential mechanism distribution", Duration::from_secs(5), exponential_mechanism_distribution),
        (11, "certifier correctness", Duration::from_secs(10), certifier_correctness),
        (12, "Huber instance identity", Duration::from_secs(1), huber_instance),
    ];
    let mut failed = Vec::new();
    let mut lines = Vec::new();
    for (id, name, limit, check) in criteria {
        let start = Instant::now();
        let out = check();
        let took = start.elapsed();
        let in_time = took <= limit;
        let pass = out.pass && in_time;
        let line = format!(
            "criterion {id:>2} {}: {name} [{:.2}s / {}s] {}",
            if pass { "PASS" } else { "FAIL" },
            took.as_secs_f64(),
            limit.as_secs(),
            out.detail
        );
        println!("{line}");
        lines.push(line);
        if !pass {
            failed.push(id);
        }
    }
    println!("acceptance: {} of 12 passed", 12 - failed.len());
    assert!(failed.is_empty(), "failed criteria: {failed:?}\n{}", lines.join("\n"));
}
