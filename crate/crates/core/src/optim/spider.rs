//! KL Spider: phased noisy variance-reduced gradient descent with
//! normalized steps and a per-phase excess-risk target.

use serde::{Deserialize, Serialize};

use super::report::{AlgoDetails, Recorder, RunReport, StopReason};
use super::schedule::SpiderSchedule;
use super::{OptimError, RunOptions};
use crate::linalg;
use crate::loss::EmpiricalObjective;
use crate::privacy::{BudgetLedger, NoiseSource, PrivacyParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RoundExit {
    /// The noisy gradient fell below `(7/(8γ))Φ̂_k^{1/κ}`; the small-gradient
    /// iterate is carried to the next round.
    GradientFloor,
    /// `T_k` steps were taken; `w_{k,T_k}` is carried.
    LengthReached,
}

/// State at one estimator point `(k, t)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpiderPoint {
    pub round: usize,
    pub t: u64,
    /// `‖∇_{k,t}‖` of the running (noisy) estimate.
    pub est_norm: f64,
    /// `‖∇_{k,t} − ∇F(w_{k,t};S)‖`.
    pub est_error: f64,
    pub true_grad_norm: f64,
    /// Step size used from this point, if a step was taken.
    pub eta: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpiderRoundTrace {
    pub round: usize,
    pub steps: u64,
    pub exit: RoundExit,
    /// Estimate norm that ended the round.
    pub exit_norm: f64,
    pub threshold: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpiderTrace {
    pub schedule: SpiderSchedule,
    pub rounds: Vec<SpiderRoundTrace>,
    pub points: Vec<SpiderPoint>,
    /// `max ‖w_{k,t} − w₀‖` over the run.
    pub max_displacement: f64,
}

pub fn kl_spider(
    obj: &EmpiricalObjective,
    sched: &SpiderSchedule,
    privacy: PrivacyParams,
    w0: &[f64],
    noise: &mut NoiseSource,
    opts: RunOptions,
) -> Result<RunReport, OptimError> {
    let p = &sched.input;
    if p.n != obj.n() || p.d != obj.dim() {
        return Err(OptimError::config(format!(
            "schedule built for (n, d) = ({}, {}) but objective has ({}, {})",
            p.n,
            p.d,
            obj.n(),
            obj.dim()
        )));
    }
    if p.rho != privacy.rho {
        return Err(OptimError::config("schedule and privacy parameters disagree on rho"));
    }
    let mut rec = Recorder::new(opts.record_iterates, opts.timing);
    let mut ledger = BudgetLedger::new(privacy.rho)?;
    let mut w = w0.to_vec();
    let mut grad = obj.gradient(&w)?;
    let mut grad_next = vec![0.0; w.len()];
    rec.push(&w, linalg::norm(&grad));

    let mut rounds = Vec::with_capacity(sched.k);
    let mut points = Vec::new();
    let mut max_disp = 0.0f64;
    let mut iters = 0u64;
    let mut stop = StopReason::ScheduleComplete;

    'outer: for (k, round) in sched.rounds.iter().enumerate() {
        if opts.deadline.expired() {
            stop = StopReason::Timeout;
            break;
        }
        let phi_root = round.phi.powf(1.0 / p.kappa);
        let threshold = 7.0 / (8.0 * p.gamma) * phi_root;
        let mut est = grad.clone();
        noise.perturb(&mut est, sched.sigma_hat_applied());
        ledger.charge("kl_spider/fresh", sched.fresh_charge())?;
        let diff_sigma = sched.sigma_applied(k);
        let diff_charge = sched.diff_charge(k);

        let mut t = 0u64;
        let (exit, exit_norm) = loop {
            let est_norm = linalg::norm(&est);
            let point = SpiderPoint {
                round: k,
                t,
                est_norm,
                est_error: linalg::dist(&est, &grad),
                true_grad_norm: linalg::norm(&grad),
                eta: None,
            };
            if est_norm < threshold {
                points.push(point);
                break (RoundExit::GradientFloor, est_norm);
            }
            if t == round.t_k {
                points.push(point);
                break (RoundExit::LengthReached, est_norm);
            }
            if opts.deadline.expired() {
                points.push(point);
                stop = StopReason::Timeout;
                rounds.push(SpiderRoundTrace {
                    round: k,
                    steps: t,
                    exit: RoundExit::LengthReached,
                    exit_norm: est_norm,
                    threshold,
                });
                break 'outer;
            }
            let eta = phi_root / (4.0 * p.gamma * p.l1 * est_norm);
            points.push(SpiderPoint {
                eta: Some(eta),
                ..point
            });
            linalg::axpy(-eta, &est, &mut w);
            obj.gradient_into(&w, &mut grad_next)?;
            for ((e, gn), g) in est.iter_mut().zip(&grad_next).zip(&grad) {
                *e += gn - g;
            }
            noise.perturb(&mut est, diff_sigma);
            ledger.charge("kl_spider/difference", diff_charge)?;
            std::mem::swap(&mut grad, &mut grad_next);
            max_disp = max_disp.max(linalg::dist(&w, w0));
            rec.push(&w, linalg::norm(&grad));
            t += 1;
            iters += 1;
        };
        rounds.push(SpiderRoundTrace {
            round: k,
            steps: t,
            exit,
            exit_norm,
            threshold,
        });
    }

    let details = AlgoDetails::KlSpider(SpiderTrace {
        schedule: sched.clone(),
        rounds,
        points,
        max_displacement: max_disp,
    });
    rec.finish("kl_spider", obj, w, ledger, iters, stop, details)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::loss::{make_linear, make_quadratic_pl, Dataset};
    use crate::optim::schedule::{spider_schedule, SpiderScheduleInput};

    fn quad_instance() -> EmpiricalObjective {
        let centers = Dataset::from_vectors(vec![
            vec![1.0, 2.0],
            vec![3.0, 0.0],
            vec![2.0, 1.0],
            vec![2.0, 1.0],
        ])
        .unwrap();
        make_quadratic_pl(1.0, centers).unwrap()
    }

    fn quad_schedule(obj: &EmpiricalObjective, n: usize, rho: f64) -> SpiderSchedule {
        // w0 = 0, w* = (2, 1): F0 = 2.5, ‖w0 − w*‖ = √5
        let l0 = 1.0 * 5f64.sqrt();
        spider_schedule(&SpiderScheduleInput {
            n,
            d: obj.dim(),
            rho,
            beta: 0.1,
            f0: 2.5,
            gamma: 1.0 / 2f64.sqrt(),
            kappa: 2.0,
            l0,
            l1: 1.0,
        })
        .unwrap()
    }

    fn trace(r: &RunReport) -> &SpiderTrace {
        match &r.details {
            AlgoDetails::KlSpider(t) => t,
            _ => unreachable!(),
        }
    }

    #[test]
    fn noiseless_estimator_is_exact_and_descends() {
        let obj = quad_instance();
        let sched = quad_schedule(&obj, 4, 1e8);
        let privacy = PrivacyParams::new(1e8, 0.1).unwrap();
        let mut noise = NoiseSource::new(1, true);
        let r = kl_spider(&obj, &sched, privacy, &[0.0, 0.0], &mut noise, RunOptions::default())
            .unwrap();
        let tr = trace(&r);
        for p in &tr.points {
            assert!(p.est_error <= 1e-8 * 5f64.sqrt(), "{p:?}");
        }
        let excess: Vec<f64> = r
            .iterates
            .iter()
            .map(|w| obj.excess(w).unwrap().unwrap())
            .collect();
        for w in excess.windows(2) {
            assert!(w[1] <= w[0] * (1.0 + 1e-12));
        }
        // the guarantee the phase recursion actually delivers
        let last_phi = tr.schedule.rounds.last().unwrap().phi;
        assert!(r.final_excess.unwrap() <= last_phi);
    }

    #[test]
    fn step_rules_hold() {
        let obj = quad_instance();
        let sched = quad_schedule(&obj, 4, 1e6);
        let privacy = PrivacyParams::new(1e6, 0.1).unwrap();
        let mut noise = NoiseSource::new(2, false);
        let r = kl_spider(&obj, &sched, privacy, &[0.0, 0.0], &mut noise, RunOptions::default())
            .unwrap();
        let tr = trace(&r);
        let g = sched.input.gamma;
        for p in &tr.points {
            let phi_root = sched.rounds[p.round].phi.sqrt();
            if let Some(eta) = p.eta {
                assert!((4.0 * g * eta * p.est_norm - phi_root).abs() <= 1e-12 * phi_root);
                assert!(p.est_norm >= 7.0 / (8.0 * g) * phi_root);
                assert!(eta <= 2.0 / 7.0 * (1.0 + 1e-12));
            }
        }
        for rt in &tr.rounds {
            if rt.exit == RoundExit::GradientFloor {
                assert!(rt.exit_norm < rt.threshold);
            }
        }
        assert!(tr.max_displacement <= sched.trajectory_bound());
        assert!(r.ledger.spent() <= r.ledger.cap());
    }

    #[test]
    fn full_length_run_spends_exactly_rho() {
        // a linear objective never reaches the gradient floor
        let obj = make_linear(Dataset::from_vectors(vec![vec![1.0, 0.0]; 3]).unwrap()).unwrap();
        let sched = spider_schedule(&SpiderScheduleInput {
            n: 3,
            d: 2,
            rho: 4.0,
            beta: 0.1,
            f0: 0.5,
            gamma: 1.0,
            kappa: 1.5,
            l0: 1.0,
            l1: 0.01,
        })
        .unwrap();
        assert!(sched.k <= 20, "K = {}", sched.k);
        let privacy = PrivacyParams::new(4.0, 0.1).unwrap();
        let mut noise = NoiseSource::new(3, true);
        let r = kl_spider(&obj, &sched, privacy, &[0.0, 0.0], &mut noise, RunOptions::default())
            .unwrap();
        assert_eq!(r.iters, sched.total_steps());
        assert!(((r.ledger.spent() - 4.0) / 4.0).abs() <= 1e-12);
        assert!(trace(&r)
            .rounds
            .iter()
            .all(|rt| rt.exit == RoundExit::LengthReached));
    }

    #[test]
    fn deterministic_given_seed() {
        let obj = quad_instance();
        let sched = quad_schedule(&obj, 4, 1e6);
        let privacy = PrivacyParams::new(1e6, 0.1).unwrap();
        let run = |s| {
            let mut noise = NoiseSource::new(s, false);
            kl_spider(&obj, &sched, privacy, &[0.0, 0.0], &mut noise, RunOptions::default())
                .unwrap()
        };
        assert_eq!(run(9), run(9));
        assert_ne!(run(9).final_point, run(10).final_point);
    }

    #[test]
    fn mismatched_schedule_rejected() {
        let obj = quad_instance();
        let sched = quad_schedule(&obj, 5, 1e6);
        let privacy = PrivacyParams::new(1e6, 0.1).unwrap();
        let mut noise = NoiseSource::new(0, true);
        assert!(kl_spider(&obj, &sched, privacy, &[0.0, 0.0], &mut noise, RunOptions::default())
            .is_err());
    }
}
