//! Proximal point method: each round privately solves the strongly convex
//! problem `F(w) + L̃₁‖w − w_{t−1}‖²` with [`sc_noisy_gd_average`].

use serde::{Deserialize, Serialize};

use super::report::{AlgoDetails, Recorder, RunReport, StopReason};
use super::sc_gd::sc_noisy_gd_average;
use super::schedule::ProxSchedule;
use super::{OptimError, RunOptions};
use crate::linalg;
use crate::loss::{prox_regularize, EmpiricalObjective};
use crate::privacy::{BudgetLedger, NoiseSource, PrivacyParams};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProxTrace {
    pub schedule: ProxSchedule,
    /// `F(w_t;S)` for `t = 0..=rounds completed`.
    pub values: Vec<f64>,
    /// `‖w_t − w_{t−1}‖` per round.
    pub moves: Vec<f64>,
}

pub fn prox_point(
    obj: &EmpiricalObjective,
    sched: &ProxSchedule,
    privacy: PrivacyParams,
    w0: &[f64],
    max_sc_iters: u64,
    noise: &mut NoiseSource,
    opts: RunOptions,
) -> Result<RunReport, OptimError> {
    if sched.sub.n != obj.n() || sched.sub.d != obj.dim() {
        return Err(OptimError::config("schedule does not match the objective's n and d"));
    }
    if sched.sub.t > max_sc_iters {
        return Err(OptimError::config(format!(
            "each prox round needs T = {} noisy GD iterations, above the cap of {max_sc_iters}",
            sched.sub.t
        )));
    }
    let mut ledger = BudgetLedger::new(privacy.rho)?;
    let mut rec = Recorder::new(opts.record_iterates, opts.timing);
    let mut w = w0.to_vec();
    rec.push(&w, linalg::norm(&obj.gradient(&w)?));
    let mut values = vec![obj.value(&w)?];
    let mut moves = Vec::with_capacity(sched.rounds);
    let mut iters = 0u64;
    let mut stop = StopReason::ScheduleComplete;
    for _ in 0..sched.rounds {
        if opts.deadline.expired() {
            stop = StopReason::Timeout;
            break;
        }
        let ft = prox_regularize(obj, &w, sched.ltilde1)?;
        ledger.charge("prox_point/round", sched.rho_round)?;
        let (next, tr) = sc_noisy_gd_average(&ft, &sched.sub, &w, noise, opts.deadline)?;
        iters += tr.steps;
        moves.push(linalg::dist(&next, &w));
        w = next;
        values.push(obj.value(&w)?);
        rec.push(&w, linalg::norm(&obj.gradient(&w)?));
        if tr.timed_out {
            stop = StopReason::Timeout;
            break;
        }
    }
    let details = AlgoDetails::ProxPoint(ProxTrace {
        schedule: sched.clone(),
        values,
        moves,
    });
    rec.finish("prox_point", obj, w, ledger, iters, stop, details)
}
