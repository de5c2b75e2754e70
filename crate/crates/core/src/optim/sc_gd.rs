//! Projected noisy gradient descent with `1/(L̃₁t)` steps and weighted
//! averaging, for strongly convex (prox-regularized) objectives.

use serde::{Deserialize, Serialize};

use super::report::{AlgoDetails, Recorder, RunReport, StopReason};
use super::schedule::ScSchedule;
use super::{Deadline, OptimError, RunOptions};
use crate::linalg;
use crate::loss::EmpiricalObjective;
use crate::privacy::{BudgetLedger, NoiseSource, PrivacyParams};

const DEADLINE_STRIDE: u64 = 4096;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScTrace {
    pub schedule: ScSchedule,
    /// Gradient steps actually taken (`T − 1` unless timed out).
    pub steps: u64,
    pub projections: u64,
    /// `max_t ‖w_t − w₀‖`.
    pub max_radius: f64,
    pub timed_out: bool,
}

/// Runs the iteration and returns `w̄ = (2/(T(T+1)))·Σ_{t=1}^{T} t·w_t`.
///
/// The average is maintained incrementally as
/// `w̄_t = w̄_{t−1} + (2/(t+1))(w_t − w̄_{t−1})`, which equals the weighted
/// sum without accumulating `O(T²)`-sized partial sums. No ledger is touched.
pub fn sc_noisy_gd_average(
    obj: &EmpiricalObjective,
    sched: &ScSchedule,
    w0: &[f64],
    noise: &mut NoiseSource,
    deadline: Deadline,
) -> Result<(Vec<f64>, ScTrace), OptimError> {
    if w0.len() != obj.dim() {
        return Err(OptimError::config(format!(
            "w0 has dimension {} but objective has d = {}",
            w0.len(),
            obj.dim()
        )));
    }
    let mut w = w0.to_vec();
    let mut avg = w.clone();
    let mut grad = vec![0.0; w.len()];
    let mut projections = 0u64;
    let mut max_radius = 0.0f64;
    let mut steps = 0u64;
    let mut timed_out = false;
    for t in 1..sched.t {
        if t % DEADLINE_STRIDE == 0 && deadline.expired() {
            timed_out = true;
            break;
        }
        obj.gradient_into(&w, &mut grad)?;
        noise.perturb(&mut grad, sched.sigma);
        let eta = 1.0 / (sched.ltilde1 * t as f64);
        linalg::axpy(-eta, &grad, &mut w);
        if linalg::project_ball(&mut w, w0, sched.radius) {
            projections += 1;
        }
        max_radius = max_radius.max(linalg::dist(&w, w0));
        // w is now w_{t+1}
        let weight = 2.0 / (t as f64 + 2.0);
        for (a, wi) in avg.iter_mut().zip(&w) {
            *a += weight * (wi - *a);
        }
        steps += 1;
    }
    Ok((
        avg,
        ScTrace {
            schedule: *sched,
            steps,
            projections,
            max_radius,
            timed_out,
        },
    ))
}

/// Standalone run: the whole allocation `sched.rho` is charged as one entry.
pub fn sc_noisy_gd(
    obj: &EmpiricalObjective,
    sched: &ScSchedule,
    privacy: PrivacyParams,
    w0: &[f64],
    noise: &mut NoiseSource,
    opts: RunOptions,
) -> Result<RunReport, OptimError> {
    if sched.n != obj.n() || sched.d != obj.dim() {
        return Err(OptimError::config("schedule does not match the objective's n and d"));
    }
    let mut ledger = BudgetLedger::new(privacy.rho)?;
    ledger.charge("sc_noisy_gd", sched.rho)?;
    let mut rec = Recorder::new(opts.record_iterates, opts.timing);
    rec.push(w0, linalg::norm(&obj.gradient(w0)?));
    let (avg, trace) = sc_noisy_gd_average(obj, sched, w0, noise, opts.deadline)?;
    rec.push(&avg, linalg::norm(&obj.gradient(&avg)?));
    let stop = if trace.timed_out {
        StopReason::Timeout
    } else {
        StopReason::ScheduleComplete
    };
    let iters = trace.steps;
    rec.finish(
        "sc_noisy_gd",
        obj,
        avg,
        ledger,
        iters,
        stop,
        AlgoDetails::ScNoisyGd(trace),
    )
}
