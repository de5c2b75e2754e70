//! Adaptive noisy gradient descent: the per-step noise follows a privately
//! estimated gradient norm, and the run stops once the adaptively chosen
//! charges exhaust half the budget.

use serde::{Deserialize, Serialize};

use super::report::{AlgoDetails, Recorder, RunReport, StopReason};
use super::{OptimError, RunOptions};
use crate::linalg;
use crate::loss::EmpiricalObjective;
use crate::privacy::{BudgetLedger, NoiseSource, PrivacyParams};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdaptiveParams {
    pub l0: f64,
    pub l1: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdaptiveStep {
    pub t: u64,
    /// Noisy gradient-norm estimate (may be negative).
    pub n_t: f64,
    pub sigma_t: f64,
    pub rho_t: f64,
    /// Amount actually charged for this step.
    pub charged: f64,
    pub true_grad_norm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdaptiveTrace {
    pub params: AdaptiveParams,
    pub eta: f64,
    /// `A = ln(n√ρ/β)`.
    pub log_a: f64,
    pub sigma_hat: f64,
    pub sigma_floor: f64,
    pub steps: Vec<AdaptiveStep>,
    /// Ledger total before the step that crossed `ρ/2`.
    pub charged_before_final: f64,
}

/// `σ_t = max{N_t/√(dA), 2L₀/(n√ρ)}`.
pub fn adaptive_sigma(n_t: f64, d: usize, log_a: f64, sigma_floor: f64) -> f64 {
    (n_t / (d as f64 * log_a).sqrt()).max(sigma_floor)
}

/// `ρ_t = min{L₀²dA/(n²N_t²), ρ/2} + √ρ/n`.
pub fn adaptive_rho(n_t: f64, l0: f64, d: usize, log_a: f64, n: usize, rho: f64) -> f64 {
    let nf = n as f64;
    let adaptive = l0 * l0 * d as f64 * log_a / (nf * nf * n_t * n_t);
    adaptive.min(rho / 2.0) + rho.sqrt() / nf
}

pub fn adaptive_noisy_gd(
    obj: &EmpiricalObjective,
    params: AdaptiveParams,
    privacy: PrivacyParams,
    w0: &[f64],
    noise: &mut NoiseSource,
    opts: RunOptions,
) -> Result<RunReport, OptimError> {
    let n = obj.n();
    let d = obj.dim();
    let nf = n as f64;
    let rho = privacy.rho;
    if !(params.l0 > 0.0 && params.l1 > 0.0) {
        return Err(OptimError::config("L0 and L1 must be positive"));
    }
    let log_a = (nf * rho.sqrt() / privacy.beta).ln();
    if !(log_a > 0.0) {
        return Err(OptimError::config(format!(
            "log term A = ln(n*sqrt(rho)/beta) = {log_a:.6} is not positive"
        )));
    }
    let eta = 1.0 / (2.0 * params.l1);
    let sigma_hat = params.l0 / (nf.sqrt() * rho.powf(0.25));
    let sigma_floor = 2.0 * params.l0 / (nf * rho.sqrt());

    let mut rec = Recorder::new(opts.record_iterates, opts.timing);
    let mut ledger = BudgetLedger::new(rho)?;
    let mut w = w0.to_vec();
    let mut grad = vec![0.0; d];
    let mut steps = Vec::new();
    let mut stop = StopReason::BudgetExhausted;
    let mut charged_before_final = 0.0;
    let mut t = 0u64;

    loop {
        obj.gradient_into(&w, &mut grad)?;
        let gn = linalg::norm(&grad);
        rec.push(&w, gn);
        if opts.deadline.expired() {
            stop = StopReason::Timeout;
            break;
        }
        let n_t = gn + noise.scalar(sigma_hat);
        let sigma_t = adaptive_sigma(n_t, d, log_a, sigma_floor);
        noise.perturb(&mut grad, sigma_t);
        linalg::axpy(-eta, &grad, &mut w);
        let rho_t = adaptive_rho(n_t, params.l0, d, log_a, n, rho);
        let before = ledger.spent();
        let continues = before + rho_t <= rho / 2.0;
        let charged = if continues { rho_t } else { rho_t.min(rho / 2.0) };
        let label = if continues {
            "adaptive/step"
        } else {
            "adaptive/final_release"
        };
        ledger.charge(label, charged)?;
        steps.push(AdaptiveStep {
            t,
            n_t,
            sigma_t,
            rho_t,
            charged,
            true_grad_norm: gn,
        });
        t += 1;
        if !continues {
            charged_before_final = before;
            let g = obj.gradient(&w)?;
            rec.push(&w, linalg::norm(&g));
            break;
        }
    }
    if stop == StopReason::Timeout {
        charged_before_final = ledger.spent();
    }
    let details = AlgoDetails::AdaptiveNoisyGd(AdaptiveTrace {
        params,
        eta,
        log_a,
        sigma_hat,
        sigma_floor,
        steps,
        charged_before_final,
    });
    rec.finish("adaptive_noisy_gd", obj, w, ledger, t, stop, details)
}
