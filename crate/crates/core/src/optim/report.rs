use std::fmt;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::{AdaptiveTrace, OptimError, ProxTrace, ScTrace, SpiderTrace};
use crate::linalg;
use crate::loss::EmpiricalObjective;
use crate::privacy::BudgetLedger;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    BudgetExhausted,
    ScheduleComplete,
    GradientFloor,
    Timeout,
}

impl StopReason {
    pub fn as_str(&self) -> &'static str {
        match self {
            StopReason::BudgetExhausted => "budget_exhausted",
            StopReason::ScheduleComplete => "schedule_complete",
            StopReason::GradientFloor => "gradient_floor",
            StopReason::Timeout => "timeout",
        }
    }
}

impl fmt::Display for StopReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "algo", rename_all = "snake_case")]
pub enum AlgoDetails {
    KlSpider(SpiderTrace),
    AdaptiveNoisyGd(AdaptiveTrace),
    ProxPoint(ProxTrace),
    ScNoisyGd(ScTrace),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub algo: String,
    /// Iterates in visiting order (empty when recording is off).
    pub iterates: Vec<Vec<f64>>,
    /// `‖∇F(w;S)‖` at each recorded iterate.
    pub grad_norms: Vec<f64>,
    pub ledger: BudgetLedger,
    pub final_point: Vec<f64>,
    pub final_excess: Option<f64>,
    pub final_grad_norm: f64,
    /// Gradient steps taken.
    pub iters: u64,
    /// Wall time in milliseconds; zero unless timing was requested.
    pub wall_ms: u64,
    pub stop_reason: StopReason,
    pub details: AlgoDetails,
}

/// Collects the trajectory and timing of a run.
#[derive(Debug)]
pub struct Recorder {
    enabled: bool,
    started: Option<Instant>,
    pub iterates: Vec<Vec<f64>>,
    pub grad_norms: Vec<f64>,
}

impl Recorder {
    pub fn new(enabled: bool, timing: bool) -> Self {
        Self {
            enabled,
            started: timing.then(Instant::now),
            iterates: Vec::new(),
            grad_norms: Vec::new(),
        }
    }

    pub fn push(&mut self, w: &[f64], grad_norm: f64) {
        if self.enabled {
            self.iterates.push(w.to_vec());
            self.grad_norms.push(grad_norm);
        }
    }

    pub fn finish(
        self,
        algo: &str,
        obj: &EmpiricalObjective,
        final_point: Vec<f64>,
        ledger: BudgetLedger,
        iters: u64,
        stop_reason: StopReason,
        details: AlgoDetails,
    ) -> Result<RunReport, OptimError> {
        let final_excess = obj.excess(&final_point)?;
        let final_grad_norm = linalg::norm(&obj.gradient(&final_point)?);
        let wall_ms = self
            .started
            .map(|t| t.elapsed().as_millis() as u64)
            .unwrap_or(0);
        Ok(RunReport {
            algo: algo.to_string(),
            iterates: self.iterates,
            grad_norms: self.grad_norms,
            ledger,
            final_point,
            final_excess,
            final_grad_norm,
            iters,
            wall_ms,
            stop_reason,
            details,
        })
    }
}
