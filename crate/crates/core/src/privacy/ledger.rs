use serde::{Deserialize, Serialize};

use super::PrivacyError;

/// Relative slack admitted when comparing the running total against the cap.
/// Schedules that split a budget into `1/(2K T_k)` pieces only sum back to
/// the cap up to a few ulps.
pub const CAP_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Charge {
    pub label: String,
    pub rho: f64,
}

/// Running zCDP expenditure with a hard cap.
///
/// Charges are accumulated by plain summation in insertion order. A refused
/// charge leaves the ledger untouched.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BudgetLedger {
    cap: f64,
    spent: f64,
    entries: Vec<Charge>,
}

impl BudgetLedger {
    pub fn new(cap: f64) -> Result<Self, PrivacyError> {
        if !(cap >= 0.0) || cap.is_infinite() {
            return Err(PrivacyError::Domain(format!("invalid ledger cap {cap}")));
        }
        Ok(Self {
            cap,
            spent: 0.0,
            entries: Vec::new(),
        })
    }

    pub fn cap(&self) -> f64 {
        self.cap
    }

    pub fn spent(&self) -> f64 {
        self.spent
    }

    pub fn remaining(&self) -> f64 {
        (self.cap - self.spent).max(0.0)
    }

    pub fn entries(&self) -> &[Charge] {
        &self.entries
    }

    /// Total charged under labels starting with `prefix`.
    pub fn spent_on(&self, prefix: &str) -> f64 {
        self.entries
            .iter()
            .filter(|c| c.label.starts_with(prefix))
            .map(|c| c.rho)
            .sum()
    }

    /// Whether `rho` more could be charged without exceeding the cap.
    pub fn admits(&self, rho: f64) -> bool {
        self.spent + rho <= self.cap * (1.0 + CAP_SLACK)
    }

    pub fn charge(&mut self, label: impl Into<String>, rho: f64) -> Result<(), PrivacyError> {
        let label = label.into();
        if !(rho >= 0.0) || rho.is_infinite() {
            return Err(PrivacyError::Domain(format!(
                "charge `{label}` must be a finite non-negative cost, got {rho}"
            )));
        }
        if !self.admits(rho) {
            return Err(PrivacyError::Refused {
                label,
                requested: rho,
                remaining: self.remaining(),
            });
        }
        self.spent += rho;
        self.entries.push(Charge { label, rho });
        Ok(())
    }

    /// Raises the cap, e.g. when a post-processing selection step with its own
    /// budget is appended to a finished run.
    pub fn extend_cap(&mut self, extra: f64) {
        self.cap += extra.max(0.0);
    }
}
