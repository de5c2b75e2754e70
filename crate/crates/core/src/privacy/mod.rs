//! Randomized privacy primitives and zCDP budget accounting.
//!
//! Every optimizer in the crate draws its noise through [`NoiseSource`] and
//! records its expenditure in a [`BudgetLedger`]. zCDP composes additively,
//! so the ledger is a plain running sum with a hard cap.

mod ledger;
mod mechanisms;
mod noise;

pub use ledger::{BudgetLedger, Charge};
pub use mechanisms::{
    exponential_mechanism, exponential_probabilities, gaussian_rho, pure_dp_to_zcdp,
    sigma_for_rho, zcdp_to_approx_dp,
};
pub use noise::{gaussian_scalar, gaussian_vector, stream_seed, GaussianNoiseSpec, NoiseSource};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PrivacyError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("infinite privacy cost: sensitivity {sensitivity} with zero noise")]
    InfiniteCost { sensitivity: f64 },
    #[error("budget refused for `{label}`: requested {requested}, remaining {remaining}")]
    Refused {
        label: String,
        requested: f64,
        remaining: f64,
    },
}

/// Target zCDP budget together with the failure probability of the utility
/// guarantee.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrivacyParams {
    pub rho: f64,
    pub beta: f64,
}

impl PrivacyParams {
    pub fn new(rho: f64, beta: f64) -> Result<Self, PrivacyError> {
        if !(rho > 0.0 && rho.is_finite()) {
            return Err(PrivacyError::Domain(format!("rho must be positive, got {rho}")));
        }
        if !(beta > 0.0 && beta < 1.0) {
            return Err(PrivacyError::Domain(format!(
                "beta must lie in (0,1), got {beta}"
            )));
        }
        Ok(Self { rho, beta })
    }
}
