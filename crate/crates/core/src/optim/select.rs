//! Private choice of an approximately stationary iterate.

use rand::Rng;

use super::OptimError;
use crate::privacy::{exponential_mechanism, exponential_probabilities, pure_dp_to_zcdp, BudgetLedger};

fn check(grad_norms: &[f64], n: usize, rho: f64, l0: f64) -> Result<(), OptimError> {
    if grad_norms.is_empty() {
        return Err(OptimError::config("no gradient norms to select from"));
    }
    if n == 0 || !(rho > 0.0) || !(l0 > 0.0) {
        return Err(OptimError::config("n, rho and L0 must be positive"));
    }
    Ok(())
}

/// Probabilities `∝ exp(−(n√ρ/(2L₀))·‖∇F(w_t)‖)`.
pub fn selection_probabilities(
    grad_norms: &[f64],
    n: usize,
    rho: f64,
    l0: f64,
) -> Result<Vec<f64>, OptimError> {
    check(grad_norms, n, rho, l0)?;
    let scores: Vec<f64> = grad_norms.iter().map(|g| -g).collect();
    Ok(exponential_probabilities(&scores, l0 / n as f64, rho.sqrt())?)
}

/// Samples an index with [`selection_probabilities`]. The mechanism is
/// `√ρ`-DP, i.e. `ρ/2`-zCDP; the ledger cap is raised by that amount and the
/// cost is charged under `select_stationary`.
pub fn select_stationary<R: Rng + ?Sized>(
    grad_norms: &[f64],
    n: usize,
    rho: f64,
    l0: f64,
    ledger: &mut BudgetLedger,
    rng: &mut R,
) -> Result<usize, OptimError> {
    check(grad_norms, n, rho, l0)?;
    let scores: Vec<f64> = grad_norms.iter().map(|g| -g).collect();
    let index = exponential_mechanism(&scores, l0 / n as f64, rho.sqrt(), rng)?;
    let cost = pure_dp_to_zcdp(rho.sqrt());
    ledger.extend_cap(cost);
    ledger.charge("select_stationary", cost)?;
    Ok(index)
}
