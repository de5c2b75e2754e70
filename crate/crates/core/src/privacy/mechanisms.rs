use rand::Rng;

use super::PrivacyError;

/// zCDP cost of the Gaussian mechanism: `Δ² / (2σ²)`.
pub fn gaussian_rho(sensitivity: f64, sigma: f64) -> Result<f64, PrivacyError> {
    if !(sensitivity >= 0.0) {
        return Err(PrivacyError::Domain(format!(
            "sensitivity must be non-negative, got {sensitivity}"
        )));
    }
    if !(sigma >= 0.0) {
        return Err(PrivacyError::Domain(format!(
            "sigma must be non-negative, got {sigma}"
        )));
    }
    if sensitivity == 0.0 {
        return Ok(0.0);
    }
    if sigma == 0.0 {
        return Err(PrivacyError::InfiniteCost { sensitivity });
    }
    let ratio = sensitivity / sigma;
    Ok(0.5 * ratio * ratio)
}

/// Noise scale at which the Gaussian mechanism costs exactly `rho`.
pub fn sigma_for_rho(sensitivity: f64, rho: f64) -> Result<f64, PrivacyError> {
    if !(sensitivity >= 0.0) {
        return Err(PrivacyError::Domain(format!(
            "sensitivity must be non-negative, got {sensitivity}"
        )));
    }
    if !(rho > 0.0) {
        return Err(PrivacyError::Domain(format!("rho must be positive, got {rho}")));
    }
    Ok(sensitivity / (2.0 * rho).sqrt())
}

/// `(ε, δ)`-DP guarantee implied by `ρ`-zCDP: `ε = ρ + 2√(ρ ln(1/δ))`.
pub fn zcdp_to_approx_dp(rho: f64, delta: f64) -> Result<f64, PrivacyError> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(PrivacyError::Domain(format!(
            "delta must lie in (0,1), got {delta}"
        )));
    }
    if !(rho >= 0.0) {
        return Err(PrivacyError::Domain(format!("rho must be non-negative, got {rho}")));
    }
    Ok(rho + 2.0 * (rho * (1.0 / delta).ln()).sqrt())
}

/// Pure `ε`-DP implies `ε²/2`-zCDP.
pub fn pure_dp_to_zcdp(epsilon: f64) -> f64 {
    0.5 * epsilon * epsilon
}

fn check_selection_args(
    scores: &[f64],
    score_sensitivity: f64,
    epsilon: f64,
) -> Result<(), PrivacyError> {
    if scores.is_empty() {
        return Err(PrivacyError::Domain("exponential mechanism needs at least one score".into()));
    }
    if !(epsilon > 0.0) {
        return Err(PrivacyError::Domain(format!("epsilon must be positive, got {epsilon}")));
    }
    if !(score_sensitivity > 0.0) {
        return Err(PrivacyError::Domain(format!(
            "score sensitivity must be positive, got {score_sensitivity}"
        )));
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(PrivacyError::Domain("scores must not be NaN".into()));
    }
    Ok(())
}

/// Selection probabilities `∝ exp(ε·score / (2Δ))`, computed with max
/// subtraction so that very large scores do not overflow.
pub fn exponential_probabilities(
    scores: &[f64],
    score_sensitivity: f64,
    epsilon: f64,
) -> Result<Vec<f64>, PrivacyError> {
    check_selection_args(scores, score_sensitivity, epsilon)?;
    let scale = epsilon / (2.0 * score_sensitivity);
    let logits: Vec<f64> = scores.iter().map(|s| s * scale).collect();
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        // every score is -inf; nothing distinguishes them
        return Ok(vec![1.0 / scores.len() as f64; scores.len()]);
    }
    let weights: Vec<f64> = logits.iter().map(|l| (l - max).exp()).collect();
    let total: f64 = weights.iter().sum();
    Ok(weights.into_iter().map(|w| w / total).collect())
}

/// Samples an index with probability `∝ exp(ε·scores[i] / (2Δ))`.
pub fn exponential_mechanism<R: Rng + ?Sized>(
    scores: &[f64],
    score_sensitivity: f64,
    epsilon: f64,
    rng: &mut R,
) -> Result<usize, PrivacyError> {
    let probs = exponential_probabilities(scores, score_sensitivity, epsilon)?;
    let u: f64 = rng.random::<f64>();
    let mut acc = 0.0;
    for (i, p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return Ok(i);
        }
    }
    // u landed in the rounding gap above the cumulative sum
    Ok(probs.iter().rposition(|p| *p > 0.0).unwrap_or(probs.len() - 1))
}
