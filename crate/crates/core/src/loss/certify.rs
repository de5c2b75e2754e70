//! Numerical certificates for the KL and growth inequalities.

use serde::{Deserialize, Serialize};

use super::{EmpiricalObjective, LossError};
use crate::linalg;

/// Where a KL inequality is asserted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Region {
    Ball { center: Vec<f64>, radius: f64 },
    /// Path-connected component of `{w : F(w) ≤ threshold}` containing
    /// `anchor`. Membership checks only the sublevel condition.
    LevelSetComponent { threshold: f64, anchor: Vec<f64> },
    Everywhere,
}

impl Region {
    pub fn validate(&self) -> Result<(), LossError> {
        match self {
            Region::Ball { radius, .. } if !(*radius > 0.0) => Err(LossError::Domain(format!(
                "ball radius must be positive, got {radius}"
            ))),
            Region::LevelSetComponent { threshold, .. } if threshold.is_nan() => {
                Err(LossError::Domain("level-set threshold is NaN".into()))
            }
            _ => Ok(()),
        }
    }

    fn contains(&self, obj: &EmpiricalObjective, w: &[f64]) -> Result<bool, LossError> {
        Ok(match self {
            Region::Ball { center, radius } => {
                linalg::dist(w, center) <= radius * (1.0 + 1e-12)
            }
            Region::LevelSetComponent { threshold, .. } => obj.value(w)? <= *threshold,
            Region::Everywhere => true,
        })
    }
}

/// `(γ, κ)`-KL on `region`: `γ^κ ‖∇F(w)‖^κ ≥ F(w) − F(w′)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KLSpec {
    pub gamma: f64,
    pub kappa: f64,
    pub region: Region,
}

impl KLSpec {
    pub fn new(gamma: f64, kappa: f64, region: Region) -> Result<Self, LossError> {
        let spec = Self {
            gamma,
            kappa,
            region,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), LossError> {
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return Err(LossError::Domain(format!(
                "gamma must be positive, got {}",
                self.gamma
            )));
        }
        if !(self.kappa >= 1.0 && self.kappa.is_finite()) {
            return Err(LossError::Domain(format!(
                "kappa must be at least 1, got {}",
                self.kappa
            )));
        }
        self.region.validate()
    }
}

/// `(λ, τ)`-growth: `F(w) − F(w*) ≥ λ^τ ‖w − w*‖^τ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GrowthSpec {
    pub lambda: f64,
    pub tau: f64,
}

impl GrowthSpec {
    pub fn new(lambda: f64, tau: f64) -> Result<Self, LossError> {
        let spec = Self { lambda, tau };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), LossError> {
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(LossError::Domain(format!(
                "lambda must be positive, got {}",
                self.lambda
            )));
        }
        if !(self.tau > 1.0 && self.tau.is_finite()) {
            return Err(LossError::Domain(format!(
                "tau must exceed 1, got {}",
                self.tau
            )));
        }
        Ok(())
    }

    /// KL parameters implied by this growth condition for a convex function:
    /// `γ = 1/λ`, `κ = τ/(τ − 1)`.
    pub fn to_kl(&self, region: Region) -> KLSpec {
        KLSpec {
            gamma: 1.0 / self.lambda,
            kappa: self.tau / (self.tau - 1.0),
            region,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateReport {
    pub max_violation: f64,
    /// Sample index attaining `max_violation`.
    pub worst_index: usize,
    pub tol: f64,
    pub pass: bool,
}

fn summarize(violations: impl Iterator<Item = f64>, tol: f64) -> CertificateReport {
    let (worst_index, max_violation) = violations
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |acc, (i, v)| {
            if v > acc.1 || v.is_nan() {
                (i, v)
            } else {
                acc
            }
        });
    CertificateReport {
        max_violation,
        worst_index,
        tol,
        pass: max_violation <= tol,
    }
}

fn certifier_tol(f_ref: f64) -> f64 {
    1e-9 * f_ref.abs().max(1.0)
}

/// Largest value of `(F(w) − f_ref) − γ^κ‖∇F(w)‖^κ` over `sample`.
pub fn certify_kl(
    obj: &EmpiricalObjective,
    spec: &KLSpec,
    sample: &[Vec<f64>],
    f_ref: f64,
) -> Result<CertificateReport, LossError> {
    spec.validate()?;
    if sample.is_empty() {
        return Err(LossError::EmptySample);
    }
    let mut violations = Vec::with_capacity(sample.len());
    for (index, w) in sample.iter().enumerate() {
        if matches!(spec.region, Region::Ball { .. }) && !spec.region.contains(obj, w)? {
            return Err(LossError::OutsideRegion { index });
        }
        let gap = obj.value(w)? - f_ref;
        let g = linalg::norm(&obj.gradient(w)?);
        violations.push(gap - (spec.gamma * g).powf(spec.kappa));
    }
    Ok(summarize(violations.into_iter(), certifier_tol(f_ref)))
}

/// Largest value of `λ^τ‖w − w*‖^τ − (F(w) − F(w*))` over `sample`.
pub fn certify_growth(
    obj: &EmpiricalObjective,
    spec: &GrowthSpec,
    sample: &[Vec<f64>],
) -> Result<CertificateReport, LossError> {
    spec.validate()?;
    let w_star = obj.w_star().ok_or(LossError::MissingMinimizer)?.to_vec();
    if sample.is_empty() {
        return Err(LossError::EmptySample);
    }
    let f_star = obj.value(&w_star)?;
    let mut violations = Vec::with_capacity(sample.len());
    for w in sample {
        let gap = obj.value(w)? - f_star;
        let lower = (spec.lambda * linalg::dist(w, &w_star)).powf(spec.tau);
        violations.push(lower - gap);
    }
    Ok(summarize(violations.into_iter(), certifier_tol(f_star)))
}
