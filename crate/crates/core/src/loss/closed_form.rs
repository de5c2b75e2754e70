use serde::{Deserialize, Serialize};

use crate::linalg;

/// Closed form of an averaged objective.
///
/// `Centered`: `F(w) = (a/2)‖w − m‖² + v` (minimizer `m`, minimum `v`).
/// `Affine`:   `F(w) = ⟨g, w⟩ + c`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ClosedForm {
    Centered {
        curvature: f64,
        center: Vec<f64>,
        min_value: f64,
    },
    Affine {
        slope: Vec<f64>,
        offset: f64,
    },
}

impl ClosedForm {
    pub fn value(&self, w: &[f64]) -> f64 {
        match self {
            ClosedForm::Centered {
                curvature,
                center,
                min_value,
            } => 0.5 * curvature * linalg::dist(w, center).powi(2) + min_value,
            ClosedForm::Affine { slope, offset } => linalg::dot(slope, w) + offset,
        }
    }

    pub fn gradient_into(&self, w: &[f64], out: &mut [f64]) {
        match self {
            ClosedForm::Centered {
                curvature, center, ..
            } => {
                for ((o, wi), ci) in out.iter_mut().zip(w).zip(center) {
                    *o = curvature * (wi - ci);
                }
            }
            ClosedForm::Affine { slope, .. } => out.copy_from_slice(slope),
        }
    }

    /// Closed form of `F(w) + weight·‖w − anchor‖²`.
    pub fn add_proximal(&self, anchor: &[f64], weight: f64) -> ClosedForm {
        let beta = 2.0 * weight;
        match self {
            ClosedForm::Centered {
                curvature,
                center,
                min_value,
            } => {
                let a = curvature + beta;
                let center_new: Vec<f64> = center
                    .iter()
                    .zip(anchor)
                    .map(|(m, c)| (curvature * m + beta * c) / a)
                    .collect();
                let gap = linalg::dist(center, anchor).powi(2);
                ClosedForm::Centered {
                    curvature: a,
                    center: center_new,
                    min_value: min_value + curvature * beta / (2.0 * a) * gap,
                }
            }
            ClosedForm::Affine { slope, offset } => {
                let center_new: Vec<f64> = anchor
                    .iter()
                    .zip(slope)
                    .map(|(c, g)| c - g / beta)
                    .collect();
                ClosedForm::Centered {
                    curvature: beta,
                    center: center_new,
                    min_value: offset + linalg::dot(slope, anchor)
                        - linalg::norm_sq(slope) / (2.0 * beta),
                }
            }
        }
    }

    pub fn minimizer(&self) -> Option<&[f64]> {
        match self {
            ClosedForm::Centered { center, .. } => Some(center),
            ClosedForm::Affine { .. } => None,
        }
    }

    pub fn min_value(&self) -> Option<f64> {
        match self {
            ClosedForm::Centered { min_value, .. } => Some(*min_value),
            ClosedForm::Affine { .. } => None,
        }
    }
}
