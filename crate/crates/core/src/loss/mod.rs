//! Loss functions, datasets and the empirical objective `F(w;S)`.
//!
//! A [`Loss`] is a per-example oracle `f(w;x)`, `∇f(w;x)`. An
//! [`EmpiricalObjective`] pairs one with a [`Dataset`] and declared structural
//! constants (Lipschitz, smoothness, weak convexity, known minimizer).
//! Losses whose average over a dataset is an isotropic quadratic or affine
//! function may expose that closed form, which the objective then uses as a
//! fast path; tests check it against direct per-example summation.

mod certify;
mod closed_form;
mod io;
mod probe;
mod sampling;
mod zoo;

pub use certify::{certify_growth, certify_kl, CertificateReport, GrowthSpec, KLSpec, Region};
pub use closed_form::ClosedForm;
pub use io::{load_instance, read_dataset_csv, save_instance, write_dataset_csv, InstanceFile};
pub use probe::{gradient_sensitivity_probe, spider_difference_probe};
pub use sampling::{halton_ball, region_sample, DEFAULT_SAMPLE_SIZE};
pub use zoo::{
    gaussian_centers, linear_huber_from_rows, make_growth_instance, make_huberized_quadratic,
    make_linear, make_linear_huber, make_quadratic_pl, prox_regularize, sign_vectors,
    GrowthPiecewise, HuberizedQuadratic, Linear, LinearHuber, LossSpec, Proximal,
    SquaredDistance,
};

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg;

#[derive(Debug, Error)]
pub enum LossError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid parameter: {0}")]
    Domain(String),
    #[error("objective has no known minimizer")]
    MissingMinimizer,
    #[error("certifier sample is empty")]
    EmptySample,
    #[error("sample point {index} lies outside the certified region")]
    OutsideRegion { index: usize },
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error in {path}: {message}")]
    Parse { path: String, message: String },
}

/// One example: either a real vector or a sign token in `{-1, +1}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum DataPoint {
    Vector(Vec<f64>),
    Sign(i8),
}

impl DataPoint {
    pub fn as_vector(&self) -> &[f64] {
        match self {
            DataPoint::Vector(v) => v,
            DataPoint::Sign(_) => panic!("expected a vector data point, found a sign token"),
        }
    }

    pub fn as_sign(&self) -> i8 {
        match self {
            DataPoint::Sign(s) => *s,
            DataPoint::Vector(_) => panic!("expected a sign token, found a vector"),
        }
    }
}

/// Ordered collection of `n ≥ 1` examples over a `d`-dimensional parameter
/// space. Sign-token datasets are one-dimensional.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    points: Vec<DataPoint>,
    dim: usize,
}

impl Dataset {
    pub fn from_vectors(rows: Vec<Vec<f64>>) -> Result<Self, LossError> {
        let dim = rows
            .first()
            .map(Vec::len)
            .ok_or_else(|| LossError::Domain("dataset must contain at least one point".into()))?;
        if dim == 0 {
            return Err(LossError::Domain("data vectors must have dimension >= 1".into()));
        }
        if let Some(bad) = rows.iter().find(|r| r.len() != dim) {
            return Err(LossError::DimensionMismatch {
                expected: dim,
                got: bad.len(),
            });
        }
        Ok(Self {
            points: rows.into_iter().map(DataPoint::Vector).collect(),
            dim,
        })
    }

    pub fn from_signs(signs: Vec<i8>) -> Result<Self, LossError> {
        if signs.is_empty() {
            return Err(LossError::Domain("dataset must contain at least one point".into()));
        }
        if let Some(s) = signs.iter().find(|s| **s != 1 && **s != -1) {
            return Err(LossError::Domain(format!("sign token must be ±1, got {s}")));
        }
        Ok(Self {
            points: signs.into_iter().map(DataPoint::Sign).collect(),
            dim: 1,
        })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn points(&self) -> &[DataPoint] {
        &self.points
    }

    pub fn is_signs(&self) -> bool {
        matches!(self.points.first(), Some(DataPoint::Sign(_)))
    }

    /// Neighbouring dataset with example `index` replaced by `point`.
    pub fn replaced(&self, index: usize, point: DataPoint) -> Result<Self, LossError> {
        if index >= self.len() {
            return Err(LossError::Domain(format!(
                "replacement index {index} out of range for n = {}",
                self.len()
            )));
        }
        match (&self.points[0], &point) {
            (DataPoint::Vector(_), DataPoint::Vector(v)) if v.len() != self.dim => {
                return Err(LossError::DimensionMismatch {
                    expected: self.dim,
                    got: v.len(),
                })
            }
            (DataPoint::Vector(_), DataPoint::Sign(_)) | (DataPoint::Sign(_), DataPoint::Vector(_)) => {
                return Err(LossError::Domain("replacement point has the wrong kind".into()))
            }
            _ => {}
        }
        let mut points = self.points.clone();
        points[index] = point;
        Ok(Self {
            points,
            dim: self.dim,
        })
    }

    pub fn mean_vector(&self) -> Vec<f64> {
        let mut mean = vec![0.0; self.dim];
        for p in &self.points {
            linalg::axpy(1.0, p.as_vector(), &mut mean);
        }
        linalg::scale(&mut mean, 1.0 / self.len() as f64);
        mean
    }
}

/// Per-example loss oracle.
pub trait Loss: Send + Sync + fmt::Debug {
    fn value(&self, w: &[f64], x: &DataPoint) -> f64;

    /// Writes `∇f(w;x)` into `out` (overwriting it).
    fn gradient(&self, w: &[f64], x: &DataPoint, out: &mut [f64]);

    /// Closed form of `F(·;S)` when the average collapses to an isotropic
    /// quadratic or affine function.
    fn closed_form(&self, _data: &Dataset) -> Option<ClosedForm> {
        None
    }

    /// Upper bound on `‖∇f(w;x)‖` over `w ∈ B(center, radius)` and `x ∈ S`.
    fn lipschitz_on_ball(&self, _data: &Dataset, _center: &[f64], _radius: f64) -> Option<f64> {
        None
    }

    fn spec(&self) -> LossSpec;
}

/// Declared structural constants of an objective.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveMeta {
    /// Per-example gradient-norm bound on the declared region.
    pub lipschitz: f64,
    pub smoothness: Option<f64>,
    pub weak_convexity: Option<f64>,
    pub f_star: Option<f64>,
    pub w_star: Option<Vec<f64>>,
    pub kl_spec: Option<KLSpec>,
    pub growth_spec: Option<GrowthSpec>,
    /// Instance-specific extras (e.g. the realised sign proportion).
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub notes: BTreeMap<String, f64>,
}

#[derive(Debug, Clone)]
pub struct EmpiricalObjective {
    loss: Arc<dyn Loss>,
    data: Dataset,
    closed: Option<ClosedForm>,
    meta: ObjectiveMeta,
}

impl EmpiricalObjective {
    pub fn new(loss: Arc<dyn Loss>, data: Dataset, meta: ObjectiveMeta) -> Self {
        let closed = loss.closed_form(&data);
        Self {
            loss,
            data,
            closed,
            meta,
        }
    }

    pub fn loss(&self) -> &Arc<dyn Loss> {
        &self.loss
    }

    pub fn dataset(&self) -> &Dataset {
        &self.data
    }

    pub fn meta(&self) -> &ObjectiveMeta {
        &self.meta
    }

    pub fn meta_mut(&mut self) -> &mut ObjectiveMeta {
        &mut self.meta
    }

    pub fn closed_form(&self) -> Option<&ClosedForm> {
        self.closed.as_ref()
    }

    pub fn n(&self) -> usize {
        self.data.len()
    }

    pub fn dim(&self) -> usize {
        self.data.dim()
    }

    pub fn lipschitz(&self) -> f64 {
        self.meta.lipschitz
    }

    pub fn w_star(&self) -> Option<&[f64]> {
        self.meta.w_star.as_deref()
    }

    pub fn f_star(&self) -> Option<f64> {
        self.meta.f_star
    }

    /// Same loss and metadata over a different dataset (e.g. a neighbour).
    /// Minimizer information is dropped since it is dataset-specific.
    pub fn with_dataset(&self, data: Dataset) -> Self {
        let mut meta = self.meta.clone();
        meta.f_star = None;
        meta.w_star = None;
        Self::new(self.loss.clone(), data, meta)
    }

    fn check_dim(&self, w: &[f64]) -> Result<(), LossError> {
        if w.len() != self.dim() {
            return Err(LossError::DimensionMismatch {
                expected: self.dim(),
                got: w.len(),
            });
        }
        Ok(())
    }

    /// `F(w;S)`.
    pub fn value(&self, w: &[f64]) -> Result<f64, LossError> {
        self.check_dim(w)?;
        Ok(match &self.closed {
            Some(cf) => cf.value(w),
            None => self.summed_value(w),
        })
    }

    /// `∇F(w;S)`.
    pub fn gradient(&self, w: &[f64]) -> Result<Vec<f64>, LossError> {
        let mut out = vec![0.0; self.dim()];
        self.gradient_into(w, &mut out)?;
        Ok(out)
    }

    pub fn gradient_into(&self, w: &[f64], out: &mut [f64]) -> Result<(), LossError> {
        self.check_dim(w)?;
        match &self.closed {
            Some(cf) => cf.gradient_into(w, out),
            None => self.summed_gradient_into(w, out),
        }
        Ok(())
    }

    /// Direct per-example average of values, bypassing any closed form.
    pub fn summed_value(&self, w: &[f64]) -> f64 {
        let total: f64 = self.data.points().iter().map(|x| self.loss.value(w, x)).sum();
        total / self.n() as f64
    }

    /// Direct per-example average of gradients, bypassing any closed form.
    pub fn summed_gradient(&self, w: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        self.summed_gradient_into(w, &mut out);
        out
    }

    fn summed_gradient_into(&self, w: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|x| *x = 0.0);
        let mut scratch = vec![0.0; self.dim()];
        for x in self.data.points() {
            self.loss.gradient(w, x, &mut scratch);
            linalg::axpy(1.0, &scratch, out);
        }
        linalg::scale(out, 1.0 / self.n() as f64);
    }

    /// Excess risk `F(w) − F(w*)`. Uses the centred closed form when one is
    /// available (no cancellation), else `value − f_star`.
    pub fn excess(&self, w: &[f64]) -> Result<Option<f64>, LossError> {
        self.check_dim(w)?;
        if let Some(ClosedForm::Centered {
            curvature, center, ..
        }) = &self.closed
        {
            return Ok(Some(0.5 * curvature * linalg::dist(w, center).powi(2)));
        }
        match self.meta.f_star {
            Some(fs) => Ok(Some(self.value(w)? - fs)),
            None => Ok(None),
        }
    }

    /// Recomputes the declared Lipschitz constant for the ball
    /// `B(center, radius)`, when the loss can bound it.
    pub fn declare_lipschitz_region(&mut self, center: &[f64], radius: f64) -> Result<f64, LossError> {
        self.check_dim(center)?;
        let l0 = self
            .loss
            .lipschitz_on_ball(&self.data, center, radius)
            .ok_or_else(|| LossError::Domain("loss cannot bound its Lipschitz constant".into()))?;
        self.meta.lipschitz = l0;
        Ok(l0)
    }
}
