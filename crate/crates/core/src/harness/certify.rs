use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::loss::{
    certify_growth, certify_kl, load_instance, region_sample, CertificateReport, EmpiricalObjective,
    GrowthSpec, KLSpec, LossError, Region, DEFAULT_SAMPLE_SIZE,
};

fn default_sample_size() -> usize {
    DEFAULT_SAMPLE_SIZE
}

fn one() -> f64 {
    1.0
}

/// What to certify. At least one of `kl` and `growth` must be given.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CertifyRequest {
    #[serde(default)]
    pub kl: Option<KLSpec>,
    #[serde(default)]
    pub growth: Option<GrowthSpec>,
    /// First sample point; defaults to the minimizer, else the origin.
    #[serde(default)]
    pub anchor: Option<Vec<f64>>,
    /// Fill radius around the anchor for regions that are not balls.
    #[serde(default = "one")]
    pub radius: f64,
    #[serde(default = "default_sample_size")]
    pub sample_size: usize,
}

impl CertifyRequest {
    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        let req: Self = if text.trim_start().starts_with('{') {
            serde_json::from_str(&text)
                .map_err(|e| HarnessError::config(format!("{}: {e}", path.display())))?
        } else {
            toml::from_str(&text)
                .map_err(|e| HarnessError::config(format!("{}: {e}", path.display())))?
        };
        Ok(req)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertifyOutcome {
    pub kl: Option<CertificateReport>,
    pub growth: Option<CertificateReport>,
    pub sample_size: usize,
    pub pass: bool,
}

fn sample(obj: &EmpiricalObjective, req: &CertifyRequest, region: &Region) -> Vec<Vec<f64>> {
    let w_star = obj.w_star();
    let anchor = req
        .anchor
        .clone()
        .or_else(|| w_star.map(<[f64]>::to_vec))
        .unwrap_or_else(|| vec![0.0; obj.dim()]);
    let fill = match region {
        Region::Ball { .. } => region.clone(),
        _ => Region::Ball {
            center: anchor.clone(),
            radius: req.radius,
        },
    };
    region_sample(&fill, &anchor, w_star, req.sample_size)
}

pub fn certify_instance(
    obj: &EmpiricalObjective,
    req: &CertifyRequest,
) -> Result<CertifyOutcome, HarnessError> {
    if req.kl.is_none() && req.growth.is_none() {
        return Err(HarnessError::config("certify request names neither kl nor growth"));
    }
    if req.sample_size == 0 || !(req.radius > 0.0) {
        return Err(HarnessError::config("sample_size and radius must be positive"));
    }
    if let Some(a) = &req.anchor {
        if a.len() != obj.dim() {
            return Err(HarnessError::config(format!(
                "anchor has dimension {} but the instance has d = {}",
                a.len(),
                obj.dim()
            )));
        }
    }
    let kl = match &req.kl {
        Some(spec) => {
            let f_ref = obj.f_star().ok_or(LossError::MissingMinimizer)?;
            let pts = sample(obj, req, &spec.region);
            Some(certify_kl(obj, spec, &pts, f_ref)?)
        }
        None => None,
    };
    let growth = match &req.growth {
        Some(spec) => {
            let pts = sample(obj, req, &Region::Everywhere);
            Some(certify_growth(obj, spec, &pts)?)
        }
        None => None,
    };
    let pass = kl.as_ref().is_none_or(|r| r.pass) && growth.as_ref().is_none_or(|r| r.pass);
    Ok(CertifyOutcome {
        kl,
        growth,
        sample_size: req.sample_size,
        pass,
    })
}

/// Loads a saved instance and a request file and certifies.
pub fn certify_files(instance: &Path, request: &Path) -> Result<CertifyOutcome, HarnessError> {
    let obj = load_instance(instance)?;
    let req = CertifyRequest::load(request)?;
    certify_instance(&obj, &req)
}
