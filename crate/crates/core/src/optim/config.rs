use serde::{Deserialize, Serialize};

use super::schedule::{prox_schedule, ProxSchedule, SpiderScheduleInput};
use super::OptimError;
use crate::loss::EmpiricalObjective;
use crate::privacy::PrivacyParams;

fn default_beta() -> f64 {
    0.1
}

fn default_max_sc_iters() -> u64 {
    10_000_000
}

fn yes() -> bool {
    true
}

/// Optimizer settings. Structural constants left unset are taken from the
/// objective's declared metadata; `n` and `d`, when given, must agree with
/// the objective.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimConfig {
    pub algo: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d: Option<usize>,
    pub rho: f64,
    #[serde(default = "default_beta")]
    pub beta: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(rename = "L0", default, skip_serializing_if = "Option::is_none")]
    pub l0: Option<f64>,
    #[serde(rename = "L1", default, skip_serializing_if = "Option::is_none")]
    pub l1: Option<f64>,
    #[serde(rename = "Ltilde1", default, skip_serializing_if = "Option::is_none")]
    pub ltilde1: Option<f64>,
    #[serde(rename = "F0", default, skip_serializing_if = "Option::is_none")]
    pub f0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub w0: Option<Vec<f64>>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub noiseless: bool,
    #[serde(default = "default_max_sc_iters")]
    pub max_sc_iters: u64,
    #[serde(default = "yes")]
    pub record_iterates: bool,
    #[serde(default)]
    pub timing: bool,
}

impl OptimConfig {
    pub fn new(algo: &str, rho: f64) -> Self {
        Self {
            algo: algo.to_string(),
            n: None,
            d: None,
            rho,
            beta: default_beta(),
            kappa: None,
            gamma: None,
            l0: None,
            l1: None,
            ltilde1: None,
            f0: None,
            w0: None,
            seed: 0,
            noiseless: false,
            max_sc_iters: default_max_sc_iters(),
            record_iterates: true,
            timing: false,
        }
    }

    pub fn privacy(&self) -> Result<PrivacyParams, OptimError> {
        PrivacyParams::new(self.rho, self.beta).map_err(|e| OptimError::config(e.to_string()))
    }

    fn check_shape(&self, obj: &EmpiricalObjective) -> Result<(), OptimError> {
        if let Some(n) = self.n.filter(|n| *n != obj.n()) {
            return Err(OptimError::config(format!(
                "config n = {n} but dataset has n = {}",
                obj.n()
            )));
        }
        if let Some(d) = self.d.filter(|d| *d != obj.dim()) {
            return Err(OptimError::config(format!(
                "config d = {d} but objective has d = {}",
                obj.dim()
            )));
        }
        Ok(())
    }

    /// Starting point; the origin when `w0` is unset.
    pub fn start(&self, obj: &EmpiricalObjective) -> Result<Vec<f64>, OptimError> {
        self.check_shape(obj)?;
        match &self.w0 {
            Some(w) if w.len() != obj.dim() => Err(OptimError::config(format!(
                "w0 has dimension {} but objective has d = {}",
                w.len(),
                obj.dim()
            ))),
            Some(w) => Ok(w.clone()),
            None => Ok(vec![0.0; obj.dim()]),
        }
    }

    fn positive(name: &str, v: f64) -> Result<f64, OptimError> {
        if v > 0.0 && v.is_finite() {
            Ok(v)
        } else {
            Err(OptimError::config(format!("{name} must be positive and finite, got {v}")))
        }
    }

    pub fn lipschitz(&self, obj: &EmpiricalObjective) -> Result<f64, OptimError> {
        Self::positive("L0", self.l0.unwrap_or(obj.lipschitz()))
    }

    pub fn smoothness(&self, obj: &EmpiricalObjective) -> Result<f64, OptimError> {
        let v = self
            .l1
            .or(obj.meta().smoothness)
            .ok_or_else(|| OptimError::config("L1 is neither configured nor declared"))?;
        Self::positive("L1", v)
    }

    pub fn weak_convexity(&self, obj: &EmpiricalObjective) -> Result<f64, OptimError> {
        let v = self
            .ltilde1
            .or(obj.meta().weak_convexity)
            .ok_or_else(|| OptimError::config("Ltilde1 is neither configured nor declared"))?;
        Self::positive("Ltilde1", v)
    }

    pub fn gamma_kappa(&self, obj: &EmpiricalObjective) -> Result<(f64, f64), OptimError> {
        let declared = obj.meta().kl_spec.as_ref();
        let gamma = self
            .gamma
            .or(declared.map(|s| s.gamma))
            .ok_or_else(|| OptimError::config("gamma is neither configured nor declared"))?;
        let kappa = self
            .kappa
            .or(declared.map(|s| s.kappa))
            .ok_or_else(|| OptimError::config("kappa is neither configured nor declared"))?;
        Ok((Self::positive("gamma", gamma)?, Self::positive("kappa", kappa)?))
    }

    /// Initial loss bound: configured, else the exact excess risk at `w0`.
    pub fn initial_bound(&self, obj: &EmpiricalObjective, w0: &[f64]) -> Result<f64, OptimError> {
        let f0 = match self.f0 {
            Some(f) => f,
            None => obj
                .excess(w0)?
                .ok_or_else(|| OptimError::config("F0 is unset and the objective has no known minimum"))?,
        };
        Self::positive("F0", f0)
    }

    pub fn spider_input(
        &self,
        obj: &EmpiricalObjective,
        w0: &[f64],
    ) -> Result<SpiderScheduleInput, OptimError> {
        let privacy = self.privacy()?;
        let (gamma, kappa) = self.gamma_kappa(obj)?;
        Ok(SpiderScheduleInput {
            n: obj.n(),
            d: obj.dim(),
            rho: privacy.rho,
            beta: privacy.beta,
            f0: self.initial_bound(obj, w0)?,
            gamma,
            kappa,
            l0: self.lipschitz(obj)?,
            l1: self.smoothness(obj)?,
        })
    }

    pub fn prox_schedule(
        &self,
        obj: &EmpiricalObjective,
        w0: &[f64],
    ) -> Result<ProxSchedule, OptimError> {
        let privacy = self.privacy()?;
        let (gamma, kappa) = self.gamma_kappa(obj)?;
        prox_schedule(
            obj.n(),
            obj.dim(),
            privacy.rho,
            privacy.beta,
            self.initial_bound(obj, w0)?,
            gamma,
            kappa,
            self.lipschitz(obj)?,
            self.weak_convexity(obj)?,
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_field_names() {
        let text = r#"{"algo":"kl_spider","rho":1.0,"L0":2.0,"L1":1.0,"F0":0.5,"w0":[0.0]}"#;
        let cfg: OptimConfig = serde_json::from_str(text).unwrap();
        assert_eq!(cfg.l0, Some(2.0));
        assert_eq!(cfg.f0, Some(0.5));
        assert_eq!(cfg.beta, 0.1);
        assert!(cfg.record_iterates);
        let back: OptimConfig = serde_json::from_str(&serde_json::to_string(&cfg).unwrap()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn unknown_field_rejected() {
        let text = r#"{"algo":"kl_spider","rho":1.0,"lr":0.1}"#;
        assert!(serde_json::from_str::<OptimConfig>(text).is_err());
    }

    #[test]
    fn privacy_validation() {
        assert!(OptimConfig::new("x", 0.0).privacy().is_err());
        let mut c = OptimConfig::new("x", 1.0);
        c.beta = 1.0;
        assert!(c.privacy().is_err());
    }
}
