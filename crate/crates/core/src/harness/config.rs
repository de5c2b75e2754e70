use std::fs;
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::loss::{
    gaussian_centers, load_instance, make_growth_instance, make_huberized_quadratic,
    make_linear_huber, make_quadratic_pl, prox_regularize, sign_vectors, Dataset,
    EmpiricalObjective,
};
use crate::optim::OptimConfig;

fn one() -> f64 {
    1.0
}

fn default_trials() -> usize {
    1
}

fn default_timeout() -> f64 {
    120.0
}

fn default_output() -> PathBuf {
    PathBuf::from("results.csv")
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CenterDist {
    /// Coordinates `±scale/√d`, so every centre has norm `scale`.
    #[default]
    Sign,
    /// `N(0, (scale²/d) I)`.
    Gaussian,
}

/// How to produce the objective for one `(n, d)` cell and data seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum InstanceSpec {
    /// `(μ/2)‖w − x‖²` with centres spread by `scale` around the point
    /// `shift·(1,…,1)/√d`. The Lipschitz constant is declared on the ball of
    /// radius `region_radius` (default `scale + shift`) around the minimizer.
    Quadratic {
        mu: f64,
        #[serde(default = "one")]
        scale: f64,
        #[serde(default = "one")]
        shift: f64,
        #[serde(default)]
        centers: CenterDist,
        #[serde(default)]
        region_radius: Option<f64>,
    },
    HuberizedQuadratic {
        mu: f64,
        clip: f64,
        #[serde(default = "one")]
        scale: f64,
        #[serde(default = "one")]
        shift: f64,
        #[serde(default)]
        centers: CenterDist,
    },
    LinearHuber {
        l0: f64,
        radius: f64,
        /// Fraction of rows that are non-zero.
        #[serde(default = "one")]
        nonzero_frac: f64,
    },
    Growth {
        a: f64,
        tau: f64,
        rho_frac: f64,
        #[serde(default)]
        mirrored: bool,
    },
    /// `inner + weight·‖w − center‖²`; `center` defaults to the origin.
    Prox {
        inner: Box<InstanceSpec>,
        weight: f64,
        #[serde(default)]
        center: Option<Vec<f64>>,
    },
    /// A saved instance; `n` and `d` are fixed by the file.
    File { path: PathBuf },
}

impl InstanceSpec {
    fn is_file(&self) -> bool {
        match self {
            InstanceSpec::File { .. } => true,
            InstanceSpec::Prox { inner, .. } => inner.is_file(),
            _ => false,
        }
    }

    fn resolve_paths(&mut self, base: &Path) {
        match self {
            InstanceSpec::File { path } if path.is_relative() => *path = base.join(&*path),
            InstanceSpec::Prox { inner, .. } => inner.resolve_paths(base),
            _ => {}
        }
    }
}

fn centers(
    dist: CenterDist,
    n: usize,
    d: usize,
    scale: f64,
    shift: f64,
    rng: &mut ChaCha8Rng,
) -> Result<Dataset, HarnessError> {
    if n == 0 || d == 0 {
        return Err(HarnessError::config("n and d must be at least 1"));
    }
    let spread = match dist {
        CenterDist::Sign => {
            Dataset::from_vectors((0..n).map(|_| sign_vectors(d, scale, rng)).collect())?
        }
        CenterDist::Gaussian => gaussian_centers(n, d, scale / (d as f64).sqrt(), rng)?,
    };
    let offset = shift / (d as f64).sqrt();
    let rows = spread
        .points()
        .iter()
        .map(|p| p.as_vector().iter().map(|x| x + offset).collect())
        .collect();
    Ok(Dataset::from_vectors(rows)?)
}

/// Builds the objective for one cell. Random draws come from `data_seed`
/// only; the same arguments always give the same objective.
pub fn build_instance(
    spec: &InstanceSpec,
    n: usize,
    d: usize,
    data_seed: u64,
) -> Result<EmpiricalObjective, HarnessError> {
    let mut rng = ChaCha8Rng::seed_from_u64(data_seed);
    let obj = match spec {
        InstanceSpec::Quadratic {
            mu,
            scale,
            shift,
            centers: dist,
            region_radius,
        } => {
            let data = centers(*dist, n, d, *scale, *shift, &mut rng)?;
            let mut obj = make_quadratic_pl(*mu, data)?;
            let w_star = obj.w_star().unwrap().to_vec();
            obj.declare_lipschitz_region(&w_star, region_radius.unwrap_or(scale + shift))?;
            obj
        }
        InstanceSpec::HuberizedQuadratic {
            mu,
            clip,
            scale,
            shift,
            centers: dist,
        } => {
            let data = centers(*dist, n, d, *scale, *shift, &mut rng)?;
            make_huberized_quadratic(*mu, *clip, data)?
        }
        InstanceSpec::LinearHuber {
            l0,
            radius,
            nonzero_frac,
        } => {
            if !(*nonzero_frac > 0.0 && *nonzero_frac <= 1.0) {
                return Err(HarnessError::config(format!(
                    "nonzero_frac must lie in (0, 1], got {nonzero_frac}"
                )));
            }
            let nonzero = ((n as f64 * nonzero_frac).round() as usize).clamp(1, n.max(1));
            make_linear_huber(d, n, *l0, *radius, nonzero, &mut rng)?
        }
        InstanceSpec::Growth {
            a,
            tau,
            rho_frac,
            mirrored,
        } => {
            if d != 1 {
                return Err(HarnessError::config(format!(
                    "growth instances are one-dimensional, got d = {d}"
                )));
            }
            make_growth_instance(*a, *tau, *rho_frac, n, *mirrored)?
        }
        InstanceSpec::Prox {
            inner,
            weight,
            center,
        } => {
            let base = build_instance(inner, n, d, data_seed)?;
            let c = center.clone().unwrap_or_else(|| vec![0.0; base.dim()]);
            prox_regularize(&base, &c, *weight)?
        }
        InstanceSpec::File { path } => load_instance(path)?,
    };
    if obj.n() != n || obj.dim() != d {
        return Err(HarnessError::config(format!(
            "instance has (n, d) = ({}, {}) but the cell asks for ({n}, {d})",
            obj.n(),
            obj.dim()
        )));
    }
    Ok(obj)
}

/// Sweep axes. Unset `rho` and `kappa` fall back to the optimizer settings.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sweep {
    #[serde(default)]
    pub n: Option<Vec<usize>>,
    #[serde(default)]
    pub d: Option<Vec<usize>>,
    #[serde(default)]
    pub rho: Option<Vec<f64>>,
    #[serde(default)]
    pub kappa: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub instance: InstanceSpec,
    pub optimizer: OptimConfig,
    #[serde(default)]
    pub sweep: Sweep,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default = "default_output")]
    pub output: PathBuf,
    /// Per-cell wall-clock limit in seconds.
    #[serde(default = "default_timeout")]
    pub timeout_secs: f64,
    /// Record `wall_ms`; off by default so result files are reproducible.
    #[serde(default)]
    pub timing: bool,
}

impl ExperimentConfig {
    /// Parses TOML, or JSON when the text starts with `{`.
    pub fn parse(text: &str) -> Result<Self, HarnessError> {
        let cfg: Self = if text.trim_start().starts_with('{') {
            serde_json::from_str(text).map_err(|e| HarnessError::config(e.to_string()))?
        } else {
            toml::from_str(text).map_err(|e| HarnessError::config(e.to_string()))?
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads a config file. Relative instance and output paths are resolved
    /// against the file's directory.
    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        let mut cfg = Self::parse(&text).map_err(|e| match e {
            HarnessError::Config(m) => HarnessError::Config(format!("{}: {m}", path.display())),
            other => other,
        })?;
        let base = path.parent().unwrap_or(Path::new("."));
        cfg.instance.resolve_paths(base);
        if cfg.output.is_relative() {
            cfg.output = base.join(&cfg.output);
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.trials == 0 {
            return Err(HarnessError::config("trials must be at least 1"));
        }
        if !(self.timeout_secs > 0.0) {
            return Err(HarnessError::config("timeout_secs must be positive"));
        }
        let axes = [
            ("sweep.n", self.sweep.n.as_ref().map(Vec::len)),
            ("sweep.d", self.sweep.d.as_ref().map(Vec::len)),
            ("sweep.rho", self.sweep.rho.as_ref().map(Vec::len)),
            ("sweep.kappa", self.sweep.kappa.as_ref().map(Vec::len)),
        ];
        for (name, len) in axes {
            if len == Some(0) {
                return Err(HarnessError::config(format!("{name} must not be empty")));
            }
        }
        if !self.instance.is_file() {
            for (name, axis, fixed) in [
                ("n", &self.sweep.n, self.optimizer.n),
                ("d", &self.sweep.d, self.optimizer.d),
            ] {
                if axis.is_none() && fixed.is_none() {
                    return Err(HarnessError::config(format!(
                        "sweep.{name} (or optimizer.{name}) is required for generated instances"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn n_axis(&self) -> Vec<Option<usize>> {
        axis(&self.sweep.n, self.optimizer.n)
    }

    pub fn d_axis(&self) -> Vec<Option<usize>> {
        axis(&self.sweep.d, self.optimizer.d)
    }

    pub fn rho_axis(&self) -> Vec<f64> {
        self.sweep.rho.clone().unwrap_or_else(|| vec![self.optimizer.rho])
    }

    pub fn kappa_axis(&self) -> Vec<Option<f64>> {
        axis(&self.sweep.kappa, self.optimizer.kappa)
    }
}

fn axis<T: Copy>(values: &Option<Vec<T>>, fixed: Option<T>) -> Vec<Option<T>> {
    match values {
        Some(v) => v.iter().copied().map(Some).collect(),
        None => vec![fixed],
    }
}
